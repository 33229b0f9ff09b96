#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "apitag/http_model.hpp"
#include "apitag/util.hpp"

namespace apitag {

struct DestinationAttributes {
  std::string host;
  int port = 0;
  std::string path;
  std::vector<std::pair<std::string, std::string>> query_params;
  CacheKey key;
  std::string container_id;
};

// Immutable record of one handled request: arrival timestamp, assigned tags,
// extracted policy-variable values and the source group it is attributed to.
struct HistoryEntry {
  TimestampMs ts = 0;
  std::vector<std::string> tags;
  std::map<std::string, std::string> variables;
  std::string source;
};

class HistoryStore;

// Per-request context: arrival timestamp, source and destination attributes,
// and a handle on the endpoint history stream.
struct RequestContext {
  TimestampMs ts = 0;
  SourceAttributes src;
  DestinationAttributes dest;
  const HistoryStore* hist = nullptr;

  // Source group used for per-client counting: the first forwarded hop when
  // configured and present, otherwise the transport-level client address.
  std::string group(bool prefer_forwarded) const;
};

struct HistoryRetention {
  std::chrono::milliseconds max_age{std::chrono::hours(24)};
  std::size_t max_entries_per_key = 100000;
};

struct WindowSum {
  double sum = 0;
  std::size_t skipped = 0;  // entries whose field value did not parse as a number
};

// Append-only request history, organized per endpoint key with a global tag
// index for cross-endpoint counting. Many concurrent appenders and readers;
// reads see consistent snapshots.
class HistoryStore {
 public:
  explicit HistoryStore(HistoryRetention retention = {});

  void record(const CacheKey& key, HistoryEntry entry);

  // Entries for the key, oldest first.
  std::vector<HistoryEntry> history(const CacheKey& key) const;

  // Sum of a numeric variable over entries with ts in (now - window, now]
  // whose variables equal every `having` constraint, optionally restricted to
  // one source group. Empty window yields zero.
  WindowSum window_aggregate(const CacheKey& key, TimestampMs now,
                             std::chrono::milliseconds window, std::string_view field,
                             const std::map<std::string, std::string>& having = {},
                             const std::optional<std::string>& source = std::nullopt) const;

  // Number of entries carrying the tag with ts in (now - window, now], across
  // all endpoint keys, grouped by source.
  std::map<std::string, std::size_t> count_by_tag(std::string_view tag, TimestampMs now,
                                                  std::chrono::milliseconds window) const;

  std::size_t total_entries() const;
  std::size_t key_count() const;

  // Line-delimited snapshot for replay: one JSON record per entry.
  void export_snapshot(std::ostream& out) const;
  void import_snapshot(std::istream& in);

  const HistoryRetention& retention() const { return retention_; }

 private:
  struct GlobalEntry {
    TimestampMs ts;
    std::vector<std::string> tags;
    std::string source;
  };

  void evict_locked(std::deque<HistoryEntry>& entries, TimestampMs now);

  HistoryRetention retention_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<CacheKey, std::deque<HistoryEntry>, CacheKeyHash> per_key_;
  std::deque<GlobalEntry> tag_index_;
  std::vector<CacheKey> key_order_;  // recording order, for deterministic export
};

}  // namespace apitag
