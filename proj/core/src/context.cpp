#include "apitag/context.hpp"

#include <algorithm>
#include <istream>
#include <mutex>
#include <ostream>

#include <nlohmann/json.hpp>

#include "apitag/errors.hpp"

namespace apitag {

using json = nlohmann::json;

std::string RequestContext::group(bool prefer_forwarded) const {
  if (prefer_forwarded && src.forwarded_for && !src.forwarded_for->empty())
    return src.forwarded_for->front();
  return src.client_ip;
}

HistoryStore::HistoryStore(HistoryRetention retention) : retention_(retention) {}

void HistoryStore::evict_locked(std::deque<HistoryEntry>& entries, TimestampMs now) {
  while (entries.size() > retention_.max_entries_per_key) entries.pop_front();
  TimestampMs horizon = now - retention_.max_age.count();
  while (!entries.empty() && entries.front().ts < horizon) entries.pop_front();
}

void HistoryStore::record(const CacheKey& key, HistoryEntry entry) {
  std::unique_lock lock(mutex_);
  auto [it, inserted] = per_key_.try_emplace(key);
  if (inserted) key_order_.push_back(key);
  GlobalEntry global{entry.ts, entry.tags, entry.source};
  it->second.push_back(std::move(entry));
  evict_locked(it->second, it->second.back().ts);

  tag_index_.push_back(std::move(global));
  TimestampMs horizon = tag_index_.back().ts - retention_.max_age.count();
  while (!tag_index_.empty() && tag_index_.front().ts < horizon) tag_index_.pop_front();
}

std::vector<HistoryEntry> HistoryStore::history(const CacheKey& key) const {
  std::shared_lock lock(mutex_);
  auto it = per_key_.find(key);
  if (it == per_key_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

WindowSum HistoryStore::window_aggregate(const CacheKey& key, TimestampMs now,
                                         std::chrono::milliseconds window,
                                         std::string_view field,
                                         const std::map<std::string, std::string>& having,
                                         const std::optional<std::string>& source) const {
  std::shared_lock lock(mutex_);
  WindowSum result;
  auto it = per_key_.find(key);
  if (it == per_key_.end()) return result;
  TimestampMs lower = now - window.count();
  for (const HistoryEntry& entry : it->second) {
    if (entry.ts <= lower || entry.ts > now) continue;
    if (source && entry.source != *source) continue;
    bool matches = true;
    for (const auto& [name, expected] : having) {
      auto var = entry.variables.find(name);
      if (var == entry.variables.end() || var->second != expected) {
        matches = false;
        break;
      }
    }
    if (!matches) continue;
    auto var = entry.variables.find(std::string(field));
    if (var == entry.variables.end()) continue;
    if (std::optional<double> value = parse_number(var->second))
      result.sum += *value;
    else
      ++result.skipped;
  }
  return result;
}

std::map<std::string, std::size_t> HistoryStore::count_by_tag(
    std::string_view tag, TimestampMs now, std::chrono::milliseconds window) const {
  std::shared_lock lock(mutex_);
  std::map<std::string, std::size_t> counts;
  TimestampMs lower = now - window.count();
  for (const GlobalEntry& entry : tag_index_) {
    if (entry.ts <= lower || entry.ts > now) continue;
    if (std::find(entry.tags.begin(), entry.tags.end(), tag) == entry.tags.end()) continue;
    ++counts[entry.source];
  }
  return counts;
}

std::size_t HistoryStore::total_entries() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [key, entries] : per_key_) n += entries.size();
  return n;
}

std::size_t HistoryStore::key_count() const {
  std::shared_lock lock(mutex_);
  return per_key_.size();
}

void HistoryStore::export_snapshot(std::ostream& out) const {
  std::shared_lock lock(mutex_);
  for (const CacheKey& key : key_order_) {
    auto it = per_key_.find(key);
    if (it == per_key_.end()) continue;
    for (const HistoryEntry& entry : it->second) {
      json record = {{"method", key.method}, {"path", key.path},     {"ts", entry.ts},
                     {"tags", entry.tags},   {"vars", entry.variables}, {"src", entry.source}};
      out << record.dump() << "\n";
    }
  }
}

void HistoryStore::import_snapshot(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded())
      throw MalformedRecord("history snapshot", lineno, "bad JSON record");
    HistoryEntry entry;
    entry.ts = doc.at("ts").get<TimestampMs>();
    entry.tags = doc.at("tags").get<std::vector<std::string>>();
    entry.variables = doc.at("vars").get<std::map<std::string, std::string>>();
    entry.source = doc.value("src", "");
    record(CacheKey{doc.at("method").get<std::string>(), doc.at("path").get<std::string>()},
           std::move(entry));
  }
}

}  // namespace apitag
