#pragma once

#include <filesystem>
#include <list>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "apitag/http_model.hpp"
#include "apitag/tagging.hpp"
#include "apitag/util.hpp"

namespace apitag {

// What gets remembered per endpoint key: the tags and the resolved
// policy-variable -> request-parameter-name mapping. Parameter values are
// never cached; they are re-read from each request.
struct TagCacheEntry {
  TagSet tags;
  std::map<std::string, std::string> param_names;
  TimestampMs created_ts = 0;
};

// LRU cache of tag assignments keyed by (method, path). Entries never expire
// on their own; operators invalidate keys when endpoint semantics change.
// get/put are individually atomic.
class TagCache {
 public:
  explicit TagCache(std::size_t capacity = 10000);

  // Hit returns a copy whose TagSet source is Cache.
  std::optional<TagCacheEntry> get(const CacheKey& key);

  void put(const CacheKey& key, TagCacheEntry entry);
  void invalidate(const CacheKey& key);
  void clear();

  // Loads (key -> entry) records from a line-delimited fixture; returns the
  // number of entries loaded. Throws MalformedPreloadFile with the offending
  // line number.
  std::size_t preload(const std::filesystem::path& file, const Taxonomy& tx);

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

 private:
  using Entry = std::pair<CacheKey, TagCacheEntry>;

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<Entry> lru_;  // front = most recently used
  std::unordered_map<CacheKey, std::list<Entry>::iterator, CacheKeyHash> index_;
};

}  // namespace apitag
