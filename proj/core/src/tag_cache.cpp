#include "apitag/tag_cache.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "apitag/errors.hpp"

namespace apitag {

using json = nlohmann::json;

TagCache::TagCache(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

std::optional<TagCacheEntry> TagCache::get(const CacheKey& key) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  lru_.splice(lru_.begin(), lru_, it->second);
  TagCacheEntry entry = it->second->second;
  entry.tags.set_source(TagSource::Cache);
  return entry;
}

void TagCache::put(const CacheKey& key, TagCacheEntry entry) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(key);
  if (it != index_.end()) {
    it->second->second = std::move(entry);
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  lru_.emplace_front(key, std::move(entry));
  index_[key] = lru_.begin();
  if (index_.size() > capacity_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
}

void TagCache::invalidate(const CacheKey& key) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(key);
  if (it == index_.end()) return;
  lru_.erase(it->second);
  index_.erase(it);
}

void TagCache::clear() {
  std::lock_guard lock(mutex_);
  lru_.clear();
  index_.clear();
}

std::size_t TagCache::size() const {
  std::lock_guard lock(mutex_);
  return index_.size();
}

std::size_t TagCache::preload(const std::filesystem::path& file, const Taxonomy& tx) {
  std::ifstream in(file);
  if (!in) throw MalformedPreloadFile(file.string(), 0, "cannot open file");
  std::string line;
  std::size_t lineno = 0;
  std::size_t loaded = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.contains("method") || !doc.contains("path") ||
        !doc.contains("tags"))
      throw MalformedPreloadFile(file.string(), lineno, "bad preload record");

    std::vector<Tag> tag_list;
    for (const json& name : doc["tags"]) {
      const TagReasoning* entry = tx.find(name.get<std::string>());
      if (!entry)
        throw MalformedPreloadFile(file.string(), lineno,
                                   "unknown tag: " + name.get<std::string>());
      tag_list.push_back(entry->tag);
    }
    TagCacheEntry entry;
    entry.tags = TagSet::of(std::move(tag_list), tx, TagSource::Cache);
    if (doc.contains("param_names"))
      entry.param_names = doc["param_names"].get<std::map<std::string, std::string>>();
    entry.created_ts = now_ms();
    put(CacheKey{doc["method"].get<std::string>(),
                 normalize_key_path(doc["path"].get<std::string>())},
        std::move(entry));
    ++loaded;
  }
  return loaded;
}

}  // namespace apitag
