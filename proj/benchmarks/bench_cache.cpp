#include <benchmark/benchmark.h>

#include "apitag/tag_cache.hpp"

namespace {

using namespace apitag;

const Taxonomy& tx() {
  static Taxonomy t = Taxonomy::standard();
  return t;
}

TagCacheEntry sample_entry() {
  TagCacheEntry e;
  e.tags = TagSet::of({tx().find(tags::kResponseDataLimit)->tag}, tx(), TagSource::LLM);
  e.param_names = {{"num_records", "count"}};
  return e;
}

void BM_CacheHit(benchmark::State& state) {
  TagCache cache;
  for (int i = 0; i < 1000; ++i)
    cache.put(CacheKey{"GET", "/p" + std::to_string(i)}, sample_entry());
  CacheKey key{"GET", "/p500"};
  for (auto _ : state) {
    auto entry = cache.get(key);
    benchmark::DoNotOptimize(entry);
  }
}
BENCHMARK(BM_CacheHit);

void BM_CacheMiss(benchmark::State& state) {
  TagCache cache;
  for (int i = 0; i < 1000; ++i)
    cache.put(CacheKey{"GET", "/p" + std::to_string(i)}, sample_entry());
  CacheKey key{"GET", "/absent"};
  for (auto _ : state) {
    auto entry = cache.get(key);
    benchmark::DoNotOptimize(entry);
  }
}
BENCHMARK(BM_CacheMiss);

void BM_CachePutEvict(benchmark::State& state) {
  TagCache cache(1024);
  int i = 0;
  for (auto _ : state)
    cache.put(CacheKey{"GET", "/p" + std::to_string(i++ % 4096)}, sample_entry());
}
BENCHMARK(BM_CachePutEvict);

}  // namespace
