#include <benchmark/benchmark.h>

#include "apitag/context.hpp"

namespace {

using namespace apitag;
using namespace std::chrono_literals;

const CacheKey kKey{"POST", "/purchase"};

void seed_store(HistoryStore& store, std::size_t entries) {
  for (std::size_t i = 0; i < entries; ++i) {
    HistoryEntry e;
    e.ts = static_cast<TimestampMs>(i * 100);
    e.tags = {i % 3 == 0 ? "Login" : "PurchaseProduct"};
    e.variables = {{"quantity", std::to_string(i % 9 + 1)},
                   {"product_id", "P" + std::to_string(i % 5)}};
    e.source = "10.0.0." + std::to_string(i % 16);
    store.record(kKey, std::move(e));
  }
}

void BM_Record(benchmark::State& state) {
  HistoryStore store;
  TimestampMs ts = 0;
  for (auto _ : state) {
    HistoryEntry e;
    e.ts = ts += 10;
    e.tags = {"PurchaseProduct"};
    e.variables = {{"quantity", "3"}, {"product_id", "P1"}};
    e.source = "10.0.0.1";
    store.record(kKey, std::move(e));
  }
}
BENCHMARK(BM_Record);

void BM_WindowAggregate(benchmark::State& state) {
  HistoryStore store;
  seed_store(store, static_cast<std::size_t>(state.range(0)));
  TimestampMs now = state.range(0) * 100;
  for (auto _ : state) {
    WindowSum sum = store.window_aggregate(kKey, now, 5min, "quantity", {{"product_id", "P1"}});
    benchmark::DoNotOptimize(sum);
  }
}
BENCHMARK(BM_WindowAggregate)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_CountByTag(benchmark::State& state) {
  HistoryStore store;
  seed_store(store, static_cast<std::size_t>(state.range(0)));
  TimestampMs now = state.range(0) * 100;
  for (auto _ : state) {
    auto counts = store.count_by_tag("Login", now, 5min);
    benchmark::DoNotOptimize(counts);
  }
}
BENCHMARK(BM_CountByTag)->Arg(1000)->Arg(10000);

}  // namespace
