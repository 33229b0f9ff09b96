#include <benchmark/benchmark.h>

#include "apitag/http_model.hpp"

namespace {

const std::string kGet =
    "GET /commentThreads?part=7&maxResults=30 HTTP/1.1\r\n"
    "host: api.example.com\r\n"
    "accept: application/json\r\n"
    "user-agent: bench/1.0\r\n\r\n";

const std::string kPostJson = [] {
  std::string body = R"({"quantity":2,"product_id":"SKU-1000","note":"benchmark"})";
  return "POST /orders HTTP/1.1\r\nhost: api.example.com\r\n"
         "content-type: application/json\r\ncontent-length: " +
         std::to_string(body.size()) + "\r\n\r\n" + body;
}();

void BM_ParseGet(benchmark::State& state) {
  for (auto _ : state) {
    apitag::ParsedRequest r = apitag::parse_request(kGet, "10.0.0.1");
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_ParseGet);

void BM_ParsePostJson(benchmark::State& state) {
  for (auto _ : state) {
    apitag::ParsedRequest r = apitag::parse_request(kPostJson, "10.0.0.1");
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_ParsePostJson);

void BM_RequestKey(benchmark::State& state) {
  apitag::ParsedRequest r = apitag::parse_request(kGet, "10.0.0.1");
  for (auto _ : state) {
    apitag::CacheKey key = apitag::request_key(r);
    benchmark::DoNotOptimize(key);
  }
}
BENCHMARK(BM_RequestKey);

void BM_Serialize(benchmark::State& state) {
  apitag::ParsedRequest r = apitag::parse_request(kPostJson, "10.0.0.1");
  for (auto _ : state) {
    std::string wire = apitag::serialize_request(r);
    benchmark::DoNotOptimize(wire);
  }
}
BENCHMARK(BM_Serialize);

}  // namespace
