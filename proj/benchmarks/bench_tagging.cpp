#include <benchmark/benchmark.h>

#include "apitag/tag_params.hpp"
#include "apitag/tagging.hpp"

namespace {

using namespace apitag;

const Taxonomy& tx() {
  static Taxonomy t = Taxonomy::standard();
  return t;
}

const SynonymTable& syn() {
  static SynonymTable s = SynonymTable::standard();
  return s;
}

ParsedRequest sample_request() {
  std::string body = R"({"quantity":3,"product_id":"SKU-7"})";
  std::string raw = "POST /cart/items?ref=home HTTP/1.1\r\nhost: shop.example\r\n"
                    "authorization: Bearer tok\r\ncontent-type: application/json\r\n"
                    "content-length: " + std::to_string(body.size()) + "\r\n\r\n" + body;
  return parse_request(raw, "10.0.0.1");
}

void BM_OracleTagger(benchmark::State& state) {
  ParsedRequest r = sample_request();
  for (auto _ : state) {
    TagSet tags = oracle_tagger(r, tx(), syn());
    benchmark::DoNotOptimize(tags);
  }
}
BENCHMARK(BM_OracleTagger);

void BM_BuildSinglePrompt(benchmark::State& state) {
  ParsedRequest r = sample_request();
  for (auto _ : state) {
    std::string prompt = build_single_prompt(r, tx()).render();
    benchmark::DoNotOptimize(prompt);
  }
}
BENCHMARK(BM_BuildSinglePrompt);

void BM_ParseLlmOutput(benchmark::State& state) {
  for (auto _ : state) {
    TagSet tags = parse_llm_output("classes: [3, 4, 9]", tx());
    benchmark::DoNotOptimize(tags);
  }
}
BENCHMARK(BM_ParseLlmOutput);

void BM_ExtractTagParams(benchmark::State& state) {
  ParsedRequest r = sample_request();
  TagSet tags = oracle_tagger(r, tx(), syn());
  for (auto _ : state) {
    TagDetail detail = extract_tag_params(tags, r, syn(), tx());
    benchmark::DoNotOptimize(detail);
  }
}
BENCHMARK(BM_ExtractTagParams);

}  // namespace
