#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "apitag/config.hpp"
#include "apitag/context.hpp"
#include "apitag/http_model.hpp"
#include "apitag/inference.hpp"
#include "apitag/metrics.hpp"
#include "apitag/policy.hpp"
#include "apitag/tag_cache.hpp"
#include "apitag/tag_params.hpp"
#include "apitag/tagging.hpp"
#include "apitag/taxonomy.hpp"

namespace apitag {

// The request evaluation pipeline:
//   request_key -> cache lookup (miss: classify + extract + cache fill,
//   hit: re-extract values through cached parameter names) -> record into
//   history -> policy chain evaluation.
// The arrival timestamp is passed in, never read from the wall clock, so a
// recorded session replays to identical decisions.
class Pipeline {
 public:
  struct Stats {
    std::uint64_t inference_calls = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    std::uint64_t allowed = 0;
    std::uint64_t denied = 0;
    std::uint64_t audited = 0;
  };

  struct Result {
    Decision decision;
    TagDetail detail;
    bool cache_hit = false;
  };

  Pipeline(const AppConfig& cfg, Taxonomy tx, SynonymTable syn,
           std::shared_ptr<InferenceClient> client = nullptr,
           PolicyChain chain = PolicyChain::standard());

  Result process(const ParsedRequest& r, TimestampMs ts);

  const Taxonomy& taxonomy() const { return tx_; }
  const SynonymTable& synonyms() const { return syn_; }
  TagCache& cache() { return cache_; }
  HistoryStore& history() { return history_; }
  ContainerStore& containers() { return containers_; }
  const AppConfig& config() const { return cfg_; }

  Stats stats() const;

 private:
  TagSet classify_request(const ParsedRequest& r);

  AppConfig cfg_;
  Taxonomy tx_;
  SynonymTable syn_;
  std::shared_ptr<CountingClient> client_;
  PolicyChain chain_;
  TagCache cache_;
  HistoryStore history_;
  ContainerStore containers_;

  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> cache_misses_{0};
  std::atomic<std::uint64_t> allowed_{0};
  std::atomic<std::uint64_t> denied_{0};
  std::atomic<std::uint64_t> audited_{0};
};

// Builds the inference client demanded by the config: an HTTP client for the
// llm tagger, a transcript replayer, or null for the rule oracle.
std::shared_ptr<InferenceClient> make_client(const AppConfig& cfg);

}  // namespace apitag
