#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apitag/config.hpp"
#include "apitag/http_model.hpp"
#include "apitag/oob_log.hpp"
#include "apitag/tag_params.hpp"
#include "apitag/tagging.hpp"
#include "apitag/taxonomy.hpp"

namespace apitag {

// One hand-labelled corpus record: the raw request text, its ground-truth
// tags, optional expected variable values and the application it came from.
struct LabeledRequest {
  std::string raw;
  std::vector<std::string> truth_tags;
  std::map<std::string, std::string> expected_variables;
  std::string app;
  std::string peer = "192.0.2.1";

  ParsedRequest parse(std::size_t max_body = kDefaultMaxBodyBytes) const;
};

// Loads a line-delimited corpus. Malformed lines are reported (with line
// numbers) and skipped; strict mode aborts on the first one instead.
// Throws CorpusNotFound / MalformedRecord (strict).
std::vector<LabeledRequest> load_corpus(const std::filesystem::path& path, bool strict = false,
                                        std::vector<std::string>* problems = nullptr);

struct TagCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  double fpr() const { return fp + tn == 0 ? 0.0 : static_cast<double>(fp) / (fp + tn); }
  double tpr() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn); }
  std::size_t total() const { return tp + fp + tn + fn; }
};

struct EvalReport {
  std::vector<std::pair<std::string, TagCounts>> per_tag;  // taxonomy order, None excluded
  double overall_accuracy = 0;                             // exact-set matches / total
  std::size_t total = 0;
  std::size_t exact_matches = 0;
  std::size_t parse_warnings = 0;
  std::map<std::string, std::size_t> popularity;  // ground-truth counts per tag

  std::string render_table() const;
  void write_json(std::ostream& out) const;
};

using TaggerFn = std::function<TagSet(const ParsedRequest&)>;

// Multi-label scoring of predictions against ground truth: per tag,
// predicted-present vs truth-present; overall accuracy is exact set equality.
EvalReport score_predictions(const std::vector<LabeledRequest>& corpus,
                             const std::vector<std::vector<std::string>>& predicted,
                             const Taxonomy& tx);

// Classifies every record with the tagger (optionally fanned out over
// `jobs` threads; report assembly stays deterministic) and scores the result.
EvalReport run_eval(const std::vector<LabeledRequest>& corpus, const TaggerFn& tagger,
                    const Taxonomy& tx, std::size_t jobs = 1);

// Ground-truth counts per tag.
std::map<std::string, std::size_t> tag_popularity(const std::vector<LabeledRequest>& corpus);

enum class BenchMode { NoPolicy, PreCached, RuntimeCache, NoCache };

std::string_view to_string(BenchMode mode);

struct LatencyStats {
  double mean_us = 0;
  double median_us = 0;
  double p95_us = 0;
  std::size_t requests = 0;
};

struct BenchOptions {
  std::size_t requests = 1000;           // corpus replayed cyclically up to this count
  std::chrono::microseconds stub_work{0};  // synthetic upstream handler time
};

// Replays the corpus through a freshly started stub upstream (and proxy,
// except in NoPolicy mode) over one keep-alive connection and reports
// per-request latency. The proxy is configured from `cfg` with the cache
// arranged per mode. Throws ProxyUnreachable when the self-hosted services
// fail to come up.
LatencyStats latency_bench(const std::vector<LabeledRequest>& corpus, const AppConfig& cfg,
                           BenchMode mode, const BenchOptions& opts = {});

// Derives a cache preload fixture from a corpus: one record per distinct
// endpoint key with the tagger's tags and resolved parameter names.
std::size_t generate_preload(const std::vector<LabeledRequest>& corpus, const TaggerFn& tagger,
                             const SynonymTable& syn, const Taxonomy& tx, std::ostream& out);

// Records transcript entries for every corpus record so a TranscriptClient
// answers both prompting modes exactly as the rule oracle would.
void record_oracle_transcripts(const std::vector<LabeledRequest>& corpus, const Taxonomy& tx,
                               const SynonymTable& syn, TranscriptClient& client);

// Loads proxy log lines, skipping unparseable ones.
std::vector<LogRecord> load_proxy_log(const std::filesystem::path& path);

}  // namespace apitag
