#include "apitag/eval.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "apitag/errors.hpp"
#include "apitag/pipeline.hpp"
#include "apitag/proxy.hpp"
#include "apitag/stub_upstream.hpp"

namespace apitag {

using json = nlohmann::json;

ParsedRequest LabeledRequest::parse(std::size_t max_body) const {
  return parse_request(raw, peer, max_body);
}

std::vector<LabeledRequest> load_corpus(const std::filesystem::path& path, bool strict,
                                        std::vector<std::string>* problems) {
  std::ifstream in(path);
  if (!in) throw CorpusNotFound(path.string());
  std::vector<LabeledRequest> corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json doc = json::parse(line, nullptr, false);
    std::string why;
    if (doc.is_discarded() || !doc.is_object()) {
      why = "not a JSON object";
    } else if (!doc.contains("raw") || !doc.contains("tags")) {
      why = "missing raw or tags field";
    } else if (!doc["tags"].is_array() || doc["tags"].empty()) {
      why = "tags must be a non-empty array";
    }
    if (!why.empty()) {
      if (strict) throw MalformedRecord(path.string(), lineno, why);
      if (problems)
        problems->push_back(path.string() + ":" + std::to_string(lineno) + ": " + why);
      continue;
    }
    LabeledRequest r;
    r.raw = doc["raw"].get<std::string>();
    r.truth_tags = doc["tags"].get<std::vector<std::string>>();
    if (doc.contains("variables"))
      r.expected_variables = doc["variables"].get<std::map<std::string, std::string>>();
    r.app = doc.value("app", "");
    r.peer = doc.value("peer", r.peer);
    corpus.push_back(std::move(r));
  }
  return corpus;
}

EvalReport score_predictions(const std::vector<LabeledRequest>& corpus,
                             const std::vector<std::vector<std::string>>& predicted,
                             const Taxonomy& tx) {
  EvalReport report;
  report.total = corpus.size();
  for (const TagReasoning& entry : tx.entries()) {
    if (entry.tag.name == tags::kNone) continue;
    report.per_tag.emplace_back(entry.tag.name, TagCounts{});
  }

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::set<std::string> truth(corpus[i].truth_tags.begin(), corpus[i].truth_tags.end());
    std::set<std::string> pred(predicted[i].begin(), predicted[i].end());
    for (const std::string& t : truth)
      if (t != tags::kNone) ++report.popularity[t];

    if (truth == pred) ++report.exact_matches;
    for (auto& [name, counts] : report.per_tag) {
      bool in_truth = truth.count(name) > 0;
      bool in_pred = pred.count(name) > 0;
      if (in_truth && in_pred) ++counts.tp;
      else if (!in_truth && in_pred) ++counts.fp;
      else if (in_truth && !in_pred) ++counts.fn;
      else ++counts.tn;
    }
  }
  report.overall_accuracy =
      corpus.empty() ? 0.0 : static_cast<double>(report.exact_matches) / corpus.size();
  return report;
}

EvalReport run_eval(const std::vector<LabeledRequest>& corpus, const TaggerFn& tagger,
                    const Taxonomy& tx, std::size_t jobs) {
  std::vector<std::vector<std::string>> predicted(corpus.size());
  std::atomic<std::size_t> warnings{0};
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < corpus.size(); i = next.fetch_add(1)) {
      try {
        TagSet tags = tagger(corpus[i].parse());
        predicted[i] = tags.names();
        if (tags.parse_warning()) warnings.fetch_add(1);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  std::size_t n = std::max<std::size_t>(jobs, 1);
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i + 1 < n; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  EvalReport report = score_predictions(corpus, predicted, tx);
  report.parse_warnings = warnings.load();
  return report;
}

std::map<std::string, std::size_t> tag_popularity(const std::vector<LabeledRequest>& corpus) {
  std::map<std::string, std::size_t> counts;
  for (const LabeledRequest& r : corpus)
    for (const std::string& t : r.truth_tags)
      if (t != tags::kNone) ++counts[t];
  return counts;
}

std::string EvalReport::render_table() const {
  std::ostringstream out;
  out << std::left << std::setw(22) << "tag" << std::right << std::setw(7) << "TP"
      << std::setw(7) << "FP" << std::setw(7) << "TN" << std::setw(7) << "FN" << std::setw(10)
      << "FPR%" << std::setw(10) << "TPR%" << std::setw(8) << "truth" << "\n";
  for (const auto& [name, counts] : per_tag) {
    auto pop = popularity.find(name);
    out << std::left << std::setw(22) << name << std::right << std::setw(7) << counts.tp
        << std::setw(7) << counts.fp << std::setw(7) << counts.tn << std::setw(7) << counts.fn
        << std::setw(10) << std::fixed << std::setprecision(3) << counts.fpr() * 100.0
        << std::setw(10) << counts.tpr() * 100.0 << std::setw(8)
        << (pop == popularity.end() ? 0 : pop->second) << "\n";
  }
  out << "\nrecords: " << total << "  exact matches: " << exact_matches
      << "  overall accuracy: " << std::fixed << std::setprecision(2)
      << overall_accuracy * 100.0 << "%\n";
  return out.str();
}

void EvalReport::write_json(std::ostream& out) const {
  json doc;
  doc["total"] = total;
  doc["exact_matches"] = exact_matches;
  doc["overall_accuracy"] = overall_accuracy;
  doc["parse_warnings"] = parse_warnings;
  doc["popularity"] = popularity;
  doc["per_tag"] = json::object();
  for (const auto& [name, counts] : per_tag) {
    doc["per_tag"][name] = {{"tp", counts.tp}, {"fp", counts.fp}, {"tn", counts.tn},
                            {"fn", counts.fn}, {"fpr", counts.fpr()}, {"tpr", counts.tpr()}};
  }
  out << doc.dump(2) << "\n";
}

std::string_view to_string(BenchMode mode) {
  switch (mode) {
    case BenchMode::NoPolicy: return "nopolicy";
    case BenchMode::PreCached: return "precached";
    case BenchMode::RuntimeCache: return "runtimecache";
    case BenchMode::NoCache: return "nocache";
  }
  return "nopolicy";
}

namespace {

LatencyStats stats_from(std::vector<double>& samples) {
  LatencyStats stats;
  stats.requests = samples.size();
  if (samples.empty()) return stats;
  stats.mean_us = std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
  std::sort(samples.begin(), samples.end());
  stats.median_us = samples[samples.size() / 2];
  stats.p95_us = samples[std::min(samples.size() - 1,
                                  static_cast<std::size_t>(samples.size() * 0.95))];
  return stats;
}

TaggerFn tagger_from_config(const AppConfig& cfg, const Taxonomy& tx, const SynonymTable& syn,
                            std::shared_ptr<InferenceClient> client) {
  if (cfg.tagger == TaggerKind::Oracle)
    return [&tx, &syn](const ParsedRequest& r) { return oracle_tagger(r, tx, syn); };
  ClassifyOptions opts;
  opts.mode = cfg.mode;
  opts.parallel_fanout = cfg.parallel_fanout;
  return [&tx, client, opts](const ParsedRequest& r) {
    return classify(r, tx, *client, opts);
  };
}

}  // namespace

LatencyStats latency_bench(const std::vector<LabeledRequest>& corpus, const AppConfig& cfg,
                           BenchMode mode, const BenchOptions& opts) {
  if (corpus.empty()) throw ConfigError("latency_bench needs a non-empty corpus");

  StubUpstream::Options stub_opts;
  stub_opts.work_delay = opts.stub_work;
  StubUpstream stub(stub_opts);
  stub.start();

  Taxonomy tx = cfg.taxonomy_path.empty() ? Taxonomy::standard()
                                          : Taxonomy::load(cfg.taxonomy_path);
  SynonymTable syn = cfg.synonyms_path.empty() ? SynonymTable::standard()
                                               : SynonymTable::load(cfg.synonyms_path);

  AppConfig proxy_cfg = cfg;
  proxy_cfg.listen_address = "127.0.0.1:0";
  proxy_cfg.upstream_address = "127.0.0.1:" + std::to_string(stub.port());
  proxy_cfg.cache_enabled = mode != BenchMode::NoCache;

  std::optional<ProxyServer> proxy;
  std::shared_ptr<Pipeline> pipeline;
  int target_port = stub.port();

  if (mode != BenchMode::NoPolicy) {
    pipeline = std::make_shared<Pipeline>(proxy_cfg, tx, syn);
    if (mode == BenchMode::PreCached) {
      // Resolve tags and parameter names for every distinct key up front.
      std::shared_ptr<InferenceClient> client = make_client(proxy_cfg);
      TaggerFn tagger = tagger_from_config(proxy_cfg, tx, syn, client);
      std::set<std::string> seen;
      for (const LabeledRequest& record : corpus) {
        ParsedRequest r = record.parse();
        CacheKey key = request_key(r);
        if (!seen.insert(key.to_string()).second) continue;
        TagSet tags = tagger(r);
        TagDetail detail = extract_tag_params(tags, r, syn, tx);
        pipeline->cache().put(key, TagCacheEntry{tags, detail.param_names, now_ms()});
      }
    }
    proxy.emplace(proxy_cfg, pipeline);
    proxy->start();
    target_port = proxy->port();
  }

  auto connect_target = [&] {
    auto sock = TcpSocket::connect("127.0.0.1", target_port);
    if (!sock) throw ProxyUnreachable("127.0.0.1:" + std::to_string(target_port));
    return std::move(*sock);
  };

  std::vector<std::string> wire;
  wire.reserve(corpus.size());
  for (const LabeledRequest& record : corpus) wire.push_back(serialize_request(record.parse()));

  TcpSocket sock = connect_target();
  std::string buffer;
  std::vector<double> samples;
  samples.reserve(opts.requests);

  for (std::size_t i = 0; i < opts.requests; ++i) {
    const std::string& request = wire[i % wire.size()];
    std::string_view method(request.data(), request.find(' '));
    auto started = std::chrono::steady_clock::now();
    if (!sock.write_all(request)) {
      sock = connect_target();
      buffer.clear();
      if (!sock.write_all(request)) throw ProxyUnreachable("write failed");
    }
    std::optional<HttpMessage> response =
        read_http_message(sock, buffer, /*is_response=*/true, kDefaultMaxBodyBytes, method);
    if (!response) {
      // Keep-alive connection went away (e.g. denied with close); reconnect.
      sock = connect_target();
      buffer.clear();
      if (!sock.write_all(request)) throw ProxyUnreachable("write failed");
      response = read_http_message(sock, buffer, true, kDefaultMaxBodyBytes, method);
      if (!response) throw ProxyUnreachable("no response from target");
    }
    auto elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    samples.push_back(static_cast<double>(elapsed) / 1000.0);
    if (!response->keep_alive) {
      sock = connect_target();
      buffer.clear();
    }
  }

  if (proxy) proxy->stop();
  stub.stop();
  return stats_from(samples);
}

std::size_t generate_preload(const std::vector<LabeledRequest>& corpus, const TaggerFn& tagger,
                             const SynonymTable& syn, const Taxonomy& tx, std::ostream& out) {
  std::set<std::string> seen;
  std::size_t written = 0;
  for (const LabeledRequest& record : corpus) {
    ParsedRequest r = record.parse();
    CacheKey key = request_key(r);
    if (!seen.insert(key.to_string()).second) continue;
    TagSet tags = tagger(r);
    TagDetail detail = extract_tag_params(tags, r, syn, tx);
    json doc = {{"method", key.method},
                {"path", key.path},
                {"tags", tags.names()},
                {"param_names", detail.param_names}};
    out << doc.dump() << "\n";
    ++written;
  }
  return written;
}

void record_oracle_transcripts(const std::vector<LabeledRequest>& corpus, const Taxonomy& tx,
                               const SynonymTable& syn, TranscriptClient& client) {
  for (const LabeledRequest& record : corpus) {
    ParsedRequest r = record.parse();
    TagSet truth = oracle_tagger(r, tx, syn);

    std::ostringstream single;
    single << "classes: [";
    bool first = true;
    for (const Tag& tag : truth.tags()) {
      if (!first) single << ", ";
      single << tag.id;
      first = false;
    }
    single << "]";
    client.record(build_single_prompt(r, tx).render(), single.str());

    std::size_t index = 0;
    std::vector<PromptText> prompts = build_parallel_prompts(r, tx);
    for (const TagReasoning& entry : tx.entries()) {
      if (entry.tag.name == tags::kNone) continue;
      int answer = truth.contains(entry.tag.name) ? entry.tag.id : tx.none().id;
      client.record(prompts[index].render(), "classes: [" + std::to_string(answer) + "]");
      ++index;
    }
  }
}

std::vector<LogRecord> load_proxy_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open log file: " + path.string());
  std::vector<LogRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (std::optional<LogRecord> record = LogRecord::from_json_line(line))
      records.push_back(std::move(*record));
  }
  return records;
}

}  // namespace apitag
