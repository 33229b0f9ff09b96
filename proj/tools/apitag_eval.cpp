// Offline evaluation harness: tagging accuracy, tag popularity, latency
// benchmarks and fixture generation for the cache and transcript clients.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <set>

#include <CLI11.hpp>

#include "apitag/eval.hpp"
#include "apitag/pipeline.hpp"

using namespace apitag;

namespace {

struct CommonArgs {
  std::string corpus;
  std::string config_path;
  std::string tagger = "oracle";
  std::string mode = "single";
  std::string transcript;
  bool strict = false;
};

AppConfig build_config(const CommonArgs& args) {
  AppConfig cfg = args.config_path.empty() ? AppConfig{} : load_config(args.config_path);
  cfg.tagger = tagger_from_string(args.tagger);
  cfg.mode = mode_from_string(args.mode);
  if (!args.transcript.empty()) cfg.transcript_path = args.transcript;
  return cfg;
}

TaggerFn build_tagger(const AppConfig& cfg, const Taxonomy& tx, const SynonymTable& syn) {
  if (cfg.tagger == TaggerKind::Oracle)
    return [&tx, &syn](const ParsedRequest& r) { return oracle_tagger(r, tx, syn); };
  std::shared_ptr<InferenceClient> client = make_client(cfg);
  ClassifyOptions opts;
  opts.mode = cfg.mode;
  opts.parallel_fanout = cfg.parallel_fanout;
  return [&tx, client, opts](const ParsedRequest& r) { return classify(r, tx, *client, opts); };
}

int run_eval_cmd(const CommonArgs& args, const std::string& out_path, std::size_t jobs,
                 bool verbose) {
  AppConfig cfg = build_config(args);
  Taxonomy tx = cfg.taxonomy_path.empty() ? Taxonomy::standard() : Taxonomy::load(cfg.taxonomy_path);
  SynonymTable syn =
      cfg.synonyms_path.empty() ? SynonymTable::standard() : SynonymTable::load(cfg.synonyms_path);

  std::vector<std::string> problems;
  std::vector<LabeledRequest> corpus = load_corpus(args.corpus, args.strict, &problems);
  for (const std::string& p : problems) std::cerr << "skipped: " << p << "\n";

  TaggerFn tagger = build_tagger(cfg, tx, syn);
  EvalReport report = run_eval(corpus, tagger, tx, jobs);
  std::cout << report.render_table();

  if (verbose) {
    for (const LabeledRequest& record : corpus) {
      TagSet predicted = tagger(record.parse());
      std::set<std::string> truth(record.truth_tags.begin(), record.truth_tags.end());
      std::vector<std::string> names = predicted.names();
      std::set<std::string> pred(names.begin(), names.end());
      if (truth != pred) {
        std::cout << "mismatch: " << record.raw.substr(0, record.raw.find('\r')) << "\n  truth:";
        for (const auto& t : truth) std::cout << " " << t;
        std::cout << "\n  predicted:";
        for (const auto& t : pred) std::cout << " " << t;
        std::cout << "\n";
      }
    }
  }

  if (!out_path.empty()) {
    std::ofstream out(out_path);
    report.write_json(out);
    std::cout << "report written to " << out_path << "\n";
  }
  return 0;
}

int run_popularity(const CommonArgs& args) {
  std::vector<LabeledRequest> corpus = load_corpus(args.corpus, args.strict);
  std::map<std::string, std::size_t> counts = tag_popularity(corpus);
  std::map<std::string, std::map<std::string, std::size_t>> by_app;
  for (const LabeledRequest& r : corpus)
    for (const std::string& t : r.truth_tags)
      if (t != "None") ++by_app[r.app][t];

  std::cout << std::left << std::setw(22) << "tag" << std::right << std::setw(8) << "count"
            << "\n";
  for (const auto& [tag, count] : counts)
    std::cout << std::left << std::setw(22) << tag << std::right << std::setw(8) << count << "\n";
  std::cout << "records: " << corpus.size() << ", applications: " << by_app.size() << "\n";
  return 0;
}

int run_bench(const CommonArgs& args, const std::string& modes_arg, std::size_t requests,
              long stub_work_us, long transcript_latency_ms) {
  AppConfig cfg = build_config(args);
  if (transcript_latency_ms >= 0)
    cfg.transcript_latency = std::chrono::milliseconds(transcript_latency_ms);
  std::vector<LabeledRequest> corpus = load_corpus(args.corpus, args.strict);

  BenchOptions opts;
  opts.requests = requests;
  opts.stub_work = std::chrono::microseconds(stub_work_us);

  std::vector<BenchMode> modes;
  for (std::string_view part : split(modes_arg, ',')) {
    std::string p = to_lower(trim(part));
    if (p == "nopolicy") modes.push_back(BenchMode::NoPolicy);
    else if (p == "precached") modes.push_back(BenchMode::PreCached);
    else if (p == "runtimecache") modes.push_back(BenchMode::RuntimeCache);
    else if (p == "nocache") modes.push_back(BenchMode::NoCache);
    else if (!p.empty()) {
      std::cerr << "unknown bench mode: " << p << "\n";
      return 2;
    }
  }

  std::cout << std::left << std::setw(14) << "mode" << std::right << std::setw(12) << "mean_us"
            << std::setw(12) << "median_us" << std::setw(12) << "p95_us" << std::setw(10)
            << "requests" << "\n";
  for (BenchMode mode : modes) {
    LatencyStats stats = latency_bench(corpus, cfg, mode, opts);
    std::cout << std::left << std::setw(14) << to_string(mode) << std::right << std::setw(12)
              << std::fixed << std::setprecision(1) << stats.mean_us << std::setw(12)
              << stats.median_us << std::setw(12) << stats.p95_us << std::setw(10)
              << stats.requests << "\n";
  }
  return 0;
}

int run_preload_gen(const CommonArgs& args, const std::string& out_path) {
  AppConfig cfg = build_config(args);
  Taxonomy tx = cfg.taxonomy_path.empty() ? Taxonomy::standard() : Taxonomy::load(cfg.taxonomy_path);
  SynonymTable syn =
      cfg.synonyms_path.empty() ? SynonymTable::standard() : SynonymTable::load(cfg.synonyms_path);
  std::vector<LabeledRequest> corpus = load_corpus(args.corpus, args.strict);
  TaggerFn tagger = build_tagger(cfg, tx, syn);

  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "cannot write " << out_path << "\n";
    return 1;
  }
  std::size_t written = generate_preload(corpus, tagger, syn, tx, out);
  std::cout << written << " preload entries written to " << out_path << "\n";
  return 0;
}

int run_transcript_gen(const CommonArgs& args, const std::string& out_path) {
  AppConfig cfg = build_config(args);
  Taxonomy tx = cfg.taxonomy_path.empty() ? Taxonomy::standard() : Taxonomy::load(cfg.taxonomy_path);
  SynonymTable syn =
      cfg.synonyms_path.empty() ? SynonymTable::standard() : SynonymTable::load(cfg.synonyms_path);
  std::vector<LabeledRequest> corpus = load_corpus(args.corpus, args.strict);

  TranscriptClient client;
  record_oracle_transcripts(corpus, tx, syn, client);
  client.save(out_path);
  std::cout << client.size() << " transcript entries written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"apitag-eval - tagging accuracy, popularity and latency harness"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string out_path;
  std::size_t jobs = 1;
  bool verbose = false;
  std::string modes = "nopolicy,precached,runtimecache,nocache";
  std::size_t requests = 1000;
  long stub_work_us = 0;
  long transcript_latency_ms = -1;

  auto add_common = [&](CLI::App* cmd, bool needs_tagger) {
    cmd->add_option("--corpus", args.corpus, "corpus file (JSON lines)")->required();
    cmd->add_option("-c,--config", args.config_path, "JSON config file");
    cmd->add_flag("--strict", args.strict, "abort on malformed corpus records");
    if (needs_tagger) {
      cmd->add_option("-t,--tagger", args.tagger, "tagger: llm|oracle|transcript");
      cmd->add_option("-m,--mode", args.mode, "prompting mode: single|parallel");
      cmd->add_option("--transcript", args.transcript, "transcript fixture for replay");
    }
  };

  CLI::App* eval_cmd = app.add_subcommand("eval", "run tagging accuracy evaluation");
  add_common(eval_cmd, true);
  eval_cmd->add_option("-o,--out", out_path, "write machine-readable report JSON");
  eval_cmd->add_option("-j,--jobs", jobs, "classification fan-out threads");
  eval_cmd->add_flag("-v,--verbose", verbose, "print per-record mismatches");

  CLI::App* pop_cmd = app.add_subcommand("popularity", "count ground-truth tags");
  add_common(pop_cmd, false);

  CLI::App* bench_cmd = app.add_subcommand("bench", "latency benchmark against stub upstream");
  add_common(bench_cmd, true);
  bench_cmd->add_option("--modes", modes, "comma list: nopolicy,precached,runtimecache,nocache");
  bench_cmd->add_option("-n,--requests", requests, "requests to replay");
  bench_cmd->add_option("--stub-work-us", stub_work_us, "synthetic upstream work per request");
  bench_cmd->add_option("--transcript-latency-ms", transcript_latency_ms,
                        "synthetic inference latency for the transcript client");

  CLI::App* preload_cmd = app.add_subcommand("preload-gen", "build cache preload fixture");
  add_common(preload_cmd, true);
  preload_cmd->add_option("-o,--out", out_path, "output fixture path")->required();

  CLI::App* transcript_cmd =
      app.add_subcommand("transcript-gen", "record oracle answers for transcript replay");
  add_common(transcript_cmd, false);
  transcript_cmd->add_option("-o,--out", out_path, "output fixture path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(eval_cmd)) return run_eval_cmd(args, out_path, jobs, verbose);
    if (app.got_subcommand(pop_cmd)) return run_popularity(args);
    if (app.got_subcommand(bench_cmd))
      return run_bench(args, modes, requests, stub_work_us, transcript_latency_ms);
    if (app.got_subcommand(preload_cmd)) return run_preload_gen(args, out_path);
    if (app.got_subcommand(transcript_cmd)) return run_transcript_gen(args, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
