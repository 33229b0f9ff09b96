#include "apitag/pipeline.hpp"

#include "apitag/errors.hpp"

namespace apitag {

Pipeline::Pipeline(const AppConfig& cfg, Taxonomy tx, SynonymTable syn,
                   std::shared_ptr<InferenceClient> client, PolicyChain chain)
    : cfg_(cfg),
      tx_(std::move(tx)),
      syn_(std::move(syn)),
      chain_(std::move(chain)),
      cache_(cfg.cache_capacity),
      history_(cfg.retention),
      containers_() {
  if (!client && cfg_.tagger != TaggerKind::Oracle) client = make_client(cfg_);
  if (client) client_ = std::make_shared<CountingClient>(std::move(client));
  if (!cfg_.preload_path.empty()) cache_.preload(cfg_.preload_path, tx_);
}

std::shared_ptr<InferenceClient> make_client(const AppConfig& cfg) {
  switch (cfg.tagger) {
    case TaggerKind::Oracle:
      return nullptr;
    case TaggerKind::Llm:
      return std::make_shared<HttpInferenceClient>(cfg.inference);
    case TaggerKind::Transcript:
      return std::make_shared<TranscriptClient>(cfg.transcript_path, cfg.transcript_latency);
  }
  return nullptr;
}

TagSet Pipeline::classify_request(const ParsedRequest& r) {
  if (cfg_.tagger == TaggerKind::Oracle) return oracle_tagger(r, tx_, syn_);
  if (!client_) throw InferenceUnavailable("no inference client configured");
  ClassifyOptions opts;
  opts.mode = cfg_.mode;
  opts.parallel_fanout = cfg_.parallel_fanout;
  return classify(r, tx_, *client_, opts);
}

Pipeline::Result Pipeline::process(const ParsedRequest& r, TimestampMs ts) {
  Result result;
  CacheKey key = request_key(r);

  bool inference_failed = false;
  std::string failure_reason;

  std::optional<TagCacheEntry> cached =
      cfg_.cache_enabled ? cache_.get(key) : std::nullopt;
  if (cached) {
    cache_hits_.fetch_add(1, std::memory_order_relaxed);
    result.cache_hit = true;
    result.detail = extract_with_known_names(cached->tags, cached->param_names, r, tx_);
  } else {
    if (cfg_.cache_enabled) cache_misses_.fetch_add(1, std::memory_order_relaxed);
    TagSet tags;
    try {
      tags = classify_request(r);
    } catch (const InferenceUnavailable& e) {
      inference_failed = true;
      failure_reason = e.what();
      tags = TagSet::none_of(tx_, TagSource::LLM);
    }
    result.detail = extract_tag_params(tags, r, syn_, tx_);
    if (cfg_.cache_enabled && !inference_failed)
      cache_.put(key, TagCacheEntry{tags, result.detail.param_names, ts});
  }

  RequestContext ctx;
  ctx.ts = ts;
  ctx.src = extract_source_attributes(r);
  ctx.dest.host = r.header("host") ? *r.header("host") : "";
  ctx.dest.port = 0;
  if (std::size_t colon = ctx.dest.host.rfind(':'); colon != std::string::npos) {
    if (std::optional<double> port = parse_number(ctx.dest.host.substr(colon + 1))) {
      ctx.dest.port = static_cast<int>(*port);
      ctx.dest.host = ctx.dest.host.substr(0, colon);
    }
  }
  ctx.dest.path = r.path;
  ctx.dest.query_params = r.query_params;
  ctx.dest.key = key;
  ctx.dest.container_id = "upstream";
  ctx.hist = &history_;

  HistoryEntry entry;
  entry.ts = ts;
  entry.tags = result.detail.tags.names();
  entry.variables = result.detail.variables;
  entry.source = ctx.group(cfg_.policy.group_by_forwarded);
  history_.record(key, std::move(entry));

  ContainerContext cc_storage;
  const ContainerContext* cc = nullptr;
  try {
    cc_storage = containers_.latest(ctx.dest.container_id);
    cc = &cc_storage;
  } catch (const UnknownContainer&) {
  }

  if (inference_failed && cfg_.policy.fail_mode == FailMode::Closed) {
    result.decision.outcome = Outcome::Deny;
    result.decision.deciding_policy = "FailClosed";
    result.decision.reasons.emplace_back("FailClosed", failure_reason);
  } else {
    EvalContext ectx{ctx, cc, cfg_.policy};
    result.decision = chain_.evaluate(result.detail, ectx);
    if (inference_failed) {
      result.decision.reasons.emplace_back("InferenceUnavailable", failure_reason);
      if (result.decision.outcome == Outcome::Allow)
        result.decision.outcome = Outcome::Audit;
    }
  }

  switch (result.decision.outcome) {
    case Outcome::Allow: allowed_.fetch_add(1, std::memory_order_relaxed); break;
    case Outcome::Deny: denied_.fetch_add(1, std::memory_order_relaxed); break;
    case Outcome::Audit: audited_.fetch_add(1, std::memory_order_relaxed); break;
  }
  return result;
}

Pipeline::Stats Pipeline::stats() const {
  Stats s;
  s.inference_calls = client_ ? client_->calls() : 0;
  s.cache_hits = cache_hits_.load(std::memory_order_relaxed);
  s.cache_misses = cache_misses_.load(std::memory_order_relaxed);
  s.allowed = allowed_.load(std::memory_order_relaxed);
  s.denied = denied_.load(std::memory_order_relaxed);
  s.audited = audited_.load(std::memory_order_relaxed);
  return s;
}

}  // namespace apitag
