#include "apitag/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "apitag/errors.hpp"

namespace apitag {

using json = nlohmann::json;

TaggerKind tagger_from_string(std::string_view s) {
  if (s == "oracle") return TaggerKind::Oracle;
  if (s == "llm") return TaggerKind::Llm;
  if (s == "transcript") return TaggerKind::Transcript;
  throw ConfigError("unknown tagger: " + std::string(s) + " (expected llm|oracle|transcript)");
}

PromptMode mode_from_string(std::string_view s) {
  if (s == "single") return PromptMode::Single;
  if (s == "parallel") return PromptMode::Parallel;
  throw ConfigError("unknown mode: " + std::string(s) + " (expected single|parallel)");
}

FailMode fail_mode_from_string(std::string_view s) {
  if (s == "open") return FailMode::Open;
  if (s == "closed") return FailMode::Closed;
  throw ConfigError("unknown fail mode: " + std::string(s) + " (expected open|closed)");
}

void AppConfig::validate() const {
  policy.validate(retention);
  if (cache_capacity == 0) throw ConfigError("cache_capacity must be positive");
  if (max_body == 0) throw ConfigError("max_body must be positive");
  if (metrics_interval.count() <= 0) throw ConfigError("metrics_interval must be positive");
  if (tagger == TaggerKind::Llm && inference.endpoint.empty())
    throw ConfigError("llm tagger requires an inference endpoint");
  if (tagger == TaggerKind::Transcript && transcript_path.empty())
    throw ConfigError("transcript tagger requires a transcript path");
}

namespace {

std::chrono::seconds seconds_field(const json& doc, const char* name, std::chrono::seconds dflt) {
  if (!doc.contains(name)) return dflt;
  return std::chrono::seconds(doc[name].get<long long>());
}

}  // namespace

AppConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + file.string() + ": " + e.what());
  }

  AppConfig cfg;
  cfg.listen_address = doc.value("listen", cfg.listen_address);
  cfg.upstream_address = doc.value("upstream", cfg.upstream_address);
  cfg.taxonomy_path = doc.value("taxonomy", "");
  cfg.synonyms_path = doc.value("synonyms", "");

  if (doc.contains("mode")) cfg.mode = mode_from_string(doc["mode"].get<std::string>());
  if (doc.contains("tagger")) cfg.tagger = tagger_from_string(doc["tagger"].get<std::string>());
  if (doc.contains("inference")) {
    const json& inf = doc["inference"];
    cfg.inference.endpoint = inf.value("endpoint", "");
    cfg.inference.model = inf.value("model", cfg.inference.model);
    cfg.inference.max_tokens = inf.value("max_tokens", cfg.inference.max_tokens);
    if (inf.contains("timeout_ms"))
      cfg.inference.timeout = std::chrono::milliseconds(inf["timeout_ms"].get<long long>());
  }
  cfg.parallel_fanout = doc.value("parallel_fanout", cfg.parallel_fanout);
  cfg.transcript_path = doc.value("transcript", "");
  if (doc.contains("transcript_latency_ms"))
    cfg.transcript_latency =
        std::chrono::milliseconds(doc["transcript_latency_ms"].get<long long>());

  cfg.cache_enabled = doc.value("cache_enabled", cfg.cache_enabled);
  cfg.cache_capacity = doc.value("cache_capacity", cfg.cache_capacity);
  cfg.preload_path = doc.value("preload", "");

  if (doc.contains("retention")) {
    const json& ret = doc["retention"];
    if (ret.contains("max_age_s"))
      cfg.retention.max_age = std::chrono::seconds(ret["max_age_s"].get<long long>());
    cfg.retention.max_entries_per_key =
        ret.value("max_entries_per_key", cfg.retention.max_entries_per_key);
  }
  cfg.metrics_interval = seconds_field(doc, "metrics_interval_s", cfg.metrics_interval);
  cfg.metrics_fixture = doc.value("metrics_fixture", "");

  if (doc.contains("policy")) {
    const json& pol = doc["policy"];
    PolicyConfig& p = cfg.policy;
    p.record_threshold = pol.value("record_threshold", p.record_threshold);
    p.max_purchase_qty = pol.value("max_purchase_qty", p.max_purchase_qty);
    p.purchase_window = seconds_field(pol, "purchase_window_s", p.purchase_window);
    p.login_attempt_limit = pol.value("login_attempt_limit", p.login_attempt_limit);
    p.login_window = seconds_field(pol, "login_window_s", p.login_window);
    p.cart_hold_limit = pol.value("cart_hold_limit", p.cart_hold_limit);
    p.cart_window = seconds_field(pol, "cart_window_s", p.cart_window);
    p.registration_limit = pol.value("registration_limit", p.registration_limit);
    p.registration_window = seconds_field(pol, "registration_window_s", p.registration_window);
    if (pol.contains("fail_mode"))
      p.fail_mode = fail_mode_from_string(pol["fail_mode"].get<std::string>());
    p.group_by_forwarded = pol.value("group_by_forwarded", p.group_by_forwarded);
  }

  cfg.max_body = doc.value("max_body", cfg.max_body);
  cfg.log_path = doc.value("log_path", "");
  cfg.log_queue_capacity = doc.value("log_queue_capacity", cfg.log_queue_capacity);
  cfg.audit_log_sample = doc.value("audit_log_sample", cfg.audit_log_sample);
  return cfg;
}

void save_config(const AppConfig& cfg, const std::filesystem::path& file) {
  json doc;
  doc["listen"] = cfg.listen_address;
  doc["upstream"] = cfg.upstream_address;
  if (!cfg.taxonomy_path.empty()) doc["taxonomy"] = cfg.taxonomy_path;
  if (!cfg.synonyms_path.empty()) doc["synonyms"] = cfg.synonyms_path;
  doc["mode"] = cfg.mode == PromptMode::Single ? "single" : "parallel";
  switch (cfg.tagger) {
    case TaggerKind::Oracle: doc["tagger"] = "oracle"; break;
    case TaggerKind::Llm: doc["tagger"] = "llm"; break;
    case TaggerKind::Transcript: doc["tagger"] = "transcript"; break;
  }
  doc["inference"] = {{"endpoint", cfg.inference.endpoint},
                      {"model", cfg.inference.model},
                      {"max_tokens", cfg.inference.max_tokens}};
  doc["parallel_fanout"] = cfg.parallel_fanout;
  if (!cfg.transcript_path.empty()) doc["transcript"] = cfg.transcript_path;
  doc["cache_enabled"] = cfg.cache_enabled;
  doc["cache_capacity"] = cfg.cache_capacity;
  if (!cfg.preload_path.empty()) doc["preload"] = cfg.preload_path;
  doc["retention"] = {
      {"max_age_s",
       std::chrono::duration_cast<std::chrono::seconds>(cfg.retention.max_age).count()},
      {"max_entries_per_key", cfg.retention.max_entries_per_key}};
  doc["metrics_interval_s"] = cfg.metrics_interval.count();
  if (!cfg.metrics_fixture.empty()) doc["metrics_fixture"] = cfg.metrics_fixture;
  doc["policy"] = {{"record_threshold", cfg.policy.record_threshold},
                   {"max_purchase_qty", cfg.policy.max_purchase_qty},
                   {"purchase_window_s", cfg.policy.purchase_window.count()},
                   {"login_attempt_limit", cfg.policy.login_attempt_limit},
                   {"login_window_s", cfg.policy.login_window.count()},
                   {"cart_hold_limit", cfg.policy.cart_hold_limit},
                   {"cart_window_s", cfg.policy.cart_window.count()},
                   {"registration_limit", cfg.policy.registration_limit},
                   {"registration_window_s", cfg.policy.registration_window.count()},
                   {"fail_mode", cfg.policy.fail_mode == FailMode::Open ? "open" : "closed"},
                   {"group_by_forwarded", cfg.policy.group_by_forwarded}};
  doc["max_body"] = cfg.max_body;
  if (!cfg.log_path.empty()) doc["log_path"] = cfg.log_path;
  doc["log_queue_capacity"] = cfg.log_queue_capacity;
  doc["audit_log_sample"] = cfg.audit_log_sample;

  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write config file: " + file.string());
  out << doc.dump(2) << "\n";
}

std::pair<std::string, int> split_address(const std::string& address) {
  std::size_t colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= address.size())
    throw ConfigError("address must be host:port, got: " + address);
  std::optional<double> port = parse_number(address.substr(colon + 1));
  if (!port || *port < 0 || *port > 65535)
    throw ConfigError("bad port in address: " + address);
  return {address.substr(0, colon), static_cast<int>(*port)};
}

}  // namespace apitag
