#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>

#include "apitag/context.hpp"
#include "apitag/http_model.hpp"
#include "apitag/inference.hpp"
#include "apitag/policy.hpp"
#include "apitag/tagging.hpp"

namespace apitag {

enum class TaggerKind { Oracle, Llm, Transcript };

TaggerKind tagger_from_string(std::string_view s);
PromptMode mode_from_string(std::string_view s);
FailMode fail_mode_from_string(std::string_view s);

// Service configuration, loadable from a JSON file. CLI flags override the
// listen/upstream/mode/tagger/preload/log fields.
struct AppConfig {
  std::string listen_address = "127.0.0.1:8080";
  std::string upstream_address;

  std::string taxonomy_path;  // empty: built-in taxonomy
  std::string synonyms_path;  // empty: built-in table

  PromptMode mode = PromptMode::Single;
  TaggerKind tagger = TaggerKind::Oracle;
  InferenceOptions inference;
  int parallel_fanout = 4;
  std::string transcript_path;
  std::chrono::milliseconds transcript_latency{0};

  bool cache_enabled = true;
  std::size_t cache_capacity = 10000;
  std::string preload_path;

  HistoryRetention retention;
  std::chrono::seconds metrics_interval{60};
  std::string metrics_fixture;  // empty: sample the local process

  PolicyConfig policy;

  std::size_t max_body = kDefaultMaxBodyBytes;
  std::string log_path;
  std::size_t log_queue_capacity = 8192;
  std::size_t audit_log_sample = 1;  // log every Nth audit record; 1 = all

  void validate() const;
};

AppConfig load_config(const std::filesystem::path& file);
void save_config(const AppConfig& cfg, const std::filesystem::path& file);

// "host:port" -> pair; throws ConfigError.
std::pair<std::string, int> split_address(const std::string& address);

}  // namespace apitag
