#include "apitag/inference.hpp"

#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "apitag/errors.hpp"
#include "apitag/util.hpp"

namespace apitag {

using json = nlohmann::json;

HttpInferenceClient::HttpInferenceClient(InferenceOptions opts) : opts_(std::move(opts)) {
  std::string url = opts_.endpoint;
  if (url.rfind("http://", 0) == 0) url = url.substr(7);
  std::size_t slash = url.find('/');
  std::string authority = slash == std::string::npos ? url : url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
  std::size_t colon = authority.rfind(':');
  if (colon == std::string::npos) {
    host_ = authority;
  } else {
    host_ = authority.substr(0, colon);
    auto port = parse_number(authority.substr(colon + 1));
    if (!port) throw ConfigError("bad inference endpoint port: " + opts_.endpoint);
    port_ = static_cast<int>(*port);
  }
  if (host_.empty()) throw ConfigError("bad inference endpoint: " + opts_.endpoint);
}

std::string HttpInferenceClient::complete(const std::string& prompt) {
  httplib::Client cli(host_, port_);
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(opts_.timeout));
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(opts_.timeout));
  json body = {{"model", opts_.model}, {"prompt", prompt}, {"max_tokens", opts_.max_tokens}};
  httplib::Result res = cli.Post(path_, body.dump(), "application/json");
  if (!res) throw InferenceUnavailable("no response from " + opts_.endpoint);
  if (res->status != 200)
    throw InferenceUnavailable("endpoint returned status " + std::to_string(res->status));
  json doc = json::parse(res->body, nullptr, false);
  if (doc.is_discarded() || !doc.contains("text"))
    throw InferenceUnavailable("endpoint response lacks a text field");
  return doc["text"].get<std::string>();
}

std::string TranscriptClient::prompt_hash(std::string_view prompt) {
  return hex64(fnv1a64(prompt));
}

TranscriptClient::TranscriptClient(const std::filesystem::path& fixture,
                                   std::chrono::milliseconds latency)
    : latency_(latency) {
  std::ifstream in(fixture);
  if (!in) throw ConfigError("cannot open transcript fixture: " + fixture.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.contains("hash") || !doc.contains("output"))
      throw ConfigError(fixture.string() + ":" + std::to_string(lineno) +
                        ": bad transcript record");
    outputs_[doc["hash"].get<std::string>()] = doc["output"].get<std::string>();
  }
}

std::string TranscriptClient::complete(const std::string& prompt) {
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  auto it = outputs_.find(prompt_hash(prompt));
  if (it == outputs_.end())
    throw InferenceUnavailable("no transcript entry for prompt hash " + prompt_hash(prompt));
  return it->second;
}

void TranscriptClient::record(const std::string& prompt, const std::string& output) {
  outputs_[prompt_hash(prompt)] = output;
}

void TranscriptClient::save(const std::filesystem::path& fixture) const {
  std::ofstream out(fixture);
  if (!out) throw ConfigError("cannot write transcript fixture: " + fixture.string());
  for (const auto& [hash, output] : outputs_)
    out << json{{"hash", hash}, {"output", output}}.dump() << "\n";
}

}  // namespace apitag
