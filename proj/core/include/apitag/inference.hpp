#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

namespace apitag {

struct InferenceOptions {
  std::string endpoint;  // e.g. "http://127.0.0.1:8089/v1/completions"
  std::string model = "default";
  int max_tokens = 20;
  std::chrono::milliseconds timeout{30000};
};

// Completion backend. Implementations must be safe for concurrent use; the
// parallel prompting mode calls complete() from several threads at once.
class InferenceClient {
 public:
  virtual ~InferenceClient() = default;

  // Returns the generated text for a prompt. Throws InferenceUnavailable when
  // no answer can be produced.
  virtual std::string complete(const std::string& prompt) = 0;
};

// Talks to a plain HTTP completion endpoint. The request body is a JSON
// document with model, prompt and max_tokens fields; the response carries a
// single generated-text field named "text".
class HttpInferenceClient : public InferenceClient {
 public:
  explicit HttpInferenceClient(InferenceOptions opts);
  std::string complete(const std::string& prompt) override;

  const InferenceOptions& options() const { return opts_; }

 private:
  InferenceOptions opts_;
  std::string host_;
  int port_ = 80;
  std::string path_;
};

// Replays recorded outputs keyed by a stable hash of the prompt text.
// The fixture file is line-delimited JSON records {"hash": ..., "output": ...}.
// An optional synthetic latency models a remote model for benchmarks.
class TranscriptClient : public InferenceClient {
 public:
  TranscriptClient() = default;
  explicit TranscriptClient(const std::filesystem::path& fixture,
                            std::chrono::milliseconds latency = {});

  std::string complete(const std::string& prompt) override;

  void record(const std::string& prompt, const std::string& output);
  void save(const std::filesystem::path& fixture) const;
  std::size_t size() const { return outputs_.size(); }
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

  static std::string prompt_hash(std::string_view prompt);

 private:
  std::unordered_map<std::string, std::string> outputs_;
  std::chrono::milliseconds latency_{};
};

// Decorator that counts completions, used to assert the caching contract
// (a cache hit must not reach the client).
class CountingClient : public InferenceClient {
 public:
  explicit CountingClient(std::shared_ptr<InferenceClient> inner) : inner_(std::move(inner)) {}

  std::string complete(const std::string& prompt) override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_->complete(prompt);
  }

  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset() { calls_.store(0, std::memory_order_relaxed); }

 private:
  std::shared_ptr<InferenceClient> inner_;
  std::atomic<std::uint64_t> calls_{0};
};

}  // namespace apitag
