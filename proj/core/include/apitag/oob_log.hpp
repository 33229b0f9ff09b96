#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "apitag/policy.hpp"
#include "apitag/util.hpp"

namespace apitag {

// One log record per handled request.
struct LogRecord {
  TimestampMs ts = 0;
  std::string trace_id;
  std::string method;
  std::string path;
  std::vector<std::string> tags;
  std::string decision;
  std::string deciding_policy;
  std::vector<std::string> audit_flags;
  std::int64_t latency_us = 0;
  std::string source;

  std::string to_json_line() const;
  static std::optional<LogRecord> from_json_line(const std::string& line);
};

// Out-of-band request logger: producers enqueue onto a bounded queue and a
// single consumer thread writes JSON lines to the sink. When the queue is
// full the oldest record is dropped and a counter incremented; enqueue never
// blocks the request path.
class OobLogger {
 public:
  // Sink is owned elsewhere and must outlive the logger.
  OobLogger(std::ostream& sink, std::size_t queue_capacity = 8192);
  ~OobLogger();

  void emit(LogRecord record);
  void flush();
  void stop();

  std::uint64_t dropped() const { return dropped_.load(std::memory_order_relaxed); }
  std::uint64_t emitted() const { return emitted_.load(std::memory_order_relaxed); }

 private:
  void run();

  std::ostream& sink_;
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable drained_;
  std::deque<LogRecord> queue_;
  bool stopping_ = false;
  bool writing_ = false;
  std::atomic<std::uint64_t> dropped_{0};
  std::atomic<std::uint64_t> emitted_{0};
  std::thread consumer_;
};

}  // namespace apitag
