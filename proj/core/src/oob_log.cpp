#include "apitag/oob_log.hpp"

#include <nlohmann/json.hpp>

namespace apitag {

using json = nlohmann::json;

std::string LogRecord::to_json_line() const {
  json doc = {{"ts", ts},
              {"trace", trace_id},
              {"method", method},
              {"path", path},
              {"tags", tags},
              {"decision", decision},
              {"latency_us", latency_us},
              {"src", source}};
  if (!deciding_policy.empty()) doc["deciding_policy"] = deciding_policy;
  if (!audit_flags.empty()) doc["audit_flags"] = audit_flags;
  return doc.dump();
}

std::optional<LogRecord> LogRecord::from_json_line(const std::string& line) {
  json doc = json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  LogRecord r;
  r.ts = doc.value("ts", TimestampMs{0});
  r.trace_id = doc.value("trace", "");
  r.method = doc.value("method", "");
  r.path = doc.value("path", "");
  r.tags = doc.value("tags", std::vector<std::string>{});
  r.decision = doc.value("decision", "");
  r.deciding_policy = doc.value("deciding_policy", "");
  r.audit_flags = doc.value("audit_flags", std::vector<std::string>{});
  r.latency_us = doc.value("latency_us", std::int64_t{0});
  r.source = doc.value("src", "");
  return r;
}

OobLogger::OobLogger(std::ostream& sink, std::size_t queue_capacity)
    : sink_(sink), capacity_(queue_capacity == 0 ? 1 : queue_capacity) {
  consumer_ = std::thread([this] { run(); });
}

OobLogger::~OobLogger() { stop(); }

void OobLogger::emit(LogRecord record) {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    if (queue_.size() >= capacity_) {
      queue_.pop_front();
      dropped_.fetch_add(1, std::memory_order_relaxed);
    }
    queue_.push_back(std::move(record));
  }
  cv_.notify_one();
}

void OobLogger::flush() {
  std::unique_lock lock(mutex_);
  drained_.wait(lock, [this] { return queue_.empty() && !writing_; });
  sink_.flush();
}

void OobLogger::stop() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (consumer_.joinable()) consumer_.join();
}

void OobLogger::run() {
  while (true) {
    LogRecord record;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) {
        if (stopping_) return;
        continue;
      }
      record = std::move(queue_.front());
      queue_.pop_front();
      writing_ = true;
    }
    sink_ << record.to_json_line() << "\n";
    emitted_.fetch_add(1, std::memory_order_relaxed);
    {
      std::lock_guard lock(mutex_);
      writing_ = false;
      if (queue_.empty()) drained_.notify_all();
    }
  }
}

}  // namespace apitag
