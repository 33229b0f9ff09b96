#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "apitag/net.hpp"

namespace apitag {

// Minimal keep-alive HTTP server standing in for an application API:
// answers every request with a fixed JSON body after an optional synthetic
// work delay, counts requests, and can record the raw bytes it received.
class StubUpstream {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 0;  // 0: ephemeral
    std::chrono::microseconds work_delay{0};
    std::string body = "{\"ok\":true}";
    bool record_requests = false;
  };

  StubUpstream();
  explicit StubUpstream(Options opts);
  ~StubUpstream();

  void start();
  void stop();

  int port() const { return listener_.port(); }
  std::uint64_t request_count() const { return requests_.load(std::memory_order_relaxed); }
  void reset_count() { requests_.store(0, std::memory_order_relaxed); }

  // Raw request bytes in arrival order (only when record_requests is set).
  std::vector<std::string> recorded() const;

 private:
  void accept_loop();
  void handle(TcpSocket sock);

  Options opts_;
  TcpListener listener_;
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> requests_{0};

  mutable std::mutex mutex_;
  std::condition_variable workers_done_;
  std::size_t active_ = 0;
  std::vector<std::thread> workers_;
  std::vector<int> tracked_fds_;
  std::vector<std::string> recorded_;
};

}  // namespace apitag
