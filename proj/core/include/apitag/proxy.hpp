#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "apitag/config.hpp"
#include "apitag/metrics.hpp"
#include "apitag/net.hpp"
#include "apitag/oob_log.hpp"
#include "apitag/pipeline.hpp"

namespace apitag {

struct ProxyStats {
  std::uint64_t requests = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t denied = 0;
  std::uint64_t client_errors = 0;   // 400/413 answered locally
  std::uint64_t upstream_errors = 0; // 502 answered locally
  std::uint64_t log_dropped = 0;
};

// Reverse proxy wiring the pipeline in front of one upstream. Each
// connection gets a handler thread holding its own persistent upstream
// connection. Allowed requests are forwarded with their original bytes plus
// one trace-id header; denials answer 403 locally without touching the
// upstream. Logging runs out of band on a bounded queue.
class ProxyServer {
 public:
  ProxyServer(const AppConfig& cfg, std::shared_ptr<Pipeline> pipeline);
  ~ProxyServer();

  // Binds and starts accepting. Throws ConfigError when the listen address
  // is unusable. Port 0 in the listen address selects an ephemeral port.
  void start();
  // Stops accepting, then drains in-flight connections for up to the
  // configured deadline (default 10 s).
  void stop();

  int port() const { return listener_.port(); }
  Pipeline& pipeline() { return *pipeline_; }
  ProxyStats stats() const;

  static constexpr const char* kTraceHeader = "x-apitag-trace";

 private:
  void accept_loop();
  void handle_connection(TcpSocket sock, std::string peer);
  bool relay_exchange(TcpSocket& client, HttpMessage& request, const ParsedRequest& parsed,
                      TcpSocket& upstream, std::string& upstream_buffer,
                      const std::string& trace_id);
  void log_request(const ParsedRequest& parsed, const Pipeline::Result& result, TimestampMs ts,
                   std::int64_t latency_us, const std::string& trace_id);
  void send_error(TcpSocket& client, int status, const std::string& body, bool keep_alive);
  void track(const TcpSocket& sock);
  void untrack_and_close(TcpSocket& sock);

  AppConfig cfg_;
  std::shared_ptr<Pipeline> pipeline_;
  std::string listen_host_;
  int listen_port_ = 0;
  std::string upstream_host_;
  int upstream_port_ = 0;

  TcpListener listener_;
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};

  std::mutex workers_mutex_;
  std::condition_variable workers_done_;
  std::size_t active_workers_ = 0;
  std::vector<std::thread> workers_;
  std::set<int> tracked_fds_;

  std::ofstream log_file_;
  std::unique_ptr<OobLogger> logger_;
  std::unique_ptr<MetricsPoller> metrics_poller_;
  std::shared_ptr<MetricsProvider> metrics_provider_;

  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> forwarded_{0};
  std::atomic<std::uint64_t> denied_{0};
  std::atomic<std::uint64_t> client_errors_{0};
  std::atomic<std::uint64_t> upstream_errors_{0};
  std::atomic<std::uint64_t> trace_counter_{0};
  std::atomic<std::uint64_t> audit_counter_{0};
};

// Blocking convenience runner for the CLI: builds the pipeline from cfg,
// starts the proxy and serves until `stop_flag` becomes true.
void serve(const AppConfig& cfg, std::atomic<bool>& stop_flag);

}  // namespace apitag
