#include "apitag/proxy.hpp"

#include <sys/socket.h>

#include <chrono>

#include <nlohmann/json.hpp>

#include "apitag/errors.hpp"

namespace apitag {

using json = nlohmann::json;

namespace {

std::string status_text(int status) {
  switch (status) {
    case 400: return "Bad Request";
    case 403: return "Forbidden";
    case 413: return "Payload Too Large";
    case 502: return "Bad Gateway";
    default: return "Error";
  }
}

// Inserts the trace header right after the request line of a raw head.
std::string with_trace_header(const std::string& head, const std::string& trace_id) {
  std::size_t eol = head.find("\r\n");
  if (eol == std::string::npos) return head;
  std::string out;
  out.reserve(head.size() + 48);
  out.append(head, 0, eol + 2);
  out += ProxyServer::kTraceHeader;
  out += ": ";
  out += trace_id;
  out += "\r\n";
  out.append(head, eol + 2, std::string::npos);
  return out;
}

}  // namespace

ProxyServer::ProxyServer(const AppConfig& cfg, std::shared_ptr<Pipeline> pipeline)
    : cfg_(cfg), pipeline_(std::move(pipeline)) {
  auto [lhost, lport] = split_address(cfg_.listen_address);
  listen_host_ = lhost;
  listen_port_ = lport;
  auto [uhost, uport] = split_address(cfg_.upstream_address);
  upstream_host_ = uhost;
  upstream_port_ = uport;
}

ProxyServer::~ProxyServer() { stop(); }

void ProxyServer::start() {
  if (!listener_.listen(listen_host_, listen_port_))
    throw ConfigError("cannot listen on " + cfg_.listen_address);

  if (!cfg_.log_path.empty()) {
    log_file_.open(cfg_.log_path, std::ios::app);
    if (!log_file_) throw ConfigError("cannot open log file: " + cfg_.log_path);
    logger_ = std::make_unique<OobLogger>(log_file_, cfg_.log_queue_capacity);
  }

  if (!cfg_.metrics_fixture.empty())
    metrics_provider_ = std::make_shared<FileMetricsProvider>(cfg_.metrics_fixture);
  else
    metrics_provider_ = std::make_shared<ProcessMetricsProvider>("upstream");
  metrics_poller_ = std::make_unique<MetricsPoller>(
      metrics_provider_, pipeline_->containers(),
      std::chrono::duration_cast<std::chrono::milliseconds>(cfg_.metrics_interval));
  metrics_poller_->start();

  stopping_ = false;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void ProxyServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown();
  if (accept_thread_.joinable()) accept_thread_.join();

  {
    // Drain in-flight work, then force-wake any handler still blocked on a
    // socket so every worker can be joined.
    std::unique_lock lock(workers_mutex_);
    workers_done_.wait_for(lock, std::chrono::seconds(10),
                           [this] { return active_workers_ == 0; });
    for (int fd : tracked_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  for (std::thread& w : workers_)
    if (w.joinable()) w.join();
  workers_.clear();

  if (metrics_poller_) metrics_poller_->stop();
  if (logger_) {
    logger_->flush();
    logger_->stop();
  }
  if (log_file_.is_open()) log_file_.close();
}

void ProxyServer::track(const TcpSocket& sock) {
  if (!sock.valid()) return;
  std::lock_guard lock(workers_mutex_);
  tracked_fds_.insert(sock.fd());
}

void ProxyServer::untrack_and_close(TcpSocket& sock) {
  if (!sock.valid()) return;
  std::lock_guard lock(workers_mutex_);
  tracked_fds_.erase(sock.fd());
  sock.close();
}

ProxyStats ProxyServer::stats() const {
  ProxyStats s;
  s.requests = requests_.load(std::memory_order_relaxed);
  s.forwarded = forwarded_.load(std::memory_order_relaxed);
  s.denied = denied_.load(std::memory_order_relaxed);
  s.client_errors = client_errors_.load(std::memory_order_relaxed);
  s.upstream_errors = upstream_errors_.load(std::memory_order_relaxed);
  s.log_dropped = logger_ ? logger_->dropped() : 0;
  return s;
}

void ProxyServer::accept_loop() {
  while (!stopping_) {
    std::string peer;
    TcpSocket sock = listener_.accept(&peer);
    if (!sock.valid()) {
      if (stopping_) return;
      continue;
    }
    std::lock_guard lock(workers_mutex_);
    if (stopping_) return;
    ++active_workers_;
    tracked_fds_.insert(sock.fd());
    workers_.emplace_back(
        [this, s = std::move(sock), p = std::move(peer)]() mutable {
          handle_connection(std::move(s), std::move(p));
          std::lock_guard inner(workers_mutex_);
          --active_workers_;
          workers_done_.notify_all();
        });
  }
}

void ProxyServer::send_error(TcpSocket& client, int status, const std::string& body,
                             bool keep_alive) {
  std::string response = "HTTP/1.1 " + std::to_string(status) + " " + status_text(status) +
                         "\r\ncontent-type: application/json\r\ncontent-length: " +
                         std::to_string(body.size()) +
                         (keep_alive ? "\r\n" : "\r\nconnection: close\r\n") + "\r\n" + body;
  client.write_all(response);
}

void ProxyServer::log_request(const ParsedRequest& parsed, const Pipeline::Result& result,
                              TimestampMs ts, std::int64_t latency_us,
                              const std::string& trace_id) {
  if (!logger_) return;
  if (result.decision.outcome == Outcome::Audit && cfg_.audit_log_sample > 1) {
    std::uint64_t n = audit_counter_.fetch_add(1, std::memory_order_relaxed);
    if (n % cfg_.audit_log_sample != 0) return;
  }
  LogRecord record;
  record.ts = ts;
  record.trace_id = trace_id;
  record.method = parsed.method;
  record.path = request_key(parsed).path;
  record.tags = result.detail.tags.names();
  record.decision = std::string(to_string(result.decision.outcome));
  if (result.decision.deciding_policy)
    record.deciding_policy = *result.decision.deciding_policy;
  for (const auto& [flag, message] : result.decision.reasons)
    record.audit_flags.push_back(flag);
  record.latency_us = latency_us;
  record.source = parsed.peer_address;
  logger_->emit(std::move(record));
}

bool ProxyServer::relay_exchange(TcpSocket& client, HttpMessage& request,
                                 const ParsedRequest& parsed, TcpSocket& upstream,
                                 std::string& upstream_buffer, const std::string& trace_id) {
  std::string head = with_trace_header(request.head, trace_id);

  auto send_and_read = [&]() -> std::optional<HttpMessage> {
    if (!upstream.valid()) {
      auto fresh = TcpSocket::connect(upstream_host_, upstream_port_);
      if (!fresh) return std::nullopt;
      upstream = std::move(*fresh);
      upstream_buffer.clear();
      track(upstream);
    }
    if (!upstream.write_all(head) || !upstream.write_all(request.body)) {
      untrack_and_close(upstream);
      return std::nullopt;
    }
    std::optional<HttpMessage> response = read_http_message(
        upstream, upstream_buffer, /*is_response=*/true, cfg_.max_body, parsed.method);
    if (!response) untrack_and_close(upstream);
    return response;
  };

  // One retry to replace a stale pooled upstream connection.
  bool was_pooled = upstream.valid();
  std::optional<HttpMessage> response = send_and_read();
  if (!response && was_pooled) response = send_and_read();
  if (!response) {
    upstream_errors_.fetch_add(1, std::memory_order_relaxed);
    send_error(client, 502, json{{"error", "upstream unreachable"}}.dump(),
               request.keep_alive);
    return request.keep_alive;
  }

  if (!client.write_all(response->head) || !client.write_all(response->body)) return false;
  forwarded_.fetch_add(1, std::memory_order_relaxed);
  if (!response->keep_alive) untrack_and_close(upstream);
  return request.keep_alive;
}

void ProxyServer::handle_connection(TcpSocket sock, std::string peer) {
  std::string client_buffer;
  TcpSocket upstream;
  std::string upstream_buffer;

  while (!stopping_) {
    std::optional<HttpMessage> request;
    try {
      request = read_http_message(sock, client_buffer, /*is_response=*/false, cfg_.max_body);
    } catch (const OversizeBody&) {
      client_errors_.fetch_add(1, std::memory_order_relaxed);
      send_error(sock, 413, json{{"error", "body too large"}}.dump(), false);
      break;
    }
    if (!request) break;

    requests_.fetch_add(1, std::memory_order_relaxed);
    auto started = std::chrono::steady_clock::now();
    TimestampMs ts = now_ms();
    std::string trace_id =
        hex64(fnv1a64(peer) ^ (trace_counter_.fetch_add(1, std::memory_order_relaxed) +
                               (static_cast<std::uint64_t>(ts) << 20)));

    ParsedRequest parsed;
    try {
      parsed = parse_request(request->raw(), peer, cfg_.max_body);
    } catch (const OversizeBody&) {
      client_errors_.fetch_add(1, std::memory_order_relaxed);
      send_error(sock, 413, json{{"error", "body too large"}}.dump(), false);
      break;
    } catch (const MalformedRequest& e) {
      client_errors_.fetch_add(1, std::memory_order_relaxed);
      send_error(sock, 400, json{{"error", e.what()}}.dump(), false);
      break;
    }

    Pipeline::Result result;
    try {
      result = pipeline_->process(parsed, ts);
    } catch (const std::exception& e) {
      if (cfg_.policy.fail_mode == FailMode::Closed) {
        result.decision.outcome = Outcome::Deny;
        result.decision.deciding_policy = "FailClosed";
        result.decision.reasons.emplace_back("FailClosed", e.what());
      } else {
        result.decision.outcome = Outcome::Audit;
        result.decision.reasons.emplace_back("PipelineError", e.what());
      }
    }

    bool keep_going;
    if (result.decision.outcome == Outcome::Deny) {
      denied_.fetch_add(1, std::memory_order_relaxed);
      json body = {{"error", "request denied by policy"},
                   {"denied_by", result.decision.deciding_policy.value_or("")},
                   {"trace", trace_id}};
      json reasons = json::array();
      for (const auto& [policy, message] : result.decision.reasons)
        reasons.push_back({{"policy", policy}, {"message", message}});
      body["reasons"] = reasons;
      send_error(sock, 403, body.dump(), request->keep_alive);
      keep_going = request->keep_alive;
    } else {
      keep_going = relay_exchange(sock, *request, parsed, upstream, upstream_buffer, trace_id);
    }

    auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    log_request(parsed, result, ts, elapsed, trace_id);

    if (!keep_going) break;
  }
  untrack_and_close(upstream);
  untrack_and_close(sock);
}

void serve(const AppConfig& cfg, std::atomic<bool>& stop_flag) {
  Taxonomy tx = cfg.taxonomy_path.empty() ? Taxonomy::standard()
                                          : Taxonomy::load(cfg.taxonomy_path);
  SynonymTable syn = cfg.synonyms_path.empty() ? SynonymTable::standard()
                                               : SynonymTable::load(cfg.synonyms_path);
  auto pipeline = std::make_shared<Pipeline>(cfg, std::move(tx), std::move(syn));
  ProxyServer server(cfg, pipeline);
  server.start();
  while (!stop_flag.load(std::memory_order_relaxed))
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
}

}  // namespace apitag
