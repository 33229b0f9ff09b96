#include "apitag/stub_upstream.hpp"

#include <sys/socket.h>

#include <algorithm>

#include "apitag/errors.hpp"

namespace apitag {

StubUpstream::StubUpstream() : StubUpstream(Options()) {}

StubUpstream::StubUpstream(Options opts) : opts_(std::move(opts)) {}

StubUpstream::~StubUpstream() { stop(); }

void StubUpstream::start() {
  if (!listener_.listen(opts_.host, opts_.port))
    throw ConfigError("stub upstream cannot listen on " + opts_.host);
  stopping_ = false;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void StubUpstream::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown();
  if (accept_thread_.joinable()) accept_thread_.join();
  {
    std::unique_lock lock(mutex_);
    workers_done_.wait_for(lock, std::chrono::seconds(5), [this] { return active_ == 0; });
    for (int fd : tracked_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  for (std::thread& w : workers_)
    if (w.joinable()) w.join();
  workers_.clear();
}

std::vector<std::string> StubUpstream::recorded() const {
  std::lock_guard lock(mutex_);
  return recorded_;
}

void StubUpstream::accept_loop() {
  while (!stopping_) {
    TcpSocket sock = listener_.accept();
    if (!sock.valid()) {
      if (stopping_) return;
      continue;
    }
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    ++active_;
    tracked_fds_.push_back(sock.fd());
    workers_.emplace_back([this, s = std::move(sock)]() mutable {
      handle(std::move(s));
      std::lock_guard inner(mutex_);
      --active_;
      workers_done_.notify_all();
    });
  }
}

void StubUpstream::handle(TcpSocket sock) {
  std::string buffer;
  int fd = sock.fd();
  while (!stopping_) {
    std::optional<HttpMessage> request;
    try {
      request = read_http_message(sock, buffer, /*is_response=*/false, 64 << 20);
    } catch (const OversizeBody&) {
      break;
    }
    if (!request) break;
    requests_.fetch_add(1, std::memory_order_relaxed);
    if (opts_.record_requests) {
      std::lock_guard lock(mutex_);
      recorded_.push_back(request->raw());
    }
    if (opts_.work_delay.count() > 0) std::this_thread::sleep_for(opts_.work_delay);
    std::string response = "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\n"
                           "content-length: " +
                           std::to_string(opts_.body.size()) + "\r\n\r\n" + opts_.body;
    if (!sock.write_all(response)) break;
    if (!request->keep_alive) break;
  }
  std::lock_guard lock(mutex_);
  tracked_fds_.erase(std::remove(tracked_fds_.begin(), tracked_fds_.end(), fd),
                     tracked_fds_.end());
  sock.close();
}

}  // namespace apitag
