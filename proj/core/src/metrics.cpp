#include "apitag/metrics.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "apitag/errors.hpp"

namespace apitag {

using json = nlohmann::json;

ContainerStore::ContainerStore(std::chrono::milliseconds horizon) : horizon_(horizon) {}

void ContainerStore::record(const std::string& id, ContainerContext cc) {
  std::unique_lock lock(mutex_);
  std::deque<ContainerContext>& row = snapshots_[id];
  row.push_back(cc);
  TimestampMs limit = cc.ts - horizon_.count();
  while (!row.empty() && row.front().ts < limit) row.pop_front();
}

ContainerContext ContainerStore::latest(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = snapshots_.find(id);
  if (it == snapshots_.end() || it->second.empty()) throw UnknownContainer(id);
  return it->second.back();
}

std::vector<ContainerContext> ContainerStore::history(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = snapshots_.find(id);
  if (it == snapshots_.end()) throw UnknownContainer(id);
  return {it->second.begin(), it->second.end()};
}

std::vector<std::string> ContainerStore::ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, row] : snapshots_) out.push_back(id);
  return out;
}

FileMetricsProvider::FileMetricsProvider(const std::filesystem::path& fixture) {
  std::ifstream in(fixture);
  if (!in) throw ConfigError("cannot open metrics fixture: " + fixture.string());
  std::string line;
  std::size_t lineno = 0;
  TimestampMs current_ts = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded())
      throw MalformedRecord(fixture.string(), lineno, "bad metrics record");
    ContainerContext cc;
    cc.ts = doc.at("ts").get<TimestampMs>();
    cc.memory_bytes = doc.at("m").get<std::uint64_t>();
    cc.cpu_cores = doc.at("c").get<double>();
    cc.io_bytes_per_sec = doc.at("i").get<double>();
    if (cc.ts != current_ts) {
      groups_.emplace_back();
      current_ts = cc.ts;
    }
    groups_.back().emplace_back(doc.at("container").get<std::string>(), cc);
  }
  if (groups_.empty()) throw ConfigError("metrics fixture is empty: " + fixture.string());
}

std::vector<std::pair<std::string, ContainerContext>> FileMetricsProvider::sample() {
  std::vector<std::pair<std::string, ContainerContext>> group = groups_[next_];
  next_ = (next_ + 1) % groups_.size();
  return group;
}

ProcessMetricsProvider::ProcessMetricsProvider(std::string id) : id_(std::move(id)) {}

std::vector<std::pair<std::string, ContainerContext>> ProcessMetricsProvider::sample() {
  ContainerContext cc;
  cc.ts = now_ms();

  // Resident set from /proc/self/statm (pages).
  {
    std::ifstream statm("/proc/self/statm");
    std::uint64_t vm_pages = 0, rss_pages = 0;
    if (statm >> vm_pages >> rss_pages)
      cc.memory_bytes = rss_pages * static_cast<std::uint64_t>(sysconf(_SC_PAGESIZE));
  }

  // CPU fraction from utime+stime deltas in /proc/self/stat.
  {
    std::ifstream stat("/proc/self/stat");
    std::string content((std::istreambuf_iterator<char>(stat)),
                        std::istreambuf_iterator<char>());
    std::size_t paren = content.rfind(')');
    if (paren != std::string::npos) {
      std::istringstream fields(content.substr(paren + 1));
      std::string field;
      std::uint64_t utime = 0, stime = 0;
      // Fields after the command: state is field 3; utime/stime are 14/15.
      for (int i = 3; i <= 15 && fields >> field; ++i) {
        if (i == 14) utime = std::stoull(field);
        if (i == 15) stime = std::stoull(field);
      }
      std::uint64_t ticks = utime + stime;
      if (last_ts_ > 0 && cc.ts > last_ts_) {
        double elapsed_s = static_cast<double>(cc.ts - last_ts_) / 1000.0;
        double tick_hz = static_cast<double>(sysconf(_SC_CLK_TCK));
        cc.cpu_cores = static_cast<double>(ticks - last_cpu_ticks_) / tick_hz / elapsed_s;
      }
      last_cpu_ticks_ = ticks;
    }
  }

  // IO throughput from /proc/self/io byte counters.
  {
    std::ifstream io("/proc/self/io");
    std::string line;
    std::uint64_t bytes = 0;
    while (std::getline(io, line)) {
      if (line.rfind("read_bytes:", 0) == 0 || line.rfind("write_bytes:", 0) == 0)
        bytes += std::stoull(line.substr(line.find(':') + 1));
    }
    if (last_ts_ > 0 && cc.ts > last_ts_ && bytes >= last_io_bytes_) {
      double elapsed_s = static_cast<double>(cc.ts - last_ts_) / 1000.0;
      cc.io_bytes_per_sec = static_cast<double>(bytes - last_io_bytes_) / elapsed_s;
    }
    last_io_bytes_ = bytes;
  }

  last_ts_ = cc.ts;
  return {{id_, cc}};
}

MetricsPoller::MetricsPoller(std::shared_ptr<MetricsProvider> provider, ContainerStore& store,
                             std::chrono::milliseconds interval)
    : provider_(std::move(provider)), store_(store), interval_(interval) {}

MetricsPoller::~MetricsPoller() { stop(); }

void MetricsPoller::start() {
  std::lock_guard lock(mutex_);
  if (running_) return;
  stopping_ = false;
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

void MetricsPoller::stop() {
  {
    std::lock_guard lock(mutex_);
    if (!running_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(mutex_);
  running_ = false;
}

void MetricsPoller::run() {
  auto next = std::chrono::steady_clock::now();
  while (true) {
    for (auto& [id, cc] : provider_->sample()) store_.record(id, cc);
    next += interval_;
    std::unique_lock lock(mutex_);
    if (cv_.wait_until(lock, next, [this] { return stopping_; })) return;
  }
}

}  // namespace apitag
