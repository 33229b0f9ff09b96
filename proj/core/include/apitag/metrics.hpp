#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "apitag/util.hpp"

namespace apitag {

// Resource snapshot for one container at one instant: memory bytes, CPU as a
// fraction of cores, and IO throughput in bytes per second.
struct ContainerContext {
  TimestampMs ts = 0;
  std::uint64_t memory_bytes = 0;
  double cpu_cores = 0;
  double io_bytes_per_sec = 0;
};

// Keeps the latest snapshot plus a bounded history per container.
// Single periodic writer, many readers.
class ContainerStore {
 public:
  explicit ContainerStore(std::chrono::milliseconds horizon = std::chrono::hours(1));

  void record(const std::string& id, ContainerContext cc);

  // Most recent snapshot; throws UnknownContainer for ids never recorded.
  ContainerContext latest(const std::string& id) const;

  std::vector<ContainerContext> history(const std::string& id) const;
  std::vector<std::string> ids() const;

 private:
  std::chrono::milliseconds horizon_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::deque<ContainerContext>> snapshots_;
};

// Source of container metrics. sample() returns one snapshot per container.
class MetricsProvider {
 public:
  virtual ~MetricsProvider() = default;
  virtual std::vector<std::pair<std::string, ContainerContext>> sample() = 0;
};

// Replays rows from a fixture file of line-delimited JSON records
// {"ts":..., "container":..., "m":..., "c":..., "i":...}. Each sample()
// returns the next timestamp group, wrapping around at the end.
class FileMetricsProvider : public MetricsProvider {
 public:
  explicit FileMetricsProvider(const std::filesystem::path& fixture);
  std::vector<std::pair<std::string, ContainerContext>> sample() override;

  std::size_t group_count() const { return groups_.size(); }

 private:
  std::vector<std::vector<std::pair<std::string, ContainerContext>>> groups_;
  std::size_t next_ = 0;
};

// Samples the calling process itself via /proc; stands in for a cluster
// metrics backend when running the proxy standalone.
class ProcessMetricsProvider : public MetricsProvider {
 public:
  explicit ProcessMetricsProvider(std::string id = "local");
  std::vector<std::pair<std::string, ContainerContext>> sample() override;

 private:
  std::string id_;
  std::uint64_t last_cpu_ticks_ = 0;
  std::uint64_t last_io_bytes_ = 0;
  TimestampMs last_ts_ = 0;
};

// Drives a MetricsProvider on a fixed interval (deadline-scheduled, so spacing
// stays within tolerance of the interval) and records into a ContainerStore.
class MetricsPoller {
 public:
  MetricsPoller(std::shared_ptr<MetricsProvider> provider, ContainerStore& store,
                std::chrono::milliseconds interval);
  ~MetricsPoller();

  void start();
  void stop();

 private:
  void run();

  std::shared_ptr<MetricsProvider> provider_;
  ContainerStore& store_;
  std::chrono::milliseconds interval_;
  std::thread thread_;
  std::mutex mutex_;
  std::condition_variable cv_;
  bool stopping_ = false;
  bool running_ = false;
};

}  // namespace apitag
