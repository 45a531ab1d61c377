#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "fdrcast/models/models.hpp"
#include "fdrcast/util/tracking_allocator.hpp"

namespace fdrcast::eval {

struct ComplexityReport {
  double mean_response_time_ms = 0.0;
  double memory_footprint_mb = 0.0;
  double memory_peak_mb = 0.0;
  std::size_t sample_count = 0;
  std::string hardware_label;
};

enum class MemoryMethod {
  automatic,     // procfs RSS when readable, else tracked allocations
  procfs_rss,
  tracked_alloc,
};

struct BenchOptions {
  std::size_t warmup = 10;
  MemoryMethod memory = MemoryMethod::automatic;
  std::string hardware = "unspecified host";
};

inline constexpr std::size_t kMinBenchRepetitions = 100;
inline constexpr std::size_t kMinBenchWarmup = 10;

namespace detail {

inline std::optional<std::int64_t> procfs_rss_bytes() {
  std::ifstream in("/proc/self/statm");
  std::int64_t size = 0, resident = 0;
  if (!(in >> size >> resident)) return std::nullopt;
  const long page = ::sysconf(_SC_PAGESIZE);
  if (page <= 0) return std::nullopt;
  return resident * page;
}

inline std::optional<std::int64_t> procfs_peak_rss_bytes() {
  std::ifstream in("/proc/self/status");
  std::string key;
  while (in >> key) {
    if (key == "VmHWM:") {
      std::int64_t kb = 0;
      if (in >> kb) return kb * 1024;
      return std::nullopt;
    }
    std::string rest;
    std::getline(in, rest);
  }
  return std::nullopt;
}

inline double to_mb(double bytes) { return bytes / (1024.0 * 1024.0); }

}  // namespace detail

/// Mean single-pattern inference latency plus memory use while predicting.
/// Patterns are cycled; only the predict call is timed.
inline ComplexityReport bench_inference(
    const models::TrainedModel& model,
    std::span<const std::span<const std::uint8_t>> patterns,
    std::size_t repetitions, const BenchOptions& opts = {}) {
  if (repetitions < kMinBenchRepetitions) {
    throw ParameterError("bench_inference needs at least " +
                         std::to_string(kMinBenchRepetitions) +
                         " repetitions, got " + std::to_string(repetitions));
  }
  if (opts.warmup < kMinBenchWarmup) {
    throw ParameterError("bench_inference needs at least " +
                         std::to_string(kMinBenchWarmup) + " warmup runs");
  }
  if (patterns.empty()) throw EmptyInputError("no patterns to benchmark");

  MemoryMethod method = opts.memory;
  if (method == MemoryMethod::automatic) {
    method = detail::procfs_rss_bytes() && detail::procfs_peak_rss_bytes()
                 ? MemoryMethod::procfs_rss
                 : MemoryMethod::tracked_alloc;
  }
  if (method == MemoryMethod::procfs_rss && !detail::procfs_rss_bytes()) {
    method = MemoryMethod::tracked_alloc;
  }

  volatile double sink = 0.0;
  for (std::size_t i = 0; i < opts.warmup; ++i) {
    sink = sink + models::predict(model, patterns[i % patterns.size()]);
  }

  util::reset_tracked_peak();
  double total_ms = 0.0;
  double mem_sum = 0.0;
  std::int64_t tracked_peak = 0;
  for (std::size_t i = 0; i < repetitions; ++i) {
    const auto& p = patterns[i % patterns.size()];
    const auto t0 = std::chrono::steady_clock::now();
    const double y = models::predict(model, p);
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + y;
    total_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (method == MemoryMethod::procfs_rss) {
      mem_sum += static_cast<double>(detail::procfs_rss_bytes().value_or(0));
    } else {
      // The model's tensors are live throughout; the peak also captures
      // the transient activations of each predict call.
      mem_sum += static_cast<double>(util::live_tracked_bytes());
      tracked_peak = std::max(tracked_peak, util::peak_tracked_bytes());
    }
  }

  ComplexityReport r;
  r.sample_count = repetitions;
  r.mean_response_time_ms = total_ms / static_cast<double>(repetitions);
  r.memory_footprint_mb =
      detail::to_mb(mem_sum / static_cast<double>(repetitions));
  if (method == MemoryMethod::procfs_rss) {
    r.memory_peak_mb = detail::to_mb(
        static_cast<double>(detail::procfs_peak_rss_bytes().value_or(0)));
    r.hardware_label = opts.hardware + "; memory=procfs (mean VmRSS, VmHWM)";
  } else {
    r.memory_peak_mb = detail::to_mb(static_cast<double>(tracked_peak));
    r.hardware_label =
        opts.hardware + "; memory=tracked-allocator (mean live, high-water)";
  }
  return r;
}

}  // namespace fdrcast::eval
