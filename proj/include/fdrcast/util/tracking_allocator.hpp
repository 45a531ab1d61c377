#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>

namespace fdrcast::util {

/// Process-wide byte counters fed by TrackingAllocator.
struct AllocationCounters {
  std::atomic<std::int64_t> live_bytes{0};
  std::atomic<std::int64_t> peak_bytes{0};
};

inline AllocationCounters& allocation_counters() {
  static AllocationCounters counters;
  return counters;
}

inline std::int64_t live_tracked_bytes() {
  return allocation_counters().live_bytes.load(std::memory_order_relaxed);
}

inline std::int64_t peak_tracked_bytes() {
  return allocation_counters().peak_bytes.load(std::memory_order_relaxed);
}

/// Resets the high-water mark to the current live size.
inline void reset_tracked_peak() {
  auto& c = allocation_counters();
  c.peak_bytes.store(c.live_bytes.load(std::memory_order_relaxed),
                     std::memory_order_relaxed);
}

/// std::allocator wrapper that keeps live/peak byte counts for every
/// buffer it hands out.
template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    T* p = std::allocator<T>{}.allocate(n);
    auto& c = allocation_counters();
    const auto bytes = static_cast<std::int64_t>(n * sizeof(T));
    const auto now =
        c.live_bytes.fetch_add(bytes, std::memory_order_relaxed) + bytes;
    auto peak = c.peak_bytes.load(std::memory_order_relaxed);
    while (now > peak && !c.peak_bytes.compare_exchange_weak(
                             peak, now, std::memory_order_relaxed)) {
    }
    return p;
  }

  void deallocate(T* p, std::size_t n) noexcept {
    allocation_counters().live_bytes.fetch_sub(
        static_cast<std::int64_t>(n * sizeof(T)), std::memory_order_relaxed);
    std::allocator<T>{}.deallocate(p, n);
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

}  // namespace fdrcast::util
