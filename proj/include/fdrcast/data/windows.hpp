#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fdrcast/data/outcomes.hpp"

namespace fdrcast::data {

/// Mean of the `horizon` outcomes strictly after index `i` (0-based), i.e.
/// the delivery ratio over the next horizon samples.
inline double compute_target(const OutcomeSeries& series, std::size_t i,
                             std::size_t horizon) {
  if (horizon < 1) throw ParameterError("horizon must be >= 1");
  if (i >= series.size() || horizon >= series.size() - i) {
    throw OutOfRangeError("target window (" + std::to_string(i) + ", +" +
                          std::to_string(horizon) + "] exceeds series of " +
                          std::to_string(series.size()));
  }
  std::size_t sum = 0;
  for (std::size_t j = i + 1; j <= i + horizon; ++j) sum += series.outcomes[j];
  return static_cast<double>(sum) / static_cast<double>(horizon);
}

/// (pattern, target) pairs over one contiguous outcome segment. Patterns are
/// views into the segment; anchor k's pattern is the `window_length` outcomes
/// ending at anchors[k] inclusive.
struct WindowedDataset {
  std::vector<std::uint8_t> bits;
  std::vector<std::size_t> anchors;
  std::vector<double> targets;
  std::size_t window_length = 0;
  std::size_t horizon = 0;
  std::size_t stride = 1;

  std::size_t size() const noexcept { return targets.size(); }
  bool empty() const noexcept { return targets.empty(); }

  std::span<const std::uint8_t> pattern(std::size_t k) const {
    return std::span<const std::uint8_t>(bits).subspan(
        anchors[k] + 1 - window_length, window_length);
  }
};

/// Number of pairs a segment of `length` outcomes yields at stride 1.
inline std::size_t window_count_stride1(std::size_t length, std::size_t l,
                                        std::size_t horizon) {
  return length >= l + horizon ? length - l - horizon + 1 : 0;
}

inline std::size_t window_count(std::size_t length, std::size_t l,
                                std::size_t horizon, std::size_t stride) {
  const std::size_t c = window_count_stride1(length, l, horizon);
  return (c + stride - 1) / stride;
}

inline WindowedDataset make_windows(const OutcomeSeries& series, std::size_t l,
                                    std::size_t horizon, std::size_t stride) {
  if (l < 1 || horizon < 1 || stride < 1) {
    throw ParameterError("window length, horizon and stride must be >= 1");
  }
  const std::size_t n = series.size();
  if (n < l + horizon) {
    throw InsufficientDataError(
        "series of " + std::to_string(n) + " outcomes is too short: need at least " +
            std::to_string(l + horizon) + " (window " + std::to_string(l) +
            " + horizon " + std::to_string(horizon) + ")",
        l + horizon);
  }
  WindowedDataset ds;
  ds.bits = series.outcomes;
  ds.window_length = l;
  ds.horizon = horizon;
  ds.stride = stride;

  std::vector<std::size_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + series.outcomes[i];

  const std::size_t count = window_count(n, l, horizon, stride);
  ds.anchors.reserve(count);
  ds.targets.reserve(count);
  for (std::size_t i = l - 1; i + horizon < n; i += stride) {
    ds.anchors.push_back(i);
    const std::size_t ones = prefix[i + horizon + 1] - prefix[i + 1];
    ds.targets.push_back(static_cast<double>(ones) /
                         static_cast<double>(horizon));
  }
  return ds;
}

/// Train/validation/test fractions.
struct SplitSpec {
  double train = 0.5;
  double validation = 0.1667;
  double test = 0.3333;

  void validate() const {
    if (train < 0.0 || validation < 0.0 || test < 0.0) {
      throw ParameterError("split fractions must be non-negative");
    }
    if (std::abs(train + validation + test - 1.0) > 1e-9) {
      throw ParameterError("split fractions must sum to 1");
    }
  }
};

struct SeriesSplits {
  OutcomeSeries train;
  OutcomeSeries validation;
  OutcomeSeries test;
};

/// Contiguous, order-preserving split. Boundaries sit at
/// floor(train * n) and floor((train + validation) * n); test takes the rest.
inline SeriesSplits chronological_split(const OutcomeSeries& series,
                                        const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = series.size();
  const auto dn = static_cast<double>(n);
  std::size_t b1 = static_cast<std::size_t>(std::floor(spec.train * dn));
  std::size_t b2 =
      static_cast<std::size_t>(std::floor((spec.train + spec.validation) * dn));
  b1 = std::min(b1, n);
  b2 = std::min(std::max(b2, b1), n);
  auto segment = [&](std::size_t a, std::size_t b, const char* tag) {
    OutcomeSeries s;
    s.outcomes.assign(series.outcomes.begin() + static_cast<std::ptrdiff_t>(a),
                      series.outcomes.begin() + static_cast<std::ptrdiff_t>(b));
    s.sample_period_s = series.sample_period_s;
    s.origin_label = series.origin_label + "#" + tag;
    return s;
  };
  return {segment(0, b1, "train"), segment(b1, b2, "validation"),
          segment(b2, n, "test")};
}

}  // namespace fdrcast::data
