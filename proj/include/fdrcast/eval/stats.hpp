#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fdrcast/errors.hpp"

namespace fdrcast::eval {

namespace detail {

// Linear interpolation between closest ranks on an ascending sequence.
inline double percentile_sorted(std::span<const double> v, double q) {
  const double h = static_cast<double>(v.size() - 1) * q / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v[v.size() - 1];
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

inline void check_q(double q) {
  if (!(q >= 0.0 && q <= 100.0)) {
    throw DomainError("percentile q must lie in [0, 100]");
  }
}

}  // namespace detail

/// q-th percentile (q in [0, 100]) with linear interpolation: rank
/// h = (n - 1) q / 100 between the sorted values at floor(h) and floor(h)+1.
inline double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw EmptyInputError("percentile of an empty set");
  detail::check_q(q);
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return detail::percentile_sorted(v, q);
}

/// Error statistics with e = prediction - target. Squared errors are raw;
/// absolute and signed errors are in percent.
struct ErrorStats {
  std::size_t count = 0;

  double sq_mean = 0.0;
  double sq_p90 = 0.0;
  double sq_p95 = 0.0;
  double sq_p99 = 0.0;
  double sq_max = 0.0;

  double abs_mean = 0.0;
  double abs_std = 0.0;  // population
  double abs_p90 = 0.0;
  double abs_p95 = 0.0;
  double abs_p99 = 0.0;
  double abs_max = 0.0;

  double err_min = 0.0;
  double err_p5 = 0.0;
  double err_p95 = 0.0;
  double err_max = 0.0;
};

inline ErrorStats compute_error_stats(std::span<const double> predictions,
                                      std::span<const double> targets) {
  if (predictions.empty()) throw EmptyInputError("no predictions to score");
  if (predictions.size() != targets.size()) {
    throw DimensionError("compute_error_stats: " +
                         std::to_string(predictions.size()) +
                         " predictions vs " + std::to_string(targets.size()) +
                         " targets");
  }
  const std::size_t n = predictions.size();
  const double dn = static_cast<double>(n);
  std::vector<double> e(n), a(n), s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double raw = predictions[i] - targets[i];
    e[i] = raw * 100.0;
    a[i] = std::abs(raw) * 100.0;
    s[i] = raw * raw;
  }

  ErrorStats st;
  st.count = n;
  double sum_s = 0.0, sum_a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_s += s[i];
    sum_a += a[i];
  }
  st.sq_mean = sum_s / dn;
  st.abs_mean = sum_a / dn;
  double var = 0.0;
  for (double v : a) var += (v - st.abs_mean) * (v - st.abs_mean);
  st.abs_std = std::sqrt(var / dn);

  std::sort(e.begin(), e.end());
  std::sort(a.begin(), a.end());
  std::sort(s.begin(), s.end());
  st.sq_p90 = detail::percentile_sorted(s, 90);
  st.sq_p95 = detail::percentile_sorted(s, 95);
  st.sq_p99 = detail::percentile_sorted(s, 99);
  st.sq_max = s.back();
  st.abs_p90 = detail::percentile_sorted(a, 90);
  st.abs_p95 = detail::percentile_sorted(a, 95);
  st.abs_p99 = detail::percentile_sorted(a, 99);
  st.abs_max = a.back();
  st.err_min = e.front();
  st.err_p5 = detail::percentile_sorted(e, 5);
  st.err_p95 = detail::percentile_sorted(e, 95);
  st.err_max = e.back();
  return st;
}

}  // namespace fdrcast::eval
