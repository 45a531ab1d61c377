#pragma once

#include <cmath>
#include <cstdint>

#include "fdrcast/nn/matrix.hpp"

namespace fdrcast::nn {

/// A trainable array together with its gradient and Adam moments.
struct ParamTensor {
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  std::uint64_t step_count = 0;

  ParamTensor() = default;
  ParamTensor(std::size_t rows, std::size_t cols)
      : value(rows, cols),
        grad(rows, cols),
        adam_m(rows, cols),
        adam_v(rows, cols) {}

  std::size_t rows() const noexcept { return value.rows(); }
  std::size_t cols() const noexcept { return value.cols(); }
  std::size_t size() const noexcept { return value.size(); }

  void zero_grad() { grad.fill(0.0); }

  void reset_optimizer() {
    adam_m.fill(0.0);
    adam_v.fill(0.0);
    step_count = 0;
  }
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update. The gradient is left in place; callers
/// zero it before the next accumulation.
inline void adam_step(ParamTensor& p, double learning_rate,
                      const AdamConfig& cfg = {}) {
  auto g = p.grad.values();
  for (double v : g) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite gradient passed to adam_step");
    }
  }
  ++p.step_count;
  const double t = static_cast<double>(p.step_count);
  const double m_corr = 1.0 - std::pow(cfg.beta1, t);
  const double v_corr = 1.0 - std::pow(cfg.beta2, t);
  auto w = p.value.values();
  auto m = p.adam_m.values();
  auto v = p.adam_v.values();
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = m[i] / m_corr;
    const double v_hat = v[i] / v_corr;
    w[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace fdrcast::nn
