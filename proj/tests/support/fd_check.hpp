#pragma once

// Central finite-difference oracle for layer gradients. Independent of the
// backward passes: it only calls the pure forward().

#include <algorithm>
#include <cmath>
#include <random>

#include "fdrcast/nn/layers.hpp"
#include "fdrcast/nn/loss.hpp"
#include "fdrcast/nn/sequential.hpp"

namespace fdrcast::testing {

inline constexpr double kFdStep = 1e-5;

/// |a - n| / max(|a|, |n|, 1e-6); the floor keeps round-off on vanishing
/// components from reading as a large relative error.
inline double rel_error(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

inline double dot(const nn::Matrix& a, const nn::Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

inline nn::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& g,
                                double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  nn::Matrix m(r, c);
  for (double& v : m.values()) v = d(g);
  return m;
}

/// Max relative error between analytic and finite-difference gradients of
/// L = sum(proj * layer(x)) over the input and every parameter.
template <typename LayerT>
double layer_gradient_error(LayerT& layer, const nn::Matrix& x,
                            const nn::Matrix& proj) {
  auto loss = [&](const nn::Matrix& in) { return dot(layer.forward(in), proj); };
  layer.forward_train(x);
  for (auto* p : layer.params()) p->zero_grad();
  const nn::Matrix dx = layer.backward(proj);

  double worst = 0.0;
  nn::Matrix xp = x;
  for (std::size_t i = 0; i < xp.size(); ++i) {
    const double v = xp.values()[i];
    xp.values()[i] = v + kFdStep;
    const double up = loss(xp);
    xp.values()[i] = v - kFdStep;
    const double down = loss(xp);
    xp.values()[i] = v;
    worst = std::max(worst, rel_error(dx.values()[i], (up - down) / (2 * kFdStep)));
  }
  for (auto* p : layer.params()) {
    auto w = p->value.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double v = w[i];
      w[i] = v + kFdStep;
      const double up = loss(x);
      w[i] = v - kFdStep;
      const double down = loss(x);
      w[i] = v;
      worst = std::max(worst,
                       rel_error(p->grad.values()[i], (up - down) / (2 * kFdStep)));
    }
  }
  return worst;
}

/// Same check for the MSE head: gradient with respect to the predictions.
inline double mse_gradient_error(const std::vector<double>& pred,
                                 const std::vector<double>& target) {
  const auto analytic = nn::mse_loss(pred, target).gradient;
  double worst = 0.0;
  auto p = pred;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double v = p[i];
    p[i] = v + kFdStep;
    const double up = nn::mse_loss(p, target).loss;
    p[i] = v - kFdStep;
    const double down = nn::mse_loss(p, target).loss;
    p[i] = v;
    worst = std::max(worst, rel_error(analytic[i], (up - down) / (2 * kFdStep)));
  }
  return worst;
}

/// Inputs for ReLU checks keep clear of the kink.
inline nn::Matrix away_from_zero(std::size_t r, std::size_t c,
                                 std::mt19937_64& g) {
  nn::Matrix m = random_matrix(r, c, g, 0.05, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (double& v : m.values()) v = sign(g) ? v : -v;
  return m;
}

/// Inputs for max-pool checks whose pooled pairs differ by at least `gap`.
inline nn::Matrix separated_pairs(std::size_t batch, std::size_t len,
                                  std::size_t channels, std::mt19937_64& g,
                                  double gap = 1e-2) {
  nn::Matrix m = random_matrix(batch, len * channels, g);
  std::uniform_real_distribution<double> d(gap, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t t = 0; t + 1 < len; t += 2) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double a = m(r, t * channels + c);
        m(r, (t + 1) * channels + c) = a + (sign(g) ? d(g) : -d(g));
      }
    }
  }
  return m;
}

}  // namespace fdrcast::testing
