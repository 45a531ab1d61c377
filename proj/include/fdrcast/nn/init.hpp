#pragma once

#include <cmath>
#include <cstdint>
#include <variant>

#include "fdrcast/nn/sequential.hpp"
#include "fdrcast/util/rng.hpp"

namespace fdrcast::nn {

namespace detail {

inline void fill_uniform(Matrix& m, double limit, util::Engine& g) {
  for (double& v : m.values()) v = util::symmetric_uniform(g, limit);
}

inline double he_limit(std::size_t fan_in) {
  return std::sqrt(6.0 / static_cast<double>(fan_in));
}

inline double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace detail

/// Seeds every weight of `net`. Layers feeding a ReLU get He-uniform
/// weights (std sqrt(2/fan_in)); everything else gets Glorot-uniform.
/// Biases start at zero and optimizer state is reset.
inline void initialize(Sequential& net, std::uint64_t seed) {
  util::Engine g(seed);
  auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const bool feeds_relu = i + 1 < layers.size() &&
                            std::holds_alternative<Relu>(layers[i + 1]);
    if (auto* d = std::get_if<Dense>(&layers[i])) {
      const std::size_t fi = d->weight.rows(), fo = d->weight.cols();
      detail::fill_uniform(d->weight.value,
                           feeds_relu ? detail::he_limit(fi)
                                      : detail::glorot_limit(fi, fo),
                           g);
      d->bias.value.fill(0.0);
    } else if (auto* c = std::get_if<Conv1D>(&layers[i])) {
      const std::size_t fi = c->weight.rows();
      const std::size_t fo = c->kernel() * c->weight.cols();
      detail::fill_uniform(c->weight.value,
                           feeds_relu ? detail::he_limit(fi)
                                      : detail::glorot_limit(fi, fo),
                           g);
      c->bias.value.fill(0.0);
    } else if (auto* l = std::get_if<Lstm>(&layers[i])) {
      const std::size_t G = 4 * l->cell.units();
      detail::fill_uniform(
          l->cell.input_weights.value,
          detail::glorot_limit(l->cell.input_channels(), G), g);
      detail::fill_uniform(l->cell.recurrent_weights.value,
                           detail::glorot_limit(l->cell.units(), G), g);
      l->cell.bias.value.fill(0.0);
    }
  }
  for (auto* p : net.params()) {
    p->zero_grad();
    p->reset_optimizer();
  }
}

}  // namespace fdrcast::nn
