#pragma once

#include <span>
#include <vector>

#include "fdrcast/errors.hpp"

namespace fdrcast::nn {

struct LossResult {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Mean squared error and its gradient with respect to each prediction.
inline LossResult mse_loss(std::span<const double> predictions,
                           std::span<const double> targets) {
  if (predictions.empty()) {
    throw EmptyInputError("mse_loss: empty input");
  }
  if (predictions.size() != targets.size()) {
    throw DimensionError("mse_loss: " + std::to_string(predictions.size()) +
                         " predictions vs " + std::to_string(targets.size()) +
                         " targets");
  }
  const double n = static_cast<double>(predictions.size());
  LossResult out;
  out.gradient.resize(predictions.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    sum += d * d;
    out.gradient[i] = 2.0 * d / n;
  }
  out.loss = sum / n;
  return out;
}

}  // namespace fdrcast::nn
