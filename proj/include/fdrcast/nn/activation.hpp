#pragma once

#include <cmath>

namespace fdrcast::nn {

// Branches keep exp() away from large positive arguments.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double stable_tanh(double x) { return std::tanh(x); }

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace fdrcast::nn
