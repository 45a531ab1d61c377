#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "fdrcast/models/models.hpp"

namespace fdrcast::models {

/// A complete model + schedule configuration reachable by name.
struct Preset {
  std::string_view name;
  ModelKind kind;
  Hyperparams hyperparams;
  std::size_t epochs;
  std::size_t horizon;
  double initial_lr;
};

// paper-*: full-size configurations. toy-*: desk-scale settings.
inline constexpr std::array<Preset, 4> kPresets = {{
    {"paper-cnn", ModelKind::cnn, {64, 128, 3600}, 30, 3600, 0.01},
    {"paper-lstm", ModelKind::lstm, {32, 25, 1200}, 15, 3600, 0.01},
    {"toy-cnn", ModelKind::cnn, {32, 8, 64}, 10, 64, 0.01},
    {"toy-lstm", ModelKind::lstm, {32, 8, 64}, 10, 64, 0.01},
}};

inline const Preset& preset_by_name(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) return p;
  }
  throw ParameterError("unknown model preset '" + std::string(name) + "'");
}

}  // namespace fdrcast::models
