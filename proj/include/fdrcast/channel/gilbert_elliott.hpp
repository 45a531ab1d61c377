#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "fdrcast/data/outcomes.hpp"
#include "fdrcast/util/rng.hpp"

namespace fdrcast::channel {

/// Two-state (good/bad) Markov channel with state-dependent frame success.
struct GilbertElliottParams {
  double p_good_to_bad = 0.0;
  double p_bad_to_good = 0.0;
  double success_prob_good = 1.0;
  double success_prob_bad = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    for (double p : {p_good_to_bad, p_bad_to_good, success_prob_good,
                     success_prob_bad}) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ParameterError("Gilbert-Elliott probabilities must lie in [0,1]");
      }
    }
    if (!(p_good_to_bad + p_bad_to_good > 0.0)) {
      throw ParameterError(
          "Gilbert-Elliott chain is reducible (both transition probabilities "
          "are zero)");
    }
  }

  double stationary_good() const {
    return p_bad_to_good / (p_good_to_bad + p_bad_to_good);
  }
};

/// Mean FDR 0.884: 90% of the time in a good state delivering 97% of frames,
/// bad bursts of ~11 samples delivering 11%.
inline GilbertElliottParams paper_like_preset(std::uint64_t seed = 0) {
  return {0.01, 0.09, 0.97, 0.11, seed};
}

inline GilbertElliottParams preset_by_name(std::string_view name,
                                           std::uint64_t seed) {
  if (name == "paper-like") return paper_like_preset(seed);
  throw ParameterError("unknown channel preset '" + std::string(name) + "'");
}

/// Long-run fraction of delivered frames.
inline double stationary_fdr(const GilbertElliottParams& p) {
  p.validate();
  const double pi_g = p.stationary_good();
  return pi_g * p.success_prob_good + (1.0 - pi_g) * p.success_prob_bad;
}

enum class ChannelState : std::uint8_t { good, bad };

/// Step-wise simulator. Each step emits an outcome from the current state and
/// then draws the transition. The initial state is drawn from the stationary
/// distribution. Every random decision consumes exactly one engine draw.
class GilbertElliottChannel {
 public:
  explicit GilbertElliottChannel(const GilbertElliottParams& p)
      : params_(p), engine_(p.seed) {
    params_.validate();
    state_ = util::unit_uniform(engine_) < params_.stationary_good()
                 ? ChannelState::good
                 : ChannelState::bad;
  }

  ChannelState state() const noexcept { return state_; }

  std::uint8_t step() {
    const bool good = state_ == ChannelState::good;
    const double s = good ? params_.success_prob_good : params_.success_prob_bad;
    const std::uint8_t outcome = util::unit_uniform(engine_) < s ? 1 : 0;
    const double flip = good ? params_.p_good_to_bad : params_.p_bad_to_good;
    if (util::unit_uniform(engine_) < flip) {
      state_ = good ? ChannelState::bad : ChannelState::good;
    }
    return outcome;
  }

 private:
  GilbertElliottParams params_;
  util::Engine engine_;
  ChannelState state_ = ChannelState::good;
};

inline data::OutcomeSeries simulate(const GilbertElliottParams& p,
                                    std::size_t n) {
  if (n < 1) throw ParameterError("simulate: n must be >= 1");
  GilbertElliottChannel ch(p);
  data::OutcomeSeries s;
  s.outcomes.resize(n);
  for (auto& x : s.outcomes) x = ch.step();
  s.origin_label = "gilbert-elliott seed=" + std::to_string(p.seed);
  return s;
}

/// i.i.d. Bernoulli(p) trace, the degenerate single-state channel.
inline data::OutcomeSeries simulate_bernoulli(double p, std::size_t n,
                                              std::uint64_t seed) {
  return simulate({0.5, 0.5, p, p, seed}, n);
}

}  // namespace fdrcast::channel
