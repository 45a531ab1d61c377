#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "fdrcast/data/windows.hpp"
#include "fdrcast/models/models.hpp"
#include "fdrcast/nn/loss.hpp"
#include "fdrcast/util/rng.hpp"

namespace fdrcast::training {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double train_mse = 0.0;
  double validation_mse = 0.0;
  double elapsed_s = 0.0;
};

struct TrainConfig {
  std::size_t epoch_budget = 30;
  double initial_lr = 0.01;
  std::size_t batch_size = 32;
  std::size_t early_stop_patience = 3;
  std::uint64_t shuffle_seed = 0;
  // Stride used when the caller windows the training split; validation and
  // test sets are windowed at stride 1.
  std::size_t train_stride = 10;

  /// Called after every epoch with the model as trained so far.
  std::function<void(const EpochRecord&, const models::TrainedModel&)> on_epoch;
  /// Test hook: replaces the measured validation MSE of an epoch.
  std::function<double(std::size_t epoch, double measured)> validation_override;

  void validate() const {
    if (epoch_budget < 1) throw ParameterError("epoch budget must be >= 1");
    if (!(initial_lr > 0.0)) throw ParameterError("initial lr must be > 0");
    if (early_stop_patience < 1) throw ParameterError("patience must be >= 1");
    if (batch_size < 1) throw ParameterError("batch size must be >= 1");
    if (train_stride < 1) throw ParameterError("train stride must be >= 1");
  }
};

/// Learning rate for a 1-based epoch: halved after every epoch.
inline double lr_schedule(std::size_t epoch, double initial_lr = 0.01) {
  if (epoch < 1) throw DomainError("lr_schedule: epochs are numbered from 1");
  return std::ldexp(initial_lr, -static_cast<int>(epoch - 1));
}

/// Patience-based stopping on validation loss. Only a strict decrease of the
/// best loss counts as an improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {
    if (patience < 1) throw ParameterError("patience must be >= 1");
  }

  /// Records the loss of `epoch`; returns true when training should stop.
  bool observe(std::size_t epoch, double loss) {
    if (loss < best_loss_) {
      best_loss_ = loss;
      best_epoch_ = epoch;
      stale_ = 0;
    } else {
      ++stale_;
    }
    return stale_ >= patience_;
  }

  bool improved_last() const noexcept { return stale_ == 0; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t stale_ = 0;
  std::size_t best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

namespace detail {

inline void require_compatible(const models::TrainedModel& m,
                               const data::WindowedDataset& ds,
                               const char* which) {
  if (ds.empty()) {
    throw EmptyInputError(std::string(which) + " dataset is empty");
  }
  if (ds.window_length != m.hyperparams.input_length) {
    throw DimensionError(std::string(which) + " dataset window length " +
                         std::to_string(ds.window_length) +
                         " does not match model input length " +
                         std::to_string(m.hyperparams.input_length));
  }
}

inline std::vector<nn::Matrix> snapshot(const nn::Sequential& net) {
  std::vector<nn::Matrix> out;
  for (const auto* p : net.params()) out.push_back(p->value);
  return out;
}

inline void restore(nn::Sequential& net, const std::vector<nn::Matrix>& s) {
  auto ps = net.params();
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = s[i];
}

}  // namespace detail

/// Mean squared error of the model over a whole dataset.
inline double validation_loss(const models::TrainedModel& m,
                              const data::WindowedDataset& val) {
  detail::require_compatible(m, val, "validation");
  const auto pred = models::predict_dataset(m, val);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = val.targets[i] - pred[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

/// Mini-batch Adam on MSE with the halving schedule and early stopping.
/// Returns the model with the parameters of its best validation epoch.
inline models::TrainedModel train(models::TrainedModel model,
                                  const data::WindowedDataset& train_set,
                                  const data::WindowedDataset& val_set,
                                  const TrainConfig& cfg) {
  cfg.validate();
  detail::require_compatible(model, train_set, "training");
  detail::require_compatible(model, val_set, "validation");
  if (cfg.batch_size > train_set.size()) {
    throw ParameterError("batch size " + std::to_string(cfg.batch_size) +
                         " exceeds training set of " +
                         std::to_string(train_set.size()) + " pairs");
  }

  const auto start = std::chrono::steady_clock::now();
  const std::size_t l = model.hyperparams.input_length;
  util::Engine shuffle_engine(cfg.shuffle_seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  EarlyStopping stopper(cfg.early_stop_patience);
  std::vector<nn::Matrix> best = detail::snapshot(model.net);
  auto params = model.net.params();
  model.val_loss_trace.clear();
  model.train_loss_trace.clear();
  model.net.zero_grad();

  for (std::size_t epoch = 1; epoch <= cfg.epoch_budget; ++epoch) {
    const double lr = lr_schedule(epoch, cfg.initial_lr);
    std::shuffle(order.begin(), order.end(), shuffle_engine);
    double sq_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::size_t bn = end - begin;
      nn::Matrix x(bn, l);
      std::vector<double> t(bn);
      for (std::size_t r = 0; r < bn; ++r) {
        const auto p = train_set.pattern(order[begin + r]);
        auto row = x.row(r);
        for (std::size_t i = 0; i < l; ++i) row[i] = p[i];
        t[r] = train_set.targets[order[begin + r]];
      }
      const nn::Matrix y = model.net.forward_train(x);
      const auto loss = nn::mse_loss(y.values(), t);
      if (!std::isfinite(loss.loss)) throw DivergenceError(epoch, batch_index);
      sq_sum += loss.loss * static_cast<double>(bn);
      model.net.backward(nn::Matrix(bn, 1, loss.gradient));
      try {
        for (auto* p : params) nn::adam_step(*p, lr);
      } catch (const NumericError&) {
        throw DivergenceError(epoch, batch_index);
      }
      model.net.zero_grad();
    }

    double val = validation_loss(model, val_set);
    if (cfg.validation_override) val = cfg.validation_override(epoch, val);
    if (!std::isfinite(val)) throw DivergenceError(epoch, batch_index);
    model.val_loss_trace.push_back(val);
    model.train_loss_trace.push_back(sq_sum /
                                     static_cast<double>(order.size()));

    const bool stop = stopper.observe(epoch, val);
    if (stopper.improved_last()) best = detail::snapshot(model.net);

    if (cfg.on_epoch) {
      EpochRecord rec{epoch, lr, model.train_loss_trace.back(), val,
                      std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count()};
      cfg.on_epoch(rec, model);
    }
    if (stop) break;
  }

  detail::restore(model.net, best);
  model.best_epoch = stopper.best_epoch();
  return model;
}

}  // namespace fdrcast::training
