#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fdrcast/data/windows.hpp"
#include "fdrcast/nn/checkpoint.hpp"
#include "fdrcast/nn/init.hpp"
#include "fdrcast/nn/sequential.hpp"

namespace fdrcast::models {

enum class ModelKind { cnn, lstm };

inline std::string_view to_string(ModelKind k) {
  return k == ModelKind::cnn ? "cnn" : "lstm";
}

inline ModelKind model_kind_from_string(std::string_view s) {
  if (s == "cnn") return ModelKind::cnn;
  if (s == "lstm") return ModelKind::lstm;
  throw ParameterError("unknown model kind '" + std::string(s) +
                       "' (expected cnn or lstm)");
}

/// Searched hyperparameters: batch size, CNN filters / LSTM units, and input
/// window length.
struct Hyperparams {
  std::size_t batch_size = 32;
  std::size_t width = 64;
  std::size_t input_length = 1200;

  void validate() const {
    if (batch_size < 1 || width < 1 || input_length < 1) {
      throw ParameterError("hyperparameters must all be >= 1");
    }
  }

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;

  std::string to_string() const {
    return "b=" + std::to_string(batch_size) + " n=" + std::to_string(width) +
           " l=" + std::to_string(input_length);
  }
};

/// A network plus everything recorded while fitting it.
struct TrainedModel {
  ModelKind kind = ModelKind::cnn;
  Hyperparams hyperparams;
  nn::Sequential net;
  std::vector<double> val_loss_trace;
  std::vector<double> train_loss_trace;
  std::size_t best_epoch = 0;  // 1-based; 0 when untrained
};

// Conv1D(n, 3) -> ReLU -> MaxPool(2) -> Flatten -> Dense(128) -> ReLU
// -> Dense(64) -> ReLU -> Dense(1)
inline std::vector<nn::LayerSpec> cnn_topology(std::size_t filters) {
  using nn::LayerSpec;
  return {LayerSpec::conv1d(filters, 3), LayerSpec::relu(),
          LayerSpec::maxpool1d(2),       LayerSpec::flatten(),
          LayerSpec::dense(128),         LayerSpec::relu(),
          LayerSpec::dense(64),          LayerSpec::relu(),
          LayerSpec::dense(1)};
}

inline std::vector<nn::LayerSpec> lstm_topology(std::size_t units) {
  return {nn::LayerSpec::lstm(units), nn::LayerSpec::dense(1)};
}

inline TrainedModel build_cnn(const Hyperparams& hp, std::uint64_t seed) {
  hp.validate();
  if (hp.input_length < 4) {
    throw TopologyError("cnn needs input length >= 4, got " +
                        std::to_string(hp.input_length));
  }
  const auto topo = cnn_topology(hp.width);
  TrainedModel m;
  m.kind = ModelKind::cnn;
  m.hyperparams = hp;
  m.net = nn::Sequential(nn::Shape{hp.input_length, 1}, topo);
  nn::initialize(m.net, seed);
  return m;
}

inline TrainedModel build_lstm(const Hyperparams& hp, std::uint64_t seed) {
  hp.validate();
  const auto topo = lstm_topology(hp.width);
  TrainedModel m;
  m.kind = ModelKind::lstm;
  m.hyperparams = hp;
  m.net = nn::Sequential(nn::Shape{hp.input_length, 1}, topo);
  nn::initialize(m.net, seed);
  return m;
}

inline TrainedModel build_model(ModelKind kind, const Hyperparams& hp,
                                std::uint64_t seed) {
  return kind == ModelKind::cnn ? build_cnn(hp, seed) : build_lstm(hp, seed);
}

inline std::size_t parameter_count(const TrainedModel& m) {
  return m.net.parameter_count();
}

/// Packs bit windows into a [B x l] batch of 0.0/1.0 values.
inline nn::Matrix pack_patterns(
    std::span<const std::span<const std::uint8_t>> patterns, std::size_t l) {
  nn::Matrix x(patterns.size(), l);
  for (std::size_t r = 0; r < patterns.size(); ++r) {
    if (patterns[r].size() != l) {
      throw DimensionError("pattern of length " +
                           std::to_string(patterns[r].size()) +
                           " given to a model expecting " + std::to_string(l));
    }
    auto row = x.row(r);
    for (std::size_t i = 0; i < l; ++i) row[i] = patterns[r][i];
  }
  return x;
}

/// Raw (unclamped) regression output for one window.
inline double predict(const TrainedModel& m,
                      std::span<const std::uint8_t> pattern) {
  const std::span<const std::uint8_t> one[] = {pattern};
  return m.net.forward(pack_patterns(one, m.hyperparams.input_length))(0, 0);
}

inline std::vector<double> predict_batch(
    const TrainedModel& m,
    std::span<const std::span<const std::uint8_t>> patterns) {
  if (patterns.empty()) return {};
  const auto y =
      m.net.forward(pack_patterns(patterns, m.hyperparams.input_length));
  return {y.values().begin(), y.values().end()};
}

/// Predictions for every pair of a dataset, evaluated in chunks.
inline std::vector<double> predict_dataset(const TrainedModel& m,
                                           const data::WindowedDataset& ds,
                                           std::size_t chunk = 256) {
  std::vector<double> out;
  out.reserve(ds.size());
  std::vector<std::span<const std::uint8_t>> batch;
  for (std::size_t start = 0; start < ds.size(); start += chunk) {
    batch.clear();
    for (std::size_t k = start; k < std::min(ds.size(), start + chunk); ++k) {
      batch.push_back(ds.pattern(k));
    }
    const auto y = predict_batch(m, batch);
    out.insert(out.end(), y.begin(), y.end());
  }
  return out;
}

inline void save_model(std::ostream& os, const TrainedModel& m) {
  nlohmann::json meta{
      {"model_kind", std::string(to_string(m.kind))},
      {"batch_size", m.hyperparams.batch_size},
      {"width", m.hyperparams.width},
      {"input_length", m.hyperparams.input_length},
      {"best_epoch", m.best_epoch},
      {"val_loss_trace", m.val_loss_trace},
      {"train_loss_trace", m.train_loss_trace},
  };
  nn::write_checkpoint(os, m.net, meta);
}

inline TrainedModel load_model(std::istream& is) {
  auto ck = nn::read_checkpoint(is);
  const auto& meta = ck.metadata;
  TrainedModel m;
  try {
    m.kind = model_kind_from_string(meta.at("model_kind").get<std::string>());
    m.hyperparams = {meta.at("batch_size").get<std::size_t>(),
                     meta.at("width").get<std::size_t>(),
                     meta.at("input_length").get<std::size_t>()};
    m.best_epoch = meta.value("best_epoch", std::size_t{0});
    m.val_loss_trace =
        meta.value("val_loss_trace", std::vector<double>{});
    m.train_loss_trace =
        meta.value("train_loss_trace", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }
  if (ck.net.input_shape() != nn::Shape{m.hyperparams.input_length, 1}) {
    throw FormatError("checkpoint input shape disagrees with its metadata");
  }
  m.net = std::move(ck.net);
  return m;
}

inline void save_model_file(const std::string& path, const TrainedModel& m) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint '" + path + "'");
  save_model(os, m);
}

inline TrainedModel load_model_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint '" + path + "'");
  return load_model(is);
}

}  // namespace fdrcast::models
