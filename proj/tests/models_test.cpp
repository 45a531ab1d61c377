#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fdrcast/models/models.hpp"
#include "fdrcast/models/presets.hpp"

namespace fdrcast::models {
namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, std::mt19937_64& g) {
  std::vector<std::uint8_t> v(n);
  for (auto& x : v) x = static_cast<std::uint8_t>(g() & 1u);
  return v;
}

std::size_t cnn_param_formula(std::size_t l, std::size_t n) {
  const std::size_t flat = (l - 2) / 2 * n;
  return (3 * n + n) + (flat * 128 + 128) + (128 * 64 + 64) + (64 + 1);
}

TEST(Cnn, FlattenWidthAtFullLength) {
  // Only the feature extractor is built here; the full dense head would
  // hold ~29.5M weights.
  nn::Conv1D conv(nn::Shape{3600, 1}, 128, 3);
  nn::MaxPool1D pool(conv.output_shape(), 2);
  EXPECT_EQ(conv.output_shape().length, 3598u);
  EXPECT_EQ(pool.output_shape().length, 1799u);
  EXPECT_EQ(pool.output_shape().flat(), 230272u);
}

TEST(Cnn, ParameterCountMatchesLayerArithmetic) {
  for (auto [l, n] : {std::pair<std::size_t, std::size_t>{64, 8}, {9, 2}, {33, 5}}) {
    EXPECT_EQ(parameter_count(build_cnn({32, n, l}, 1)), cnn_param_formula(l, n));
  }
  EXPECT_EQ(cnn_param_formula(3600, 128), 29483777u);
}

TEST(Cnn, OutputShapeIsScalarPerPattern) {
  const auto m = build_cnn({4, 3, 20}, 2);
  EXPECT_EQ(m.net.output_shape().flat(), 1u);
}

TEST(Cnn, TooShortInputRejected) {
  EXPECT_THROW(build_cnn({1, 1, 3}, 0), TopologyError);
}

TEST(Lstm, ParameterCount) {
  EXPECT_EQ(parameter_count(build_lstm({32, 25, 1200}, 0)), 2726u);
  EXPECT_EQ(parameter_count(build_lstm({32, 1, 5}, 0)), 4u * (1 + 1 + 1) + 2);
}

TEST(Predict, ZeroWeightsReturnOutputBias) {
  for (auto kind : {ModelKind::cnn, ModelKind::lstm}) {
    auto m = build_model(kind, {8, 4, 16}, 3);
    auto ps = m.net.params();
    for (auto* p : ps) p->value.fill(0.0);
    std::mt19937_64 g(1);
    const auto bits = random_bits(16, g);
    EXPECT_EQ(predict(m, bits), 0.0);
    ps.back()->value(0, 0) = 0.3;
    EXPECT_EQ(predict(m, bits), 0.3);
  }
}

TEST(Predict, BatchingDoesNotChangeResults) {
  std::mt19937_64 g(4);
  for (auto kind : {ModelKind::cnn, ModelKind::lstm}) {
    const auto m = build_model(kind, {8, 5, 24}, 11);
    std::vector<std::vector<std::uint8_t>> store;
    for (int i = 0; i < 7; ++i) store.push_back(random_bits(24, g));
    std::vector<std::span<const std::uint8_t>> views(store.begin(), store.end());
    const auto batch = predict_batch(m, views);
    ASSERT_EQ(batch.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) {
      EXPECT_DOUBLE_EQ(batch[i], predict(m, store[i]));
    }
  }
}

TEST(Predict, LengthMismatchRejected) {
  const auto m = build_lstm({8, 2, 10}, 0);
  const std::vector<std::uint8_t> bits(9, 1);
  EXPECT_THROW(predict(m, bits), DimensionError);
}

TEST(Predict, DatasetChunkingMatchesSingles) {
  data::OutcomeSeries s;
  std::mt19937_64 g(8);
  s.outcomes = random_bits(300, g);
  const auto ds = data::make_windows(s, 12, 5, 1);
  const auto m = build_cnn({8, 3, 12}, 5);
  const auto all = predict_dataset(m, ds, 17);
  ASSERT_EQ(all.size(), ds.size());
  for (std::size_t k = 0; k < ds.size(); k += 13) {
    EXPECT_DOUBLE_EQ(all[k], predict(m, ds.pattern(k)));
  }
}

TEST(Build, SameSeedSameWeights) {
  const auto a = build_cnn({8, 4, 16}, 21);
  const auto b = build_cnn({8, 4, 16}, 21);
  const auto c = build_cnn({8, 4, 16}, 22);
  const auto pa = a.net.params(), pb = b.net.params(), pc = c.net.params();
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->value, pb[i]->value);
    differs |= !(pa[i]->value == pc[i]->value);
  }
  EXPECT_TRUE(differs);
}

TEST(Checkpoint, RoundTripPreservesPredictionsAndMetadata) {
  std::mt19937_64 g(6);
  for (auto kind : {ModelKind::cnn, ModelKind::lstm}) {
    auto m = build_model(kind, {16, 3, 14}, 9);
    m.best_epoch = 4;
    m.val_loss_trace = {0.5, 0.25, 0.125};
    std::stringstream ss;
    save_model(ss, m);
    const auto r = load_model(ss);
    EXPECT_EQ(r.kind, kind);
    EXPECT_EQ(r.hyperparams, m.hyperparams);
    EXPECT_EQ(r.best_epoch, 4u);
    EXPECT_EQ(r.val_loss_trace, m.val_loss_trace);
    for (int i = 0; i < 5; ++i) {
      const auto bits = random_bits(14, g);
      EXPECT_EQ(predict(r, bits), predict(m, bits));
    }
  }
}

TEST(Presets, Lookup) {
  const auto p = preset_by_name("paper-lstm");
  EXPECT_EQ(p.kind, ModelKind::lstm);
  EXPECT_EQ(p.hyperparams, (Hyperparams{32, 25, 1200}));
  EXPECT_EQ(preset_by_name("paper-cnn").hyperparams, (Hyperparams{64, 128, 3600}));
  EXPECT_THROW(preset_by_name("bogus"), ParameterError);
}

}  // namespace
}  // namespace fdrcast::models
