#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "fdrcast/channel/gilbert_elliott.hpp"
#include "fdrcast/training/train.hpp"

namespace fdrcast::training {
namespace {

using models::Hyperparams;

struct Fixture {
  data::WindowedDataset train_set;
  data::WindowedDataset val_set;
};

Fixture make_data(std::size_t l, std::size_t horizon, std::uint64_t seed) {
  const auto s = channel::simulate(channel::paper_like_preset(seed), 1200);
  const auto sp = data::chronological_split(s, {0.6, 0.4, 0.0});
  return {data::make_windows(sp.train, l, horizon, 4),
          data::make_windows(sp.validation, l, horizon, 4)};
}

std::vector<nn::Matrix> values_of(const models::TrainedModel& m) {
  std::vector<nn::Matrix> out;
  for (const auto* p : m.net.params()) out.push_back(p->value);
  return out;
}

TEST(LrSchedule, HalvesEachEpoch) {
  EXPECT_EQ(lr_schedule(1), 0.01);
  EXPECT_EQ(lr_schedule(2), 0.005);
  EXPECT_EQ(lr_schedule(3), 0.0025);
  EXPECT_EQ(lr_schedule(11), 0.01 / 1024.0);
  EXPECT_THROW(lr_schedule(0), DomainError);
}

TEST(EarlyStopping, StopsAfterPatienceWithoutStrictImprovement) {
  EarlyStopping s(3);
  EXPECT_FALSE(s.observe(1, 0.5));
  EXPECT_FALSE(s.observe(2, 0.4));
  EXPECT_FALSE(s.observe(3, 0.4));  // equal is not an improvement
  EXPECT_FALSE(s.observe(4, 0.41));
  EXPECT_TRUE(s.observe(5, 0.42));
  EXPECT_EQ(s.best_epoch(), 2u);
  EXPECT_EQ(s.best_loss(), 0.4);
}

TEST(Train, EarlyStopRestoresBestEpochParameters) {
  const auto d = make_data(16, 8, 1);
  const std::vector<double> scripted{0.5, 0.4, 0.41, 0.42, 0.43, 0.1, 0.1};
  std::vector<nn::Matrix> at_epoch2;
  TrainConfig cfg;
  cfg.epoch_budget = 7;
  cfg.batch_size = 16;
  cfg.validation_override = [&](std::size_t epoch, double) {
    return scripted[epoch - 1];
  };
  cfg.on_epoch = [&](const EpochRecord& r, const models::TrainedModel& m) {
    if (r.epoch == 2) at_epoch2 = values_of(m);
  };
  const auto m = train(models::build_lstm({16, 3, 16}, 2), d.train_set, d.val_set, cfg);
  EXPECT_EQ(m.val_loss_trace, (std::vector<double>{0.5, 0.4, 0.41, 0.42, 0.43}));
  EXPECT_EQ(m.best_epoch, 2u);
  EXPECT_EQ(values_of(m), at_epoch2);
}

TEST(Train, SingleEpochBudget) {
  const auto d = make_data(12, 6, 2);
  TrainConfig cfg;
  cfg.epoch_budget = 1;
  cfg.batch_size = 8;
  const auto m = train(models::build_cnn({8, 2, 12}, 3), d.train_set, d.val_set, cfg);
  EXPECT_EQ(m.val_loss_trace.size(), 1u);
  EXPECT_EQ(m.train_loss_trace.size(), 1u);
  EXPECT_EQ(m.best_epoch, 1u);
}

TEST(Train, LearningRatesReportedPerEpoch) {
  const auto d = make_data(12, 6, 3);
  TrainConfig cfg;
  cfg.epoch_budget = 3;
  cfg.batch_size = 8;
  cfg.validation_override = [](std::size_t e, double) { return 1.0 / e; };
  std::vector<double> lrs;
  cfg.on_epoch = [&](const EpochRecord& r, const models::TrainedModel&) {
    lrs.push_back(r.learning_rate);
  };
  train(models::build_lstm({8, 2, 12}, 1), d.train_set, d.val_set, cfg);
  EXPECT_EQ(lrs, (std::vector<double>{0.01, 0.005, 0.0025}));
}

TEST(Train, DeterministicForFixedSeeds) {
  const auto d = make_data(12, 6, 4);
  TrainConfig cfg;
  cfg.epoch_budget = 3;
  cfg.batch_size = 8;
  cfg.shuffle_seed = 77;
  const auto a = train(models::build_cnn({8, 3, 12}, 5), d.train_set, d.val_set, cfg);
  const auto b = train(models::build_cnn({8, 3, 12}, 5), d.train_set, d.val_set, cfg);
  EXPECT_EQ(a.val_loss_trace, b.val_loss_trace);
  EXPECT_EQ(values_of(a), values_of(b));
}

TEST(Train, RejectsOversizedBatchAndMismatchedWindows) {
  const auto d = make_data(12, 6, 5);
  TrainConfig cfg;
  cfg.batch_size = d.train_set.size() + 1;
  EXPECT_THROW(train(models::build_lstm({8, 2, 12}, 1), d.train_set, d.val_set, cfg),
               ParameterError);
  cfg.batch_size = 8;
  EXPECT_THROW(train(models::build_lstm({8, 2, 13}, 1), d.train_set, d.val_set, cfg),
               DimensionError);
}

TEST(Train, NonFiniteValidationLossIsDivergence) {
  const auto d = make_data(12, 6, 6);
  TrainConfig cfg;
  cfg.epoch_budget = 3;
  cfg.batch_size = 8;
  cfg.validation_override = [](std::size_t e, double v) {
    return e == 2 ? std::numeric_limits<double>::quiet_NaN() : v;
  };
  try {
    train(models::build_lstm({8, 2, 12}, 1), d.train_set, d.val_set, cfg);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 2u);
  }
}

TEST(Train, SmallAdamStepReducesPairError) {
  std::mt19937_64 g(9);
  for (auto kind : {models::ModelKind::cnn, models::ModelKind::lstm}) {
    auto m = models::build_model(kind, {1, 4, 10}, 13);
    nn::Matrix x(1, 10);
    for (auto& v : x.values()) v = static_cast<double>(g() & 1u);
    const std::vector<double> t{0.9};
    const double before = nn::mse_loss(m.net.forward(x).values(), t).loss;
    const auto y = m.net.forward_train(x);
    const auto loss = nn::mse_loss(y.values(), t);
    m.net.backward(nn::Matrix(1, 1, loss.gradient));
    for (auto* p : m.net.params()) nn::adam_step(*p, 1e-4);
    const double after = nn::mse_loss(m.net.forward(x).values(), t).loss;
    EXPECT_LT(after, before);
  }
}

TEST(ValidationLoss, ConstantModelExample) {
  data::OutcomeSeries s;
  s.outcomes = {1, 0, 1, 1, 0, 0};
  const auto ds = data::make_windows(s, 2, 2, 1);  // targets 1, 0.5, 0, 0.5...
  auto m = models::build_lstm({1, 2, 2}, 0);
  for (auto* p : m.net.params()) p->value.fill(0.0);
  m.net.params().back()->value(0, 0) = 0.5;
  double expected = 0.0;
  for (double t : ds.targets) expected += (t - 0.5) * (t - 0.5);
  expected /= static_cast<double>(ds.size());
  EXPECT_DOUBLE_EQ(validation_loss(m, ds), expected);
  EXPECT_GT(expected, 0.0);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  cfg.epoch_budget = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = {};
  cfg.initial_lr = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
}

}  // namespace
}  // namespace fdrcast::training
