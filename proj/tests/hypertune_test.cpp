#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "fdrcast/channel/gilbert_elliott.hpp"
#include "fdrcast/hypertune/search.hpp"

namespace fdrcast::hypertune {
namespace {

namespace fs = std::filesystem;

TrialRecord trial(std::size_t b, std::size_t n, std::size_t l, double avg) {
  TrialRecord r;
  r.hyperparams = {b, n, l};
  r.losses = std::vector<double>(10, avg);
  r.finalize();
  return r;
}

// Deterministic synthetic loss surface with its minimum at (64, 128, 1800).
double bowl(const Hyperparams& hp) {
  auto sq = [](double v) { return v * v; };
  return 0.1 + sq(std::log2(double(hp.batch_size)) - 6) +
         sq(std::log2(double(hp.width)) - 7) + sq(hp.input_length / 600.0 - 3);
}

TrialRunner stub_runner(std::function<double(const Hyperparams&)> f,
                        std::atomic<int>* calls = nullptr) {
  return [f, calls](const Hyperparams& hp, std::uint64_t) {
    if (calls) ++*calls;
    TrialRecord r;
    r.losses.assign(8, 1.0);
    for (std::size_t e = 5; e < 8; ++e) r.losses[e] = f(hp);
    return r;
  };
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("fdrcast_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

TEST(StableAvg, SkipsFirstFiveEpochs) {
  const std::vector<double> trace{9, 9, 9, 9, 9, 2, 4};
  EXPECT_EQ(stable_avg_loss(trace), 3.0);
  const std::vector<double> six{7, 7, 7, 7, 7, 1.5};
  EXPECT_EQ(stable_avg_loss(six), 1.5);
}

TEST(StableAvg, NeedsSixEpochs) {
  const std::vector<double> five{1, 1, 1, 1, 1};
  EXPECT_THROW(stable_avg_loss(five), InsufficientEpochsError);
}

TEST(SelectBest, PicksMinimum) {
  const std::vector<TrialRecord> t{trial(32, 64, 1200, 0.2), trial(64, 64, 1200, 0.1),
                                   trial(32, 128, 1800, 0.3)};
  EXPECT_EQ(select_best(t), (Hyperparams{64, 64, 1200}));
}

TEST(SelectBest, TiesPreferSmallerLengthThenWidthThenBatch) {
  std::vector<TrialRecord> t{trial(32, 64, 1800, 0.1), trial(128, 64, 1200, 0.1)};
  EXPECT_EQ(select_best(t), (Hyperparams{128, 64, 1200}));
  t = {trial(32, 128, 1200, 0.1), trial(64, 64, 1200, 0.1)};
  EXPECT_EQ(select_best(t), (Hyperparams{64, 64, 1200}));
  t = {trial(64, 64, 1200, 0.1), trial(32, 64, 1200, 0.1)};
  EXPECT_EQ(select_best(t), (Hyperparams{32, 64, 1200}));
}

TEST(SelectBest, IgnoresDivergedAndShortTrials) {
  auto diverged = trial(32, 64, 1200, 0.01);
  diverged.status = TrialStatus::diverged;
  diverged.finalize();
  TrialRecord short_run;
  short_run.hyperparams = {32, 64, 1800};
  short_run.losses = {0.001, 0.001};
  short_run.status = TrialStatus::stopped_early;
  short_run.finalize();
  std::vector<TrialRecord> t{diverged, short_run, trial(64, 64, 1200, 0.5)};
  EXPECT_EQ(select_best(t), (Hyperparams{64, 64, 1200}));
  t = {diverged, short_run};
  EXPECT_THROW(select_best(t), SelectionError);
}

TEST(SelectBest, InvariantUnderPositiveRescaling) {
  std::vector<TrialRecord> t;
  SearchSpace space;
  for (const auto& hp : space.grid()) {
    t.push_back(trial(hp.batch_size, hp.width, hp.input_length, bowl(hp)));
  }
  const auto best = select_best(t);
  for (auto& r : t) {
    for (auto& v : r.losses) v = 3.5 * v + 2.0;
    r.finalize();
  }
  EXPECT_EQ(select_best(t), best);
}

TEST(SearchSpace, GridHas27Points) {
  const auto g = SearchSpace{}.grid();
  ASSERT_EQ(g.size(), 27u);
  EXPECT_EQ(g.front(), (Hyperparams{32, 64, 1200}));
  EXPECT_EQ(g.back(), (Hyperparams{128, 256, 3600}));
}

TEST(RunSearch, RunsEveryTrialAndFindsStubMinimum) {
  std::atomic<int> calls{0};
  const auto r = run_search(ModelKind::cnn, SearchSpace{}, stub_runner(bowl, &calls), {});
  EXPECT_EQ(calls.load(), 27);
  EXPECT_EQ(r.trials.size(), 27u);
  EXPECT_EQ(r.executed, 27u);
  EXPECT_EQ(r.best, (Hyperparams{64, 128, 1800}));
  for (const auto& t : r.trials) {
    ASSERT_TRUE(t.stable_avg);
    EXPECT_DOUBLE_EQ(*t.stable_avg, bowl(t.hyperparams));
  }
}

TEST(RunSearch, ResultIndependentOfWorkerCount) {
  SearchOptions one, three;
  three.workers = 3;
  const auto a = run_search(ModelKind::lstm, SearchSpace{}, stub_runner(bowl), one);
  const auto b = run_search(ModelKind::lstm, SearchSpace{}, stub_runner(bowl), three);
  EXPECT_EQ(a.best, b.best);
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_EQ(a.trials[i].hyperparams, b.trials[i].hyperparams);
    EXPECT_EQ(a.trials[i].stable_avg, b.trials[i].stable_avg);
    EXPECT_EQ(a.trials[i].seed, b.trials[i].seed);
  }
}

TEST(RunSearch, ResumesFromPersistedTrials) {
  TempDir dir("resume");
  SearchOptions opts;
  opts.store_dir = dir.path;
  // First run is cut short after ten trials.
  std::atomic<int> calls{0};
  auto failing = [&](const Hyperparams& hp, std::uint64_t s) {
    if (calls.load() == 10) throw std::runtime_error("interrupted");
    return stub_runner(bowl, &calls)(hp, s);
  };
  EXPECT_THROW(run_search(ModelKind::cnn, SearchSpace{}, failing, opts),
               std::runtime_error);
  std::size_t persisted = 0;
  for (const auto& e : fs::directory_iterator(dir.path)) {
    persisted += e.path().extension() == ".json";
  }
  EXPECT_EQ(persisted, 10u);

  std::atomic<int> second{0};
  const auto r = run_search(ModelKind::cnn, SearchSpace{}, stub_runner(bowl, &second), opts);
  EXPECT_EQ(second.load(), 17);
  EXPECT_EQ(r.executed, 17u);
  EXPECT_EQ(r.best, (Hyperparams{64, 128, 1800}));
  EXPECT_TRUE(fs::exists(dir.path / "summary.csv"));
}

TEST(RunSearch, AllDivergedRaisesSearchError) {
  auto runner = [](const Hyperparams&, std::uint64_t) {
    TrialRecord r;
    r.status = TrialStatus::diverged;
    return r;
  };
  SearchSpace small;
  small.batch_sizes = {8};
  small.widths = {2, 3};
  small.lengths = {10};
  try {
    run_search(ModelKind::lstm, small, runner, {});
    FAIL();
  } catch (const SearchError& e) {
    EXPECT_NE(std::string(e.what()).find("n=3"), std::string::npos);
  }
}

TEST(TrialJson, RoundTripAndTamperDetection) {
  auto t = trial(32, 64, 1200, 0.25);
  t.losses[7] = 0.5;
  t.finalize();
  const auto j = to_json(t);
  const auto back = trial_from_json(j);
  EXPECT_EQ(back.stable_avg, t.stable_avg);
  EXPECT_EQ(back.losses, t.losses);
  auto bad = j;
  bad["stable_avg"] = 0.1;
  EXPECT_THROW(trial_from_json(bad), FormatError);
}

TEST(TrainingRunner, RecordsValidationTrace) {
  const auto s = channel::simulate(channel::paper_like_preset(3), 900);
  const auto sp = data::chronological_split(s, {0.6, 0.4, 0.0});
  TrialData d{data::make_windows(sp.train, 10, 5, 4),
              data::make_windows(sp.validation, 10, 5, 4)};
  training::TrainConfig base;
  base.epoch_budget = 6;
  base.early_stop_patience = 10;
  const auto runner =
      training_runner(ModelKind::lstm, [&](std::size_t) -> const TrialData& { return d; }, base);
  auto rec = runner({8, 2, 10}, 5);
  rec.finalize();
  EXPECT_EQ(rec.status, TrialStatus::completed);
  EXPECT_EQ(rec.losses.size(), 6u);
  ASSERT_TRUE(rec.stable_avg);
  EXPECT_EQ(*rec.stable_avg, rec.losses[5]);
}

}  // namespace
}  // namespace fdrcast::hypertune
