#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "fdrcast/models/models.hpp"
#include "fdrcast/training/train.hpp"
#include "fdrcast/util/rng.hpp"
#include "json.hpp"

namespace fdrcast::hypertune {

using models::Hyperparams;
using models::ModelKind;

/// Epochs excluded from the stable average (losses still settling).
inline constexpr std::size_t kUnstableEpochs = 5;

struct SearchSpace {
  std::vector<std::size_t> batch_sizes{32, 64, 128};
  std::vector<std::size_t> widths{64, 128, 256};
  std::vector<std::size_t> lengths{1200, 1800, 3600};

  void validate() const {
    if (batch_sizes.empty() || widths.empty() || lengths.empty()) {
      throw ParameterError("search space has an empty dimension");
    }
  }

  /// Cartesian product, ordered by l, then n, then b.
  std::vector<Hyperparams> grid() const {
    validate();
    std::vector<Hyperparams> out;
    for (auto l : lengths)
      for (auto n : widths)
        for (auto b : batch_sizes) out.push_back({b, n, l});
    return out;
  }
};

enum class TrialStatus { completed, diverged, stopped_early };

inline std::string_view to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::completed: return "completed";
    case TrialStatus::diverged: return "diverged";
    case TrialStatus::stopped_early: return "stopped-early";
  }
  return "?";
}

inline TrialStatus trial_status_from_string(std::string_view s) {
  if (s == "completed") return TrialStatus::completed;
  if (s == "diverged") return TrialStatus::diverged;
  if (s == "stopped-early") return TrialStatus::stopped_early;
  throw FormatError("unknown trial status '" + std::string(s) + "'");
}

/// Mean validation loss from the sixth epoch to the end of the trace.
inline double stable_avg_loss(std::span<const double> trace) {
  if (trace.size() <= kUnstableEpochs) {
    throw InsufficientEpochsError(
        "stable average needs at least " + std::to_string(kUnstableEpochs + 1) +
        " epochs, trace has " + std::to_string(trace.size()));
  }
  double sum = 0.0;
  for (std::size_t i = kUnstableEpochs; i < trace.size(); ++i) sum += trace[i];
  return sum / static_cast<double>(trace.size() - kUnstableEpochs);
}

struct TrialRecord {
  Hyperparams hyperparams;
  std::vector<double> losses;
  std::optional<double> stable_avg;  // absent when fewer than 6 epochs ran
  double seconds = 0.0;
  TrialStatus status = TrialStatus::completed;
  std::uint64_t seed = 0;
  std::size_t epoch_budget = 0;

  bool comparable() const {
    return status != TrialStatus::diverged && stable_avg.has_value();
  }

  /// Derives stable_avg from the trace.
  void finalize() {
    stable_avg.reset();
    if (status != TrialStatus::diverged && losses.size() > kUnstableEpochs) {
      stable_avg = stable_avg_loss(losses);
    }
  }
};

inline nlohmann::json to_json(const TrialRecord& r) {
  nlohmann::json j{
      {"batch_size", r.hyperparams.batch_size},
      {"width", r.hyperparams.width},
      {"input_length", r.hyperparams.input_length},
      {"losses", r.losses},
      {"seconds", r.seconds},
      {"status", std::string(to_string(r.status))},
      {"seed", r.seed},
      {"epoch_budget", r.epoch_budget},
      {"epochs_completed", r.losses.size()},
  };
  j["stable_avg"] = r.stable_avg ? nlohmann::json(*r.stable_avg) : nullptr;
  return j;
}

inline TrialRecord trial_from_json(const nlohmann::json& j) {
  TrialRecord r;
  try {
    r.hyperparams = {j.at("batch_size").get<std::size_t>(),
                     j.at("width").get<std::size_t>(),
                     j.at("input_length").get<std::size_t>()};
    r.losses = j.at("losses").get<std::vector<double>>();
    r.seconds = j.at("seconds").get<double>();
    r.status = trial_status_from_string(j.at("status").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.epoch_budget = j.value("epoch_budget", std::size_t{0});
    if (!j.at("stable_avg").is_null()) r.stable_avg = j["stable_avg"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("trial record: ") + e.what());
  }
  const auto stored = r.stable_avg;
  r.finalize();
  if (stored != r.stable_avg) {
    throw FormatError("trial record " + r.hyperparams.to_string() +
                      ": stored stable average disagrees with its trace");
  }
  return r;
}

/// argmin of the stable average over comparable trials. Ties go to the
/// smaller l, then smaller n, then smaller b.
inline Hyperparams select_best(std::span<const TrialRecord> trials) {
  const TrialRecord* best = nullptr;
  auto key = [](const TrialRecord& r) {
    return std::make_tuple(*r.stable_avg, r.hyperparams.input_length,
                           r.hyperparams.width, r.hyperparams.batch_size);
  };
  for (const auto& t : trials) {
    if (!t.comparable()) continue;
    if (!best || key(t) < key(*best)) best = &t;
  }
  if (!best) throw SelectionError("no comparable trials to select from");
  return best->hyperparams;
}

using TrialRunner =
    std::function<TrialRecord(const Hyperparams&, std::uint64_t seed)>;

struct SearchOptions {
  std::optional<std::filesystem::path> store_dir;
  std::size_t workers = 1;
  std::uint64_t master_seed = 0;
};

struct SearchResult {
  Hyperparams best;
  std::vector<TrialRecord> trials;  // grid order
  std::size_t executed = 0;         // trials run by this call (not resumed)
};

inline std::uint64_t trial_seed(std::uint64_t master, ModelKind kind,
                                const Hyperparams& hp) {
  return util::derive_seed(master, {static_cast<std::uint64_t>(kind),
                                    hp.batch_size, hp.width, hp.input_length});
}

inline std::string trial_file_name(const Hyperparams& hp) {
  return "trial_b" + std::to_string(hp.batch_size) + "_n" +
         std::to_string(hp.width) + "_l" + std::to_string(hp.input_length) +
         ".json";
}

namespace detail {

inline void write_atomically(const std::filesystem::path& path,
                             const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write '" + tmp.string() + "'");
    os << text;
    if (!os) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::optional<TrialRecord> load_trial(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) return std::nullopt;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("trial file '" + p.string() + "': " + e.what());
  }
  return trial_from_json(j);
}

}  // namespace detail

inline std::string summary_csv(std::span<const TrialRecord> trials) {
  std::ostringstream os;
  os.precision(17);
  os << "batch_size,width,input_length,stable_avg_loss,status,seconds\n";
  for (const auto& t : trials) {
    os << t.hyperparams.batch_size << ',' << t.hyperparams.width << ','
       << t.hyperparams.input_length << ',';
    if (t.stable_avg) os << *t.stable_avg;
    os << ',' << to_string(t.status) << ',' << t.seconds << '\n';
  }
  return os.str();
}

/// Runs one trial per grid point (skipping those already persisted under
/// store_dir) and returns the selected hyperparameters.
inline SearchResult run_search(ModelKind kind, const SearchSpace& space,
                               const TrialRunner& runner,
                               const SearchOptions& opts) {
  const auto grid = space.grid();
  std::vector<std::optional<TrialRecord>> slots(grid.size());
  if (opts.store_dir) {
    std::filesystem::create_directories(*opts.store_dir);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      slots[i] = detail::load_trial(*opts.store_dir / trial_file_name(grid[i]));
    }
  }
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!slots[i]) pending.push_back(i);
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= pending.size()) return;
      {
        std::lock_guard lock(error_mutex);
        if (error) return;
      }
      const std::size_t i = pending[k];
      try {
        const auto seed = trial_seed(opts.master_seed, kind, grid[i]);
        TrialRecord rec = runner(grid[i], seed);
        rec.hyperparams = grid[i];
        rec.seed = seed;
        rec.finalize();
        if (opts.store_dir) {
          detail::write_atomically(*opts.store_dir / trial_file_name(grid[i]),
                                   to_json(rec).dump(2) + "\n");
        }
        slots[i] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(opts.workers, pending.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  SearchResult result;
  result.executed = pending.size();
  for (auto& s : slots) result.trials.push_back(std::move(*s));
  if (opts.store_dir) {
    detail::write_atomically(*opts.store_dir / "summary.csv",
                             summary_csv(result.trials));
  }

  const bool all_diverged =
      std::all_of(result.trials.begin(), result.trials.end(),
                  [](const auto& t) { return t.status == TrialStatus::diverged; });
  if (all_diverged) {
    std::string msg = "every trial diverged:";
    for (const auto& t : result.trials) {
      msg += " [" + t.hyperparams.to_string() + " " +
             std::string(to_string(t.status)) + "]";
    }
    throw SearchError(msg);
  }
  result.best = select_best(result.trials);
  return result;
}

/// Per-length data for trials.
struct TrialData {
  data::WindowedDataset train;
  data::WindowedDataset validation;
};

using DataProvider = std::function<const TrialData&(std::size_t length)>;

/// Runner that builds and trains a real model. `base` supplies the epoch
/// budget, learning rate and patience; batch size and seed come from the
/// trial.
inline TrialRunner training_runner(ModelKind kind, DataProvider data,
                                   training::TrainConfig base) {
  return [kind, data = std::move(data), base](const Hyperparams& hp,
                                              std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const TrialData& d = data(hp.input_length);
    TrialRecord rec;
    rec.hyperparams = hp;
    rec.epoch_budget = base.epoch_budget;
    training::TrainConfig cfg = base;
    cfg.batch_size = hp.batch_size;
    cfg.shuffle_seed = util::mix64(seed);
    cfg.on_epoch = [&rec](const training::EpochRecord& e,
                          const models::TrainedModel&) {
      rec.losses.push_back(e.validation_mse);
    };
    try {
      auto model = models::build_model(kind, hp, seed);
      training::train(std::move(model), d.train, d.validation, cfg);
      rec.status = rec.losses.size() < base.epoch_budget
                       ? TrialStatus::stopped_early
                       : TrialStatus::completed;
    } catch (const DivergenceError&) {
      rec.status = TrialStatus::diverged;
    }
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return rec;
  };
}

}  // namespace fdrcast::hypertune
