// fdrcast: command-line front end (simulate, prepare, train, tune, evaluate,
// bench). Every command writes its outputs and a manifest.json under -o.

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fdrcast/fdrcast.hpp"
#include "fdrcast/data/dataset_dir.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fdrcast;

#ifndef FDRCAST_VERSION
#define FDRCAST_VERSION "0.0.0"
#endif

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read '" + p.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return os.str();
}

void write_text_atomically(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    os << text;
    if (!os) throw IoError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

/// manifest.json: rewritten at start ("running") and at the end.
class RunManifest {
 public:
  RunManifest(fs::path out, std::string command, std::vector<std::string> argv)
      : out_(std::move(out)) {
    doc_ = {{"command", std::move(command)},
            {"argv", std::move(argv)},
            {"tool_version", FDRCAST_VERSION},
            {"rng", util::kEngineName},
            {"parameters", json::object()},
            {"seeds", json::object()},
            {"input_digests", json::object()},
            {"started_at", utc_now()},
            {"finished_at", nullptr},
            {"status", "running"}};
  }

  json& parameters() { return doc_["parameters"]; }
  json& seeds() { return doc_["seeds"]; }
  void add_input(const fs::path& p) {
    doc_["input_digests"][p.string()] = sha256_file(p);
  }
  void begin() {
    fs::create_directories(out_);
    flush();
  }
  void finish(const std::string& status) {
    doc_["finished_at"] = utc_now();
    doc_["status"] = status;
    flush();
  }

 private:
  void flush() { write_text_atomically(out_ / "manifest.json", doc_.dump(2) + "\n"); }
  fs::path out_;
  json doc_;
};

std::string default_out(const std::string& command) {
  const char* root = std::getenv("FDRCAST_OUT_ROOT");
  return (fs::path(root && *root ? root : "fdrcast-out") / command).string();
}

std::vector<std::string> g_argv;

template <class F>
void run_with_manifest(RunManifest& m, F&& body) {
  m.begin();
  try {
    body();
  } catch (...) {
    m.finish("failed");
    throw;
  }
  m.finish("ok");
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string preset;
  double p_gb = -1, p_bg = -1, s_good = -1, s_bad = -1;
  double bernoulli = -1;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "bitline";
};

void cmd_simulate(const SimulateArgs& a) {
  channel::GilbertElliottParams p;
  std::string source;
  if (a.bernoulli >= 0) {
    if (!a.preset.empty()) throw ParameterError("--bernoulli excludes --preset");
    if (a.bernoulli > 1) throw ParameterError("--bernoulli must lie in [0,1]");
    p = {0.5, 0.5, a.bernoulli, a.bernoulli, a.seed};
    source = "bernoulli";
  } else if (!a.preset.empty()) {
    p = channel::preset_by_name(a.preset, a.seed);
    source = a.preset;
  } else {
    if (a.p_gb < 0 || a.p_bg < 0 || a.s_good < 0 || a.s_bad < 0) {
      throw ParameterError(
          "give --preset, --bernoulli, or all of --p-gb --p-bg --s-good --s-bad");
    }
    p = {a.p_gb, a.p_bg, a.s_good, a.s_bad, a.seed};
    source = "custom";
  }
  p.validate();
  const auto fmt = data::trace_format_from_string(a.format);

  RunManifest m(a.out, "simulate", g_argv);
  m.parameters() = {{"source", source},
                    {"p_good_to_bad", p.p_good_to_bad},
                    {"p_bad_to_good", p.p_bad_to_good},
                    {"success_prob_good", p.success_prob_good},
                    {"success_prob_bad", p.success_prob_bad},
                    {"n", a.n},
                    {"format", a.format},
                    {"stationary_fdr", channel::stationary_fdr(p)}};
  m.seeds()["channel"] = a.seed;
  run_with_manifest(m, [&] {
    const auto s = channel::simulate(p, a.n);
    const fs::path file = fs::path(a.out) / (fmt == data::TraceFormat::csv ? "trace.csv" : "trace.txt");
    std::ofstream os(file, std::ios::binary | std::ios::trunc);
    data::write_outcomes(os, s, fmt);
    os.close();
    std::cout << "wrote " << s.size() << " outcomes to " << file.string()
              << " (empirical FDR " << data::class_balance(s).success_fraction
              << ", stationary " << channel::stationary_fdr(p) << ")\n";
  });
}

// ----------------------------------------------------------------- prepare

struct PrepareArgs {
  std::string trace;
  std::string format = "bitline";
  std::size_t l = 1200;
  std::size_t horizon = 3600;
  std::size_t train_stride = 10;
  std::size_t eval_stride = 1;
  std::vector<double> split{0.5, 0.1667, 0.3333};
  std::string out;
};

data::SplitSpec split_from(const std::vector<double>& v) {
  if (v.size() != 3) throw ParameterError("--split takes three fractions");
  data::SplitSpec s{v[0], v[1], v[2]};
  s.validate();
  return s;
}

data::PreparedDataset prepare_in_memory(const data::OutcomeSeries& trace,
                                        const data::DatasetInfo& info) {
  data::PreparedDataset d;
  d.info = info;
  d.segments = data::chronological_split(trace, info.split);
  // Every non-empty split must hold at least one window.
  const data::OutcomeSeries* segs[3] = {&d.segments.train, &d.segments.validation,
                                        &d.segments.test};
  const char* names[3] = {"train", "validation", "test"};
  const double fr[3] = {info.split.train, info.split.validation, info.split.test};
  for (int k = 0; k < 3; ++k) {
    if (fr[k] == 0.0) continue;
    if (segs[k]->size() < info.window_length + info.horizon) {
      const double need = static_cast<double>(info.window_length + info.horizon) / fr[k];
      throw InsufficientDataError(
          std::string(names[k]) + " split has " + std::to_string(segs[k]->size()) +
              " outcomes but a window needs " +
              std::to_string(info.window_length + info.horizon) +
              "; the trace must hold at least " +
              std::to_string(static_cast<std::size_t>(std::ceil(need))) + " outcomes",
          static_cast<std::size_t>(std::ceil(need)));
    }
  }
  return d;
}

void warn_empty_splits(const data::SplitSpec& s) {
  if (s.validation == 0.0) std::cerr << "warning: validation split is empty\n";
  if (s.test == 0.0) std::cerr << "warning: test split is empty\n";
}

void cmd_prepare(const PrepareArgs& a) {
  data::DatasetInfo info;
  info.window_length = a.l;
  info.horizon = a.horizon;
  info.train_stride = a.train_stride;
  info.eval_stride = a.eval_stride;
  info.split = split_from(a.split);
  info.source = a.trace;
  if (a.l < 1 || a.horizon < 1 || a.train_stride < 1 || a.eval_stride < 1) {
    throw ParameterError("-l, --horizon and strides must be >= 1");
  }
  RunManifest m(a.out, "prepare", g_argv);
  run_with_manifest(m, [&] {
    m.add_input(a.trace);
    info.source_sha256 = sha256_file(a.trace);
    const auto trace = data::load_outcomes_file(a.trace, data::trace_format_from_string(a.format));
    trace.validate();
    const auto d = prepare_in_memory(trace, info);
    warn_empty_splits(info.split);
    data::write_dataset_dir(a.out, d);
    m.parameters() = data::to_json(d);
    std::cout << "pairs (train/validation/test): " << m.parameters()["pair_counts"].dump()
              << "\n";
  });
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string kind;
  std::string data_dir;
  std::string preset;
  std::size_t b = 0, n = 0, l = 0;
  std::size_t epochs = 0;
  double lr = 0;
  std::size_t patience = 3;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_train(const TrainArgs& a) {
  const auto kind = models::model_kind_from_string(a.kind);
  models::Hyperparams hp;
  training::TrainConfig cfg;
  if (!a.preset.empty()) {
    const auto& p = models::preset_by_name(a.preset);
    if (p.kind != kind) {
      throw ParameterError("preset '" + a.preset + "' is for " +
                           std::string(models::to_string(p.kind)));
    }
    hp = p.hyperparams;
    cfg.epoch_budget = p.epochs;
    cfg.initial_lr = p.initial_lr;
  }
  if (a.b) hp.batch_size = a.b;
  if (a.n) hp.width = a.n;
  if (a.l) hp.input_length = a.l;
  if (a.epochs) cfg.epoch_budget = a.epochs;
  if (a.lr > 0) cfg.initial_lr = a.lr;
  cfg.early_stop_patience = a.patience;
  cfg.batch_size = hp.batch_size;
  const std::uint64_t init_seed = util::derive_seed(a.seed, {1});
  cfg.shuffle_seed = util::derive_seed(a.seed, {2});
  hp.validate();
  cfg.validate();

  const auto ds = data::read_dataset_dir(a.data_dir);
  if (!a.l && a.preset.empty()) hp.input_length = ds.info.window_length;
  if (ds.info.window_length != hp.input_length) {
    throw ParameterError("dataset window length " + std::to_string(ds.info.window_length) +
                         " does not match l=" + std::to_string(hp.input_length));
  }
  cfg.train_stride = ds.info.train_stride;

  RunManifest m(a.out, "train", g_argv);
  m.parameters() = {{"model_kind", a.kind},
                    {"preset", a.preset},
                    {"batch_size", hp.batch_size},
                    {"width", hp.width},
                    {"input_length", hp.input_length},
                    {"epoch_budget", cfg.epoch_budget},
                    {"initial_lr", cfg.initial_lr},
                    {"patience", cfg.early_stop_patience},
                    {"dataset", data::to_json(ds)}};
  m.seeds() = {{"master", a.seed}, {"init", init_seed}, {"shuffle", cfg.shuffle_seed}};
  run_with_manifest(m, [&] {
    for (const char* f : {"dataset.json", "train.txt", "validation.txt"}) {
      m.add_input(fs::path(a.data_dir) / f);
    }
    const auto train_set = ds.train();
    if (ds.segments.validation.empty()) {
      throw EmptyInputError("training needs a non-empty validation split");
    }
    const auto val_set = ds.validation();
    std::ofstream log(fs::path(a.out) / "train_log.csv", std::ios::trunc);
    log << "epoch,learning_rate,train_mse,validation_mse,elapsed_s\n";
    cfg.on_epoch = [&](const training::EpochRecord& r, const models::TrainedModel&) {
      log << r.epoch << ',' << eval::format_real(r.learning_rate) << ','
          << eval::format_real(r.train_mse) << ',' << eval::format_real(r.validation_mse)
          << ',' << eval::format_real(r.elapsed_s) << '\n';
      log.flush();
      std::cout << "epoch " << r.epoch << "  lr " << r.learning_rate << "  train "
                << r.train_mse << "  val " << r.validation_mse << "\n";
    };
    const auto model =
        training::train(models::build_model(kind, hp, init_seed), train_set, val_set, cfg);
    const fs::path ckpt = fs::path(a.out) / "model.ckpt";
    models::save_model_file(ckpt.string(), model);
    std::cout << "best epoch " << model.best_epoch << "; checkpoint sha256 "
              << sha256_file(ckpt) << "\n";
  });
}

// -------------------------------------------------------------------- tune

struct TuneArgs {
  std::string kind;
  std::string trace;
  std::string format = "bitline";
  std::size_t horizon = 3600;
  std::size_t train_stride = 10;
  std::size_t eval_stride = 1;
  std::vector<double> split{0.5, 0.1667, 0.3333};
  std::vector<std::size_t> batch_sizes{32, 64, 128};
  std::vector<std::size_t> widths{64, 128, 256};
  std::vector<std::size_t> lengths{1200, 1800, 3600};
  std::size_t epochs = 30;
  double lr = 0.01;
  std::size_t patience = 3;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  bool stub_loss = false;
  std::string out;
};

/// Synthetic loss surface for --stub-loss: minimum at b=64, n=128, l=1800.
double stub_loss(const models::Hyperparams& hp) {
  auto sq = [](double v) { return v * v; };
  return 0.1 + sq(std::log2(static_cast<double>(hp.batch_size)) - 6.0) +
         sq(std::log2(static_cast<double>(hp.width)) - 7.0) +
         sq(static_cast<double>(hp.input_length) / 600.0 - 3.0);
}

void cmd_tune(const TuneArgs& a) {
  const auto kind = models::model_kind_from_string(a.kind);
  hypertune::SearchSpace space{a.batch_sizes, a.widths, a.lengths};
  space.validate();
  if (!a.stub_loss && a.trace.empty()) {
    throw ParameterError("--trace is required unless --stub-loss is given");
  }
  if (a.workers < 1) throw ParameterError("--workers must be >= 1");
  training::TrainConfig base;
  base.epoch_budget = a.epochs;
  base.initial_lr = a.lr;
  base.early_stop_patience = a.patience;
  base.train_stride = a.train_stride;
  base.validate();
  const auto split = split_from(a.split);

  RunManifest m(a.out, "tune", g_argv);
  m.parameters() = {{"model_kind", a.kind},
                    {"batch_sizes", a.batch_sizes},
                    {"widths", a.widths},
                    {"lengths", a.lengths},
                    {"horizon", a.horizon},
                    {"train_stride", a.train_stride},
                    {"eval_stride", a.eval_stride},
                    {"split", a.split},
                    {"epoch_budget", a.epochs},
                    {"initial_lr", a.lr},
                    {"patience", a.patience},
                    {"workers", a.workers},
                    {"stub_loss", a.stub_loss}};
  m.seeds()["master"] = a.seed;
  run_with_manifest(m, [&] {
    hypertune::TrialRunner runner;
    std::map<std::size_t, hypertune::TrialData> per_length;
    if (a.stub_loss) {
      runner = [](const models::Hyperparams& hp, std::uint64_t) {
        hypertune::TrialRecord r;
        r.losses.assign(hypertune::kUnstableEpochs + 3, 1.0);
        for (std::size_t e = hypertune::kUnstableEpochs; e < r.losses.size(); ++e) {
          r.losses[e] = stub_loss(hp);
        }
        return r;
      };
    } else {
      m.add_input(a.trace);
      const auto trace =
          data::load_outcomes_file(a.trace, data::trace_format_from_string(a.format));
      trace.validate();
      // Windows for every l up front so workers only read shared data.
      for (auto l : a.lengths) {
        data::DatasetInfo info;
        info.window_length = l;
        info.horizon = a.horizon;
        info.train_stride = a.train_stride;
        info.eval_stride = a.eval_stride;
        info.split = split;
        const auto d = prepare_in_memory(trace, info);
        if (d.segments.validation.empty()) {
          throw EmptyInputError("tuning needs a non-empty validation split");
        }
        per_length[l] = {d.train(), d.validation()};
      }
      runner = hypertune::training_runner(
          kind, [&](std::size_t l) -> const hypertune::TrialData& { return per_length.at(l); },
          base);
    }
    hypertune::SearchOptions opts;
    opts.store_dir = fs::path(a.out);
    opts.workers = a.workers;
    opts.master_seed = a.seed;
    const auto result = hypertune::run_search(kind, space, runner, opts);
    const json best{{"batch_size", result.best.batch_size},
                    {"width", result.best.width},
                    {"input_length", result.best.input_length},
                    {"trials_executed", result.executed},
                    {"trials_total", result.trials.size()}};
    write_text_atomically(fs::path(a.out) / "best.json", best.dump(2) + "\n");
    std::cout << "selected " << result.best.to_string() << " (" << result.executed
              << " of " << result.trials.size() << " trials run now)\n";
  });
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::vector<std::string> models;
  std::vector<std::string> names;
  std::string data_dir;
  std::string out;
};

std::string default_name(const models::TrainedModel& m) {
  return m.kind == models::ModelKind::cnn ? "CNN" : "LSTM";
}

void cmd_evaluate(const EvaluateArgs& a) {
  if (!a.names.empty() && a.names.size() != a.models.size()) {
    throw ParameterError("--name must be given once per --model");
  }
  RunManifest m(a.out, "evaluate", g_argv);
  m.parameters() = {{"models", a.models}, {"names", a.names}, {"data", a.data_dir}};
  run_with_manifest(m, [&] {
    const auto ds = data::read_dataset_dir(a.data_dir);
    m.add_input(fs::path(a.data_dir) / "test.txt");
    if (ds.segments.test.empty()) throw EmptyInputError("dataset has an empty test split");
    const auto test = ds.test();
    std::vector<eval::ModelResult> results;
    for (std::size_t i = 0; i < a.models.size(); ++i) {
      m.add_input(a.models[i]);
      const auto model = models::load_model_file(a.models[i]);
      if (model.hyperparams.input_length != ds.info.window_length) {
        throw DimensionError("model " + a.models[i] + " expects l=" +
                             std::to_string(model.hyperparams.input_length) +
                             " but the dataset has l=" +
                             std::to_string(ds.info.window_length));
      }
      const std::string name = a.names.empty() ? default_name(model) : a.names[i];
      const auto pred = models::predict_dataset(model, test);
      results.push_back({name, eval::compute_error_stats(pred, test.targets), std::nullopt});
      std::ofstream os(fs::path(a.out) / ("predictions_" + name + ".csv"), std::ios::trunc);
      os << "anchor,target,prediction\n";
      for (std::size_t k = 0; k < pred.size(); ++k) {
        os << test.anchors[k] << ',' << eval::format_real(test.targets[k]) << ','
           << eval::format_real(pred[k]) << '\n';
      }
    }
    eval::write_report(a.out, results);
    std::cout << eval::report_text(results);
  });
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
  std::vector<std::string> models;
  std::vector<std::string> names;
  std::size_t reps = 100;
  std::size_t warmup = 10;
  std::string memory = "auto";
  std::string hardware = "unspecified host";
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_bench(const BenchArgs& a) {
  if (a.reps < eval::kMinBenchRepetitions) {
    throw ParameterError("--reps must be at least " +
                         std::to_string(eval::kMinBenchRepetitions));
  }
  if (!a.names.empty() && a.names.size() != a.models.size()) {
    throw ParameterError("--name must be given once per --model");
  }
  eval::BenchOptions opts;
  opts.warmup = a.warmup;
  opts.hardware = a.hardware;
  if (a.memory == "auto") opts.memory = eval::MemoryMethod::automatic;
  else if (a.memory == "procfs") opts.memory = eval::MemoryMethod::procfs_rss;
  else if (a.memory == "tracked") opts.memory = eval::MemoryMethod::tracked_alloc;
  else throw ParameterError("--memory must be auto, procfs or tracked");

  RunManifest m(a.out, "bench", g_argv);
  m.parameters() = {{"models", a.models}, {"reps", a.reps}, {"warmup", a.warmup},
                    {"memory", a.memory}, {"hardware", a.hardware}};
  m.seeds()["patterns"] = a.seed;
  run_with_manifest(m, [&] {
    std::vector<eval::ModelResult> results;
    // Models are loaded and measured one at a time, in this process only.
    for (std::size_t i = 0; i < a.models.size(); ++i) {
      m.add_input(a.models[i]);
      const auto model = models::load_model_file(a.models[i]);
      util::Engine g(util::derive_seed(a.seed, {i}));
      std::vector<std::vector<std::uint8_t>> store(16);
      for (auto& p : store) {
        p.resize(model.hyperparams.input_length);
        for (auto& x : p) x = util::unit_uniform(g) < 0.884 ? 1 : 0;
      }
      const std::vector<std::span<const std::uint8_t>> views(store.begin(), store.end());
      const std::string name = a.names.empty() ? default_name(model) : a.names[i];
      results.push_back({name, std::nullopt, eval::bench_inference(model, views, a.reps, opts)});
    }
    eval::write_report(a.out, results);
    std::cout << eval::report_text(results);
  });
}

}  // namespace

int main(int argc, char** argv) {
  g_argv.assign(argv, argv + argc);
  CLI::App app{"fdrcast: frame delivery ratio forecasting toolkit"};
  app.set_version_flag("--version", FDRCAST_VERSION);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a Gilbert-Elliott outcome trace");
  s->add_option("--preset", sim.preset, "Channel preset (paper-like)");
  s->add_option("--p-gb", sim.p_gb, "P(good -> bad)");
  s->add_option("--p-bg", sim.p_bg, "P(bad -> good)");
  s->add_option("--s-good", sim.s_good, "Frame success probability in the good state");
  s->add_option("--s-bad", sim.s_bad, "Frame success probability in the bad state");
  s->add_option("--bernoulli", sim.bernoulli, "i.i.d. success probability instead of a channel");
  s->add_option("-n", sim.n, "Number of outcomes")->required()->check(CLI::PositiveNumber);
  s->add_option("--seed", sim.seed, "RNG seed");
  s->add_option("--format", sim.format, "bitline or csv")
      ->check(CLI::IsMember({"bitline", "csv"}));
  s->add_option("-o,--out", sim.out, "Output directory");

  PrepareArgs prep;
  auto* p = app.add_subcommand("prepare", "Split a trace and window it into datasets");
  p->add_option("--trace", prep.trace, "Outcome trace file")->required()->check(CLI::ExistingFile);
  p->add_option("--format", prep.format)->check(CLI::IsMember({"bitline", "csv"}));
  p->add_option("-l,--input-length", prep.l, "Input window length");
  p->add_option("--horizon", prep.horizon, "Prediction horizon N_f");
  p->add_option("--train-stride", prep.train_stride);
  p->add_option("--eval-stride", prep.eval_stride, "Stride for validation and test");
  p->add_option("--split", prep.split, "train validation test fractions")->expected(3);
  p->add_option("-o,--out", prep.out, "Output directory");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one model on a prepared dataset");
  t->add_option("kind", tr.kind, "cnn or lstm")->required()->check(CLI::IsMember({"cnn", "lstm"}));
  t->add_option("--data", tr.data_dir, "Prepared dataset directory")->required();
  t->add_option("--preset", tr.preset, "paper-cnn, paper-lstm, toy-cnn, toy-lstm");
  t->add_option("-b,--batch-size", tr.b);
  t->add_option("-n,--width", tr.n, "CNN filters or LSTM units");
  t->add_option("-l,--input-length", tr.l);
  t->add_option("--epochs", tr.epochs);
  t->add_option("--lr", tr.lr, "Initial learning rate");
  t->add_option("--patience", tr.patience);
  t->add_option("--seed", tr.seed);
  t->add_option("-o,--out", tr.out, "Output directory");

  TuneArgs tu;
  auto* u = app.add_subcommand("tune", "Grid search over batch size, width and window length");
  u->add_option("kind", tu.kind)->required()->check(CLI::IsMember({"cnn", "lstm"}));
  u->add_option("--trace", tu.trace, "Outcome trace file")->check(CLI::ExistingFile);
  u->add_option("--format", tu.format)->check(CLI::IsMember({"bitline", "csv"}));
  u->add_option("--horizon", tu.horizon);
  u->add_option("--train-stride", tu.train_stride);
  u->add_option("--eval-stride", tu.eval_stride);
  u->add_option("--split", tu.split)->expected(3);
  u->add_option("--batch-sizes", tu.batch_sizes)->delimiter(',');
  u->add_option("--widths", tu.widths)->delimiter(',');
  u->add_option("--lengths", tu.lengths)->delimiter(',');
  u->add_option("--epochs", tu.epochs);
  u->add_option("--lr", tu.lr);
  u->add_option("--patience", tu.patience);
  u->add_option("--workers", tu.workers);
  u->add_option("--seed", tu.seed);
  u->add_flag("--stub-loss", tu.stub_loss, "Use a synthetic loss surface instead of training");
  u->add_option("-o,--out", tu.out, "Output directory");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Accuracy report on the test split");
  e->add_option("--model", ev.models, "Checkpoint (repeatable)")->required()->check(CLI::ExistingFile);
  e->add_option("--name", ev.names, "Display name per model");
  e->add_option("--data", ev.data_dir, "Prepared dataset directory")->required();
  e->add_option("-o,--out", ev.out, "Output directory");

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "Inference latency and memory report");
  b->add_option("--model", be.models, "Checkpoint (repeatable)")->required()->check(CLI::ExistingFile);
  b->add_option("--name", be.names);
  b->add_option("--reps", be.reps, "Timed repetitions (>= 100)");
  b->add_option("--warmup", be.warmup);
  b->add_option("--memory", be.memory, "auto, procfs or tracked");
  b->add_option("--hardware", be.hardware, "Label recorded with the results");
  b->add_option("--seed", be.seed);
  b->add_option("-o,--out", be.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForVersion& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  try {
    if (s->parsed()) {
      if (sim.out.empty()) sim.out = default_out("simulate");
      cmd_simulate(sim);
    } else if (p->parsed()) {
      if (prep.out.empty()) prep.out = default_out("prepare");
      cmd_prepare(prep);
    } else if (t->parsed()) {
      if (tr.out.empty()) tr.out = default_out("train");
      cmd_train(tr);
    } else if (u->parsed()) {
      if (tu.out.empty()) tu.out = default_out("tune");
      cmd_tune(tu);
    } else if (e->parsed()) {
      if (ev.out.empty()) ev.out = default_out("evaluate");
      cmd_evaluate(ev);
    } else if (b->parsed()) {
      if (be.out.empty()) be.out = default_out("bench");
      cmd_bench(be);
    }
  } catch (const ParameterError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
