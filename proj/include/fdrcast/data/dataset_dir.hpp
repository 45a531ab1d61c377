#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>

#include "fdrcast/data/outcomes.hpp"
#include "fdrcast/data/windows.hpp"
#include "json.hpp"

namespace fdrcast::data {

/// On-disk layout written by `fdrcast prepare`: the three raw split segments
/// as bitline files plus dataset.json describing how to window them.
struct DatasetInfo {
  std::size_t window_length = 0;
  std::size_t horizon = 0;
  std::size_t train_stride = 10;
  std::size_t eval_stride = 1;
  SplitSpec split;
  std::string source;
  std::string source_sha256;
};

struct PreparedDataset {
  DatasetInfo info;
  SeriesSplits segments;

  WindowedDataset train() const {
    return make_windows(segments.train, info.window_length, info.horizon,
                        info.train_stride);
  }
  WindowedDataset validation() const {
    return make_windows(segments.validation, info.window_length, info.horizon,
                        info.eval_stride);
  }
  WindowedDataset test() const {
    return make_windows(segments.test, info.window_length, info.horizon,
                        info.eval_stride);
  }
};

inline constexpr const char* kSegmentFiles[3] = {"train.txt", "validation.txt",
                                                 "test.txt"};

inline nlohmann::json to_json(const PreparedDataset& d) {
  const auto& i = d.info;
  auto count = [&](const OutcomeSeries& s, std::size_t stride) {
    return window_count(s.size(), i.window_length, i.horizon, stride);
  };
  return {
      {"window_length", i.window_length},
      {"horizon", i.horizon},
      {"train_stride", i.train_stride},
      {"eval_stride", i.eval_stride},
      {"split", {i.split.train, i.split.validation, i.split.test}},
      {"source", i.source},
      {"source_sha256", i.source_sha256},
      {"segment_lengths",
       {d.segments.train.size(), d.segments.validation.size(),
        d.segments.test.size()}},
      {"pair_counts",
       {count(d.segments.train, i.train_stride),
        count(d.segments.validation, i.eval_stride),
        count(d.segments.test, i.eval_stride)}},
  };
}

inline void write_dataset_dir(const std::filesystem::path& dir,
                              const PreparedDataset& d) {
  std::filesystem::create_directories(dir);
  const OutcomeSeries* segs[3] = {&d.segments.train, &d.segments.validation,
                                  &d.segments.test};
  for (int k = 0; k < 3; ++k) {
    std::ofstream os(dir / kSegmentFiles[k], std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + (dir / kSegmentFiles[k]).string());
    write_outcomes(os, *segs[k], TraceFormat::bitline);
  }
  std::ofstream os(dir / "dataset.json", std::ios::trunc);
  os << to_json(d).dump(2) << "\n";
  if (!os) throw IoError("cannot write " + (dir / "dataset.json").string());
}

inline PreparedDataset read_dataset_dir(const std::filesystem::path& dir) {
  std::ifstream in(dir / "dataset.json");
  if (!in) throw IoError("no dataset.json in '" + dir.string() + "'");
  PreparedDataset d;
  try {
    const auto j = nlohmann::json::parse(in);
    auto& i = d.info;
    i.window_length = j.at("window_length").get<std::size_t>();
    i.horizon = j.at("horizon").get<std::size_t>();
    i.train_stride = j.at("train_stride").get<std::size_t>();
    i.eval_stride = j.at("eval_stride").get<std::size_t>();
    const auto f = j.at("split").get<std::vector<double>>();
    if (f.size() != 3) throw FormatError("dataset.json: split needs 3 fractions");
    i.split = {f[0], f[1], f[2]};
    i.source = j.value("source", std::string{});
    i.source_sha256 = j.value("source_sha256", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset.json: ") + e.what());
  }
  OutcomeSeries* segs[3] = {&d.segments.train, &d.segments.validation,
                            &d.segments.test};
  for (int k = 0; k < 3; ++k) {
    *segs[k] = load_outcomes_file((dir / kSegmentFiles[k]).string(),
                                  TraceFormat::bitline);
  }
  return d;
}

}  // namespace fdrcast::data
