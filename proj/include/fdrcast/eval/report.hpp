#pragma once

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fdrcast/eval/bench.hpp"
#include "fdrcast/eval/stats.hpp"
#include "json.hpp"

namespace fdrcast::eval {

struct ModelResult {
  std::string name;
  std::optional<ErrorStats> stats;
  std::optional<ComplexityReport> complexity;
};

// Column order follows the published accuracy table left to right.
inline constexpr std::array<std::string_view, 16> kTable2Columns = {
    "Model",     "mu_e2",       "e2_p90",    "e2_p95",
    "e2_p99",    "e2_max",      "mu_abs_e",  "sigma_abs_e",
    "abs_e_p90", "abs_e_p95",   "abs_e_p99", "abs_e_max",
    "e_min",     "e_p5",        "e_p95",     "e_max"};

inline constexpr std::array<std::string_view, 4> kTable3Columns = {
    "Model", "mean_response_time_ms", "memory_footprint_mb", "memory_peak_mb"};

inline constexpr std::string_view kReportFooter =
    "Signed error e = prediction - target (negative = under-prediction).\n"
    "e^2 columns are raw squared errors (text table shows them x1e3);\n"
    "|e| and e columns are percent. sigma_abs_e is the population standard\n"
    "deviation. Percentiles interpolate linearly between closest ranks.\n";

inline std::array<double, 15> table2_values(const ErrorStats& s) {
  return {s.sq_mean,  s.sq_p90,  s.sq_p95,  s.sq_p99,  s.sq_max,
          s.abs_mean, s.abs_std, s.abs_p90, s.abs_p95, s.abs_p99,
          s.abs_max,  s.err_min, s.err_p5,  s.err_p95, s.err_max};
}

inline ErrorStats stats_from_table2_values(const std::array<double, 15>& v) {
  ErrorStats s;
  s.sq_mean = v[0];
  s.sq_p90 = v[1];
  s.sq_p95 = v[2];
  s.sq_p99 = v[3];
  s.sq_max = v[4];
  s.abs_mean = v[5];
  s.abs_std = v[6];
  s.abs_p90 = v[7];
  s.abs_p95 = v[8];
  s.abs_p99 = v[9];
  s.abs_max = v[10];
  s.err_min = v[11];
  s.err_p5 = v[12];
  s.err_p95 = v[13];
  s.err_max = v[14];
  return s;
}

/// Shortest text that parses back to the same double.
inline std::string format_real(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline double parse_real(std::string_view s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw FormatError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

template <std::size_t N>
std::string csv_header(const std::array<std::string_view, N>& cols) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  return out + "\n";
}

inline std::string table2_csv(const std::vector<ModelResult>& results) {
  std::string out = csv_header(kTable2Columns);
  for (const auto& r : results) {
    if (!r.stats) continue;
    out += r.name;
    for (double v : table2_values(*r.stats)) out += "," + format_real(v);
    out += "\n";
  }
  return out;
}

inline std::string table3_csv(const std::vector<ModelResult>& results) {
  std::string out = csv_header(kTable3Columns);
  for (const auto& r : results) {
    if (!r.complexity) continue;
    const auto& c = *r.complexity;
    out += r.name + "," + format_real(c.mean_response_time_ms) + "," +
           format_real(c.memory_footprint_mb) + "," +
           format_real(c.memory_peak_mb) + "\n";
  }
  return out;
}

struct Table2Row {
  std::string name;
  ErrorStats stats;
};

inline std::vector<Table2Row> parse_table2_csv(std::string_view text) {
  std::vector<Table2Row> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line + "\n" != csv_header(kTable2Columns)) {
    throw FormatError("table2.csv header mismatch");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != kTable2Columns.size()) {
      throw FormatError("table2.csv row has " + std::to_string(cells.size()) +
                        " cells");
    }
    std::array<double, 15> v{};
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = parse_real(cells[i + 1]);
    rows.push_back({cells[0], stats_from_table2_values(v)});
  }
  return rows;
}

inline std::string report_text(const std::vector<ModelResult>& results) {
  std::ostringstream os;
  os << std::fixed;
  bool any2 = false, any3 = false;
  for (const auto& r : results) {
    any2 |= r.stats.has_value();
    any3 |= r.complexity.has_value();
  }
  if (any2) {
    os << "Prediction accuracy (e^2 in 1e-3, |e| and e in %)\n";
    os << std::left << std::setw(8) << "Model";
    for (std::size_t i = 1; i < kTable2Columns.size(); ++i) {
      os << std::right << std::setw(12) << kTable2Columns[i];
    }
    os << "\n";
    for (const auto& r : results) {
      if (!r.stats) continue;
      os << std::left << std::setw(8) << r.name << std::right;
      const auto v = table2_values(*r.stats);
      for (std::size_t i = 0; i < v.size(); ++i) {
        os << std::setw(12) << std::setprecision(2) << (i < 5 ? v[i] * 1e3 : v[i]);
      }
      os << "\n";
    }
    os << "\n";
  }
  if (any3) {
    os << "Computational complexity\n";
    os << std::left << std::setw(8) << "Model";
    for (std::size_t i = 1; i < kTable3Columns.size(); ++i) {
      os << std::right << std::setw(24) << kTable3Columns[i];
    }
    os << "\n";
    for (const auto& r : results) {
      if (!r.complexity) continue;
      const auto& c = *r.complexity;
      os << std::left << std::setw(8) << r.name << std::right
         << std::setprecision(3) << std::setw(24) << c.mean_response_time_ms
         << std::setw(24) << c.memory_footprint_mb << std::setw(24)
         << c.memory_peak_mb << "\n";
    }
    for (const auto& r : results) {
      if (r.complexity) {
        os << "  " << r.name << ": " << r.complexity->sample_count
           << " timed runs; " << r.complexity->hardware_label << "\n";
      }
    }
    os << "\n";
  }
  os << kReportFooter;
  return os.str();
}

inline nlohmann::json report_json(const std::vector<ModelResult>& results) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json m{{"name", r.name}};
    if (r.stats) {
      nlohmann::json s{{"count", r.stats->count}};
      const auto v = table2_values(*r.stats);
      for (std::size_t i = 0; i < v.size(); ++i) {
        s[std::string(kTable2Columns[i + 1])] = v[i];
      }
      m["accuracy"] = s;
    }
    if (r.complexity) {
      const auto& c = *r.complexity;
      m["complexity"] = {{"mean_response_time_ms", c.mean_response_time_ms},
                         {"memory_footprint_mb", c.memory_footprint_mb},
                         {"memory_peak_mb", c.memory_peak_mb},
                         {"sample_count", c.sample_count},
                         {"hardware_label", c.hardware_label}};
    }
    models.push_back(m);
  }
  return {{"models", models},
          {"conventions",
           {{"signed_error", "prediction - target"},
            {"squared_error_units", "raw"},
            {"error_units", "percent"},
            {"abs_error_std", "population"},
            {"percentile", "linear interpolation between closest ranks"}}}};
}

/// Writes table2.csv / table3.csv (when the corresponding results exist),
/// report.txt and report.json under `dir`.
inline void write_report(const std::filesystem::path& dir,
                         const std::vector<ModelResult>& results) {
  if (results.empty()) throw EmptyInputError("report needs at least one model");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream os(dir / name, std::ios::binary | std::ios::trunc);
    os << text;
    if (!os) throw IoError("failed writing " + (dir / name).string());
  };
  bool any2 = false, any3 = false;
  for (const auto& r : results) {
    any2 |= r.stats.has_value();
    any3 |= r.complexity.has_value();
  }
  if (any2) put("table2.csv", table2_csv(results));
  if (any3) put("table3.csv", table3_csv(results));
  put("report.txt", report_text(results));
  put("report.json", report_json(results).dump(2) + "\n");
}

}  // namespace fdrcast::eval
