#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fdrcast/errors.hpp"

namespace fdrcast::data {

/// Time-ordered binary frame outcomes sampled at a fixed period.
struct OutcomeSeries {
  std::vector<std::uint8_t> outcomes;
  double sample_period_s = 0.5;
  std::string origin_label;

  std::size_t size() const noexcept { return outcomes.size(); }
  bool empty() const noexcept { return outcomes.empty(); }

  void validate() const {
    if (outcomes.empty()) throw EmptyInputError("outcome series is empty");
    if (!(sample_period_s > 0.0)) {
      throw ParameterError("sample period must be positive");
    }
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (outcomes[i] > 1) {
        throw ParameterError("outcome at index " + std::to_string(i) +
                             " is not 0 or 1");
      }
    }
  }
};

enum class TraceFormat { bitline, csv };

inline TraceFormat trace_format_from_string(std::string_view s) {
  if (s == "bitline") return TraceFormat::bitline;
  if (s == "csv") return TraceFormat::csv;
  throw ParameterError("unknown trace format '" + std::string(s) + "'");
}

namespace detail {

inline std::vector<std::uint8_t> parse_bitline(std::string_view text) {
  std::vector<std::uint8_t> out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (ch == '0' || ch == '1') {
      out.push_back(static_cast<std::uint8_t>(ch - '0'));
    } else if (ch != '\n' && ch != '\r') {
      throw ParseError("invalid outcome symbol", i);
    }
  }
  return out;
}

inline std::vector<std::uint8_t> parse_csv(std::string_view text) {
  std::vector<std::uint8_t> out;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t line_start = pos;
    pos = end + 1;
    if (first) {
      first = false;
      if (line == "outcome") continue;
    }
    if (line.empty()) continue;
    if (line == "0" || line == "1") {
      out.push_back(static_cast<std::uint8_t>(line[0] - '0'));
      continue;
    }
    std::size_t bad = 0;
    while (bad < line.size() && (line[bad] == '0' || line[bad] == '1')) ++bad;
    throw ParseError("invalid outcome row", line_start + bad);
  }
  return out;
}

}  // namespace detail

inline OutcomeSeries parse_outcomes(std::string_view text, TraceFormat format,
                                    std::string origin = {}) {
  OutcomeSeries s;
  s.outcomes = format == TraceFormat::bitline ? detail::parse_bitline(text)
                                              : detail::parse_csv(text);
  s.origin_label = std::move(origin);
  return s;
}

inline OutcomeSeries load_outcomes(std::istream& in, TraceFormat format,
                                   std::string origin = {}) {
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_outcomes(text, format, std::move(origin));
}

inline OutcomeSeries load_outcomes_file(const std::string& path,
                                        TraceFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace '" + path + "'");
  return load_outcomes(in, format, path);
}

/// Bitline traces are wrapped at `line_width` symbols per line.
inline void write_outcomes(std::ostream& out, const OutcomeSeries& s,
                           TraceFormat format, std::size_t line_width = 80) {
  if (format == TraceFormat::csv) {
    out << "outcome\n";
    for (auto x : s.outcomes) out << (x ? "1\n" : "0\n");
  } else {
    std::string line;
    for (std::size_t i = 0; i < s.outcomes.size(); ++i) {
      line.push_back(s.outcomes[i] ? '1' : '0');
      if (line.size() == line_width || i + 1 == s.outcomes.size()) {
        out << line << '\n';
        line.clear();
      }
    }
  }
  if (!out) throw IoError("failed writing trace");
}

struct ClassBalance {
  double success_fraction = 0.0;
  double failure_fraction = 0.0;
};

inline ClassBalance class_balance(const OutcomeSeries& s) {
  if (s.empty()) throw EmptyInputError("class_balance: empty series");
  std::size_t ones = 0;
  for (auto x : s.outcomes) ones += x;
  const double p = static_cast<double>(ones) / static_cast<double>(s.size());
  return {p, 1.0 - p};
}

}  // namespace fdrcast::data
