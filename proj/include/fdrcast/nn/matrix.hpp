#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "fdrcast/errors.hpp"
#include "fdrcast/util/tracking_allocator.hpp"

namespace fdrcast::nn {

using RealBuffer = std::vector<double, util::TrackingAllocator<double>>;

/// Dense row-major matrix of 64-bit reals. Holds activations, weights and
/// gradients alike.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  Matrix(std::size_t rows, std::size_t cols, std::span<const double> values)
      : rows_(rows), cols_(cols), values_(values.begin(), values.end()) {
    if (values_.size() != rows * cols) {
      throw DimensionError("matrix " + std::to_string(rows) + "x" +
                           std::to_string(cols) + " cannot hold " +
                           std::to_string(values_.size()) + " values");
    }
  }

  static Matrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) {
        throw DimensionError("ragged initializer for matrix");
      }
      std::copy(row.begin(), row.end(), m.values_.begin() + i * c);
      ++i;
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<double> row(std::size_t r) {
    return std::span<double>(values_).subspan(r * cols_, cols_);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }

  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  std::string shape_string() const {
    return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  RealBuffer values_;
};

}  // namespace fdrcast::nn
