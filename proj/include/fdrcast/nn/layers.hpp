#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fdrcast/nn/activation.hpp"
#include "fdrcast/nn/matrix.hpp"
#include "fdrcast/nn/param.hpp"

namespace fdrcast::nn {

/// Per-sample activation shape: `length` time steps of `channels` values,
/// stored time-major (index = t * channels + c).
struct Shape {
  std::size_t length = 0;
  std::size_t channels = 0;

  std::size_t flat() const noexcept { return length * channels; }
  friend bool operator==(const Shape&, const Shape&) = default;

  std::string to_string() const {
    return "(" + std::to_string(length) + "," + std::to_string(channels) + ")";
  }
};

enum class LayerKind { dense, conv1d, maxpool1d, lstm, relu, tanh, flatten };

inline std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::maxpool1d: return "maxpool1d";
    case LayerKind::lstm: return "lstm";
    case LayerKind::relu: return "relu";
    case LayerKind::tanh: return "tanh";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

inline LayerKind layer_kind_from_string(std::string_view s) {
  for (auto k : {LayerKind::dense, LayerKind::conv1d, LayerKind::maxpool1d,
                 LayerKind::lstm, LayerKind::relu, LayerKind::tanh,
                 LayerKind::flatten}) {
    if (to_string(k) == s) return k;
  }
  throw FormatError("unknown layer kind '" + std::string(s) + "'");
}

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::size_t units = 0;    // dense, lstm
  std::size_t filters = 0;  // conv1d
  std::size_t kernel = 0;   // conv1d
  std::size_t pool = 0;     // maxpool1d

  static LayerSpec dense(std::size_t units) {
    return {LayerKind::dense, units, 0, 0, 0};
  }
  static LayerSpec conv1d(std::size_t filters, std::size_t kernel = 3) {
    return {LayerKind::conv1d, 0, filters, kernel, 0};
  }
  static LayerSpec maxpool1d(std::size_t pool = 2) {
    return {LayerKind::maxpool1d, 0, 0, 0, pool};
  }
  static LayerSpec lstm(std::size_t units) {
    return {LayerKind::lstm, units, 0, 0, 0};
  }
  static LayerSpec relu() { return {LayerKind::relu, 0, 0, 0, 0}; }
  static LayerSpec tanh() { return {LayerKind::tanh, 0, 0, 0, 0}; }
  static LayerSpec flatten() { return {LayerKind::flatten, 0, 0, 0, 0}; }

  void validate() const {
    switch (kind) {
      case LayerKind::dense:
      case LayerKind::lstm:
        if (units < 1) throw ParameterError("layer units must be >= 1");
        break;
      case LayerKind::conv1d:
        if (filters < 1) throw ParameterError("filter count must be >= 1");
        if (kernel < 1) throw ParameterError("kernel width must be >= 1");
        break;
      case LayerKind::maxpool1d:
        if (pool < 1) throw ParameterError("pool width must be >= 1");
        break;
      default:
        break;
    }
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

namespace detail {

// y = b + x . W   for one row; W is [x.size() x y.size()].
inline void affine_row(std::span<const double> x, const Matrix& w,
                       const Matrix& b, std::span<double> y) {
  std::copy(b.values().begin(), b.values().end(), y.begin());
  const std::size_t n = y.size();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    const double* wr = w.values().data() + k * n;
    for (std::size_t j = 0; j < n; ++j) y[j] += xk * wr[j];
  }
}

// Backward of affine_row: dW += x^T dy, db += dy, dx = dy W^T.
inline void affine_row_backward(std::span<const double> x, const Matrix& w,
                                std::span<const double> dy, Matrix& dw,
                                Matrix& db, std::span<double> dx) {
  const std::size_t n = dy.size();
  auto dbv = db.values();
  for (std::size_t j = 0; j < n; ++j) dbv[j] += dy[j];
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    const double* wr = w.values().data() + k * n;
    double* dwr = dw.values().data() + k * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dwr[j] += xk * dy[j];
      acc += wr[j] * dy[j];
    }
    if (!dx.empty()) dx[k] += acc;
  }
}

inline void require_batch(const Matrix& x, std::size_t width,
                          std::string_view layer) {
  if (x.cols() != width) {
    throw DimensionError(std::string(layer) + ": expected " +
                         std::to_string(width) + " features per sample, got " +
                         x.shape_string());
  }
}

inline void require_cache(bool present, std::string_view layer) {
  if (!present) {
    throw StateError(std::string(layer) +
                     ": backward called without a cached forward pass");
  }
}

inline void require_same_rows(const Matrix& dy, std::size_t rows,
                              std::size_t cols, std::string_view layer) {
  if (dy.rows() != rows || dy.cols() != cols) {
    throw DimensionError(std::string(layer) + ": upstream gradient " +
                         dy.shape_string() + " does not match output [" +
                         std::to_string(rows) + "x" + std::to_string(cols) +
                         "]");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single-sequence forward kernels.

/// input [batch x d_in] . weights [d_in x d_out] + bias [1 x d_out].
inline Matrix dense_forward(const Matrix& input, const ParamTensor& weights,
                            const ParamTensor& bias) {
  if (input.cols() != weights.rows() || bias.rows() != 1 ||
      bias.cols() != weights.cols()) {
    throw DimensionError("dense_forward: input " + input.shape_string() +
                         " incompatible with weights " +
                         weights.value.shape_string() + " / bias " +
                         bias.value.shape_string());
  }
  Matrix out(input.rows(), weights.cols());
  for (std::size_t r = 0; r < input.rows(); ++r) {
    detail::affine_row(input.row(r), weights.value, bias.value, out.row(r));
  }
  return out;
}

/// Valid, stride-1 convolution of an [l x c_in] sequence. `filters` is laid
/// out as [(k * c_in) x n_f] so that a window of k consecutive time steps is
/// one contiguous slice of the input.
inline Matrix conv1d_forward(const Matrix& input, const ParamTensor& filters,
                             const ParamTensor& bias) {
  const std::size_t c_in = input.cols();
  if (c_in == 0 || filters.rows() % c_in != 0 || bias.rows() != 1 ||
      bias.cols() != filters.cols()) {
    throw DimensionError("conv1d_forward: input " + input.shape_string() +
                         " incompatible with filters " +
                         filters.value.shape_string() + " / bias " +
                         bias.value.shape_string());
  }
  const std::size_t k = filters.rows() / c_in;
  const std::size_t l = input.rows();
  if (l < k) {
    throw InputTooShortError("conv1d_forward: sequence length " +
                             std::to_string(l) + " shorter than kernel " +
                             std::to_string(k));
  }
  Matrix out(l - k + 1, filters.cols());
  const auto x = input.values();
  for (std::size_t t = 0; t + k <= l; ++t) {
    detail::affine_row(x.subspan(t * c_in, k * c_in), filters.value,
                       bias.value, out.row(t));
  }
  return out;
}

struct MaxPoolResult {
  Matrix output;
  std::vector<std::size_t> argmax;  // input row index per output element
};

/// Width-2, stride-2 max pooling over the rows of an [L x c] sequence.
/// Ties resolve to the earlier row; a trailing odd row is dropped.
inline MaxPoolResult maxpool1d_forward(const Matrix& input,
                                       std::size_t pool = 2) {
  const std::size_t len = input.rows();
  const std::size_t c = input.cols();
  if (pool < 1) throw ParameterError("pool width must be >= 1");
  if (len < pool) {
    throw InputTooShortError("maxpool1d_forward: length " +
                             std::to_string(len) + " shorter than pool " +
                             std::to_string(pool));
  }
  const std::size_t out_len = len / pool;
  MaxPoolResult r{Matrix(out_len, c), std::vector<std::size_t>(out_len * c)};
  for (std::size_t o = 0; o < out_len; ++o) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      std::size_t best = o * pool;
      for (std::size_t j = 1; j < pool; ++j) {
        if (input(o * pool + j, ch) > input(best, ch)) best = o * pool + j;
      }
      r.output(o, ch) = input(best, ch);
      r.argmax[o * c + ch] = best;
    }
  }
  return r;
}

/// LSTM parameters with the four gates packed column-wise in the order
/// input, forget, cell candidate, output.
struct LstmParams {
  ParamTensor input_weights;      // [c_in x 4H]
  ParamTensor recurrent_weights;  // [H x 4H]
  ParamTensor bias;               // [1 x 4H]

  LstmParams() = default;
  LstmParams(std::size_t input_channels, std::size_t units)
      : input_weights(input_channels, 4 * units),
        recurrent_weights(units, 4 * units),
        bias(1, 4 * units) {}

  std::size_t units() const noexcept { return recurrent_weights.rows(); }
  std::size_t input_channels() const noexcept { return input_weights.rows(); }
};

/// Per-step activations retained for backpropagation through time.
struct LstmCache {
  std::size_t steps = 0;
  std::size_t units = 0;
  RealBuffer gates;      // [steps x 4H], post-activation i, f, g, o
  RealBuffer cell;       // [steps x H]
  RealBuffer cell_tanh;  // [steps x H]
  RealBuffer hidden;     // [steps x H]
};

struct LstmResult {
  std::vector<double> hidden;
  LstmCache cache;
};

namespace detail {

inline void lstm_sequence(std::span<const double> x, std::size_t steps,
                          const LstmParams& p, std::span<double> h_out,
                          LstmCache* cache) {
  const std::size_t H = p.units();
  const std::size_t c_in = p.input_channels();
  const std::size_t G = 4 * H;
  RealBuffer z(G), h(H, 0.0), c(H, 0.0);
  if (cache) {
    cache->steps = steps;
    cache->units = H;
    cache->gates.assign(steps * G, 0.0);
    cache->cell.assign(steps * H, 0.0);
    cache->cell_tanh.assign(steps * H, 0.0);
    cache->hidden.assign(steps * H, 0.0);
  }
  const double* wx = p.input_weights.value.values().data();
  const double* wh = p.recurrent_weights.value.values().data();
  const auto b = p.bias.value.values();
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy(b.begin(), b.end(), z.begin());
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const double xv = x[t * c_in + ci];
      const double* row = wx + ci * G;
      for (std::size_t j = 0; j < G; ++j) z[j] += xv * row[j];
    }
    for (std::size_t u = 0; u < H; ++u) {
      const double hv = h[u];
      const double* row = wh + u * G;
      for (std::size_t j = 0; j < G; ++j) z[j] += hv * row[j];
    }
    for (std::size_t u = 0; u < H; ++u) {
      const double ig = sigmoid(z[u]);
      const double fg = sigmoid(z[H + u]);
      const double gg = stable_tanh(z[2 * H + u]);
      const double og = sigmoid(z[3 * H + u]);
      c[u] = fg * c[u] + ig * gg;
      const double tc = stable_tanh(c[u]);
      h[u] = og * tc;
      if (!std::isfinite(h[u]) || !std::isfinite(c[u])) {
        throw NumericError("lstm: non-finite activation at time step " +
                           std::to_string(t));
      }
      if (cache) {
        cache->gates[t * G + u] = ig;
        cache->gates[t * G + H + u] = fg;
        cache->gates[t * G + 2 * H + u] = gg;
        cache->gates[t * G + 3 * H + u] = og;
        cache->cell[t * H + u] = c[u];
        cache->cell_tanh[t * H + u] = tc;
        cache->hidden[t * H + u] = h[u];
      }
    }
  }
  std::copy(h.begin(), h.end(), h_out.begin());
}

// Backpropagation through time for one sequence; dh_last is the gradient of
// the final hidden state. Accumulates into p's gradients and dx (if given).
inline void lstm_sequence_backward(std::span<const double> x,
                                   const LstmCache& cache, LstmParams& p,
                                   std::span<const double> dh_last,
                                   std::span<double> dx) {
  const std::size_t H = cache.units;
  const std::size_t c_in = p.input_channels();
  const std::size_t G = 4 * H;
  const std::size_t T = cache.steps;
  RealBuffer dh(dh_last.begin(), dh_last.end()), dc(H, 0.0), dz(G);
  const double* wx = p.input_weights.value.values().data();
  const double* wh = p.recurrent_weights.value.values().data();
  double* dwx = p.input_weights.grad.values().data();
  double* dwh = p.recurrent_weights.grad.values().data();
  double* db = p.bias.grad.values().data();
  for (std::size_t step = T; step-- > 0;) {
    const double* gates = cache.gates.data() + step * G;
    const double* tc = cache.cell_tanh.data() + step * H;
    for (std::size_t u = 0; u < H; ++u) {
      const double ig = gates[u], fg = gates[H + u], gg = gates[2 * H + u],
                   og = gates[3 * H + u];
      const double c_prev = step > 0 ? cache.cell[(step - 1) * H + u] : 0.0;
      const double d_o = dh[u] * tc[u];
      const double d_c = dc[u] + dh[u] * og * (1.0 - tc[u] * tc[u]);
      dz[u] = d_c * gg * ig * (1.0 - ig);
      dz[H + u] = d_c * c_prev * fg * (1.0 - fg);
      dz[2 * H + u] = d_c * ig * (1.0 - gg * gg);
      dz[3 * H + u] = d_o * og * (1.0 - og);
      dc[u] = d_c * fg;
    }
    for (std::size_t j = 0; j < G; ++j) db[j] += dz[j];
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const double xv = x[step * c_in + ci];
      double* row = dwx + ci * G;
      const double* wrow = wx + ci * G;
      double acc = 0.0;
      for (std::size_t j = 0; j < G; ++j) {
        row[j] += xv * dz[j];
        acc += wrow[j] * dz[j];
      }
      if (!dx.empty()) dx[step * c_in + ci] += acc;
    }
    for (std::size_t u = 0; u < H; ++u) {
      const double hp = step > 0 ? cache.hidden[(step - 1) * H + u] : 0.0;
      double* row = dwh + u * G;
      const double* wrow = wh + u * G;
      double acc = 0.0;
      for (std::size_t j = 0; j < G; ++j) {
        row[j] += hp * dz[j];
        acc += wrow[j] * dz[j];
      }
      dh[u] = acc;
    }
  }
}

}  // namespace detail

/// Runs the LSTM over an [l x c_in] sequence from zero initial state and
/// returns the last hidden state with the per-step cache.
inline LstmResult lstm_forward(const Matrix& input, const LstmParams& params,
                               std::size_t units) {
  if (units != params.units() || input.cols() != params.input_channels()) {
    throw DimensionError("lstm_forward: input " + input.shape_string() +
                         " incompatible with " + std::to_string(units) +
                         " units / input weights " +
                         params.input_weights.value.shape_string());
  }
  LstmResult r;
  r.hidden.assign(units, 0.0);
  detail::lstm_sequence(input.values(), input.rows(), params, r.hidden,
                        &r.cache);
  return r;
}

// ---------------------------------------------------------------------------
// Layers. Every layer maps a batch [B x in.flat()] to [B x out.flat()].
// forward() is pure; forward_train() additionally caches what backward()
// needs. backward() accumulates parameter gradients and returns the input
// gradient.

class Dense {
 public:
  Dense(Shape in, std::size_t units)
      : in_(in), weight(in.flat(), units), bias(1, units) {
    if (in.length != 1) {
      throw TopologyError("dense expects flat input, got shape " +
                          in.to_string());
    }
    if (units < 1) throw ParameterError("dense units must be >= 1");
  }

  LayerSpec spec() const { return LayerSpec::dense(weight.cols()); }
  Shape input_shape() const { return in_; }
  Shape output_shape() const { return {1, weight.cols()}; }

  Matrix forward(const Matrix& x) const {
    detail::require_batch(x, in_.flat(), "dense");
    return dense_forward(x, weight, bias);
  }

  Matrix forward_train(const Matrix& x) {
    Matrix y = forward(x);
    cached_input_ = x;
    return y;
  }

  Matrix backward(const Matrix& dy) {
    detail::require_cache(cached_input_.has_value(), "dense");
    const Matrix& x = *cached_input_;
    detail::require_same_rows(dy, x.rows(), weight.cols(), "dense");
    Matrix dx(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      detail::affine_row_backward(x.row(r), weight.value, dy.row(r),
                                  weight.grad, bias.grad, dx.row(r));
    }
    return dx;
  }

  std::vector<ParamTensor*> params() { return {&weight, &bias}; }
  std::vector<const ParamTensor*> params() const { return {&weight, &bias}; }

 private:
  Shape in_;
  std::optional<Matrix> cached_input_;

 public:
  ParamTensor weight;  // [d_in x units]
  ParamTensor bias;    // [1 x units]
};

class Conv1D {
 public:
  Conv1D(Shape in, std::size_t filters, std::size_t kernel)
      : in_(in), kernel_(kernel), weight(kernel * in.channels, filters),
        bias(1, filters) {
    LayerSpec::conv1d(filters, kernel).validate();
    if (in.length < kernel) {
      throw TopologyError("conv1d: sequence length " +
                          std::to_string(in.length) + " shorter than kernel " +
                          std::to_string(kernel));
    }
  }

  LayerSpec spec() const { return LayerSpec::conv1d(weight.cols(), kernel_); }
  Shape input_shape() const { return in_; }
  Shape output_shape() const {
    return {in_.length - kernel_ + 1, weight.cols()};
  }

  Matrix forward(const Matrix& x) const {
    detail::require_batch(x, in_.flat(), "conv1d");
    const Shape out = output_shape();
    Matrix y(x.rows(), out.flat());
    const std::size_t span_len = kernel_ * in_.channels;
    const std::size_t nf = weight.cols();
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto xr = x.row(r);
      auto yr = y.row(r);
      for (std::size_t t = 0; t < out.length; ++t) {
        detail::affine_row(xr.subspan(t * in_.channels, span_len),
                           weight.value, bias.value, yr.subspan(t * nf, nf));
      }
    }
    return y;
  }

  Matrix forward_train(const Matrix& x) {
    Matrix y = forward(x);
    cached_input_ = x;
    return y;
  }

  Matrix backward(const Matrix& dy) {
    detail::require_cache(cached_input_.has_value(), "conv1d");
    const Matrix& x = *cached_input_;
    const Shape out = output_shape();
    detail::require_same_rows(dy, x.rows(), out.flat(), "conv1d");
    Matrix dx(x.rows(), x.cols());
    const std::size_t span_len = kernel_ * in_.channels;
    const std::size_t nf = weight.cols();
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto xr = x.row(r);
      auto dyr = dy.row(r);
      auto dxr = dx.row(r);
      for (std::size_t t = 0; t < out.length; ++t) {
        detail::affine_row_backward(
            xr.subspan(t * in_.channels, span_len), weight.value,
            dyr.subspan(t * nf, nf), weight.grad, bias.grad,
            dxr.subspan(t * in_.channels, span_len));
      }
    }
    return dx;
  }

  std::size_t kernel() const noexcept { return kernel_; }
  std::vector<ParamTensor*> params() { return {&weight, &bias}; }
  std::vector<const ParamTensor*> params() const { return {&weight, &bias}; }

 private:
  Shape in_;
  std::size_t kernel_;
  std::optional<Matrix> cached_input_;

 public:
  ParamTensor weight;  // [(kernel * c_in) x filters]
  ParamTensor bias;    // [1 x filters]
};

class MaxPool1D {
 public:
  MaxPool1D(Shape in, std::size_t pool) : in_(in), pool_(pool) {
    LayerSpec::maxpool1d(pool).validate();
    if (in.length < pool) {
      throw TopologyError("maxpool1d: length " + std::to_string(in.length) +
                          " shorter than pool " + std::to_string(pool));
    }
  }

  LayerSpec spec() const { return LayerSpec::maxpool1d(pool_); }
  Shape input_shape() const { return in_; }
  Shape output_shape() const { return {in_.length / pool_, in_.channels}; }

  Matrix forward(const Matrix& x) const { return run(x, nullptr); }

  Matrix forward_train(const Matrix& x) {
    std::vector<std::size_t> idx;
    Matrix y = run(x, &idx);
    argmax_ = std::move(idx);
    batch_ = x.rows();
    return y;
  }

  Matrix backward(const Matrix& dy) {
    detail::require_cache(argmax_.has_value(), "maxpool1d");
    const std::size_t out_flat = output_shape().flat();
    detail::require_same_rows(dy, batch_, out_flat, "maxpool1d");
    Matrix dx(batch_, in_.flat());
    for (std::size_t r = 0; r < batch_; ++r) {
      auto dyr = dy.row(r);
      auto dxr = dx.row(r);
      for (std::size_t j = 0; j < out_flat; ++j) {
        dxr[(*argmax_)[r * out_flat + j]] += dyr[j];
      }
    }
    return dx;
  }

  std::vector<ParamTensor*> params() { return {}; }
  std::vector<const ParamTensor*> params() const { return {}; }

 private:
  Matrix run(const Matrix& x, std::vector<std::size_t>* idx) const {
    detail::require_batch(x, in_.flat(), "maxpool1d");
    const Shape out = output_shape();
    const std::size_t c = in_.channels;
    Matrix y(x.rows(), out.flat());
    if (idx) idx->assign(x.rows() * out.flat(), 0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto xr = x.row(r);
      auto yr = y.row(r);
      for (std::size_t o = 0; o < out.length; ++o) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          std::size_t best = (o * pool_) * c + ch;
          for (std::size_t j = 1; j < pool_; ++j) {
            const std::size_t cand = (o * pool_ + j) * c + ch;
            if (xr[cand] > xr[best]) best = cand;
          }
          yr[o * c + ch] = xr[best];
          if (idx) (*idx)[r * out.flat() + o * c + ch] = best;
        }
      }
    }
    return y;
  }

  Shape in_;
  std::size_t pool_;
  std::optional<std::vector<std::size_t>> argmax_;
  std::size_t batch_ = 0;
};

class Relu {
 public:
  explicit Relu(Shape in) : in_(in) {}

  LayerSpec spec() const { return LayerSpec::relu(); }
  Shape input_shape() const { return in_; }
  Shape output_shape() const { return in_; }

  Matrix forward(const Matrix& x) const {
    detail::require_batch(x, in_.flat(), "relu");
    Matrix y = x;
    for (double& v : y.values()) v = relu(v);
    return y;
  }

  Matrix forward_train(const Matrix& x) {
    cached_input_ = x;
    return forward(x);
  }

  Matrix backward(const Matrix& dy) {
    detail::require_cache(cached_input_.has_value(), "relu");
    detail::require_same_rows(dy, cached_input_->rows(), in_.flat(), "relu");
    Matrix dx = dy;
    auto xv = cached_input_->values();
    auto d = dx.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!(xv[i] > 0.0)) d[i] = 0.0;
    }
    return dx;
  }

  std::vector<ParamTensor*> params() { return {}; }
  std::vector<const ParamTensor*> params() const { return {}; }

 private:
  Shape in_;
  std::optional<Matrix> cached_input_;
};

class Tanh {
 public:
  explicit Tanh(Shape in) : in_(in) {}

  LayerSpec spec() const { return LayerSpec::tanh(); }
  Shape input_shape() const { return in_; }
  Shape output_shape() const { return in_; }

  Matrix forward(const Matrix& x) const {
    detail::require_batch(x, in_.flat(), "tanh");
    Matrix y = x;
    for (double& v : y.values()) v = stable_tanh(v);
    return y;
  }

  Matrix forward_train(const Matrix& x) {
    Matrix y = forward(x);
    cached_output_ = y;
    return y;
  }

  Matrix backward(const Matrix& dy) {
    detail::require_cache(cached_output_.has_value(), "tanh");
    detail::require_same_rows(dy, cached_output_->rows(), in_.flat(), "tanh");
    Matrix dx = dy;
    auto yv = cached_output_->values();
    auto d = dx.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - yv[i] * yv[i];
    return dx;
  }

  std::vector<ParamTensor*> params() { return {}; }
  std::vector<const ParamTensor*> params() const { return {}; }

 private:
  Shape in_;
  std::optional<Matrix> cached_output_;
};

/// Reinterprets (length, channels) as (1, length * channels); data layout is
/// unchanged.
class Flatten {
 public:
  explicit Flatten(Shape in) : in_(in) {}

  LayerSpec spec() const { return LayerSpec::flatten(); }
  Shape input_shape() const { return in_; }
  Shape output_shape() const { return {1, in_.flat()}; }

  Matrix forward(const Matrix& x) const {
    detail::require_batch(x, in_.flat(), "flatten");
    return x;
  }
  Matrix forward_train(const Matrix& x) {
    batch_ = x.rows();
    return forward(x);
  }
  Matrix backward(const Matrix& dy) {
    detail::require_cache(batch_.has_value(), "flatten");
    detail::require_same_rows(dy, *batch_, in_.flat(), "flatten");
    return dy;
  }

  std::vector<ParamTensor*> params() { return {}; }
  std::vector<const ParamTensor*> params() const { return {}; }

 private:
  Shape in_;
  std::optional<std::size_t> batch_;
};

class Lstm {
 public:
  Lstm(Shape in, std::size_t units) : in_(in), cell(in.channels, units) {
    if (units < 1) throw ParameterError("lstm units must be >= 1");
    if (in.length < 1 || in.channels < 1) {
      throw TopologyError("lstm needs a non-empty input sequence");
    }
  }

  LayerSpec spec() const { return LayerSpec::lstm(cell.units()); }
  Shape input_shape() const { return in_; }
  Shape output_shape() const { return {1, cell.units()}; }

  Matrix forward(const Matrix& x) const {
    detail::require_batch(x, in_.flat(), "lstm");
    Matrix y(x.rows(), cell.units());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      detail::lstm_sequence(x.row(r), in_.length, cell, y.row(r), nullptr);
    }
    return y;
  }

  Matrix forward_train(const Matrix& x) {
    detail::require_batch(x, in_.flat(), "lstm");
    Matrix y(x.rows(), cell.units());
    std::vector<LstmCache> caches(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      detail::lstm_sequence(x.row(r), in_.length, cell, y.row(r), &caches[r]);
    }
    cached_input_ = x;
    caches_ = std::move(caches);
    return y;
  }

  Matrix backward(const Matrix& dy) {
    detail::require_cache(cached_input_.has_value(), "lstm");
    const Matrix& x = *cached_input_;
    detail::require_same_rows(dy, x.rows(), cell.units(), "lstm");
    Matrix dx(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      detail::lstm_sequence_backward(x.row(r), caches_[r], cell, dy.row(r),
                                     dx.row(r));
    }
    return dx;
  }

  std::vector<ParamTensor*> params() {
    return {&cell.input_weights, &cell.recurrent_weights, &cell.bias};
  }
  std::vector<const ParamTensor*> params() const {
    return {&cell.input_weights, &cell.recurrent_weights, &cell.bias};
  }

 private:
  Shape in_;
  std::optional<Matrix> cached_input_;
  std::vector<LstmCache> caches_;

 public:
  LstmParams cell;
};

}  // namespace fdrcast::nn
