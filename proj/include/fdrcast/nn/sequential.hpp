#pragma once

#include <cstddef>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

#include "fdrcast/nn/layers.hpp"

namespace fdrcast::nn {

using Layer = std::variant<Dense, Conv1D, MaxPool1D, Relu, Tanh, Flatten, Lstm>;

inline Layer make_layer(Shape in, const LayerSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case LayerKind::dense: return Dense(in, spec.units);
    case LayerKind::conv1d: return Conv1D(in, spec.filters, spec.kernel);
    case LayerKind::maxpool1d: return MaxPool1D(in, spec.pool);
    case LayerKind::lstm: return Lstm(in, spec.units);
    case LayerKind::relu: return Relu(in);
    case LayerKind::tanh: return Tanh(in);
    case LayerKind::flatten: return Flatten(in);
  }
  throw ParameterError("unknown layer kind");
}

/// A linear stack of layers with a fixed per-sample input shape.
class Sequential {
 public:
  Sequential() = default;
  explicit Sequential(Shape input) : input_(input) {}
  Sequential(Shape input, std::span<const LayerSpec> specs) : input_(input) {
    for (const auto& s : specs) add(s);
  }

  Sequential& add(const LayerSpec& spec) {
    layers_.push_back(make_layer(output_shape(), spec));
    return *this;
  }

  Shape input_shape() const noexcept { return input_; }
  Shape output_shape() const {
    if (layers_.empty()) return input_;
    return std::visit([](const auto& l) { return l.output_shape(); },
                      layers_.back());
  }

  std::vector<LayerSpec> specs() const {
    std::vector<LayerSpec> out;
    for (const auto& l : layers_) {
      out.push_back(std::visit([](const auto& x) { return x.spec(); }, l));
    }
    return out;
  }

  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  /// Pure inference over a batch [B x input.flat()].
  Matrix forward(const Matrix& x) const {
    Matrix h = x;
    for (const auto& l : layers_) {
      h = std::visit([&](const auto& layer) { return layer.forward(h); }, l);
    }
    return h;
  }

  Matrix forward_train(const Matrix& x) {
    Matrix h = x;
    for (auto& l : layers_) {
      h = std::visit([&](auto& layer) { return layer.forward_train(h); }, l);
    }
    return h;
  }

  Matrix backward(const Matrix& dy) {
    Matrix g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      g = std::visit([&](auto& layer) { return layer.backward(g); }, *it);
    }
    return g;
  }

  std::vector<ParamTensor*> params() {
    std::vector<ParamTensor*> out;
    for (auto& l : layers_) {
      auto ps = std::visit([](auto& x) { return x.params(); }, l);
      out.insert(out.end(), ps.begin(), ps.end());
    }
    return out;
  }

  std::vector<const ParamTensor*> params() const {
    std::vector<const ParamTensor*> out;
    for (const auto& l : layers_) {
      auto ps = std::visit([](const auto& x) { return x.params(); }, l);
      out.insert(out.end(), ps.begin(), ps.end());
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : params()) n += p->size();
    return n;
  }

  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }

 private:
  Shape input_;
  std::vector<Layer> layers_;
};

}  // namespace fdrcast::nn
