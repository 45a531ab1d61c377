#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "fdrcast/nn/sequential.hpp"
#include "json.hpp"

namespace fdrcast::nn {

// Layout:
//   8 bytes   magic "FDRCKPT1"
//   8 bytes   header length N, little-endian u64
//   N bytes   UTF-8 JSON header (input shape, layer specs, tensor shapes,
//             caller metadata)
//   then      every parameter value as little-endian IEEE-754 binary64, in
//             header tensor order
inline constexpr std::array<char, 8> kCheckpointMagic = {'F', 'D', 'R', 'C',
                                                         'K', 'P', 'T', '1'};

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 8)) {
    throw FormatError("checkpoint truncated");
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline nlohmann::json spec_to_json(const LayerSpec& s) {
  nlohmann::json j{{"kind", std::string(to_string(s.kind))}};
  switch (s.kind) {
    case LayerKind::dense:
    case LayerKind::lstm: j["units"] = s.units; break;
    case LayerKind::conv1d:
      j["filters"] = s.filters;
      j["kernel"] = s.kernel;
      break;
    case LayerKind::maxpool1d: j["pool"] = s.pool; break;
    default: break;
  }
  return j;
}

inline LayerSpec spec_from_json(const nlohmann::json& j) {
  LayerSpec s;
  s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  s.units = j.value("units", std::size_t{0});
  s.filters = j.value("filters", std::size_t{0});
  s.kernel = j.value("kernel", std::size_t{0});
  s.pool = j.value("pool", std::size_t{0});
  return s;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Sequential& net,
                             const nlohmann::json& metadata = {}) {
  nlohmann::json header;
  header["format"] = "fdrcast-checkpoint";
  header["version"] = 1;
  header["input_shape"] = {net.input_shape().length,
                           net.input_shape().channels};
  header["layers"] = nlohmann::json::array();
  for (const auto& s : net.specs()) {
    header["layers"].push_back(detail::spec_to_json(s));
  }
  header["tensors"] = nlohmann::json::array();
  for (const auto* p : net.params()) {
    header["tensors"].push_back({p->rows(), p->cols()});
  }
  header["metadata"] = metadata.is_null() ? nlohmann::json::object() : metadata;
  const std::string text = header.dump();
  os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* p : net.params()) {
    for (double v : p->value.values()) {
      detail::put_u64(os, std::bit_cast<std::uint64_t>(v));
    }
  }
  if (!os) throw IoError("failed writing checkpoint");
}

struct LoadedCheckpoint {
  Sequential net;
  nlohmann::json metadata;
};

inline LoadedCheckpoint read_checkpoint(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kCheckpointMagic) {
    throw FormatError("not an fdrcast checkpoint");
  }
  const std::uint64_t n = detail::get_u64(is);
  if (n > (std::uint64_t{1} << 30)) throw FormatError("checkpoint header too large");
  std::string text(n, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(n))) {
    throw FormatError("checkpoint header truncated");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  const auto& shape = header.at("input_shape");
  LoadedCheckpoint out{
      Sequential(Shape{shape.at(0).get<std::size_t>(),
                       shape.at(1).get<std::size_t>()}),
      header.value("metadata", nlohmann::json::object())};
  for (const auto& js : header.at("layers")) {
    out.net.add(detail::spec_from_json(js));
  }
  auto params = out.net.params();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size()) {
    throw FormatError("checkpoint tensor count does not match layer specs");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (tensors[i].at(0).get<std::size_t>() != params[i]->rows() ||
        tensors[i].at(1).get<std::size_t>() != params[i]->cols()) {
      throw FormatError("checkpoint tensor " + std::to_string(i) +
                        " shape does not match layer specs");
    }
    for (double& v : params[i]->value.values()) {
      v = std::bit_cast<double>(detail::get_u64(is));
    }
  }
  return out;
}

}  // namespace fdrcast::nn
