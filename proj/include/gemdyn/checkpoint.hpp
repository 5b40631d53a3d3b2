// Copyright 2026 The gemdyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GEMDYN_CHECKPOINT_HPP_
#define GEMDYN_CHECKPOINT_HPP_

// Network parameter checkpoints.
//
// Binary layout (all integers unsigned, little-endian; floats IEEE-754
// binary64, little-endian):
//
//   char[8]  magic "GEMDYNCK"
//   u32      version (1)
//   u32      network count
//   repeated per network:
//     u32    input_dim
//     u32    output_dim
//     u32    activation (0 = tanh, 1 = relu)
//     u32    hidden layer count H
//     u32[H] hidden sizes
//     u64    init seed
//     u64    parameter count P
//     f64[P] parameters, layer by layer: row-major W (fan_in x fan_out), then b

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gemdyn/autodiff.hpp"
#include "gemdyn/errors.hpp"

namespace gemdyn {

struct NetworkCheckpoint {
  ad::MlpSpec spec;
  std::uint64_t seed = 0;
  std::vector<double> params;

  bool operator==(const NetworkCheckpoint&) const = default;
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'G', 'E', 'M', 'D', 'Y', 'N', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T read_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw ParseError("checkpoint: unexpected end of file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

inline void write_f64(std::ostream& out, double d) {
  write_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d));
}

inline double read_f64(std::istream& in) {
  return std::bit_cast<double>(read_le<std::uint64_t>(in));
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const std::vector<NetworkCheckpoint>& nets) {
  out.write(detail::kCheckpointMagic, 8);
  detail::write_le<std::uint32_t>(out, detail::kCheckpointVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(nets.size()));
  for (const NetworkCheckpoint& n : nets) {
    if (n.params.size() != n.spec.num_params())
      throw DimensionError("write_checkpoint: parameter count does not match spec");
    detail::write_le<std::uint32_t>(out, n.spec.input_dim);
    detail::write_le<std::uint32_t>(out, n.spec.output_dim);
    detail::write_le<std::uint32_t>(out, n.spec.activation == ad::Activation::kTanh ? 0 : 1);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(n.spec.hidden_sizes.size()));
    for (int h : n.spec.hidden_sizes) detail::write_le<std::uint32_t>(out, h);
    detail::write_le<std::uint64_t>(out, n.seed);
    detail::write_le<std::uint64_t>(out, n.params.size());
    for (double p : n.params) detail::write_f64(out, p);
  }
}

inline std::vector<NetworkCheckpoint> read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
    throw ParseError("checkpoint: bad magic");
  if (detail::read_le<std::uint32_t>(in) != detail::kCheckpointVersion)
    throw ParseError("checkpoint: unsupported version");
  const std::uint32_t count = detail::read_le<std::uint32_t>(in);
  std::vector<NetworkCheckpoint> nets;
  for (std::uint32_t k = 0; k < count; ++k) {
    NetworkCheckpoint n;
    n.spec.input_dim = static_cast<int>(detail::read_le<std::uint32_t>(in));
    n.spec.output_dim = static_cast<int>(detail::read_le<std::uint32_t>(in));
    const std::uint32_t act = detail::read_le<std::uint32_t>(in);
    if (act > 1) throw ParseError("checkpoint: unknown activation code");
    n.spec.activation = act == 0 ? ad::Activation::kTanh : ad::Activation::kRelu;
    const std::uint32_t layers = detail::read_le<std::uint32_t>(in);
    n.spec.hidden_sizes.clear();
    for (std::uint32_t l = 0; l < layers; ++l)
      n.spec.hidden_sizes.push_back(static_cast<int>(detail::read_le<std::uint32_t>(in)));
    n.spec.validate();
    n.seed = detail::read_le<std::uint64_t>(in);
    const std::uint64_t np = detail::read_le<std::uint64_t>(in);
    if (np != n.spec.num_params())
      throw ParseError("checkpoint: parameter count does not match spec");
    n.params.resize(np);
    for (double& p : n.params) p = detail::read_f64(in);
    nets.push_back(std::move(n));
  }
  return nets;
}

inline void save_checkpoint(const std::string& path, const std::vector<NetworkCheckpoint>& nets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_checkpoint(out, nets);
}

inline std::vector<NetworkCheckpoint> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

// Debug export; doubles are written shortest-round-trip.
inline nlohmann::json to_json(const ad::MlpSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"hidden_sizes", spec.hidden_sizes},
          {"output_dim", spec.output_dim},
          {"activation", ad::to_string(spec.activation)}};
}

inline ad::MlpSpec mlp_spec_from_json(const nlohmann::json& j) {
  ad::MlpSpec s;
  s.input_dim = j.at("input_dim").get<int>();
  s.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
  s.output_dim = j.at("output_dim").get<int>();
  s.activation = ad::parse_activation(j.at("activation").get<std::string>());
  s.validate();
  return s;
}

inline nlohmann::json to_json(const NetworkCheckpoint& n) {
  return {{"spec", to_json(n.spec)}, {"seed", n.seed}, {"params", n.params}};
}

}  // namespace gemdyn

#endif  // GEMDYN_CHECKPOINT_HPP_
