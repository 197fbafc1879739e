// Copyright 2026 The ocelgan Authors.
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

// Parameter checkpoint file.
//
//   magic    8 bytes  "OCGANCKP"
//   version  u32      1
//   count    u32
//   count x { name: u32 length + bytes, rows: u64, cols: u64,
//             rows*cols f64, row-major }
//
// All integers and floats little-endian. Entries are written in the order
// given, so the same parameter list always yields the same bytes.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ocelgan/autodiff.hpp"
#include "ocelgan/io.hpp"

namespace ocelgan::ad {

inline constexpr std::string_view kCheckpointMagic = "OCGANCKP";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedMatrix {
  std::string name;
  Matrix value;
};

inline void write_matrix(io::Writer& w, const Matrix& m) {
  w.put<std::uint64_t>(m.rows());
  w.put<std::uint64_t>(m.cols());
  for (double v : m.values()) w.put<double>(v);
}

inline Matrix read_matrix(io::Reader& r) {
  auto rows = r.get<std::uint64_t>();
  auto cols = r.get<std::uint64_t>();
  if (rows > (1u << 24) || cols > (1u << 24)) throw Error(errc::kBadFormat, "implausible matrix shape");
  std::vector<double> data(rows * cols);
  for (auto& v : data) v = r.get<double>();
  return Matrix(rows, cols, std::move(data));
}

inline std::string encode_checkpoint(const std::vector<NamedMatrix>& entries) {
  io::Writer w;
  w.bytes(kCheckpointMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    w.str(e.name);
    write_matrix(w, e.value);
  }
  return w.take();
}

inline std::vector<NamedMatrix> decode_checkpoint(std::string_view bytes) {
  io::Reader r(bytes);
  if (r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw Error(errc::kBadFormat, "not a checkpoint file");
  }
  auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(errc::kBadFormat, "unsupported checkpoint version " + std::to_string(version));
  }
  auto count = r.get<std::uint32_t>();
  std::vector<NamedMatrix> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedMatrix e;
    e.name = r.str();
    e.value = read_matrix(r);
    out.push_back(std::move(e));
  }
  if (!r.done()) throw Error(errc::kBadFormat, "trailing bytes after checkpoint");
  return out;
}

/// Copies values from `entries` into `params`, matched by name. Every
/// parameter must be present with an identical shape.
inline void load_into(std::span<Parameter* const> params, const std::vector<NamedMatrix>& entries) {
  for (auto* p : params) {
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const NamedMatrix& e) { return e.name == p->name; });
    if (it == entries.end()) {
      throw Error(errc::kBadFormat, "checkpoint lacks parameter " + p->name, {{"name", p->name}});
    }
    if (!it->value.same_shape(p->value)) {
      throw Error(errc::kShapeMismatch, "checkpoint shape differs for " + p->name, {{"name", p->name}});
    }
    p->value = it->value;
    p->grad = Matrix(p->value.rows(), p->value.cols());
  }
}

}  // namespace ocelgan::ad
