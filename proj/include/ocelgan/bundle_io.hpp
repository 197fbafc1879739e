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

// Dataset bundle cache file.
//
//   magic    8 bytes  "OCGANDSB"
//   version  u32      1
//   header   u32 length + UTF-8 JSON: schema, attributes, seed and, per
//            split, the case ids and the partition index
//   body     for every split (train, validation, test), partition and pair
//            in header order: prefix matrix, suffix matrix
//
// Matrices use the checkpoint layout (u64 rows, u64 cols, f64 row-major).

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocelgan/checkpoint.hpp"
#include "ocelgan/encoding.hpp"
#include "ocelgan/io.hpp"

namespace ocelgan {

inline constexpr std::string_view kBundleMagic = "OCGANDSB";
inline constexpr std::uint32_t kBundleVersion = 1;

namespace detail {

inline nlohmann::json split_index(const Split& s) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : s.partitions) {
    nlohmann::json ids = nlohmann::json::array();
    for (const auto& pair : p.pairs) ids.push_back(pair.case_id);
    parts.push_back({{"prefix_len", p.prefix_len}, {"suffix_len", p.suffix_len}, {"case_ids", ids}});
  }
  return {{"case_ids", s.case_ids}, {"partitions", parts}};
}

}  // namespace detail

inline std::string encode_bundle(const DatasetBundle& b) {
  nlohmann::json header = {{"schema", b.schema},
                           {"attributes", b.attributes},
                           {"seed", b.seed},
                           {"train", detail::split_index(b.train)},
                           {"validation", detail::split_index(b.validation)},
                           {"test", detail::split_index(b.test)}};
  io::Writer w;
  w.bytes(kBundleMagic);
  w.put<std::uint32_t>(kBundleVersion);
  w.str(header.dump());
  for (const Split* s : {&b.train, &b.validation, &b.test}) {
    for (const auto& p : s->partitions) {
      for (const auto& pair : p.pairs) {
        ad::write_matrix(w, pair.prefix);
        ad::write_matrix(w, pair.suffix);
      }
    }
  }
  return w.take();
}

inline DatasetBundle decode_bundle(std::string_view bytes) {
  io::Reader r(bytes);
  if (r.bytes(kBundleMagic.size()) != kBundleMagic) throw Error(errc::kBadFormat, "not a dataset bundle");
  auto version = r.get<std::uint32_t>();
  if (version != kBundleVersion) {
    throw Error(errc::kBadFormat, "unsupported bundle version " + std::to_string(version));
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::kBadFormat, std::string("bundle header: ") + e.what());
  }
  DatasetBundle b;
  try {
    header.at("schema").get_to(b.schema);
    header.at("attributes").get_to(b.attributes);
    header.at("seed").get_to(b.seed);
    auto read_split = [&](const nlohmann::json& j, Split& s) {
      j.at("case_ids").get_to(s.case_ids);
      for (const auto& jp : j.at("partitions")) {
        Partition p;
        jp.at("prefix_len").get_to(p.prefix_len);
        jp.at("suffix_len").get_to(p.suffix_len);
        for (const auto& id : jp.at("case_ids")) {
          PrefixSuffixPair pair;
          pair.case_id = id.get<std::string>();
          pair.prefix = ad::read_matrix(r);
          pair.suffix = ad::read_matrix(r);
          if (pair.prefix.rows() != p.prefix_len || pair.suffix.rows() != p.suffix_len) {
            throw Error(errc::kBadFormat, "bundle pair shape disagrees with its partition");
          }
          p.pairs.push_back(std::move(pair));
        }
        s.partitions.push_back(std::move(p));
      }
    };
    read_split(header.at("train"), b.train);
    read_split(header.at("validation"), b.validation);
    read_split(header.at("test"), b.test);
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::kBadFormat, std::string("bundle header: ") + e.what());
  }
  if (!r.done()) throw Error(errc::kBadFormat, "trailing bytes after bundle");
  return b;
}

/// Cache file name for (log content hash, object type, attributes, seed).
inline std::string bundle_cache_key(const std::string& log_hash, const std::string& object_type,
                                    const std::vector<std::string>& attrs, std::uint64_t seed) {
  std::string key = log_hash + '\n' + object_type + '\n';
  for (const auto& a : attrs) key += a + ',';
  key += '\n' + std::to_string(seed);
  return io::fnv1a_hex(key) + ".bundle";
}

/// Loads the cached bundle from `dir` or builds and stores it. A corrupt
/// cache file is rebuilt rather than reported.
inline DatasetBundle cached_bundle(const std::filesystem::path& dir, const std::string& key,
                                   const std::function<DatasetBundle()>& build) {
  auto path = dir / key;
  if (std::filesystem::exists(path)) {
    try {
      return decode_bundle(io::read_file(path));
    } catch (const Error& e) {
      if (e.code() != errc::kBadFormat) throw;
    }
  }
  auto b = build();
  io::atomic_write_file(path, encode_bundle(b));
  return b;
}

}  // namespace ocelgan
