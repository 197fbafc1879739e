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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocelgan/error.hpp"

namespace ocelgan {

/// Damerau-Levenshtein distance, optimal string alignment variant: insert,
/// delete, substitute and swap of two adjacent symbols, where no substring
/// is edited again after a swap.
template <typename Seq>
std::size_t dl_distance(const Seq& a, const Seq& b) {
  const std::size_t n = std::size(a), m = std::size(b);
  // Three rolling rows: i-2, i-1, i.
  std::vector<std::size_t> two(m + 1), one(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) one[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      cur[j] = std::min({one[j] + 1, cur[j - 1] + 1, one[j - 1] + cost});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) {
        cur[j] = std::min(cur[j], two[j - 2] + 1);
      }
    }
    std::swap(two, one);
    std::swap(one, cur);
  }
  return one[m];
}

/// 1 - DL / max(|predicted|, |real|); two empty sequences are identical.
template <typename Seq>
double similarity(const Seq& predicted, const Seq& real) {
  std::size_t longest = std::max(std::size(predicted), std::size(real));
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(dl_distance(predicted, real)) / static_cast<double>(longest);
}

inline double mae(std::span<const double> predicted, std::span<const double> real) {
  if (predicted.size() != real.size()) {
    throw Error(errc::kShapeMismatch, "mae needs equally long inputs");
  }
  if (predicted.empty()) throw Error(errc::kEmptyInput, "mae of zero values");
  double total = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) total += std::abs(real[i] - predicted[i]);
  return total / static_cast<double>(predicted.size());
}

struct PairRecord {
  std::string case_id;
  std::size_t prefix_len = 0;
  std::vector<std::string> predicted;
  std::vector<std::string> real;
  double similarity = 0;
  std::vector<double> abs_errors;  // normalized elapsed, aligned positions only
};

/// Aggregate over many prefix/suffix predictions. mae_normalized averages
/// every aligned elapsed error across all pairs (not the per-pair means).
struct EvalReport {
  double mean_similarity = 0;
  double mae_normalized = 0;
  std::size_t num_pairs = 0;
  std::size_t num_timestamps = 0;
  std::vector<PairRecord> pairs;

  static EvalReport from_pairs(std::vector<PairRecord> pairs) {
    EvalReport r;
    r.pairs = std::move(pairs);
    r.num_pairs = r.pairs.size();
    double s = 0, e = 0;
    for (const auto& p : r.pairs) {
      s += p.similarity;
      for (double x : p.abs_errors) e += x;
      r.num_timestamps += p.abs_errors.size();
    }
    if (r.num_pairs) r.mean_similarity = s / static_cast<double>(r.num_pairs);
    if (r.num_timestamps) r.mae_normalized = e / static_cast<double>(r.num_timestamps);
    return r;
  }

  static std::string csv_header() { return "mean_similarity,mae_normalized,num_pairs,num_timestamps"; }
  std::string csv_row() const {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%zu,%zu", mean_similarity, mae_normalized, num_pairs,
                  num_timestamps);
    return buf;
  }
};

inline void to_json(nlohmann::json& j, const PairRecord& p) {
  j = nlohmann::json{{"case_id", p.case_id},       {"prefix_len", p.prefix_len},
                     {"predicted", p.predicted},   {"real", p.real},
                     {"similarity", p.similarity}, {"abs_errors", p.abs_errors}};
}

inline void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"mean_similarity", r.mean_similarity},
                     {"mae_normalized", r.mae_normalized},
                     {"num_pairs", r.num_pairs},
                     {"num_timestamps", r.num_timestamps},
                     {"pairs", r.pairs}};
}

}  // namespace ocelgan
