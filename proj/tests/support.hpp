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

// Fixtures and reference implementations shared by the unit tests and the
// acceptance runner.

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ocelgan/autodiff.hpp"
#include "ocelgan/random.hpp"

namespace ocelgan::testing {

/// The order/item/package fragment used throughout the documentation:
/// orders o1, o2, items i1..i5, packages p1, p2.
inline std::string fragment_log_json() {
  return R"({
  "ocel:global-log": {"ocel:version": "1.0", "ocel:ordering": "timestamp",
                      "ocel:attribute-names": ["priority", "size", "product", "weight"],
                      "ocel:object-types": ["order", "item", "package"]},
  "ocel:events": {
    "9791": {"ocel:activity": "place order", "ocel:timestamp": "2020-9-14 11:37", "ocel:omap": ["o1", "i1", "i2", "i3"], "ocel:vmap": {}},
    "9792": {"ocel:activity": "check availability", "ocel:timestamp": "2020-9-14 11:40", "ocel:omap": ["o1", "i1"], "ocel:vmap": {}},
    "9793": {"ocel:activity": "pick item", "ocel:timestamp": "2020-9-14 11:41", "ocel:omap": ["o1", "i1"], "ocel:vmap": {}},
    "9794": {"ocel:activity": "check availability", "ocel:timestamp": "2020-9-14 11:42", "ocel:omap": ["o1", "i2"], "ocel:vmap": {}},
    "9795": {"ocel:activity": "check availability", "ocel:timestamp": "2020-9-14 11:43", "ocel:omap": ["o1", "i3"], "ocel:vmap": {}},
    "9796": {"ocel:activity": "pick item", "ocel:timestamp": "2020-9-14 11:47", "ocel:omap": ["o1", "i2"], "ocel:vmap": {}},
    "9797": {"ocel:activity": "pick item", "ocel:timestamp": "2020-9-14 11:48", "ocel:omap": ["o1", "i3"], "ocel:vmap": {}},
    "9798": {"ocel:activity": "create package", "ocel:timestamp": "2020-9-14 15:10", "ocel:omap": ["i1", "i2", "p1"], "ocel:vmap": {}},
    "9799": {"ocel:activity": "place order", "ocel:timestamp": "2020-9-14 16:01", "ocel:omap": ["o2", "i4", "i5"], "ocel:vmap": {}},
    "9800": {"ocel:activity": "check availability", "ocel:timestamp": "2020-9-14 16:05", "ocel:omap": ["o2", "i4"], "ocel:vmap": {}},
    "9801": {"ocel:activity": "check availability", "ocel:timestamp": "2020-9-14 16:06", "ocel:omap": ["o2", "i5"], "ocel:vmap": {}},
    "9802": {"ocel:activity": "pick item", "ocel:timestamp": "2020-9-15 11:40", "ocel:omap": ["o2", "i1"], "ocel:vmap": {}},
    "9803": {"ocel:activity": "pick item", "ocel:timestamp": "2020-9-15 11:41", "ocel:omap": ["o2", "i2"], "ocel:vmap": {}},
    "9804": {"ocel:activity": "create package", "ocel:timestamp": "2020-9-15 16:18", "ocel:omap": ["i3", "i4", "i5", "p2"], "ocel:vmap": {}},
    "9805": {"ocel:activity": "load package", "ocel:timestamp": "2020-9-16 10:15", "ocel:omap": ["p1"], "ocel:vmap": {}},
    "9806": {"ocel:activity": "deliver package", "ocel:timestamp": "2020-9-16 14:39", "ocel:omap": ["p1"], "ocel:vmap": {}},
    "9807": {"ocel:activity": "load package", "ocel:timestamp": "2020-9-16 16:45", "ocel:omap": ["p2"], "ocel:vmap": {}},
    "9808": {"ocel:activity": "send invoice", "ocel:timestamp": "2020-9-17 10:15", "ocel:omap": ["o1", "i1", "i2", "i3"], "ocel:vmap": {}},
    "9809": {"ocel:activity": "deliver package", "ocel:timestamp": "2020-9-17 10:26", "ocel:omap": ["p2"], "ocel:vmap": {}},
    "9810": {"ocel:activity": "send invoice", "ocel:timestamp": "2020-9-17 10:45", "ocel:omap": ["o2", "i4", "i5"], "ocel:vmap": {}},
    "9811": {"ocel:activity": "receive payment", "ocel:timestamp": "2020-9-17 10:49", "ocel:omap": ["o1", "i1", "i2", "i3"], "ocel:vmap": {}}
  },
  "ocel:objects": {
    "o1": {"ocel:type": "order", "ocel:ovmap": {"priority": "low"}},
    "o2": {"ocel:type": "order", "ocel:ovmap": {"priority": "high"}},
    "i1": {"ocel:type": "item", "ocel:ovmap": {"size": "2mx2mx1m", "product": "small box"}},
    "i2": {"ocel:type": "item", "ocel:ovmap": {"size": "2.4mx2.3mx1.9m", "product": "medium box"}},
    "i3": {"ocel:type": "item", "ocel:ovmap": {"size": "2mx2mx0.5m", "product": "small box"}},
    "i4": {"ocel:type": "item", "ocel:ovmap": {"size": "3mx3mx2m", "product": "large box"}},
    "i5": {"ocel:type": "item", "ocel:ovmap": {}},
    "p1": {"ocel:type": "package", "ocel:ovmap": {"weight": 50}},
    "p2": {"ocel:type": "package", "ocel:ovmap": {}}
  }
})";
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checks

/// Relative error with a floor on the denominator, so that two gradients
/// which are both ~0 compare by absolute difference (1e-4 * 1e-4 = 1e-8).
inline double relative_error(double analytic, double numeric) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
  return std::abs(analytic - numeric) / denom;
}

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t checked = 0;
};

using LossFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

/// Compares backward() against central differences for every element of
/// every input. `f` must build a 1x1 loss from the given leaves.
inline GradCheckResult check_gradients(const LossFn& f, std::vector<ad::Matrix> inputs, double eps = 1e-5) {
  GradCheckResult res;
  std::vector<ad::Matrix> analytic;
  {
    ad::Tape t;
    std::vector<ad::Var> leaves;
    for (const auto& m : inputs) leaves.push_back(t.input(m));
    auto loss = f(t, leaves);
    t.backward(loss);
    for (const auto& v : leaves) {
      auto g = t.grad(v);
      if (g.empty()) g = ad::Matrix(v.rows(), v.cols());
      analytic.push_back(g);
    }
  }
  auto eval = [&](const std::vector<ad::Matrix>& xs) {
    ad::Tape t;
    std::vector<ad::Var> leaves;
    for (const auto& m : xs) leaves.push_back(t.constant(m));
    return f(t, leaves).item();
  };
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      double orig = inputs[k][i];
      inputs[k][i] = orig + eps;
      double up = eval(inputs);
      inputs[k][i] = orig - eps;
      double down = eval(inputs);
      inputs[k][i] = orig;
      double numeric = (up - down) / (2 * eps);
      res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic[k][i], numeric));
      ++res.checked;
    }
  }
  return res;
}

/// Same check for Parameters bound with Tape::param, exercising the
/// parameter-gradient flush path.
using ParamLossFn = std::function<ad::Var(ad::Tape&)>;

inline GradCheckResult check_param_gradients(const ParamLossFn& f, std::vector<ad::Parameter*> params,
                                             double eps = 1e-5) {
  GradCheckResult res;
  ad::zero_grads(params);
  {
    ad::Tape t;
    t.backward(f(t));
  }
  std::vector<ad::Matrix> analytic;
  for (auto* p : params) analytic.push_back(p->grad);
  auto eval = [&] {
    ad::Tape t;
    return f(t).item();
  };
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& v = params[k]->value;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double orig = v[i];
      v[i] = orig + eps;
      double up = eval();
      v[i] = orig - eps;
      double down = eval();
      v[i] = orig;
      double numeric = (up - down) / (2 * eps);
      res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic[k][i], numeric));
      ++res.checked;
    }
  }
  return res;
}

inline ad::Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1, double hi = 1) {
  ad::Matrix m(r, c);
  for (auto& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

// ---------------------------------------------------------------------------
// Edit distance by exhaustive search

/// Restricted edit distances from `source` to every string of length
/// <= max_len over `alphabet` symbols, found by a 0-1 breadth-first search
/// over edit scripts. A state is (characters of `source` consumed, output
/// written so far); moves copy, substitute, delete or insert one symbol, or
/// emit the next two source symbols swapped. Each source symbol is consumed
/// by exactly one move and emitted symbols are never revisited, which is
/// the "no substring edited twice" restriction.
///
/// Strings are encoded as base-(alphabet+1) integers with digits 1..alphabet.
class EditSearch {
 public:
  EditSearch(int alphabet, int max_len) : k_(alphabet), max_len_(max_len) {
    pow_.push_back(1);
    for (int i = 0; i <= max_len_; ++i) pow_.push_back(pow_.back() * (k_ + 1));
  }

  int code_of(const std::vector<int>& s) const {
    int c = 0;
    for (int x : s) c = c * (k_ + 1) + (x + 1);
    return c;
  }

  /// Distances indexed by target code; -1 where unreachable within max_len.
  std::vector<int> from(const std::vector<int>& source) const {
    const int n = static_cast<int>(source.size());
    const int codes = pow_[max_len_ + 1];
    // state = i * codes + out_code; output length is implied by the code.
    std::vector<int> dist(static_cast<std::size_t>((n + 1) * codes), -1);
    std::vector<int> out_len(static_cast<std::size_t>(codes), 0);
    for (int c = 1; c < codes; ++c) out_len[c] = out_len[c / (k_ + 1)] + 1;
    std::deque<std::pair<int, int>> q;  // (state, cost)
    auto relax = [&](int i, int code, int cost, bool front) {
      if (code >= codes) return;
      std::size_t s = static_cast<std::size_t>(i * codes + code);
      if (dist[s] != -1 && dist[s] <= cost) return;
      dist[s] = cost;
      if (front) q.emplace_front(static_cast<int>(s), cost);
      else q.emplace_back(static_cast<int>(s), cost);
    };
    relax(0, 0, 0, true);
    while (!q.empty()) {
      auto [s, cost] = q.front();
      q.pop_front();
      if (dist[static_cast<std::size_t>(s)] < cost) continue;
      int i = s / codes, code = s % codes;
      bool room = out_len[code] < max_len_;
      auto push = [&](int sym) { return code * (k_ + 1) + (sym + 1); };
      if (i < n && room) relax(i + 1, push(source[i]), cost, true);  // copy
      if (i < n) relax(i + 1, code, cost + 1, false);                 // delete
      for (int sym = 0; sym < k_; ++sym) {
        if (room) relax(i, push(sym), cost + 1, false);  // insert
        if (i < n && room && sym != source[i]) relax(i + 1, push(sym), cost + 1, false);  // substitute
      }
      if (i + 1 < n && source[i] != source[i + 1] && out_len[code] + 2 <= max_len_) {
        int c2 = (code * (k_ + 1) + (source[i + 1] + 1)) * (k_ + 1) + (source[i] + 1);
        relax(i + 2, c2, cost + 1, false);  // swap
      }
    }
    std::vector<int> out(static_cast<std::size_t>(codes), -1);
    for (int c = 0; c < codes; ++c) out[c] = dist[static_cast<std::size_t>(n * codes + c)];
    return out;
  }

  /// All strings of length 0..max_len.
  std::vector<std::vector<int>> all_strings() const {
    std::vector<std::vector<int>> out{{}};
    for (std::size_t start = 0; start < out.size(); ++start) {
      if (static_cast<int>(out[start].size()) == max_len_) continue;
      for (int sym = 0; sym < k_; ++sym) {
        auto s = out[start];
        s.push_back(sym);
        out.push_back(s);
      }
    }
    return out;
  }

 private:
  int k_;
  int max_len_;
  std::vector<int> pow_;
};

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ocelgan-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace ocelgan::testing
