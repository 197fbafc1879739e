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

// Stacked LSTM and linear layers built on the tape.
//
// One cell update, for a batch laid out as rows:
//
//   f = sigmoid(x W_f^T + h U_f^T + b_f)      c~ = tanh(x W_c^T + h U_c^T + b_c)
//   i = sigmoid(x W_i^T + h U_i^T + b_i)      c  = f . c_prev + i . c~
//   o = sigmoid(x W_o^T + h U_o^T + b_o)      h  = o . tanh(c)
//
// Layer l > 0 takes layer l-1's new hidden state as its input.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ocelgan/autodiff.hpp"
#include "ocelgan/random.hpp"

namespace ocelgan::nn {

using ad::Matrix;
using ad::Parameter;
using ad::ParamRefs;
using ad::Tape;
using ad::Var;

inline Matrix uniform_matrix(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = rng.uniform(-scale, scale);
  return m;
}

struct LstmLayer {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Parameter W_f, W_i, W_o, W_c;  // hidden x input
  Parameter U_f, U_i, U_o, U_c;  // hidden x hidden
  Parameter b_f, b_i, b_o, b_c;  // 1 x hidden

  static LstmLayer create(const std::string& prefix, std::size_t input, std::size_t hidden,
                          double init_scale, Rng& rng) {
    LstmLayer l;
    l.input_size = input;
    l.hidden_size = hidden;
    auto w = [&](const char* n, std::size_t cols) {
      return Parameter(prefix + "." + n, uniform_matrix(hidden, cols, init_scale, rng));
    };
    l.W_f = w("W_f", input);
    l.W_i = w("W_i", input);
    l.W_o = w("W_o", input);
    l.W_c = w("W_c", input);
    l.U_f = w("U_f", hidden);
    l.U_i = w("U_i", hidden);
    l.U_o = w("U_o", hidden);
    l.U_c = w("U_c", hidden);
    auto b = [&](const char* n) {
      return Parameter(prefix + "." + n, uniform_matrix(1, hidden, init_scale, rng));
    };
    l.b_f = b("b_f");
    l.b_i = b("b_i");
    l.b_o = b("b_o");
    l.b_c = b("b_c");
    return l;
  }

  ParamRefs parameters() {
    return {&W_f, &W_i, &W_o, &W_c, &U_f, &U_i, &U_o, &U_c, &b_f, &b_i, &b_o, &b_c};
  }
};

struct LstmStack {
  std::vector<LstmLayer> layers;

  static LstmStack create(const std::string& prefix, std::size_t input, std::size_t hidden,
                          std::size_t num_layers, double init_scale, Rng& rng) {
    LstmStack s;
    for (std::size_t l = 0; l < num_layers; ++l) {
      s.layers.push_back(LstmLayer::create(prefix + "." + std::to_string(l), l == 0 ? input : hidden,
                                           hidden, init_scale, rng));
    }
    return s;
  }

  std::size_t input_size() const { return layers.front().input_size; }
  std::size_t hidden_size() const { return layers.front().hidden_size; }

  ParamRefs parameters() {
    ParamRefs out;
    for (auto& l : layers) {
      auto p = l.parameters();
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }
};

struct Linear {
  Parameter W;  // out x in
  Parameter b;  // 1 x out

  static Linear create(const std::string& prefix, std::size_t in, std::size_t out,
                       double init_scale, Rng& rng) {
    return {Parameter(prefix + ".W", uniform_matrix(out, in, init_scale, rng)),
            Parameter(prefix + ".b", uniform_matrix(1, out, init_scale, rng))};
  }

  ParamRefs parameters() { return {&W, &b}; }
};

/// Binds a parameter onto a tape: trainable leaves collect gradients,
/// frozen ones act as constants.
inline Var bind(Tape& tape, Parameter& p, bool trainable) {
  return trainable ? tape.param(p) : tape.frozen(p);
}

struct BoundLstmLayer {
  Var W_f, W_i, W_o, W_c, U_f, U_i, U_o, U_c, b_f, b_i, b_o, b_c;
};

inline BoundLstmLayer bind(Tape& t, LstmLayer& l, bool trainable) {
  return {bind(t, l.W_f, trainable), bind(t, l.W_i, trainable), bind(t, l.W_o, trainable),
          bind(t, l.W_c, trainable), bind(t, l.U_f, trainable), bind(t, l.U_i, trainable),
          bind(t, l.U_o, trainable), bind(t, l.U_c, trainable), bind(t, l.b_f, trainable),
          bind(t, l.b_i, trainable), bind(t, l.b_o, trainable), bind(t, l.b_c, trainable)};
}

struct BoundLinear {
  Var W, b;
  Var operator()(Var x) const { return ad::add_row(ad::matmul_nt(x, W), b); }
};

inline BoundLinear bind(Tape& t, Linear& l, bool trainable) {
  return {bind(t, l.W, trainable), bind(t, l.b, trainable)};
}

/// One cell update; returns (h_t, c_t).
inline std::pair<Var, Var> lstm_step(const BoundLstmLayer& p, Var x, Var h_prev, Var c_prev) {
  using namespace ad;
  auto gate = [&](Var W, Var U, Var b) { return add_row(add(matmul_nt(x, W), matmul_nt(h_prev, U)), b); };
  Var f = sigmoid(gate(p.W_f, p.U_f, p.b_f));
  Var i = sigmoid(gate(p.W_i, p.U_i, p.b_i));
  Var o = sigmoid(gate(p.W_o, p.U_o, p.b_o));
  Var c_tilde = tanh(gate(p.W_c, p.U_c, p.b_c));
  Var c = add(hadamard(f, c_prev), hadamard(i, c_tilde));
  Var h = hadamard(o, tanh(c));
  return {h, c};
}

/// Per-layer hidden and cell states.
struct LstmState {
  std::vector<Var> h;
  std::vector<Var> c;
};

struct BoundLstm {
  std::vector<BoundLstmLayer> layers;
  std::size_t hidden_size = 0;

  /// Zero state for a batch of `batch` rows.
  LstmState zero_state(Tape& t, std::size_t batch) const {
    LstmState s;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      s.h.push_back(t.constant(Matrix(batch, hidden_size)));
      s.c.push_back(t.constant(Matrix(batch, hidden_size)));
    }
    return s;
  }

  /// Advances every layer by one time step; returns the top hidden state.
  Var step(Var x, LstmState& s) const {
    Var input = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto [h, c] = lstm_step(layers[l], input, s.h[l], s.c[l]);
      s.h[l] = h;
      s.c[l] = c;
      input = h;
    }
    return input;
  }
};

inline BoundLstm bind(Tape& t, LstmStack& s, bool trainable) {
  BoundLstm b;
  b.hidden_size = s.hidden_size();
  for (auto& l : s.layers) b.layers.push_back(bind(t, l, trainable));
  return b;
}

}  // namespace ocelgan::nn
