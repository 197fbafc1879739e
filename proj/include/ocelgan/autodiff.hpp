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

// Dense f64 matrices and a reverse-mode tape.
//
// Rows are the batch dimension throughout: an activation for a batch of B
// samples is a B x n matrix, so a layer computes a = sigma(x W^T + b) with
// W stored as (out x in) and b as a 1 x out row that broadcasts over rows.
// Backward walks the tape in exact reverse recording order, which for a
// tape is a valid reverse topological order. Each rule adds its local
// contribution into the input gradients, so a value used twice receives
// the sum of both paths. Parameter leaves flush their accumulated gradient
// into Parameter::grad at the end of backward(); callers zero those
// explicitly between updates.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ocelgan/error.hpp"

namespace ocelgan::ad {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw Error(errc::kShapeMismatch, "matrix data length does not match its shape");
    }
  }
  Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> data)
      : Matrix(rows, cols, std::vector<double>(data)) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A trainable matrix and its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

using ParamRefs = std::vector<Parameter*>;

inline void zero_grads(std::span<Parameter* const> params) {
  for (auto* p : params) p->zero_grad();
}

namespace detail {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

inline ConstMap view(const Matrix& m) { return ConstMap(m.data(), m.rows(), m.cols()); }
inline MutMap view(Matrix& m) { return MutMap(m.data(), m.rows(), m.cols()); }

[[noreturn]] inline void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw Error(errc::kShapeMismatch,
              std::string(op) + ": incompatible shapes (" + std::to_string(a.rows()) + "x" +
                  std::to_string(a.cols()) + ") and (" + std::to_string(b.rows()) + "x" +
                  std::to_string(b.cols()) + ")",
              {{"op", op}});
}

}  // namespace detail

class Tape;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  inline const Matrix& value() const;
  inline bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Value of a 1x1 result.
  double item() const { return value()[0]; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Rule = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient.
  Var constant(Matrix m) {
    Node n;
    n.own = std::move(m);
    return push(std::move(n), "constant");
  }

  /// Leaf that writes its gradient into `p.grad` during backward(). The
  /// parameter must outlive the tape and stay unmodified while it is alive.
  Var param(Parameter& p) {
    Node n;
    n.external = &p.value;
    n.requires_grad = true;
    n.param = &p;
    return push(std::move(n), p.name.c_str());
  }

  /// Parameter used as a constant (no gradient is collected for it).
  Var frozen(const Parameter& p) {
    Node n;
    n.external = &p.value;
    return push(std::move(n), p.name.c_str());
  }

  /// Leaf that collects a gradient readable through grad(); used for
  /// inputs in gradient checks.
  Var input(Matrix m) {
    Node n;
    n.own = std::move(m);
    n.requires_grad = true;
    return push(std::move(n), "input");
  }

  /// Records an op result. When no input requires a gradient the rule is
  /// dropped and the result is a constant.
  Var record(Matrix value, std::initializer_list<Var> inputs, Rule rule, const char* op) {
    Node n;
    n.own = std::move(value);
    for (const auto& in : inputs) n.requires_grad = n.requires_grad || in.requires_grad();
    if (n.requires_grad) n.rule = std::move(rule);
    return push(std::move(n), op);
  }
  Var record(Matrix value, std::span<const Var> inputs, Rule rule, const char* op) {
    Node n;
    n.own = std::move(value);
    for (const auto& in : inputs) n.requires_grad = n.requires_grad || in.requires_grad();
    if (n.requires_grad) n.rule = std::move(rule);
    return push(std::move(n), op);
  }

  const Matrix& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.own;
  }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient of the last backward() loss w.r.t. a recorded value. Empty
  /// when the value did not require a gradient or was unreachable.
  const Matrix& grad(Var v) const { return nodes_[v.id()].grad; }

  /// Adds `g` into the gradient slot of node `id` (used by op rules).
  void accumulate(std::size_t id, const Matrix& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.empty()) {
      n.grad = g;
    } else {
      detail::view(n.grad) += detail::view(g);
    }
  }
  /// Mutable gradient slot for in-place accumulation, allocated on demand.
  Matrix* grad_slot(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return nullptr;
    if (n.grad.empty()) {
      const Matrix& v = value(id);
      n.grad = Matrix(v.rows(), v.cols());
    }
    return &n.grad;
  }
  const Matrix& upstream(std::size_t id) const { return nodes_[id].grad; }

  std::size_t size() const noexcept { return nodes_.size(); }

  void backward(Var loss) {
    if (loss.valid() && &loss.tape() != this) {
      throw Error(errc::kDisconnectedLoss, "loss was recorded on a different tape");
    }
    if (!loss.valid() || loss.id() >= nodes_.size()) {
      throw Error(errc::kDisconnectedLoss, "loss is not on this tape");
    }
    const Matrix& lv = value(loss.id());
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw Error(errc::kShapeMismatch, "backward expects a 1x1 loss");
    }
    if (!nodes_[loss.id()].requires_grad) {
      throw Error(errc::kDisconnectedLoss, "loss does not depend on any differentiable value");
    }
    for (auto& n : nodes_) n.grad = Matrix();
    nodes_[loss.id()].grad = Matrix(1, 1, 1.0);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty()) continue;
      if (n.rule) n.rule(*this, i);
      if (n.param) detail::view(n.param->grad) += detail::view(n.grad);
    }
  }

 private:
  struct Node {
    Matrix own;
    const Matrix* external = nullptr;
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    Rule rule;
  };

  Var push(Node n, const char* op) {
    const Matrix& v = n.external ? *n.external : n.own;
    if (!v.all_finite()) {
      throw Error(errc::kNonFiniteValue, std::string("non-finite value produced by ") + op,
                  {{"op", op}});
    }
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

// ---------------------------------------------------------------------------
// Ops

namespace detail {

template <typename F, typename D>
Var unary(Var a, const char* op, F f, D dfdx_from_xy) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  std::size_t ai = a.id();
  return a.tape().record(
      std::move(y), {a},
      [ai, dfdx_from_xy](Tape& t, std::size_t self) {
        Matrix* ga = t.grad_slot(ai);
        if (!ga) return;
        const Matrix& g = t.upstream(self);
        const Matrix& x = t.value(ai);
        const Matrix& y = t.value(self);
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * dfdx_from_xy(x[i], y[i]);
      },
      op);
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) detail::shape_error("matmul", av, bv);
  Matrix c(av.rows(), bv.cols());
  detail::view(c).noalias() = detail::view(av) * detail::view(bv);
  std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(
      std::move(c), {a, b},
      [ai, bi](Tape& t, std::size_t self) {
        const auto g = detail::view(t.upstream(self));
        if (Matrix* ga = t.grad_slot(ai)) {
          detail::view(*ga).noalias() += g * detail::view(t.value(bi)).transpose();
        }
        if (Matrix* gb = t.grad_slot(bi)) {
          detail::view(*gb).noalias() += detail::view(t.value(ai)).transpose() * g;
        }
      },
      "matmul");
}

/// a * b^T; the natural product for weights stored as (out x in).
inline Var matmul_nt(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.cols()) detail::shape_error("matmul_nt", av, bv);
  Matrix c(av.rows(), bv.rows());
  detail::view(c).noalias() = detail::view(av) * detail::view(bv).transpose();
  std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(
      std::move(c), {a, b},
      [ai, bi](Tape& t, std::size_t self) {
        const auto g = detail::view(t.upstream(self));
        if (Matrix* ga = t.grad_slot(ai)) {
          detail::view(*ga).noalias() += g * detail::view(t.value(bi));
        }
        if (Matrix* gb = t.grad_slot(bi)) {
          detail::view(*gb).noalias() += g.transpose() * detail::view(t.value(ai));
        }
      },
      "matmul_nt");
}

inline Var add(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) detail::shape_error("add", av, bv);
  Matrix c = av;
  detail::view(c) += detail::view(bv);
  std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(
      std::move(c), {a, b},
      [ai, bi](Tape& t, std::size_t self) {
        t.accumulate(ai, t.upstream(self));
        t.accumulate(bi, t.upstream(self));
      },
      "add");
}

inline Var sub(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) detail::shape_error("sub", av, bv);
  Matrix c = av;
  detail::view(c) -= detail::view(bv);
  std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(
      std::move(c), {a, b},
      [ai, bi](Tape& t, std::size_t self) {
        t.accumulate(ai, t.upstream(self));
        if (Matrix* gb = t.grad_slot(bi)) detail::view(*gb) -= detail::view(t.upstream(self));
      },
      "sub");
}

/// Elementwise product.
inline Var hadamard(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) detail::shape_error("hadamard", av, bv);
  Matrix c(av.rows(), av.cols());
  detail::view(c) = detail::view(av).cwiseProduct(detail::view(bv));
  std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(
      std::move(c), {a, b},
      [ai, bi](Tape& t, std::size_t self) {
        const auto g = detail::view(t.upstream(self));
        if (Matrix* ga = t.grad_slot(ai)) detail::view(*ga) += g.cwiseProduct(detail::view(t.value(bi)));
        if (Matrix* gb = t.grad_slot(bi)) detail::view(*gb) += g.cwiseProduct(detail::view(t.value(ai)));
      },
      "hadamard");
}

/// a + row, where `row` is 1 x cols(a) and is added to every row of a.
inline Var add_row(Var a, Var row) {
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) detail::shape_error("add_row", av, rv);
  Matrix c = av;
  detail::view(c).rowwise() += detail::view(rv).row(0);
  std::size_t ai = a.id(), ri = row.id();
  return a.tape().record(
      std::move(c), {a, row},
      [ai, ri](Tape& t, std::size_t self) {
        t.accumulate(ai, t.upstream(self));
        if (Matrix* gr = t.grad_slot(ri)) {
          detail::view(*gr).row(0) += detail::view(t.upstream(self)).colwise().sum();
        }
      },
      "add_row");
}

inline Var scale(Var a, double s) {
  return detail::unary(
      a, "scale", [s](double x) { return s * x; }, [s](double, double) { return s; });
}

inline Var add_scalar(Var a, double s) {
  return detail::unary(
      a, "add_scalar", [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

inline Var sigmoid(Var a) {
  return detail::unary(
      a, "sigmoid",
      [](double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double, double y) { return y * (1.0 - y); });
}

inline Var tanh(Var a) {
  return detail::unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

inline Var relu(Var a) {
  return detail::unary(
      a, "relu", [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

inline Var exp(Var a) {
  return detail::unary(
      a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Var log(Var a) {
  return detail::unary(
      a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

/// Clamps into [lo, hi]; the gradient is zero where the input was clipped.
inline Var clamp(Var a, double lo, double hi) {
  return detail::unary(
      a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

/// Row-wise softmax.
inline Var softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto out = y.row(r);
    double mx = *std::max_element(in.begin(), in.end());
    double sum = 0;
    for (std::size_t c = 0; c < in.size(); ++c) sum += (out[c] = std::exp(in[c] - mx));
    for (auto& v : out) v /= sum;
  }
  std::size_t ai = a.id();
  return a.tape().record(
      std::move(y), {a},
      [ai](Tape& t, std::size_t self) {
        Matrix* ga = t.grad_slot(ai);
        if (!ga) return;
        const Matrix& g = t.upstream(self);
        const Matrix& y = t.value(self);
        for (std::size_t r = 0; r < y.rows(); ++r) {
          double dot = 0;
          for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
          for (std::size_t c = 0; c < y.cols(); ++c) (*ga)(r, c) += y(r, c) * (g(r, c) - dot);
        }
      },
      "softmax_rows");
}

/// Row-wise log-softmax, computed stably.
inline Var log_softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    double mx = *std::max_element(in.begin(), in.end());
    double sum = 0;
    for (double v : in) sum += std::exp(v - mx);
    double lse = mx + std::log(sum);
    for (std::size_t c = 0; c < in.size(); ++c) y(r, c) = in[c] - lse;
  }
  std::size_t ai = a.id();
  return a.tape().record(
      std::move(y), {a},
      [ai](Tape& t, std::size_t self) {
        Matrix* ga = t.grad_slot(ai);
        if (!ga) return;
        const Matrix& g = t.upstream(self);
        const Matrix& y = t.value(self);
        for (std::size_t r = 0; r < y.rows(); ++r) {
          double gsum = 0;
          for (std::size_t c = 0; c < y.cols(); ++c) gsum += g(r, c);
          for (std::size_t c = 0; c < y.cols(); ++c) {
            (*ga)(r, c) += g(r, c) - std::exp(y(r, c)) * gsum;
          }
        }
      },
      "log_softmax_rows");
}

/// Horizontal concatenation; all parts share the row count.
inline Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error(errc::kShapeMismatch, "concat_cols needs at least one input");
  std::size_t rows = parts[0].rows(), cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) detail::shape_error("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<std::size_t, std::size_t>> layout;  // (node id, column offset)
  std::size_t off = 0;
  for (const auto& p : parts) {
    detail::view(out).middleCols(off, p.cols()) = detail::view(p.value());
    layout.emplace_back(p.id(), off);
    off += p.cols();
  }
  return parts[0].tape().record(
      std::move(out), parts,
      [layout](Tape& t, std::size_t self) {
        const auto g = detail::view(t.upstream(self));
        for (const auto& [id, offset] : layout) {
          if (Matrix* gi = t.grad_slot(id)) detail::view(*gi) += g.middleCols(offset, gi->cols());
        }
      },
      "concat_cols");
}

inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

inline Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Matrix& x = a.value();
  if (begin + count > x.cols() || count == 0) {
    throw Error(errc::kShapeMismatch, "slice_cols: range out of bounds");
  }
  Matrix out(x.rows(), count);
  detail::view(out) = detail::view(x).middleCols(begin, count);
  std::size_t ai = a.id();
  return a.tape().record(
      std::move(out), {a},
      [ai, begin, count](Tape& t, std::size_t self) {
        if (Matrix* ga = t.grad_slot(ai)) {
          detail::view(*ga).middleCols(begin, count) += detail::view(t.upstream(self));
        }
      },
      "slice_cols");
}

/// Vertical concatenation; all parts share the column count.
inline Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw Error(errc::kShapeMismatch, "concat_rows needs at least one input");
  std::size_t cols = parts[0].cols(), rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) detail::shape_error("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<std::size_t, std::size_t>> layout;
  std::size_t off = 0;
  for (const auto& p : parts) {
    detail::view(out).middleRows(off, p.rows()) = detail::view(p.value());
    layout.emplace_back(p.id(), off);
    off += p.rows();
  }
  return parts[0].tape().record(
      std::move(out), parts,
      [layout](Tape& t, std::size_t self) {
        const auto g = detail::view(t.upstream(self));
        for (const auto& [id, offset] : layout) {
          if (Matrix* gi = t.grad_slot(id)) detail::view(*gi) += g.middleRows(offset, gi->rows());
        }
      },
      "concat_rows");
}

inline Var concat_rows(std::initializer_list<Var> parts) {
  return concat_rows(std::span<const Var>(parts.begin(), parts.size()));
}

inline Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Matrix& x = a.value();
  if (begin + count > x.rows() || count == 0) {
    throw Error(errc::kShapeMismatch, "slice_rows: range out of bounds");
  }
  Matrix out(count, x.cols());
  detail::view(out) = detail::view(x).middleRows(begin, count);
  std::size_t ai = a.id();
  return a.tape().record(
      std::move(out), {a},
      [ai, begin, count](Tape& t, std::size_t self) {
        if (Matrix* ga = t.grad_slot(ai)) {
          detail::view(*ga).middleRows(begin, count) += detail::view(t.upstream(self));
        }
      },
      "slice_rows");
}

/// Sum of all entries, as 1x1.
inline Var sum(Var a) {
  Matrix out(1, 1, detail::view(a.value()).sum());
  std::size_t ai = a.id();
  return a.tape().record(
      std::move(out), {a},
      [ai](Tape& t, std::size_t self) {
        if (Matrix* ga = t.grad_slot(ai)) detail::view(*ga).array() += t.upstream(self)[0];
      },
      "sum");
}

inline Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace ocelgan::ad
