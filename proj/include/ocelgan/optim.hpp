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

#include <cmath>
#include <span>
#include <vector>

#include "ocelgan/autodiff.hpp"

namespace ocelgan::ad {

/// Global L2 norm over all parameter gradients.
inline double grad_norm(std::span<Parameter* const> params) {
  double sq = 0;
  for (const auto* p : params) sq += detail::view(p->grad).squaredNorm();
  return std::sqrt(sq);
}

/// Rescales all gradients so their global norm is at most `max_norm`.
/// Returns the factor applied (1 when nothing was clipped).
inline double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  if (!(max_norm > 0)) throw Error(errc::kInvalidConfig, "clip norm must be positive");
  double norm = grad_norm(params);
  if (!(norm > max_norm)) return 1.0;
  double factor = max_norm / norm;
  for (auto* p : params) detail::view(p->grad) *= factor;
  return factor;
}

/// Plain gradient descent: p -= lr * grad. Batch averaging belongs in the
/// loss, so there is no 1/m here.
inline void sgd_step(std::span<Parameter* const> params, double lr) {
  for (auto* p : params) detail::view(p->value) -= lr * detail::view(p->grad);
}

struct RmsPropConfig {
  double learning_rate = 5.5e-5;
  double decay = 0.99;
  double epsilon = 1e-8;
};

/// RMSprop with one running mean-square accumulator per parameter:
///   acc <- decay * acc + (1 - decay) * g^2
///   p   <- p - lr * g / sqrt(acc + epsilon)
class RmsProp {
 public:
  RmsProp() = default;
  RmsProp(std::span<Parameter* const> params, RmsPropConfig config)
      : params_(params.begin(), params.end()), config_(config) {
    accumulators_.reserve(params_.size());
    for (const auto* p : params_) accumulators_.emplace_back(p->value.rows(), p->value.cols());
  }

  void step() {
    const double rho = config_.decay;
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Parameter& p = *params_[k];
      Matrix& acc = accumulators_[k];
      if (!p.grad.same_shape(acc) || !p.value.same_shape(acc)) {
        throw Error(errc::kShapeMismatch, "rmsprop: gradient shape does not match " + p.name);
      }
      for (std::size_t i = 0; i < acc.size(); ++i) {
        double g = p.grad[i];
        acc[i] = rho * acc[i] + (1.0 - rho) * g * g;
        p.value[i] -= config_.learning_rate * g / std::sqrt(acc[i] + config_.epsilon);
      }
    }
  }

  const RmsPropConfig& config() const noexcept { return config_; }
  std::span<const Parameter* const> params() const noexcept { return params_; }
  std::vector<Matrix>& accumulators() noexcept { return accumulators_; }
  const std::vector<Matrix>& accumulators() const noexcept { return accumulators_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> accumulators_;
  RmsPropConfig config_;
};

}  // namespace ocelgan::ad
