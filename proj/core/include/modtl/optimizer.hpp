// Copyright 2026 The modtl Authors.
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

#ifndef MODTL_OPTIMIZER_HPP_
#define MODTL_OPTIMIZER_HPP_

#include <cstdint>

#include "modtl/model.hpp"
#include "modtl/tensor.hpp"

namespace modtl {

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  ModelParameters first_moment;
  ModelParameters second_moment;
  std::uint64_t step = 0;
  AdamWHyper hyper;

  static OptimizerState for_params(const ModelParameters& params);
};

// One AdamW update of a single tensor at (1-based) step t:
//   m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g^2
//   theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
// with the decay term only when `decay` is set.
void adamw_update(Matrix& theta, const Matrix& grad, Matrix& m, Matrix& v,
                  std::uint64_t t, double lr, double weight_decay, bool decay,
                  const AdamWHyper& hyper = {});

// Increments state.step and updates every tensor. Biases and layer-norm
// parameters are never decayed.
void adamw_step(ModelParameters& params, const ModelParameters& grads,
                OptimizerState& state, double lr, double weight_decay);

}  // namespace modtl

#endif  // MODTL_OPTIMIZER_HPP_
