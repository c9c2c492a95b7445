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

#include "modtl/optimizer.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "modtl/error.hpp"

namespace modtl {

OptimizerState OptimizerState::for_params(const ModelParameters& params) {
  OptimizerState s;
  s.first_moment = params.zeros_like();
  s.second_moment = params.zeros_like();
  return s;
}

void adamw_update(Matrix& theta, const Matrix& grad, Matrix& m, Matrix& v, std::uint64_t t,
                  double lr, double weight_decay, bool decay, const AdamWHyper& hyper) {
  if (theta.rows() != grad.rows() || theta.cols() != grad.cols() || m.size() != theta.size() ||
      v.size() != theta.size()) {
    throw Error(ErrorKind::kShapeMismatch, "optimizer tensor shapes differ");
  }
  if (t == 0) throw Error(ErrorKind::kInvalidArgument, "optimizer step count starts at 1");
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  const double wd = decay ? weight_decay : 0.0;
  double* th = theta.data();
  const double* g = grad.data();
  double* mm = m.data();
  double* vv = v.data();
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    mm[i] = hyper.beta1 * mm[i] + (1.0 - hyper.beta1) * g[i];
    vv[i] = hyper.beta2 * vv[i] + (1.0 - hyper.beta2) * g[i] * g[i];
    const double m_hat = mm[i] / c1;
    const double v_hat = vv[i] / c2;
    th[i] -= lr * (m_hat / (std::sqrt(v_hat) + hyper.epsilon) + wd * th[i]);
  }
}

void adamw_step(ModelParameters& params, const ModelParameters& grads, OptimizerState& state,
                double lr, double weight_decay) {
  std::vector<const Matrix*> g;
  grads.visit([&](const std::string&, const Matrix& m, ParamKind) { g.push_back(&m); });
  std::vector<Matrix*> m1, m2;
  state.first_moment.visit([&](const std::string&, Matrix& m, ParamKind) { m1.push_back(&m); });
  state.second_moment.visit([&](const std::string&, Matrix& m, ParamKind) { m2.push_back(&m); });
  ++state.step;
  std::size_t i = 0;
  params.visit([&](const std::string& name, Matrix& theta, ParamKind kind) {
    if (i >= g.size() || i >= m1.size() || i >= m2.size()) {
      throw Error(ErrorKind::kShapeMismatch, "optimizer state missing tensor " + name);
    }
    adamw_update(theta, *g[i], *m1[i], *m2[i], state.step, lr, weight_decay, is_decayed(kind),
                 state.hyper);
    ++i;
  });
}

}  // namespace modtl
