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

#ifndef MODTL_TENSOR_HPP_
#define MODTL_TENSOR_HPP_

#include <Eigen/Core>

namespace modtl {

// Parameters and activations are double precision, row-major. Vectors that
// are stored as parameters use 1 x n matrices so every parameter has a single
// type.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// How a parameter tensor is treated by weight decay.
enum class ParamKind { kWeight, kEmbedding, kBias, kNorm };

inline bool is_decayed(ParamKind kind) {
  return kind == ParamKind::kWeight || kind == ParamKind::kEmbedding;
}

}  // namespace modtl

#endif  // MODTL_TENSOR_HPP_
