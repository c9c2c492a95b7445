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

#ifndef MODTL_TRANSFER_HPP_
#define MODTL_TRANSFER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "modtl/checkpoint.hpp"
#include "modtl/model.hpp"

namespace modtl {

struct TransferResult {
  MultiTaskModel model;
  std::vector<std::string> copied_heads;
  std::vector<std::string> fresh_heads;
  std::vector<std::string> warnings;
};

// Copies the encoder verbatim and every head whose modifier name and ordered
// label list both match; other target modifiers get heads from
// init_head(def, H, head_seed(seed, name)). The result has exactly one head
// per target modifier. The source vocabulary must be reused by the caller.
TransferResult transfer_load(const Checkpoint& source,
                             const ModifierSchema& target_schema, std::uint64_t seed);

}  // namespace modtl

#endif  // MODTL_TRANSFER_HPP_
