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

#include "modtl/transfer.hpp"

#include "modtl/error.hpp"

namespace modtl {

TransferResult transfer_load(const Checkpoint& source, const ModifierSchema& target_schema,
                             std::uint64_t seed) {
  if (source.version != kCheckpointVersion) {
    throw Error(ErrorKind::kCheckpointVersionMismatch,
                "source checkpoint version " + std::to_string(source.version));
  }
  const MultiTaskModel& src = source.model;
  ModelParameters params;
  params.encoder = src.params().encoder;
  std::vector<std::string> copied, fresh, warnings;
  for (const auto& def : target_schema.modifiers()) {
    const ClassificationHead* head = src.head(def.name);
    const ModifierDef* src_def = src.schema().find(def.name);
    if (head && src_def && src_def->labels == def.labels) {
      params.heads.push_back(*head);
      copied.push_back(def.name);
      continue;
    }
    if (head) {
      warnings.push_back("head '" + def.name +
                         "' has a different label list in the source; initialized fresh");
    }
    params.heads.push_back(init_head(def, src.config().hidden_size, head_seed(seed, def.name)));
    fresh.push_back(def.name);
  }
  return {MultiTaskModel(target_schema, src.config(), std::move(params)), std::move(copied),
          std::move(fresh), std::move(warnings)};
}

}  // namespace modtl
