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

#ifndef MODTL_CHECKPOINT_HPP_
#define MODTL_CHECKPOINT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modtl/featurize.hpp"
#include "modtl/model.hpp"

namespace modtl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::map<std::string, double> dev_macro_f1;
  double dev_metric = 0.0;
  bool improved = false;
  double seconds = 0.0;  // wall clock; not persisted in checkpoints
};

nlohmann::json to_json(const EpochRecord& record, bool with_timing);

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string name;
  MultiTaskModel model;
  TokenizerVocab vocab;
  FeatureConfig features;
  std::string train_fingerprint;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

// Container layout:
//   8 bytes   magic "MODTLCK\0"
//   8 bytes   manifest length (little-endian u64)
//   manifest  JSON: version, schema, encoder config, heads, vocab, features,
//             fingerprint, history, and a tensor directory
//             [{name, shape, dtype: "f32", offset, count}]
//   payload   little-endian float32 tensors at the listed byte offsets
// Writes go to a temporary file that is renamed into place.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

// Throws Error(kCheckpointVersionMismatch) for unknown versions and
// Error(kCorruptCheckpoint) for structural problems.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Serialized bytes; save_checkpoint writes exactly these.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& bytes);

}  // namespace modtl

#endif  // MODTL_CHECKPOINT_HPP_
