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

#ifndef MODTL_TOOLS_CLI_COMMANDS_HPP_
#define MODTL_TOOLS_CLI_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modtl/corpus.hpp"
#include "modtl/encoder.hpp"
#include "modtl/featurize.hpp"
#include "modtl/report.hpp"
#include "modtl/train.hpp"

namespace modtl::cli {

struct CorpusSource {
  std::filesystem::path path;
  std::string name;  // namespace used when merging
};

struct ExperimentConfig {
  std::filesystem::path output_dir = "runs/default";
  std::vector<CorpusSource> corpora;  // one corpus, or two to merge
  std::string tag = "run";
  SplitRatios split;
  std::uint64_t split_seed = 42;
  bool split_by_document = false;
  FeatureConfig features;
  EncoderConfig encoder;
  TrainConfig train;
  ReportOptions eval;
  std::optional<std::filesystem::path> source_checkpoint;
  bool refit_on_train_plus_dev = false;
  nlohmann::json synthetic;  // generator settings for `synth`
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);

// Applies MODTL_OUTPUT_DIR, MODTL_CORPUS and MODTL_SOURCE_CHECKPOINT.
void apply_path_overrides(ExperimentConfig& config);

// Exit codes: 0 success, 1 usage or config, 2 data, 3 numerical.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace modtl::cli

#endif  // MODTL_TOOLS_CLI_COMMANDS_HPP_
