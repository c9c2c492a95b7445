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

#ifndef MODTL_TRAIN_HPP_
#define MODTL_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modtl/checkpoint.hpp"
#include "modtl/corpus.hpp"
#include "modtl/encoder.hpp"
#include "modtl/evaluate.hpp"
#include "modtl/featurize.hpp"
#include "modtl/loss.hpp"
#include "modtl/model.hpp"

namespace modtl {

struct TrainConfig {
  double learning_rate = 2e-5;
  double weight_decay = 1e-2;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 10;
  std::size_t patience = 3;  // 0 disables early stopping
  LossConfig loss;
  std::uint64_t seed = 42;
  unsigned threads = 1;

  void validate() const;
  // Hash of every field that affects the parameter trajectory.
  std::string fingerprint() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct TrainCallbacks {
  std::function<void(const EpochRecord&)> on_epoch;
};

// Mean macro-F1 (default class included) over heads that have unmasked dev
// examples; per-head values go to per_head when non-null.
double dev_macro_f1(const MultiTaskModel& model, const std::vector<EncodedExample>& dev,
                    unsigned threads, std::map<std::string, double>* per_head = nullptr);

// Seeded shuffle per epoch, batches of batch_size (last partial batch kept),
// joint loss, backward, AdamW. After each epoch the dev metric is computed and
// the best parameters kept; training stops after `patience` epochs without
// improvement. With an empty dev set the final parameters are returned.
// Throws Error(kDivergedLoss) if a batch loss is not finite.
Checkpoint train(MultiTaskModel model, const TokenizerVocab& vocab,
                 const FeatureConfig& features,
                 const std::vector<EncodedExample>& train_set,
                 const std::vector<EncodedExample>& dev_set, const TrainConfig& config,
                 const TrainCallbacks& callbacks = {});

// Fresh model over `heads`, or the transfer of `source` onto them.
MultiTaskModel initial_model(const ModifierSchema& heads, const TokenizerVocab& vocab,
                             const FeatureConfig& features, const EncoderConfig& encoder,
                             std::uint64_t seed, const Checkpoint* source = nullptr,
                             std::vector<std::string>* warnings = nullptr);

// Featurize, build (or reuse) the vocabulary and train. With a source
// checkpoint the model comes from transfer_load and the source vocabulary is
// reused. Heads are created for the training corpus's applicable modifiers.
Checkpoint train_on_corpora(const Corpus& train_corpus, const Corpus& dev_corpus,
                            const FeatureConfig& features,
                            const EncoderConfig& encoder, const TrainConfig& config,
                            const Checkpoint* source = nullptr,
                            const TrainCallbacks& callbacks = {});

// One-head model for `modifier`, otherwise the same pipeline.
// Throws Error(kUnknownModifier) if the corpus schema lacks it.
Checkpoint train_single_task(const Corpus& train_corpus, const Corpus& dev_corpus,
                             const std::string& modifier, const FeatureConfig& features,
                             const EncoderConfig& encoder, const TrainConfig& config,
                             const TrainCallbacks& callbacks = {});

// Predictions for every instance x modifier applicable to that instance.
// Throws Error(kSchemaMismatch) when an applicable modifier has no head with
// the same label list.
PredictionSet predict_corpus(const Checkpoint& checkpoint, const Corpus& corpus,
                             unsigned threads = 1);

}  // namespace modtl

#endif  // MODTL_TRAIN_HPP_
