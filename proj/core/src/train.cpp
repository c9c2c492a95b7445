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

#include "modtl/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "modtl/error.hpp"
#include "modtl/optimizer.hpp"
#include "modtl/parallel.hpp"
#include "modtl/text.hpp"
#include "modtl/transfer.hpp"

namespace modtl {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInvalidConfig, msg); };
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (!(weight_decay >= 0) || !std::isfinite(weight_decay)) fail("weight_decay must be >= 0");
  if (batch_size == 0) fail("batch_size must be positive");
  if (max_epochs == 0) fail("max_epochs must be positive");
  if (!(loss.gamma >= 0)) fail("focal gamma must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"loss", c.loss.mode == LossConfig::Mode::kFocal ? "focal" : "ce"},
          {"gamma", c.loss.gamma},
          {"seed", c.seed},
          {"threads", c.threads}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    if (j.contains("loss")) {
      const auto mode = j.at("loss").get<std::string>();
      if (mode == "ce") {
        c.loss.mode = LossConfig::Mode::kCrossEntropy;
      } else if (mode == "focal") {
        c.loss.mode = LossConfig::Mode::kFocal;
      } else {
        throw Error(ErrorKind::kInvalidConfig, "loss must be 'ce' or 'focal'");
      }
    }
    c.loss.gamma = j.value("gamma", c.loss.gamma);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("train config: ") + e.what());
  }
}

std::string TrainConfig::fingerprint() const {
  nlohmann::json j = to_json(*this);
  j.erase("threads");
  return text::hex64(text::fnv1a64(j.dump()));
}

double dev_macro_f1(const MultiTaskModel& model, const std::vector<EncodedExample>& dev,
                    unsigned threads, std::map<std::string, double>* per_head) {
  std::vector<std::map<std::string, std::string>> preds(dev.size());
  parallel_for(dev.size(), threads, [&](std::size_t i) { preds[i] = predict(model, dev[i]); });
  std::vector<PredictionRecord> records;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    for (const auto& [name, label] : preds[i]) {
      auto m = dev[i].head_mask.find(name);
      if (m == dev[i].head_mask.end() || !m->second) continue;
      const auto& def = model.schema().at(name);
      records.push_back({dev[i].instance_id, name,
                         def.labels[static_cast<std::size_t>(dev[i].gold.at(name))], label});
    }
  }
  const PredictionSet set(model.schema(), std::move(records));
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& name : set.modifiers()) {
    const double macro = f1_scores(set, name).macro;
    if (per_head) (*per_head)[name] = macro;
    sum += macro;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

Checkpoint train(MultiTaskModel model, const TokenizerVocab& vocab, const FeatureConfig& features,
                 const std::vector<EncodedExample>& train_set,
                 const std::vector<EncodedExample>& dev_set, const TrainConfig& config,
                 const TrainCallbacks& callbacks) {
  config.validate();
  if (train_set.empty()) throw Error(ErrorKind::kEmptyCorpus, "training set is empty");
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  OptimizerState state = OptimizerState::for_params(model.params());
  ModelParameters grads = model.params().zeros_like();
  ModelParameters best = model.params();
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t stale = 0;
  std::vector<EpochRecord> history;
  std::vector<EncodedExample> batch;

  BatchOptions options;
  options.loss = config.loss;
  options.dropout = true;
  options.threads = config.threads;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      batch.clear();
      for (std::size_t i = b; i < std::min(order.size(), b + config.batch_size); ++i) {
        batch.push_back(train_set[order[i]]);
      }
      for (auto& g : grads.heads) {
        g.weight.setZero();
        g.bias.setZero();
      }
      grads.encoder.visit([](const std::string&, Matrix& m, ParamKind) { m.setZero(); });
      options.dropout_seed = rng();
      BatchResult result;
      try {
        result = forward_backward(model, batch, options, &grads);
      } catch (const Error& e) {
        // A batch whose examples carry no gold label for any head is skipped.
        if (e.kind() == ErrorKind::kNoActiveHeads) continue;
        throw;
      }
      if (!std::isfinite(result.total_loss)) {
        throw Error(ErrorKind::kDivergedLoss,
                    "loss " + std::to_string(result.total_loss) + " at epoch " +
                        std::to_string(epoch) + ", batch " + std::to_string(batches + 1));
      }
      adamw_step(model.mutable_params(), grads, state, config.learning_rate, config.weight_decay);
      loss_sum += result.total_loss;
      ++batches;
    }
    if (batches == 0) throw Error(ErrorKind::kNoActiveHeads, "no training example has a gold label");
    // Snapshots are taken at storage precision so the saved model is the one
    // that was scored.
    model.round_to_float32();

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(batches);
    if (!dev_set.empty()) {
      record.dev_metric = dev_macro_f1(model, dev_set, config.threads, &record.dev_macro_f1);
      record.improved = record.dev_metric > best_metric;
    } else {
      record.improved = true;
    }
    if (record.improved) {
      best = model.params();
      best_metric = record.dev_metric;
      best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (callbacks.on_epoch) callbacks.on_epoch(record);
    history.push_back(std::move(record));
    if (config.patience > 0 && stale >= config.patience) break;
  }

  MultiTaskModel result(model.schema(), model.config(), std::move(best));
  return Checkpoint{kCheckpointVersion, "", std::move(result),  vocab,
                    features,           config.fingerprint(), best_epoch, std::move(history)};
}

MultiTaskModel initial_model(const ModifierSchema& heads, const TokenizerVocab& vocab,
                             const FeatureConfig& features, const EncoderConfig& encoder,
                             std::uint64_t seed, const Checkpoint* source,
                             std::vector<std::string>* warnings) {
  if (heads.empty()) throw Error(ErrorKind::kNoActiveHeads, "no modifier to train a head for");
  if (source) {
    if (features.max_len > source->model.config().max_positions) {
      throw Error(ErrorKind::kShapeMismatch, "max_len exceeds the source encoder's positions");
    }
    TransferResult t = transfer_load(*source, heads, seed);
    if (warnings) warnings->insert(warnings->end(), t.warnings.begin(), t.warnings.end());
    return std::move(t.model);
  }
  EncoderConfig enc = encoder;
  enc.vocab_size = vocab.size();
  enc.max_positions = std::max(enc.max_positions, features.max_len);
  return MultiTaskModel::initialize(heads, enc);
}

Checkpoint train_on_corpora(const Corpus& train_corpus, const Corpus& dev_corpus,
                            const FeatureConfig& features, const EncoderConfig& encoder,
                            const TrainConfig& config, const Checkpoint* source,
                            const TrainCallbacks& callbacks) {
  config.validate();
  const TokenizerVocab vocab = source ? source->vocab : build_vocab(train_corpus, features.min_freq);
  MultiTaskModel model =
      initial_model(train_corpus.schema.restricted_to(train_corpus.applicable), vocab, features,
                    encoder, config.seed, source);
  const auto train_ex = featurize_corpus(train_corpus, vocab, features, config.threads);
  const auto dev_ex = featurize_corpus(dev_corpus, vocab, features, config.threads);
  return train(std::move(model), vocab, features, train_ex, dev_ex, config, callbacks);
}

Checkpoint train_single_task(const Corpus& train_corpus, const Corpus& dev_corpus,
                             const std::string& modifier, const FeatureConfig& features,
                             const EncoderConfig& encoder, const TrainConfig& config,
                             const TrainCallbacks& callbacks) {
  if (!train_corpus.applicable.count(modifier)) {
    throw Error(ErrorKind::kUnknownModifier, "modifier '" + modifier + "' is not annotated");
  }
  return train_on_corpora(restrict_to_modifier(train_corpus, modifier),
                          restrict_to_modifier(dev_corpus, modifier), features, encoder, config,
                          nullptr, callbacks);
}

PredictionSet predict_corpus(const Checkpoint& checkpoint, const Corpus& corpus,
                             unsigned threads) {
  const MultiTaskModel& model = checkpoint.model;
  for (const auto& name : corpus.applicable) {
    const ClassificationHead* head = model.head(name);
    if (!head || model.schema().at(name).labels != corpus.schema.at(name).labels) {
      throw Error(ErrorKind::kSchemaMismatch,
                  "checkpoint has no compatible head for modifier '" + name + "'");
    }
  }
  const auto examples = featurize_corpus(corpus, checkpoint.vocab, checkpoint.features, threads);
  std::vector<std::map<std::string, std::string>> preds(examples.size());
  parallel_for(examples.size(), threads,
               [&](std::size_t i) { preds[i] = predict(model, examples[i]); });
  std::vector<PredictionRecord> records;
  for (std::size_t i = 0; i < corpus.instances.size(); ++i) {
    const auto& inst = corpus.instances[i];
    for (const auto& def : corpus.schema.modifiers()) {
      auto gold = corpus.resolved_label(inst, def.name);
      if (!gold) continue;
      records.push_back({inst.id, def.name, *gold, preds[i].at(def.name)});
    }
  }
  return PredictionSet(corpus.schema.restricted_to(corpus.applicable), std::move(records));
}

}  // namespace modtl
