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

#ifndef MODTL_MODEL_HPP_
#define MODTL_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "modtl/corpus.hpp"
#include "modtl/encoder.hpp"
#include "modtl/featurize.hpp"
#include "modtl/loss.hpp"
#include "modtl/tensor.hpp"

namespace modtl {

struct ClassificationHead {
  std::string modifier;
  Matrix weight;  // labels x H
  Matrix bias;    // 1 x labels

  std::size_t num_labels() const { return static_cast<std::size_t>(weight.rows()); }
};

// Seed for a modifier's head, derived from the model seed and the name so
// that a head's initial value does not depend on which other heads exist.
std::uint64_t head_seed(std::uint64_t seed, const std::string& modifier);

ClassificationHead init_head(const ModifierDef& modifier, std::size_t hidden,
                             std::uint64_t seed);

ProbDist head_forward(const ClassificationHead& head, const RowVector& h_cls);

// Encoder plus heads in one container; also used for gradients and optimizer
// moments.
struct ModelParameters {
  EncoderParams encoder;
  std::vector<ClassificationHead> heads;

  ModelParameters zeros_like() const;

  template <typename F>
  void visit(F&& f) {
    encoder.visit(f);
    for (auto& h : heads) {
      f("heads." + h.modifier + ".weight", h.weight, ParamKind::kWeight);
      f("heads." + h.modifier + ".bias", h.bias, ParamKind::kBias);
    }
  }
  template <typename F>
  void visit(F&& f) const {
    encoder.visit(f);
    for (const auto& h : heads) {
      f("heads." + h.modifier + ".weight", h.weight, ParamKind::kWeight);
      f("heads." + h.modifier + ".bias", h.bias, ParamKind::kBias);
    }
  }

  std::size_t parameter_count() const;
};

// Shared encoder with one linear-softmax head per modifier, heads stored in
// schema order.
class MultiTaskModel {
 public:
  MultiTaskModel(ModifierSchema schema, EncoderConfig config, ModelParameters params);

  // Fresh model: encoder from config.seed, heads from head_seed(config.seed, name).
  static MultiTaskModel initialize(const ModifierSchema& schema,
                                   const EncoderConfig& config);

  const ModifierSchema& schema() const { return schema_; }
  const EncoderConfig& config() const { return config_; }
  const ModelParameters& params() const { return params_; }
  ModelParameters& mutable_params() { return params_; }

  const ClassificationHead* head(const std::string& modifier) const;
  std::size_t head_index(const std::string& modifier) const;

  // Rounds every parameter to float32 precision (checkpoint storage type).
  void round_to_float32();

 private:
  ModifierSchema schema_;
  EncoderConfig config_;
  ModelParameters params_;
};

EncoderInput encoder_input(const EncodedExample& example);

// Pooled CLS vector, dropout disabled.
RowVector encode_cls(const MultiTaskModel& model, const EncodedExample& example);

std::map<std::string, ProbDist> predict_proba(const MultiTaskModel& model,
                                              const EncodedExample& example);

// Argmax label per head, ties to the lowest label index.
std::map<std::string, std::string> predict(const MultiTaskModel& model,
                                           const EncodedExample& example);

int argmax(std::span<const double> values);

struct BatchResult {
  double total_loss = 0.0;
  std::map<std::string, double> head_losses;  // active heads only
  std::set<std::string> active_heads;
};

struct BatchOptions {
  LossConfig loss;
  bool dropout = false;
  std::uint64_t dropout_seed = 0;  // per-example streams derive from this
  unsigned threads = 1;
};

// Joint loss over a batch and, when grads is non-null, its exact gradient
// accumulated into grads. A head is active iff some example's head_mask
// selects it; each head's loss is the mean over its unmasked examples and
// the total is the mean over active heads. Examples are processed in fixed
// chunks and reduced in order, so results do not depend on thread count.
BatchResult forward_backward(const MultiTaskModel& model,
                             std::span<const EncodedExample> batch,
                             const BatchOptions& options,
                             ModelParameters* grads);

}  // namespace modtl

#endif  // MODTL_MODEL_HPP_
