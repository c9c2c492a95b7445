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

#include "modtl/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "modtl/error.hpp"
#include "modtl/parallel.hpp"
#include "modtl/text.hpp"

namespace modtl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Examples per gradient buffer. Fixed so sums do not depend on thread count.
constexpr std::size_t kChunk = 4;

}  // namespace

std::uint64_t head_seed(std::uint64_t seed, const std::string& modifier) {
  return splitmix64(seed ^ text::fnv1a64("head:" + modifier));
}

ClassificationHead init_head(const ModifierDef& modifier, std::size_t hidden,
                             std::uint64_t seed) {
  ClassificationHead h;
  h.modifier = modifier.name;
  h.weight.resize(static_cast<Eigen::Index>(modifier.labels.size()),
                  static_cast<Eigen::Index>(hidden));
  h.bias = Matrix::Zero(1, static_cast<Eigen::Index>(modifier.labels.size()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, kInitStddev);
  for (Eigen::Index i = 0; i < h.weight.size(); ++i) h.weight.data()[i] = normal(rng);
  return h;
}

ProbDist head_forward(const ClassificationHead& head, const RowVector& h_cls) {
  if (h_cls.size() != head.weight.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "head '" + head.modifier + "' input width");
  }
  const RowVector logits = h_cls * head.weight.transpose() + head.bias.row(0);
  return {head.modifier, softmax(std::span<const double>(logits.data(),
                                                         static_cast<std::size_t>(logits.size())))};
}

ModelParameters ModelParameters::zeros_like() const {
  ModelParameters z = *this;
  z.visit([](const std::string&, Matrix& m, ParamKind) { m.setZero(); });
  return z;
}

std::size_t ModelParameters::parameter_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Matrix& m, ParamKind) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

MultiTaskModel::MultiTaskModel(ModifierSchema schema, EncoderConfig config,
                               ModelParameters params)
    : schema_(std::move(schema)), config_(config), params_(std::move(params)) {
  config_.validate();
  const auto expected = EncoderParams::zeros(config_);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
  expected.visit([&](const std::string&, const Matrix& m, ParamKind) {
    shapes.emplace_back(m.rows(), m.cols());
  });
  std::size_t i = 0;
  if (params_.encoder.layers.size() != config_.num_layers) {
    throw Error(ErrorKind::kShapeMismatch, "encoder layer count differs from config");
  }
  params_.encoder.visit([&](const std::string& name, const Matrix& m, ParamKind) {
    if (m.rows() != shapes[i].first || m.cols() != shapes[i].second) {
      throw Error(ErrorKind::kShapeMismatch, "encoder tensor " + name + " has wrong shape");
    }
    ++i;
  });
  if (params_.heads.size() != schema_.size()) {
    throw Error(ErrorKind::kShapeMismatch, "one head per schema modifier is required");
  }
  for (std::size_t h = 0; h < params_.heads.size(); ++h) {
    const auto& head = params_.heads[h];
    const auto& def = schema_.modifiers()[h];
    if (head.modifier != def.name) {
      throw Error(ErrorKind::kShapeMismatch, "head '" + head.modifier + "' out of schema order");
    }
    const auto labels = static_cast<Eigen::Index>(def.labels.size());
    if (head.weight.rows() != labels || head.weight.cols() != static_cast<Eigen::Index>(config_.hidden_size) ||
        head.bias.rows() != 1 || head.bias.cols() != labels) {
      throw Error(ErrorKind::kShapeMismatch, "head '" + head.modifier + "' has wrong shape");
    }
  }
}

MultiTaskModel MultiTaskModel::initialize(const ModifierSchema& schema,
                                          const EncoderConfig& config) {
  ModelParameters p;
  p.encoder = EncoderParams::initialize(config, config.seed);
  for (const auto& def : schema.modifiers()) {
    p.heads.push_back(init_head(def, config.hidden_size, head_seed(config.seed, def.name)));
  }
  return MultiTaskModel(schema, config, std::move(p));
}

const ClassificationHead* MultiTaskModel::head(const std::string& modifier) const {
  for (const auto& h : params_.heads) {
    if (h.modifier == modifier) return &h;
  }
  return nullptr;
}

std::size_t MultiTaskModel::head_index(const std::string& modifier) const {
  for (std::size_t i = 0; i < params_.heads.size(); ++i) {
    if (params_.heads[i].modifier == modifier) return i;
  }
  throw Error(ErrorKind::kUnknownModifier, "model has no head '" + modifier + "'");
}

void MultiTaskModel::round_to_float32() {
  params_.visit([](const std::string&, Matrix& m, ParamKind) {
    m = m.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
  });
}

EncoderInput encoder_input(const EncodedExample& example) {
  if (example.segment_ids.size() != example.token_ids.size() ||
      example.attention_mask.size() != example.token_ids.size()) {
    throw Error(ErrorKind::kShapeMismatch, "example '" + example.instance_id + "' arrays differ in length");
  }
  return {example.token_ids.data(), example.segment_ids.data(), example.attention_mask.data(),
          example.token_ids.size()};
}

RowVector encode_cls(const MultiTaskModel& model, const EncodedExample& example) {
  return encoder_forward(model.config(), model.params().encoder, encoder_input(example), nullptr);
}

std::map<std::string, ProbDist> predict_proba(const MultiTaskModel& model,
                                              const EncodedExample& example) {
  const RowVector h = encode_cls(model, example);
  std::map<std::string, ProbDist> out;
  for (const auto& head : model.params().heads) out.emplace(head.modifier, head_forward(head, h));
  return out;
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::kInvalidArgument, "argmax of empty vector");
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

std::map<std::string, std::string> predict(const MultiTaskModel& model,
                                           const EncodedExample& example) {
  std::map<std::string, std::string> out;
  for (const auto& [name, dist] : predict_proba(model, example)) {
    const auto& def = model.schema().at(name);
    out[name] = def.labels[static_cast<std::size_t>(argmax(dist.probs))];
  }
  return out;
}

BatchResult forward_backward(const MultiTaskModel& model, std::span<const EncodedExample> batch,
                             const BatchOptions& options, ModelParameters* grads) {
  const auto& heads = model.params().heads;
  const std::size_t n = batch.size();
  const std::size_t num_heads = heads.size();

  // gold[e * num_heads + h], -1 when the head is masked for the example.
  std::vector<int> gold(n * num_heads, -1);
  std::vector<std::size_t> counts(num_heads, 0);
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t h = 0; h < num_heads; ++h) {
      const auto& name = heads[h].modifier;
      auto m = batch[e].head_mask.find(name);
      if (m == batch[e].head_mask.end() || !m->second) continue;
      auto g = batch[e].gold.find(name);
      if (g == batch[e].gold.end()) {
        throw Error(ErrorKind::kInvalidArgument, "example '" + batch[e].instance_id +
                                                     "' has no gold for unmasked head " + name);
      }
      if (g->second < 0 || static_cast<std::size_t>(g->second) >= heads[h].num_labels()) {
        throw Error(ErrorKind::kInvalidArgument, "gold index out of range for head " + name);
      }
      gold[e * num_heads + h] = g->second;
      ++counts[h];
    }
  }
  BatchResult result;
  for (std::size_t h = 0; h < num_heads; ++h) {
    if (counts[h] > 0) result.active_heads.insert(heads[h].modifier);
  }
  if (result.active_heads.empty()) {
    throw Error(ErrorKind::kNoActiveHeads, "no example in the batch has an unmasked head");
  }
  const double num_active = static_cast<double>(result.active_heads.size());

  std::vector<double> losses(n * num_heads, 0.0);
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<ModelParameters> buffers;
  if (grads) buffers.assign(chunks, grads->zeros_like());
  const double rate = model.config().dropout_rate;

  parallel_for(chunks, options.threads, [&](std::size_t c) {
    EncoderCache cache;
    for (std::size_t e = c * kChunk; e < std::min(n, (c + 1) * kChunk); ++e) {
      std::mt19937_64 rng(splitmix64(options.dropout_seed ^ splitmix64(e)));
      DropoutContext dropout{options.dropout && rate > 0, rate, &rng};
      const RowVector h_cls = encoder_forward(model.config(), model.params().encoder,
                                              encoder_input(batch[e]), grads ? &cache : nullptr,
                                              dropout);
      RowVector d_hcls = RowVector::Zero(h_cls.size());
      bool any = false;
      for (std::size_t h = 0; h < num_heads; ++h) {
        const int g = gold[e * num_heads + h];
        if (g < 0) continue;
        any = true;
        const ProbDist dist = head_forward(heads[h], h_cls);
        losses[e * num_heads + h] = example_loss(dist, g, options.loss);
        if (!grads) continue;
        const auto dl = example_loss_gradient(dist, g, options.loss);
        const double w = 1.0 / (num_active * static_cast<double>(counts[h]));
        Eigen::Map<const RowVector> dlogits(dl.data(), static_cast<Eigen::Index>(dl.size()));
        const RowVector scaled = dlogits * w;
        ClassificationHead& gh = buffers[c].heads[h];
        gh.weight.noalias() += scaled.transpose() * h_cls;
        gh.bias.row(0) += scaled;
        d_hcls.noalias() += scaled * heads[h].weight;
      }
      if (grads && any) {
        encoder_backward(model.config(), model.params().encoder, cache, d_hcls,
                         buffers[c].encoder);
      }
    }
  });

  for (std::size_t h = 0; h < num_heads; ++h) {
    if (counts[h] == 0) continue;
    double sum = 0.0;
    for (std::size_t e = 0; e < n; ++e) sum += losses[e * num_heads + h];
    result.head_losses[heads[h].modifier] = sum / static_cast<double>(counts[h]);
  }
  result.total_loss = total_loss(result.head_losses, result.active_heads);

  if (grads) {
    std::vector<Matrix*> out;
    grads->visit([&](const std::string&, Matrix& m, ParamKind) { out.push_back(&m); });
    for (const auto& buf : buffers) {
      std::size_t i = 0;
      buf.visit([&](const std::string&, const Matrix& m, ParamKind) { *out[i++] += m; });
    }
  }
  return result;
}

}  // namespace modtl
