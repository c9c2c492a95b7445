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

#ifndef MODTL_ENCODER_HPP_
#define MODTL_ENCODER_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modtl/tensor.hpp"

namespace modtl {

// Reference pre-norm transformer encoder. Defaults are sized for CPU training
// in minutes.
struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_size = 64;
  std::size_t num_layers = 2;
  std::size_t num_attention_heads = 4;
  std::size_t feedforward_size = 256;
  std::size_t max_positions = 144;
  double dropout_rate = 0.1;
  std::uint64_t seed = 42;

  void validate() const;
  std::size_t head_size() const { return hidden_size / num_attention_heads; }

  bool operator==(const EncoderConfig&) const = default;
};

nlohmann::json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

inline constexpr double kInitStddev = 0.02;
inline constexpr double kLayerNormEps = 1e-12;
inline constexpr double kAttentionMaskValue = -1e9;

struct LayerParams {
  Matrix ln1_gain, ln1_bias;  // 1 x H
  Matrix wq, wk, wv, wo;      // H x H, input-major (y = x W + b)
  Matrix bq, bk, bv, bo;      // 1 x H
  Matrix ln2_gain, ln2_bias;  // 1 x H
  Matrix w1, b1;              // H x F, 1 x F
  Matrix w2, b2;              // F x H, 1 x H
};

struct EncoderParams {
  Matrix token_embedding;     // vocab x H
  Matrix position_embedding;  // max_positions x H
  Matrix segment_embedding;   // 2 x H
  std::vector<LayerParams> layers;
  Matrix final_gain, final_bias;  // 1 x H

  static EncoderParams zeros(const EncoderConfig& config);
  // normal(0, 0.02) weights and embeddings, zero biases, unit gains.
  static EncoderParams initialize(const EncoderConfig& config, std::uint64_t seed);

  // f(name, matrix, kind) over every tensor in a fixed order.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    f(std::string("embeddings.token"), self.token_embedding, ParamKind::kEmbedding);
    f(std::string("embeddings.position"), self.position_embedding, ParamKind::kEmbedding);
    f(std::string("embeddings.segment"), self.segment_embedding, ParamKind::kEmbedding);
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      auto& p = self.layers[l];
      const std::string pre = "layers." + std::to_string(l) + ".";
      f(pre + "ln1.gain", p.ln1_gain, ParamKind::kNorm);
      f(pre + "ln1.bias", p.ln1_bias, ParamKind::kNorm);
      f(pre + "attn.wq", p.wq, ParamKind::kWeight);
      f(pre + "attn.bq", p.bq, ParamKind::kBias);
      f(pre + "attn.wk", p.wk, ParamKind::kWeight);
      f(pre + "attn.bk", p.bk, ParamKind::kBias);
      f(pre + "attn.wv", p.wv, ParamKind::kWeight);
      f(pre + "attn.bv", p.bv, ParamKind::kBias);
      f(pre + "attn.wo", p.wo, ParamKind::kWeight);
      f(pre + "attn.bo", p.bo, ParamKind::kBias);
      f(pre + "ln2.gain", p.ln2_gain, ParamKind::kNorm);
      f(pre + "ln2.bias", p.ln2_bias, ParamKind::kNorm);
      f(pre + "ffn.w1", p.w1, ParamKind::kWeight);
      f(pre + "ffn.b1", p.b1, ParamKind::kBias);
      f(pre + "ffn.w2", p.w2, ParamKind::kWeight);
      f(pre + "ffn.b2", p.b2, ParamKind::kBias);
    }
    f(std::string("final_norm.gain"), self.final_gain, ParamKind::kNorm);
    f(std::string("final_norm.bias"), self.final_bias, ParamKind::kNorm);
  }
};

// Token-level input to the encoder. Spans view the example's arrays.
struct EncoderInput {
  const std::int32_t* token_ids = nullptr;
  const std::uint8_t* segment_ids = nullptr;
  const std::uint8_t* attention_mask = nullptr;
  std::size_t length = 0;
};

struct LayerCache {
  std::size_t query_rows = 0;
  Matrix x_in;  // T x H
  Matrix ln1_xhat, ln1_out;
  RowVector ln1_rstd;
  Matrix q, k, v;           // q: Tq x H; k, v: T x H
  std::vector<Matrix> probs;  // per head, Tq x T
  Matrix context;           // Tq x H
  Matrix attn_keep;         // dropout scale per element, empty if disabled
  Matrix x_mid;             // Tq x H
  Matrix ln2_xhat, ln2_out;
  RowVector ln2_rstd;
  Matrix ff_pre, ff_act;  // Tq x F
  Matrix ffn_keep;
};

// Everything the backward pass needs from one forward pass.
struct EncoderCache {
  std::size_t length = 0;  // positions actually computed
  std::vector<std::int32_t> token_ids;
  std::vector<std::uint8_t> segment_ids;
  RowVector key_bias;  // 0 for attended positions, kAttentionMaskValue else
  Matrix embed_keep;
  std::vector<LayerCache> layers;
  Matrix final_xhat;
  RowVector final_rstd;
  RowVector h_cls;
};

// Dropout source; disabled means evaluation mode.
struct DropoutContext {
  bool enabled = false;
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;
};

// Trailing padding is trimmed before the encoder runs; padded keys inside the
// sequence receive the additive mask. The last layer only computes the CLS
// query row.
RowVector encoder_forward(const EncoderConfig& config, const EncoderParams& params,
                          const EncoderInput& input, EncoderCache* cache,
                          const DropoutContext& dropout = {});

// Accumulates d(loss)/d(params) into grads given d(loss)/d(h_cls).
void encoder_backward(const EncoderConfig& config, const EncoderParams& params,
                      const EncoderCache& cache, const RowVector& d_hcls,
                      EncoderParams& grads);

double gelu(double x);
double gelu_derivative(double x);

}  // namespace modtl

#endif  // MODTL_ENCODER_HPP_
