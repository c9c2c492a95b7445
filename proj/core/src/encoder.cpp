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

#include "modtl/encoder.hpp"

#include <cmath>
#include <limits>

#include "modtl/error.hpp"

namespace modtl {

void EncoderConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInvalidConfig, msg); };
  if (vocab_size == 0) fail("encoder vocab_size must be positive");
  if (hidden_size == 0 || num_layers == 0 || num_attention_heads == 0 ||
      feedforward_size == 0 || max_positions == 0) {
    fail("encoder dimensions must be positive");
  }
  if (hidden_size % num_attention_heads != 0) {
    fail("hidden_size must be divisible by num_attention_heads");
  }
  if (!(dropout_rate >= 0 && dropout_rate < 1)) fail("dropout_rate outside [0, 1)");
}

nlohmann::json to_json(const EncoderConfig& c) {
  return {{"vocab_size", c.vocab_size},
          {"hidden_size", c.hidden_size},
          {"num_layers", c.num_layers},
          {"num_attention_heads", c.num_attention_heads},
          {"feedforward_size", c.feedforward_size},
          {"max_positions", c.max_positions},
          {"dropout_rate", c.dropout_rate},
          {"seed", c.seed}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  try {
    EncoderConfig c;
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.hidden_size = j.value("hidden_size", c.hidden_size);
    c.num_layers = j.value("num_layers", c.num_layers);
    c.num_attention_heads = j.value("num_attention_heads", c.num_attention_heads);
    c.feedforward_size = j.value("feedforward_size", c.feedforward_size);
    c.max_positions = j.value("max_positions", c.max_positions);
    c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
    c.seed = j.value("seed", c.seed);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("encoder config: ") + e.what());
  }
}

EncoderParams EncoderParams::zeros(const EncoderConfig& c) {
  const auto h = static_cast<Eigen::Index>(c.hidden_size);
  const auto f = static_cast<Eigen::Index>(c.feedforward_size);
  EncoderParams p;
  p.token_embedding = Matrix::Zero(static_cast<Eigen::Index>(c.vocab_size), h);
  p.position_embedding = Matrix::Zero(static_cast<Eigen::Index>(c.max_positions), h);
  p.segment_embedding = Matrix::Zero(2, h);
  p.layers.resize(c.num_layers);
  for (auto& l : p.layers) {
    l.ln1_gain = l.ln1_bias = Matrix::Zero(1, h);
    l.wq = l.wk = l.wv = l.wo = Matrix::Zero(h, h);
    l.bq = l.bk = l.bv = l.bo = Matrix::Zero(1, h);
    l.ln2_gain = l.ln2_bias = Matrix::Zero(1, h);
    l.w1 = Matrix::Zero(h, f);
    l.b1 = Matrix::Zero(1, f);
    l.w2 = Matrix::Zero(f, h);
    l.b2 = Matrix::Zero(1, h);
  }
  p.final_gain = p.final_bias = Matrix::Zero(1, h);
  return p;
}

EncoderParams EncoderParams::initialize(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  EncoderParams p = zeros(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, kInitStddev);
  p.visit([&](const std::string& name, Matrix& m, ParamKind kind) {
    if (kind == ParamKind::kWeight || kind == ParamKind::kEmbedding) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    } else if (name.ends_with(".gain")) {
      m.setOnes();
    }
  });
  return p;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_derivative(double x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

namespace {

using Index = Eigen::Index;

void layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, Matrix& xhat,
                RowVector& rstd, Matrix& out) {
  const Index n = x.rows();
  xhat.resize(n, x.cols());
  rstd.resize(n);
  for (Index r = 0; r < n; ++r) {
    const double mean = x.row(r).mean();
    const auto centered = (x.row(r).array() - mean).matrix();
    const double var = centered.squaredNorm() / static_cast<double>(x.cols());
    rstd(r) = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(r) = centered * rstd(r);
  }
  out = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat, const RowVector& rstd,
                           const Matrix& gain, Matrix& dgain, Matrix& dbias) {
  dgain.row(0) += dy.cwiseProduct(xhat).colwise().sum();
  dbias.row(0) += dy.colwise().sum();
  const double h = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Index r = 0; r < dy.rows(); ++r) {
    const RowVector dxhat = dy.row(r).cwiseProduct(gain.row(0));
    const double m1 = dxhat.sum() / h;
    const double m2 = dxhat.dot(xhat.row(r)) / h;
    dx.row(r) = rstd(r) * (dxhat.array() - m1 - xhat.row(r).array() * m2).matrix();
  }
  return dx;
}

Matrix dropout_mask(Index rows, Index cols, const DropoutContext& d) {
  Matrix keep(rows, cols);
  std::bernoulli_distribution drop(d.rate);
  const double scale = 1.0 / (1.0 - d.rate);
  for (Index i = 0; i < keep.size(); ++i) keep.data()[i] = drop(*d.rng) ? 0.0 : scale;
  return keep;
}

void softmax_rows(Matrix& s) {
  for (Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - mx).exp().matrix();
    s.row(r) /= s.row(r).sum();
  }
}

}  // namespace

RowVector encoder_forward(const EncoderConfig& config, const EncoderParams& params,
                          const EncoderInput& input, EncoderCache* cache,
                          const DropoutContext& dropout) {
  if (input.length == 0 || input.length > config.max_positions) {
    throw Error(ErrorKind::kShapeMismatch,
                "sequence length " + std::to_string(input.length) + " outside [1, " +
                    std::to_string(config.max_positions) + "]");
  }
  // Trailing padding never influences the CLS state, so it is trimmed.
  std::size_t len = 1;
  for (std::size_t t = 0; t < input.length; ++t) {
    if (input.attention_mask[t]) len = t + 1;
  }
  const Index T = static_cast<Index>(len);
  const Index H = static_cast<Index>(config.hidden_size);
  const Index heads = static_cast<Index>(config.num_attention_heads);
  const Index d = static_cast<Index>(config.head_size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const bool drop = dropout.enabled && dropout.rate > 0 && dropout.rng != nullptr;

  EncoderCache local;
  EncoderCache& c = cache ? *cache : local;
  c.length = len;
  c.token_ids.assign(input.token_ids, input.token_ids + len);
  c.segment_ids.assign(input.segment_ids, input.segment_ids + len);
  c.key_bias.resize(T);

  Matrix x(T, H);
  for (Index t = 0; t < T; ++t) {
    const auto id = input.token_ids[t];
    const auto seg = input.segment_ids[t];
    if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size || seg > 1) {
      throw Error(ErrorKind::kShapeMismatch, "token or segment id out of range");
    }
    x.row(t) = params.token_embedding.row(id) + params.position_embedding.row(t) +
               params.segment_embedding.row(seg);
    c.key_bias(t) = input.attention_mask[t] ? 0.0 : kAttentionMaskValue;
  }
  if (drop) {
    c.embed_keep = dropout_mask(T, H, dropout);
    x = x.cwiseProduct(c.embed_keep);
  } else {
    c.embed_keep.resize(0, 0);
  }

  c.layers.resize(params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const LayerParams& p = params.layers[l];
    LayerCache& lc = c.layers[l];
    // Only the CLS row of the final layer reaches the output.
    const Index Tq = (l + 1 == params.layers.size()) ? 1 : T;
    lc.query_rows = static_cast<std::size_t>(Tq);
    lc.x_in = std::move(x);
    layer_norm(lc.x_in, p.ln1_gain, p.ln1_bias, lc.ln1_xhat, lc.ln1_rstd, lc.ln1_out);
    lc.q.noalias() = lc.ln1_out.topRows(Tq) * p.wq;
    lc.q.rowwise() += p.bq.row(0);
    lc.k.noalias() = lc.ln1_out * p.wk;
    lc.k.rowwise() += p.bk.row(0);
    lc.v.noalias() = lc.ln1_out * p.wv;
    lc.v.rowwise() += p.bv.row(0);
    lc.context.resize(Tq, H);
    lc.probs.resize(static_cast<std::size_t>(heads));
    for (Index h = 0; h < heads; ++h) {
      Matrix& s = lc.probs[static_cast<std::size_t>(h)];
      s.noalias() = lc.q.middleCols(h * d, d) * lc.k.middleCols(h * d, d).transpose();
      s *= scale;
      s.rowwise() += c.key_bias;
      softmax_rows(s);
      lc.context.middleCols(h * d, d).noalias() = s * lc.v.middleCols(h * d, d);
    }
    Matrix o = lc.context * p.wo;
    o.rowwise() += p.bo.row(0);
    if (drop) {
      lc.attn_keep = dropout_mask(Tq, H, dropout);
      o = o.cwiseProduct(lc.attn_keep);
    } else {
      lc.attn_keep.resize(0, 0);
    }
    lc.x_mid = lc.x_in.topRows(Tq) + o;
    layer_norm(lc.x_mid, p.ln2_gain, p.ln2_bias, lc.ln2_xhat, lc.ln2_rstd, lc.ln2_out);
    lc.ff_pre.noalias() = lc.ln2_out * p.w1;
    lc.ff_pre.rowwise() += p.b1.row(0);
    lc.ff_act = lc.ff_pre.unaryExpr([](double v) { return gelu(v); });
    Matrix f = lc.ff_act * p.w2;
    f.rowwise() += p.b2.row(0);
    if (drop) {
      lc.ffn_keep = dropout_mask(Tq, H, dropout);
      f = f.cwiseProduct(lc.ffn_keep);
    } else {
      lc.ffn_keep.resize(0, 0);
    }
    x = lc.x_mid + f;
  }
  Matrix out;
  Matrix xhat;
  layer_norm(x.topRows(1), params.final_gain, params.final_bias, xhat, c.final_rstd, out);
  c.final_xhat = std::move(xhat);
  c.h_cls = out.row(0);
  return c.h_cls;
}

void encoder_backward(const EncoderConfig& config, const EncoderParams& params,
                      const EncoderCache& c, const RowVector& d_hcls, EncoderParams& grads) {
  const Index H = static_cast<Index>(config.hidden_size);
  const Index heads = static_cast<Index>(config.num_attention_heads);
  const Index d = static_cast<Index>(config.head_size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  if (d_hcls.size() != H || c.layers.size() != params.layers.size()) {
    throw Error(ErrorKind::kShapeMismatch, "encoder backward shape mismatch");
  }

  Matrix dx = layer_norm_backward(Matrix(d_hcls), c.final_xhat, c.final_rstd, params.final_gain,
                                  grads.final_gain, grads.final_bias);
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const LayerParams& p = params.layers[li];
    LayerParams& g = grads.layers[li];
    const LayerCache& lc = c.layers[li];
    const Index Tq = static_cast<Index>(lc.query_rows);

    Matrix df = dx;
    if (lc.ffn_keep.size() > 0) df = df.cwiseProduct(lc.ffn_keep);
    g.w2.noalias() += lc.ff_act.transpose() * df;
    g.b2.row(0) += df.colwise().sum();
    Matrix du = df * p.w2.transpose();
    du = du.cwiseProduct(lc.ff_pre.unaryExpr([](double v) { return gelu_derivative(v); }));
    g.w1.noalias() += lc.ln2_out.transpose() * du;
    g.b1.row(0) += du.colwise().sum();
    const Matrix dc = du * p.w1.transpose();
    const Matrix dx_mid =
        dx + layer_norm_backward(dc, lc.ln2_xhat, lc.ln2_rstd, p.ln2_gain, g.ln2_gain, g.ln2_bias);

    Matrix d_o = dx_mid;
    if (lc.attn_keep.size() > 0) d_o = d_o.cwiseProduct(lc.attn_keep);
    g.wo.noalias() += lc.context.transpose() * d_o;
    g.bo.row(0) += d_o.colwise().sum();
    const Matrix dctx = d_o * p.wo.transpose();

    const Index T = lc.k.rows();
    Matrix dq(Tq, H), dk(T, H), dv(T, H);
    for (Index h = 0; h < heads; ++h) {
      const Matrix& P = lc.probs[static_cast<std::size_t>(h)];
      const auto dctx_h = dctx.middleCols(h * d, d);
      dv.middleCols(h * d, d).noalias() = P.transpose() * dctx_h;
      Matrix dP = dctx_h * lc.v.middleCols(h * d, d).transpose();
      const Eigen::VectorXd row_dot = P.cwiseProduct(dP).rowwise().sum();
      Matrix dS = P.cwiseProduct((dP.colwise() - row_dot)) * scale;
      dq.middleCols(h * d, d).noalias() = dS * lc.k.middleCols(h * d, d);
      dk.middleCols(h * d, d).noalias() = dS.transpose() * lc.q.middleCols(h * d, d);
    }
    g.wq.noalias() += lc.ln1_out.topRows(Tq).transpose() * dq;
    g.bq.row(0) += dq.colwise().sum();
    g.wk.noalias() += lc.ln1_out.transpose() * dk;
    g.bk.row(0) += dk.colwise().sum();
    g.wv.noalias() += lc.ln1_out.transpose() * dv;
    g.bv.row(0) += dv.colwise().sum();
    Matrix da = dk * p.wk.transpose();
    da.noalias() += dv * p.wv.transpose();
    da.topRows(Tq).noalias() += dq * p.wq.transpose();
    Matrix dx_in =
        layer_norm_backward(da, lc.ln1_xhat, lc.ln1_rstd, p.ln1_gain, g.ln1_gain, g.ln1_bias);
    dx_in.topRows(Tq) += dx_mid;
    dx = std::move(dx_in);
  }
  if (c.embed_keep.size() > 0) dx = dx.cwiseProduct(c.embed_keep);
  for (Index t = 0; t < dx.rows(); ++t) {
    grads.token_embedding.row(c.token_ids[static_cast<std::size_t>(t)]) += dx.row(t);
    grads.position_embedding.row(t) += dx.row(t);
    grads.segment_embedding.row(c.segment_ids[static_cast<std::size_t>(t)]) += dx.row(t);
  }
}

}  // namespace modtl
