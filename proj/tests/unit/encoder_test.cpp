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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "modtl/encoder.hpp"
#include "modtl/error.hpp"
#include "modtl/model.hpp"
#include "support/fixtures.hpp"

namespace modtl {
namespace {

using testing::tiny_encoder;

EncodedExample example(std::vector<std::int32_t> ids, std::vector<std::uint8_t> mask,
                       std::vector<std::uint8_t> segments = {}) {
  EncodedExample ex;
  ex.token_ids = std::move(ids);
  ex.attention_mask = std::move(mask);
  ex.segment_ids = segments.empty() ? std::vector<std::uint8_t>(ex.token_ids.size(), 0) : std::move(segments);
  return ex;
}

bool all_finite(const RowVector& v) { return v.array().isFinite().all(); }

TEST(EncoderConfig, Validation) {
  EncoderConfig c = tiny_encoder(10);
  EXPECT_NO_THROW(c.validate());
  c.num_attention_heads = 3;
  EXPECT_THROW(c.validate(), Error);
  c = tiny_encoder(10);
  c.vocab_size = 0;
  EXPECT_THROW(c.validate(), Error);
  c = tiny_encoder(10);
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = tiny_encoder(10);
  EXPECT_EQ(encoder_config_from_json(to_json(c)), c);
}

TEST(EncoderParams, InitializationStatistics) {
  EncoderConfig c = tiny_encoder(500, 64, 144);
  const EncoderParams p = EncoderParams::initialize(c, 3);
  const Matrix& w = p.token_embedding;
  const double mean = w.mean();
  const double sd = std::sqrt((w.array() - mean).square().mean());
  EXPECT_NEAR(mean, 0.0, 2e-3);
  EXPECT_NEAR(sd, kInitStddev, 1e-3);
  EXPECT_TRUE((p.layers[0].ln1_gain.array() == 1.0).all());
  EXPECT_TRUE((p.layers[0].bq.array() == 0.0).all());
  EXPECT_TRUE((p.final_bias.array() == 0.0).all());
  const EncoderParams again = EncoderParams::initialize(c, 3);
  EXPECT_EQ(again.layers[1].w2, p.layers[1].w2);
  EXPECT_NE(EncoderParams::initialize(c, 4).layers[1].w2, p.layers[1].w2);
}

TEST(Gelu, DerivativeMatchesFiniteDifferences) {
  for (double x = -6.0; x <= 6.0; x += 0.37) {
    const double h = 1e-6;
    EXPECT_NEAR(gelu_derivative(x), (gelu(x + h) - gelu(x - h)) / (2 * h), 1e-8) << x;
  }
  EXPECT_EQ(gelu(0.0), 0.0);
  EXPECT_NEAR(gelu(1.0), 0.8413447460685429, 1e-12);
}

class EncoderTest : public ::testing::Test {
 protected:
  EncoderTest() : model(MultiTaskModel::initialize(testing::small_schema(), tiny_encoder(30, 16, 12, 42))) {}
  MultiTaskModel model;
};

TEST_F(EncoderTest, OnlyClsAttendedIsFinite) {
  const auto ex = example({kClsId, kPadId, kPadId, kPadId}, {1, 0, 0, 0});
  EXPECT_TRUE(all_finite(encode_cls(model, ex)));
}

TEST_F(EncoderTest, FullyMaskedRowsStayFinite) {
  // The CLS position itself masked: every key carries the mask value.
  const auto ex = example({kClsId, 7, kSepId, kPadId}, {0, 0, 0, 0});
  EXPECT_TRUE(all_finite(encode_cls(model, ex)));
}

TEST_F(EncoderTest, MaskedPositionsDoNotMatter) {
  const auto a = example({kClsId, 7, kPadId, 9, kSepId, kPadId, kPadId}, {1, 1, 0, 1, 1, 0, 0});
  auto b = a;
  b.token_ids[2] = 25;
  b.token_ids[5] = 11;
  b.token_ids[6] = 4;
  b.segment_ids[6] = 1;
  EXPECT_EQ(encode_cls(model, a), encode_cls(model, b));
  auto trimmed = a;
  trimmed.token_ids.resize(5);
  trimmed.segment_ids.resize(5);
  trimmed.attention_mask.resize(5);
  EXPECT_EQ(encode_cls(model, a), encode_cls(model, trimmed));
}

TEST_F(EncoderTest, SecondSequenceTokenChangesOutput) {
  const auto a = example({kClsId, 7, 8, kSepId, 12, kSepId}, {1, 1, 1, 1, 1, 1}, {0, 0, 0, 0, 1, 1});
  auto b = a;
  b.token_ids[4] = 13;
  EXPECT_NE(encode_cls(model, a), encode_cls(model, b));
}

TEST_F(EncoderTest, RejectsOutOfRangeInput) {
  EXPECT_THROW(encode_cls(model, example({kClsId, 30}, {1, 1})), Error);
  EXPECT_THROW(encode_cls(model, example(std::vector<std::int32_t>(13, 4), std::vector<std::uint8_t>(13, 1))),
               Error);
  auto bad = example({kClsId, 5}, {1, 1});
  bad.segment_ids = {0, 2};
  EXPECT_THROW(encode_cls(model, bad), Error);
}

TEST_F(EncoderTest, DropoutIsSeededAndOffInEvaluation) {
  const auto ex = example({kClsId, 7, 8, kSepId, 12, kSepId}, {1, 1, 1, 1, 1, 1}, {0, 0, 0, 0, 1, 1});
  const auto input = encoder_input(ex);
  const auto& cfg = model.config();
  const auto& p = model.params().encoder;
  std::mt19937_64 r1(5), r2(5), r3(6);
  const RowVector a = encoder_forward(cfg, p, input, nullptr, {true, 0.3, &r1});
  const RowVector b = encoder_forward(cfg, p, input, nullptr, {true, 0.3, &r2});
  const RowVector c = encoder_forward(cfg, p, input, nullptr, {true, 0.3, &r3});
  const RowVector off = encoder_forward(cfg, p, input, nullptr, {});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_NE(a, off);
  EXPECT_EQ(off, encode_cls(model, ex));
}

TEST_F(EncoderTest, RandomParametersGiveFiniteOutputs) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 3.0);
  MultiTaskModel noisy = model;
  noisy.mutable_params().visit([&](const std::string&, Matrix& m, ParamKind) {
    m = m.unaryExpr([&](double) { return n(rng); });
  });
  const auto examples = testing::random_examples(rng, noisy.schema(), 30, 20, 12);
  for (const auto& ex : examples) {
    EXPECT_TRUE(all_finite(encode_cls(noisy, ex)));
    for (const auto& [name, d] : predict_proba(noisy, ex)) {
      double sum = 0;
      for (double p : d.probs) {
        EXPECT_TRUE(std::isfinite(p));
        sum += p;
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

}  // namespace
}  // namespace modtl
