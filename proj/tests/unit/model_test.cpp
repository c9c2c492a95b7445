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

#include "modtl/error.hpp"
#include "modtl/model.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace modtl {
namespace {

using testing::random_examples;
using testing::small_schema;
using testing::tiny_encoder;

ClassificationHead zero_head(std::size_t labels, std::size_t hidden) {
  return {"m", Matrix::Zero(static_cast<Eigen::Index>(labels), static_cast<Eigen::Index>(hidden)),
          Matrix::Zero(1, static_cast<Eigen::Index>(labels))};
}

TEST(Head, ForwardClosedForms) {
  ClassificationHead h = zero_head(2, 4);
  const RowVector x = RowVector::Random(4);
  EXPECT_EQ(head_forward(h, x).probs, (std::vector<double>{0.5, 0.5}));
  h.bias(0, 0) = 1.0;
  const auto p = head_forward(h, x).probs;
  EXPECT_NEAR(p[0], std::exp(1.0) / (std::exp(1.0) + 1), 1e-15);
  EXPECT_NEAR(p[1], 0.26894, 1e-5);
  h.bias.array() += 1234.5;
  const auto q = head_forward(h, x).probs;
  EXPECT_NEAR(q[0], p[0], 1e-9);
  EXPECT_THROW(head_forward(h, RowVector::Zero(3)), Error);
}

TEST(Head, SeedDependsOnlyOnModelSeedAndName) {
  EXPECT_EQ(head_seed(42, "negation"), head_seed(42, "negation"));
  EXPECT_NE(head_seed(42, "negation"), head_seed(42, "subject"));
  EXPECT_NE(head_seed(42, "negation"), head_seed(43, "negation"));
  const ModifierDef def{"negation", {"no", "yes"}, "no"};
  const auto a = init_head(def, 16, head_seed(42, "negation"));
  EXPECT_EQ(a.weight.rows(), 2);
  EXPECT_EQ(a.weight.cols(), 16);
  EXPECT_TRUE((a.bias.array() == 0.0).all());
  const auto full = MultiTaskModel::initialize(small_schema(), tiny_encoder(20));
  const auto single =
      MultiTaskModel::initialize(small_schema().restricted_to({"subject"}), tiny_encoder(20));
  EXPECT_EQ(full.head("subject")->weight, single.head("subject")->weight);
}

TEST(Predict, ArgmaxTiesGoToFirstLabel) {
  const std::vector<double> tie = {0.5, 0.5};
  EXPECT_EQ(argmax(tie), 0);
  const std::vector<double> v = {0.2, 0.7, 0.7};
  EXPECT_EQ(argmax(v), 1);
  auto model = MultiTaskModel::initialize(small_schema(), tiny_encoder(20));
  for (auto& h : model.mutable_params().heads) {
    h.weight.setZero();
    h.bias.setZero();
  }
  model.mutable_params().heads[0].bias(0, 1) = std::log(0.3 / 0.7);
  std::mt19937_64 rng(1);
  const auto ex = random_examples(rng, model.schema(), 20, 1, 10).front();
  const auto out = predict(model, ex);
  EXPECT_EQ(out.at("negation"), "no");
  EXPECT_EQ(out.at("subject"), "patient");
  EXPECT_EQ(out.at("severity"), "unmarked");
  EXPECT_EQ(predict(model, ex), out);
}

TEST(Predict, OneEntryPerHead) {
  std::mt19937_64 rng(2);
  const ModifierSchema schema = testing::random_schema(rng, 9);
  const auto model = MultiTaskModel::initialize(schema, tiny_encoder(20));
  const auto ex = random_examples(rng, schema, 20, 1, 10).front();
  EXPECT_EQ(predict(model, ex).size(), 9u);
}

TEST(Model, ConstructorChecksHeads) {
  const auto model = MultiTaskModel::initialize(small_schema(), tiny_encoder(20));
  ModelParameters p = model.params();
  std::swap(p.heads[0], p.heads[1]);
  EXPECT_THROW(MultiTaskModel(small_schema(), model.config(), p), Error);
  p = model.params();
  p.heads.pop_back();
  EXPECT_THROW(MultiTaskModel(small_schema(), model.config(), p), Error);
  p = model.params();
  p.heads[2].weight = Matrix::Zero(3, 16);
  EXPECT_THROW(MultiTaskModel(small_schema(), model.config(), p), Error);
  EXPECT_EQ(model.head_index("severity"), 2u);
  EXPECT_THROW(model.head_index("course"), Error);
}

TEST(Model, RoundToFloat32) {
  auto model = MultiTaskModel::initialize(small_schema(), tiny_encoder(20));
  model.round_to_float32();
  model.params().visit([](const std::string& name, const Matrix& m, ParamKind) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      ASSERT_EQ(m.data()[i], static_cast<double>(static_cast<float>(m.data()[i]))) << name;
    }
  });
}

class BatchTest : public ::testing::Test {
 protected:
  BatchTest()
      : rng(11),
        model(MultiTaskModel::initialize(small_schema(), tiny_encoder(25, 16, 14, 3))),
        batch(random_examples(rng, small_schema(), 25, 10, 14)) {}
  std::mt19937_64 rng;
  MultiTaskModel model;
  std::vector<EncodedExample> batch;
};

TEST_F(BatchTest, HeadLossIsMeanOverUnmaskedExamples) {
  const BatchResult r = forward_backward(model, batch, {}, nullptr);
  for (const auto& name : r.active_heads) {
    double sum = 0;
    int n = 0;
    for (const auto& ex : batch) {
      if (!ex.head_mask.at(name)) continue;
      sum += cross_entropy(predict_proba(model, ex).at(name), ex.gold.at(name));
      ++n;
    }
    EXPECT_NEAR(r.head_losses.at(name), sum / n, 1e-12) << name;
  }
  EXPECT_NEAR(r.total_loss, total_loss(r.head_losses, r.active_heads), 1e-15);
}

TEST_F(BatchTest, InactiveHeadIsExcluded) {
  for (auto& ex : batch) {
    ex.head_mask["severity"] = false;
    ex.gold.erase("severity");
    ex.head_mask["negation"] = true;
    ex.gold["negation"] = 1;
  }
  ModelParameters grads = model.params().zeros_like();
  const BatchResult r = forward_backward(model, batch, {}, &grads);
  EXPECT_FALSE(r.active_heads.count("severity"));
  EXPECT_FALSE(r.head_losses.count("severity"));
  const auto& g = grads.heads[2];
  EXPECT_TRUE((g.weight.array() == 0.0).all());
  EXPECT_TRUE((g.bias.array() == 0.0).all());
  for (auto& ex : batch) {
    for (auto& [name, on] : ex.head_mask) on = false;
  }
  EXPECT_THROW(forward_backward(model, batch, {}, nullptr), Error);
}

TEST_F(BatchTest, GradientsMatchFiniteDifferences) {
  BatchOptions opts;
  const auto check = testing::check_gradients(model, std::span(batch).first(4), opts, 1e-5, 12);
  EXPECT_LT(check.max_relative_error, 1e-4) << check.worst_entry;
  opts.loss = {LossConfig::Mode::kFocal, 2.0};
  opts.dropout = true;
  opts.dropout_seed = 99;
  const auto focal = testing::check_gradients(model, std::span(batch).first(4), opts, 1e-5, 12);
  EXPECT_LT(focal.max_relative_error, 1e-4) << focal.worst_entry;
}

TEST_F(BatchTest, ResultsIndependentOfThreadCount) {
  BatchOptions opts;
  opts.dropout = true;
  opts.dropout_seed = 5;
  ModelParameters g1 = model.params().zeros_like();
  ModelParameters g4 = model.params().zeros_like();
  const auto r1 = forward_backward(model, batch, opts, &g1);
  opts.threads = 4;
  const auto r4 = forward_backward(model, batch, opts, &g4);
  EXPECT_EQ(r1.total_loss, r4.total_loss);
  std::vector<Matrix> a, b;
  g1.visit([&](const std::string&, const Matrix& m, ParamKind) { a.push_back(m); });
  g4.visit([&](const std::string&, const Matrix& m, ParamKind) { b.push_back(m); });
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST_F(BatchTest, GradientAccumulatesIntoBuffer) {
  ModelParameters once = model.params().zeros_like();
  ModelParameters twice = model.params().zeros_like();
  forward_backward(model, batch, {}, &once);
  forward_backward(model, batch, {}, &twice);
  forward_backward(model, batch, {}, &twice);
  std::vector<Matrix> a, b;
  once.visit([&](const std::string&, const Matrix& m, ParamKind) { a.push_back(m); });
  twice.visit([&](const std::string&, const Matrix& m, ParamKind) { b.push_back(m); });
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(b[i].isApprox(2 * a[i], 1e-12));
}

}  // namespace
}  // namespace modtl
