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

#include "modtl/loss.hpp"

#include <algorithm>
#include <cmath>

#include "modtl/error.hpp"

namespace modtl {

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error(ErrorKind::kInvalidArgument, "softmax of empty logits");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

namespace {

double gold_probability(const ProbDist& dist, int gold) {
  if (gold < 0 || static_cast<std::size_t>(gold) >= dist.probs.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "gold index " + std::to_string(gold) + " out of range for " + dist.modifier);
  }
  return dist.probs[static_cast<std::size_t>(gold)];
}

}  // namespace

double cross_entropy(const ProbDist& dist, int gold_index) {
  return -std::log(std::max(gold_probability(dist, gold_index), kProbabilityFloor));
}

double focal_loss(const ProbDist& dist, int gold_index, double gamma) {
  if (gamma < 0) throw Error(ErrorKind::kInvalidArgument, "focal gamma must be >= 0");
  const double p = gold_probability(dist, gold_index);
  const double ce = -std::log(std::max(p, kProbabilityFloor));
  if (gamma == 0) return ce;
  return std::pow(std::max(0.0, 1.0 - p), gamma) * ce;
}

double example_loss(const ProbDist& dist, int gold_index, const LossConfig& config) {
  return config.mode == LossConfig::Mode::kFocal ? focal_loss(dist, gold_index, config.gamma)
                                                 : cross_entropy(dist, gold_index);
}

std::vector<double> example_loss_gradient(const ProbDist& dist, int gold_index,
                                          const LossConfig& config) {
  const double p = gold_probability(dist, gold_index);
  // Cross-entropy: d/dz_j = s_j - [j == g]. Focal scales the same direction.
  double coeff = -1.0;
  if (config.mode == LossConfig::Mode::kFocal && config.gamma != 0) {
    const double q = std::max(0.0, 1.0 - p);
    const double g = config.gamma;
    const double log_p = std::log(std::max(p, kProbabilityFloor));
    const double lead = q > 0 ? g * std::pow(q, g - 1.0) * p * log_p : 0.0;
    coeff = lead - std::pow(q, g);
  }
  std::vector<double> grad(dist.probs.size());
  for (std::size_t j = 0; j < grad.size(); ++j) {
    const double delta = static_cast<int>(j) == gold_index ? 1.0 : 0.0;
    grad[j] = coeff * (delta - dist.probs[j]);
  }
  return grad;
}

double total_loss(const std::map<std::string, double>& per_head,
                  const std::set<std::string>& active_heads) {
  if (active_heads.empty()) throw Error(ErrorKind::kNoActiveHeads, "no head has a gold label");
  double sum = 0.0;
  for (const auto& name : active_heads) {
    auto it = per_head.find(name);
    if (it == per_head.end()) {
      throw Error(ErrorKind::kInvalidArgument, "missing loss for active head '" + name + "'");
    }
    sum += it->second;
  }
  return sum / static_cast<double>(active_heads.size());
}

}  // namespace modtl
