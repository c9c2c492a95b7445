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

#ifndef MODTL_LOSS_HPP_
#define MODTL_LOSS_HPP_

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace modtl {

inline constexpr double kProbabilityFloor = 1e-12;

struct ProbDist {
  std::string modifier;
  std::vector<double> probs;
};

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

// -log(max(p[gold], 1e-12)).
double cross_entropy(const ProbDist& dist, int gold_index);

// -(1 - p)^gamma * log(p) on the clamped gold probability.
double focal_loss(const ProbDist& dist, int gold_index, double gamma = 2.0);

struct LossConfig {
  enum class Mode { kCrossEntropy, kFocal };
  Mode mode = Mode::kCrossEntropy;
  double gamma = 2.0;

  bool operator==(const LossConfig&) const = default;
};

double example_loss(const ProbDist& dist, int gold_index, const LossConfig& config);

// d(example_loss)/d(logits) for the logits that produced dist.
std::vector<double> example_loss_gradient(const ProbDist& dist, int gold_index,
                                          const LossConfig& config);

// Mean of the active heads' losses. Throws Error(kNoActiveHeads) when empty.
double total_loss(const std::map<std::string, double>& per_head,
                  const std::set<std::string>& active_heads);

}  // namespace modtl

#endif  // MODTL_LOSS_HPP_
