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

#ifndef MODTL_TESTS_SUPPORT_ORACLES_HPP_
#define MODTL_TESTS_SUPPORT_ORACLES_HPP_

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "modtl/evaluate.hpp"
#include "modtl/model.hpp"
#include "modtl/synthetic.hpp"

// Reference computations that share no code with the library beyond its
// public types.
namespace modtl::testing {

struct GradientCheck {
  double max_relative_error = 0.0;
  std::string worst_entry;
  std::size_t checked = 0;
};

// Relative error of one analytic/numeric pair, floored so that entries whose
// true gradient is ~0 are judged on absolute error.
inline constexpr double kRelativeErrorFloor = 1e-6;
double relative_error(double analytic, double numeric);

// Central differences of forward_backward's total loss against its
// gradient. At most `per_tensor` entries per tensor are checked, spread
// evenly across the tensor.
GradientCheck check_gradients(const MultiTaskModel& model, std::span<const EncodedExample> batch,
                              const BatchOptions& options, double step = 1e-5,
                              std::size_t per_tensor = 64);

// Per-record recount of the F1 definitions.
struct RecountedClass {
  std::size_t tp = 0, fp = 0, fn = 0;
  double f1 = 0.0;
  bool scored_micro = false;
  bool scored_macro = false;
};

struct Recount {
  std::map<std::string, RecountedClass> classes;
  std::map<std::pair<std::string, std::string>, std::size_t> confusion;  // (gold, pred)
  double micro = 0.0;
  double macro = 0.0;
};

Recount recount_f1(const std::vector<PredictionRecord>& records, const ModifierDef& def,
                   const F1Options& options);

// Labels recovered from text alone: the words immediately left of the
// mention are read while they belong to some cue phrase, and each modifier
// gets the label of a cue phrase found in that run (its default otherwise).
std::map<std::string, std::string> cue_labels(const std::string& text_before_mention,
                                              const SynthConfig& config);

}  // namespace modtl::testing

#endif  // MODTL_TESTS_SUPPORT_ORACLES_HPP_
