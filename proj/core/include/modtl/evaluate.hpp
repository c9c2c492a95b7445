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

#ifndef MODTL_EVALUATE_HPP_
#define MODTL_EVALUATE_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "modtl/corpus.hpp"

namespace modtl {

struct PredictionRecord {
  std::string instance_id;
  std::string modifier;
  std::string gold;
  std::string pred;

  bool operator==(const PredictionRecord&) const = default;
};

// Predictions aligned with gold labels, one record per instance x modifier.
class PredictionSet {
 public:
  PredictionSet() = default;
  // Validates labels against the schema and rejects duplicate
  // (instance, modifier) pairs.
  PredictionSet(ModifierSchema schema, std::vector<PredictionRecord> records);

  const ModifierSchema& schema() const { return schema_; }
  const std::vector<PredictionRecord>& records() const { return records_; }
  // Modifiers that have records, in schema order.
  std::vector<std::string> modifiers() const;
  std::vector<const PredictionRecord*> for_modifier(const std::string& modifier) const;

 private:
  ModifierSchema schema_;
  std::vector<PredictionRecord> records_;
};

// JSON lines: {"instance_id", "modifier", "gold", "pred"}.
void write_predictions(const PredictionSet& set, const std::filesystem::path& path);
PredictionSet read_predictions(const std::filesystem::path& path,
                               const ModifierSchema& schema);

// Replaces gold labels with those resolved from a corpus. Throws
// Error(kSchemaMismatch) when an instance is missing.
PredictionSet with_gold_from(const PredictionSet& set, const Corpus& gold);

// Per-instance weight 1 - prevalence(gold class), prevalence taken over the
// evaluation set. Throws kEmptySet with no records and kEmptyWeight when all
// weights are zero (a single gold class).
double weighted_accuracy(const PredictionSet& set, const std::string& modifier);

double unweighted_accuracy(const PredictionSet& set, const std::string& modifier);

struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;  // [gold][pred]

  std::size_t row_sum(std::size_t gold) const;
  std::size_t col_sum(std::size_t pred) const;
  std::size_t total() const;
};

ConfusionMatrix confusion_matrix(const PredictionSet& set, const std::string& modifier);

struct ClassScores {
  std::string label;
  std::size_t tp = 0, fp = 0, fn = 0, support = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  bool undefined = false;  // no gold and no predicted instances
  bool excluded = false;
  bool in_micro = false;
  bool in_macro = false;
};

struct F1Options {
  std::set<std::string> exclude_classes;
  bool include_default_in_macro = true;
  bool include_default_in_micro = false;
};

struct F1Result {
  double micro = 0.0;
  double macro = 0.0;
  bool micro_undefined = false;  // pooled TP + FP + FN == 0
  std::vector<ClassScores> per_class;
};

// Micro F1 pools TP/FP/FN over non-default, non-excluded classes (the default
// label acts as the null class unless include_default_in_micro). Macro F1 is
// the mean per-class F1 over non-excluded classes, the default included iff
// include_default_in_macro. Throws kAllClassesExcluded if macro has no class.
F1Result f1_scores(const PredictionSet& set, const std::string& modifier,
                   const F1Options& options = {});

inline constexpr double kChiSquareCritical05 = 3.841;

struct ChiSquareResult {
  double statistic = 0.0;
  bool significant = false;
};

// Pearson chi-square on [[a_c, a_t - a_c], [b_c, b_t - b_c]], df = 1.
// Throws kDegenerateTable when a margin is zero.
ChiSquareResult chi_square(std::size_t a_correct, std::size_t a_total,
                           std::size_t b_correct, std::size_t b_total,
                           bool continuity_correction = false);

}  // namespace modtl

#endif  // MODTL_EVALUATE_HPP_
