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

#ifndef MODTL_REPORT_HPP_
#define MODTL_REPORT_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modtl/evaluate.hpp"

namespace modtl {

struct ReportOptions {
  std::map<std::string, std::set<std::string>> exclude_classes;  // modifier -> labels
  bool include_default_in_micro = false;
  bool include_default_in_macro = true;
  bool pooled_average = false;  // pool instances instead of averaging modifiers
};

struct ModifierReport {
  std::string modifier;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::optional<double> weighted_accuracy;  // absent for single-class gold
  double unweighted_accuracy = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassScores> per_class;
  ConfusionMatrix confusion;
  std::map<std::string, double> prevalence;
  std::vector<std::string> notes;
};

struct ReportAverages {
  std::optional<double> weighted_accuracy;
  double unweighted_accuracy = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
};

struct EvalReport {
  std::vector<ModifierReport> modifiers;
  ReportAverages average;
  ReportOptions options;
  std::string prevalence_source = "evaluation-set gold labels";
};

EvalReport build_report(const PredictionSet& set, const ReportOptions& options = {});

// Metrics are written rounded to six decimals.
nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// Aligned table: one column per modifier plus Avg, one row per metric.
std::string format_report_table(const EvalReport& report);

struct ComparisonRow {
  std::string modifier;
  std::size_t a_correct = 0, a_total = 0, b_correct = 0, b_total = 0;
  std::optional<ChiSquareResult> result;  // absent for degenerate tables
};

// Chi-square per modifier present in both reports.
std::vector<ComparisonRow> compare_reports(const EvalReport& a, const EvalReport& b,
                                           bool continuity_correction = false);

nlohmann::json to_json(const std::vector<ComparisonRow>& rows);
// Significant statistics are marked with '*'.
std::string format_comparison_table(const std::vector<ComparisonRow>& rows);

}  // namespace modtl

#endif  // MODTL_REPORT_HPP_
