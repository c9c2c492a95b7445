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

#include "modtl/evaluate.hpp"

#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "modtl/error.hpp"

namespace modtl {

PredictionSet::PredictionSet(ModifierSchema schema, std::vector<PredictionRecord> records)
    : schema_(std::move(schema)), records_(std::move(records)) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : records_) {
    const ModifierDef* def = schema_.find(r.modifier);
    if (!def) throw Error(ErrorKind::kUnknownModifier, "prediction for unknown modifier '" + r.modifier + "'");
    for (const auto* label : {&r.gold, &r.pred}) {
      if (!def->label_index(*label)) {
        throw Error(ErrorKind::kUnknownLabel,
                    "label '" + *label + "' not in modifier '" + r.modifier + "'");
      }
    }
    if (!seen.emplace(r.instance_id, r.modifier).second) {
      throw Error(ErrorKind::kInvalidArgument,
                  "duplicate prediction for " + r.instance_id + "/" + r.modifier);
    }
  }
}

std::vector<std::string> PredictionSet::modifiers() const {
  std::set<std::string> present;
  for (const auto& r : records_) present.insert(r.modifier);
  std::vector<std::string> out;
  for (const auto& def : schema_.modifiers()) {
    if (present.count(def.name)) out.push_back(def.name);
  }
  return out;
}

std::vector<const PredictionRecord*> PredictionSet::for_modifier(const std::string& modifier) const {
  std::vector<const PredictionRecord*> out;
  for (const auto& r : records_) {
    if (r.modifier == modifier) out.push_back(&r);
  }
  return out;
}

void write_predictions(const PredictionSet& set, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    for (const auto& r : set.records()) {
      const nlohmann::json j = {
          {"instance_id", r.instance_id}, {"modifier", r.modifier}, {"gold", r.gold}, {"pred", r.pred}};
      os << j.dump() << '\n';
    }
  }
  std::filesystem::rename(tmp, path);
}

PredictionSet read_predictions(const std::filesystem::path& path, const ModifierSchema& schema) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open predictions " + path.string());
  std::vector<PredictionRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      records.push_back({j.at("instance_id").get<std::string>(), j.at("modifier").get<std::string>(),
                         j.at("gold").get<std::string>(), j.at("pred").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kMalformedLine,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return PredictionSet(schema, std::move(records));
}

PredictionSet with_gold_from(const PredictionSet& set, const Corpus& gold) {
  std::map<std::string, const AnnotatedInstance*> by_id;
  for (const auto& inst : gold.instances) by_id[inst.id] = &inst;
  std::vector<PredictionRecord> records;
  for (const auto& r : set.records()) {
    auto it = by_id.find(r.instance_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::kSchemaMismatch, "prediction for unknown instance '" + r.instance_id + "'");
    }
    auto label = gold.resolved_label(*it->second, r.modifier);
    if (!label) continue;
    records.push_back({r.instance_id, r.modifier, *label, r.pred});
  }
  return PredictionSet(set.schema(), std::move(records));
}

namespace {

std::vector<const PredictionRecord*> non_empty(const PredictionSet& set, const std::string& modifier) {
  if (!set.schema().find(modifier)) {
    throw Error(ErrorKind::kUnknownModifier, "unknown modifier '" + modifier + "'");
  }
  auto recs = set.for_modifier(modifier);
  if (recs.empty()) throw Error(ErrorKind::kEmptySet, "no predictions for modifier '" + modifier + "'");
  return recs;
}

}  // namespace

double weighted_accuracy(const PredictionSet& set, const std::string& modifier) {
  const auto recs = non_empty(set, modifier);
  const std::size_t n = recs.size();
  std::map<std::string, std::size_t> gold_counts;
  for (const auto* r : recs) ++gold_counts[r->gold];
  // weight = 1 - count/n; the common 1/n factor cancels, keeping integers exact.
  std::size_t num = 0;
  std::size_t den = 0;
  for (const auto* r : recs) {
    const std::size_t w = n - gold_counts[r->gold];
    den += w;
    if (r->pred == r->gold) num += w;
  }
  if (den == 0) {
    throw Error(ErrorKind::kEmptyWeight,
                "every gold label of '" + modifier + "' is the same class; all weights are zero");
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double unweighted_accuracy(const PredictionSet& set, const std::string& modifier) {
  const auto recs = non_empty(set, modifier);
  std::size_t correct = 0;
  for (const auto* r : recs) correct += r->pred == r->gold ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(recs.size());
}

std::size_t ConfusionMatrix::row_sum(std::size_t gold) const {
  return std::accumulate(counts.at(gold).begin(), counts.at(gold).end(), std::size_t{0});
}

std::size_t ConfusionMatrix::col_sum(std::size_t pred) const {
  std::size_t s = 0;
  for (const auto& row : counts) s += row.at(pred);
  return s;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) s += row_sum(i);
  return s;
}

ConfusionMatrix confusion_matrix(const PredictionSet& set, const std::string& modifier) {
  const ModifierDef* def = set.schema().find(modifier);
  if (!def) throw Error(ErrorKind::kUnknownModifier, "unknown modifier '" + modifier + "'");
  ConfusionMatrix cm;
  cm.labels = def->labels;
  cm.counts.assign(cm.labels.size(), std::vector<std::size_t>(cm.labels.size(), 0));
  for (const auto* r : set.for_modifier(modifier)) {
    ++cm.counts[static_cast<std::size_t>(*def->label_index(r->gold))]
               [static_cast<std::size_t>(*def->label_index(r->pred))];
  }
  return cm;
}

F1Result f1_scores(const PredictionSet& set, const std::string& modifier, const F1Options& options) {
  const ModifierDef* def = set.schema().find(modifier);
  if (!def) throw Error(ErrorKind::kUnknownModifier, "unknown modifier '" + modifier + "'");
  for (const auto& c : options.exclude_classes) {
    if (!def->label_index(c)) {
      throw Error(ErrorKind::kUnknownLabel, "excluded class '" + c + "' not in '" + modifier + "'");
    }
  }
  const ConfusionMatrix cm = confusion_matrix(set, modifier);
  F1Result out;
  std::size_t tp = 0, fp = 0, fn = 0;
  double macro_sum = 0.0;
  std::size_t macro_n = 0;
  for (std::size_t k = 0; k < cm.labels.size(); ++k) {
    ClassScores s;
    s.label = cm.labels[k];
    s.tp = cm.counts[k][k];
    s.support = cm.row_sum(k);
    s.fn = s.support - s.tp;
    s.fp = cm.col_sum(k) - s.tp;
    s.precision = s.tp + s.fp > 0 ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp) : 0.0;
    s.recall = s.support > 0 ? static_cast<double>(s.tp) / static_cast<double>(s.support) : 0.0;
    const std::size_t denom = 2 * s.tp + s.fp + s.fn;
    s.undefined = denom == 0;
    s.f1 = denom > 0 ? static_cast<double>(2 * s.tp) / static_cast<double>(denom) : 0.0;
    s.excluded = options.exclude_classes.count(s.label) > 0;
    const bool is_default = s.label == def->default_label;
    s.in_micro = !s.excluded && (!is_default || options.include_default_in_micro);
    s.in_macro = !s.excluded && (!is_default || options.include_default_in_macro);
    if (s.in_micro) {
      tp += s.tp;
      fp += s.fp;
      fn += s.fn;
    }
    if (s.in_macro) {
      macro_sum += s.f1;
      ++macro_n;
    }
    out.per_class.push_back(std::move(s));
  }
  if (macro_n == 0) {
    throw Error(ErrorKind::kAllClassesExcluded, "no class of '" + modifier + "' is scored");
  }
  const std::size_t denom = 2 * tp + fp + fn;
  out.micro_undefined = denom == 0;
  out.micro = denom > 0 ? static_cast<double>(2 * tp) / static_cast<double>(denom) : 0.0;
  out.macro = macro_sum / static_cast<double>(macro_n);
  return out;
}

ChiSquareResult chi_square(std::size_t a_correct, std::size_t a_total, std::size_t b_correct,
                           std::size_t b_total, bool continuity_correction) {
  if (a_total == 0 || b_total == 0) {
    throw Error(ErrorKind::kInvalidArgument, "chi-square totals must be positive");
  }
  if (a_correct > a_total || b_correct > b_total) {
    throw Error(ErrorKind::kInvalidArgument, "correct count exceeds total");
  }
  const double a = static_cast<double>(a_correct);
  const double b = static_cast<double>(a_total - a_correct);
  const double c = static_cast<double>(b_correct);
  const double d = static_cast<double>(b_total - b_correct);
  const double n = a + b + c + d;
  const double margins = (a + b) * (c + d) * (a + c) * (b + d);
  if (margins == 0) {
    throw Error(ErrorKind::kDegenerateTable, "a margin of the 2x2 table is zero");
  }
  double diff = std::abs(a * d - b * c);
  if (continuity_correction) diff = std::max(0.0, diff - n / 2.0);
  ChiSquareResult r;
  r.statistic = n * diff * diff / margins;
  r.significant = r.statistic > kChiSquareCritical05;
  return r;
}

}  // namespace modtl
