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

#include "modtl/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "modtl/error.hpp"

namespace modtl {

namespace {

double round6(double v) { return std::round(v * 1e6) / 1e6; }

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

EvalReport build_report(const PredictionSet& set, const ReportOptions& options) {
  EvalReport report;
  report.options = options;
  std::size_t pooled_tp = 0, pooled_fp = 0, pooled_fn = 0, pooled_total = 0, pooled_correct = 0;
  double wacc_sum = 0.0, wacc_weight = 0.0, macro_sum = 0.0, micro_sum = 0.0, unw_sum = 0.0;
  std::size_t wacc_n = 0;
  for (const auto& name : set.modifiers()) {
    ModifierReport m;
    m.modifier = name;
    F1Options f1;
    if (auto it = options.exclude_classes.find(name); it != options.exclude_classes.end()) {
      f1.exclude_classes = it->second;
    }
    f1.include_default_in_micro = options.include_default_in_micro;
    f1.include_default_in_macro = options.include_default_in_macro;
    const F1Result scores = f1_scores(set, name, f1);
    m.micro_f1 = scores.micro;
    m.macro_f1 = scores.macro;
    m.per_class = scores.per_class;
    m.confusion = confusion_matrix(set, name);
    m.total = m.confusion.total();
    for (std::size_t k = 0; k < m.confusion.labels.size(); ++k) {
      m.correct += m.confusion.counts[k][k];
      m.prevalence[m.confusion.labels[k]] =
          static_cast<double>(m.confusion.row_sum(k)) / static_cast<double>(m.total);
    }
    m.unweighted_accuracy = unweighted_accuracy(set, name);
    try {
      m.weighted_accuracy = weighted_accuracy(set, name);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEmptyWeight) throw;
      m.notes.push_back("weighted accuracy undefined: single-class gold labels");
    }
    if (scores.micro_undefined) m.notes.push_back("micro F1 undefined: no scored non-default instances");
    for (const auto& c : m.per_class) {
      if (c.undefined && (c.in_macro || c.in_micro)) {
        m.notes.push_back("class '" + c.label + "' has no gold or predicted instances (F1 = 0)");
      }
      if (c.in_micro) {
        pooled_tp += c.tp;
        pooled_fp += c.fp;
        pooled_fn += c.fn;
      }
    }

    const double w = options.pooled_average ? static_cast<double>(m.total) : 1.0;
    if (m.weighted_accuracy) {
      wacc_sum += w * *m.weighted_accuracy;
      wacc_weight += w;
      ++wacc_n;
    }
    macro_sum += w * m.macro_f1;
    micro_sum += w * m.micro_f1;
    unw_sum += w * m.unweighted_accuracy;
    pooled_total += m.total;
    pooled_correct += m.correct;
    report.modifiers.push_back(std::move(m));
  }
  const std::size_t n = report.modifiers.size();
  if (n > 0) {
    const double denom = options.pooled_average ? static_cast<double>(pooled_total) : static_cast<double>(n);
    if (wacc_n > 0) report.average.weighted_accuracy = wacc_sum / wacc_weight;
    report.average.macro_f1 = macro_sum / denom;
    if (options.pooled_average) {
      const std::size_t d = 2 * pooled_tp + pooled_fp + pooled_fn;
      report.average.micro_f1 = d > 0 ? static_cast<double>(2 * pooled_tp) / static_cast<double>(d) : 0.0;
      report.average.unweighted_accuracy =
          static_cast<double>(pooled_correct) / static_cast<double>(pooled_total);
    } else {
      report.average.micro_f1 = micro_sum / denom;
      report.average.unweighted_accuracy = unw_sum / denom;
    }
  }
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(round6(*v)) : nlohmann::json(nullptr);
  };
  nlohmann::json mods = nlohmann::json::array();
  for (const auto& m : report.modifiers) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : m.per_class) {
      classes.push_back({{"label", c.label},
                         {"tp", c.tp},
                         {"fp", c.fp},
                         {"fn", c.fn},
                         {"support", c.support},
                         {"precision", round6(c.precision)},
                         {"recall", round6(c.recall)},
                         {"f1", round6(c.f1)},
                         {"undefined", c.undefined},
                         {"excluded", c.excluded},
                         {"in_micro", c.in_micro},
                         {"in_macro", c.in_macro}});
    }
    nlohmann::json prevalence = nlohmann::json::object();
    for (const auto& [label, p] : m.prevalence) prevalence[label] = round6(p);
    mods.push_back({{"modifier", m.modifier},
                    {"total", m.total},
                    {"correct", m.correct},
                    {"weighted_accuracy", opt(m.weighted_accuracy)},
                    {"unweighted_accuracy", round6(m.unweighted_accuracy)},
                    {"micro_f1", round6(m.micro_f1)},
                    {"macro_f1", round6(m.macro_f1)},
                    {"per_class", classes},
                    {"confusion", {{"labels", m.confusion.labels}, {"counts", m.confusion.counts}}},
                    {"prevalence", prevalence},
                    {"notes", m.notes}});
  }
  nlohmann::json excl = nlohmann::json::object();
  for (const auto& [mod, labels] : report.options.exclude_classes) {
    excl[mod] = std::vector<std::string>(labels.begin(), labels.end());
  }
  return {{"format", "modtl-report"},
          {"version", 1},
          {"prevalence_source", report.prevalence_source},
          {"options",
           {{"exclude_classes", excl},
            {"include_default_in_micro", report.options.include_default_in_micro},
            {"include_default_in_macro", report.options.include_default_in_macro},
            {"pooled_average", report.options.pooled_average}}},
          {"modifiers", mods},
          {"average",
           {{"weighted_accuracy", opt(report.average.weighted_accuracy)},
            {"unweighted_accuracy", round6(report.average.unweighted_accuracy)},
            {"micro_f1", round6(report.average.micro_f1)},
            {"macro_f1", round6(report.average.macro_f1)}}}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    auto opt = [](const nlohmann::json& v) -> std::optional<double> {
      if (v.is_null()) return std::nullopt;
      return v.get<double>();
    };
    r.prevalence_source = j.value("prevalence_source", r.prevalence_source);
    const auto& o = j.at("options");
    for (const auto& [mod, labels] : o.at("exclude_classes").items()) {
      r.options.exclude_classes[mod] = labels.get<std::set<std::string>>();
    }
    r.options.include_default_in_micro = o.at("include_default_in_micro").get<bool>();
    r.options.include_default_in_macro = o.at("include_default_in_macro").get<bool>();
    r.options.pooled_average = o.at("pooled_average").get<bool>();
    for (const auto& mj : j.at("modifiers")) {
      ModifierReport m;
      m.modifier = mj.at("modifier").get<std::string>();
      m.total = mj.at("total").get<std::size_t>();
      m.correct = mj.at("correct").get<std::size_t>();
      m.weighted_accuracy = opt(mj.at("weighted_accuracy"));
      m.unweighted_accuracy = mj.at("unweighted_accuracy").get<double>();
      m.micro_f1 = mj.at("micro_f1").get<double>();
      m.macro_f1 = mj.at("macro_f1").get<double>();
      for (const auto& cj : mj.at("per_class")) {
        ClassScores c;
        c.label = cj.at("label").get<std::string>();
        c.tp = cj.at("tp").get<std::size_t>();
        c.fp = cj.at("fp").get<std::size_t>();
        c.fn = cj.at("fn").get<std::size_t>();
        c.support = cj.at("support").get<std::size_t>();
        c.precision = cj.at("precision").get<double>();
        c.recall = cj.at("recall").get<double>();
        c.f1 = cj.at("f1").get<double>();
        c.undefined = cj.at("undefined").get<bool>();
        c.excluded = cj.at("excluded").get<bool>();
        c.in_micro = cj.at("in_micro").get<bool>();
        c.in_macro = cj.at("in_macro").get<bool>();
        m.per_class.push_back(std::move(c));
      }
      m.confusion.labels = mj.at("confusion").at("labels").get<std::vector<std::string>>();
      m.confusion.counts =
          mj.at("confusion").at("counts").get<std::vector<std::vector<std::size_t>>>();
      m.prevalence = mj.at("prevalence").get<std::map<std::string, double>>();
      m.notes = mj.at("notes").get<std::vector<std::string>>();
      r.modifiers.push_back(std::move(m));
    }
    const auto& a = j.at("average");
    r.average.weighted_accuracy = opt(a.at("weighted_accuracy"));
    r.average.unweighted_accuracy = a.at("unweighted_accuracy").get<double>();
    r.average.micro_f1 = a.at("micro_f1").get<double>();
    r.average.macro_f1 = a.at("macro_f1").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedLine, std::string("report JSON: ") + e.what());
  }
}

std::string format_report_table(const EvalReport& report) {
  constexpr std::size_t kLabel = 22;
  std::size_t col = 8;
  for (const auto& m : report.modifiers) col = std::max(col, m.modifier.size() + 2);
  std::ostringstream os;
  os << pad("Metric", kLabel);
  for (const auto& m : report.modifiers) os << lpad(m.modifier, col);
  os << lpad("Avg", col) << '\n';
  os << std::string(kLabel + col * (report.modifiers.size() + 1), '-') << '\n';
  auto row = [&](const std::string& label, auto get, const std::optional<double>& avg) {
    os << pad(label, kLabel);
    for (const auto& m : report.modifiers) {
      const std::optional<double> v = get(m);
      os << lpad(v ? fixed3(*v) : "n/a", col);
    }
    os << lpad(avg ? fixed3(*avg) : "n/a", col) << '\n';
  };
  row("weighted accuracy", [](const ModifierReport& m) { return m.weighted_accuracy; },
      report.average.weighted_accuracy);
  row("micro F1", [](const ModifierReport& m) { return std::optional<double>(m.micro_f1); },
      report.average.micro_f1);
  row("macro F1", [](const ModifierReport& m) { return std::optional<double>(m.macro_f1); },
      report.average.macro_f1);
  row("unweighted accuracy",
      [](const ModifierReport& m) { return std::optional<double>(m.unweighted_accuracy); },
      report.average.unweighted_accuracy);
  os << "\nAvg: " << (report.options.pooled_average ? "pooled over instances" : "mean over modifiers")
     << "\nPrevalence (" << report.prevalence_source << "):\n";
  for (const auto& m : report.modifiers) {
    os << "  " << pad(m.modifier, kLabel - 2);
    bool first = true;
    for (const auto& label : m.confusion.labels) {
      os << (first ? "" : "  ") << label << '=' << fixed3(m.prevalence.at(label));
      first = false;
    }
    os << "  (n=" << m.total << ")\n";
  }
  for (const auto& m : report.modifiers) {
    for (const auto& note : m.notes) os << "note: " << m.modifier << ": " << note << '\n';
  }
  return os.str();
}

std::vector<ComparisonRow> compare_reports(const EvalReport& a, const EvalReport& b,
                                           bool continuity_correction) {
  std::vector<ComparisonRow> rows;
  for (const auto& ma : a.modifiers) {
    for (const auto& mb : b.modifiers) {
      if (mb.modifier != ma.modifier) continue;
      ComparisonRow r{ma.modifier, ma.correct, ma.total, mb.correct, mb.total, std::nullopt};
      try {
        r.result = chi_square(ma.correct, ma.total, mb.correct, mb.total, continuity_correction);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDegenerateTable) throw;
      }
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

nlohmann::json to_json(const std::vector<ComparisonRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = {{"modifier", r.modifier},
                        {"a_correct", r.a_correct},
                        {"a_total", r.a_total},
                        {"b_correct", r.b_correct},
                        {"b_total", r.b_total}};
    if (r.result) {
      j["chi_square"] = round6(r.result->statistic);
      j["significant"] = r.result->significant;
    } else {
      j["chi_square"] = nullptr;
      j["significant"] = false;
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << pad("Modifier", 16) << lpad("A", 14) << lpad("B", 14) << lpad("chi2", 12) << '\n';
  os << std::string(56, '-') << '\n';
  for (const auto& r : rows) {
    os << pad(r.modifier, 16)
       << lpad(std::to_string(r.a_correct) + "/" + std::to_string(r.a_total), 14)
       << lpad(std::to_string(r.b_correct) + "/" + std::to_string(r.b_total), 14);
    if (r.result) {
      os << lpad(fixed3(r.result->statistic) + (r.result->significant ? " *" : "  "), 12);
    } else {
      os << lpad("n/a  ", 12);
    }
    os << '\n';
  }
  os << "* significant at alpha 0.05 (chi2 > " << kChiSquareCritical05 << ", df 1)\n";
  return os.str();
}

}  // namespace modtl
