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

#include "modtl/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>

#include "modtl/error.hpp"
#include "modtl/featurize.hpp"
#include "modtl/text.hpp"

namespace modtl {

namespace {

constexpr std::string_view kConsonants = "bdfgklmprstvz";
constexpr std::string_view kVowels = "aeiou";

std::string syllable(std::size_t i) {
  std::string s;
  s += kConsonants[i % kConsonants.size()];
  s += kVowels[(i / kConsonants.size()) % kVowels.size()];
  return s;
}

void invalid(const std::string& msg) { throw Error(ErrorKind::kInvalidConfig, msg); }

std::set<std::string> token_set(const std::string& phrase) {
  auto toks = WordTokenizer().tokenize(phrase);
  return {toks.begin(), toks.end()};
}

struct Plan {
  std::set<std::string> applicable;
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> cues;
  std::vector<std::string> filler;
};

Plan validate(const SynthConfig& c) {
  Plan plan;
  if (c.schema.empty()) invalid("schema has no modifiers");
  plan.applicable = c.applicable;
  if (plan.applicable.empty()) {
    for (const auto& n : c.schema.names()) plan.applicable.insert(n);
  }
  for (const auto& n : plan.applicable) {
    if (!c.schema.find(n)) invalid("applicable modifier '" + n + "' not in schema");
  }
  if (c.num_instances == 0) invalid("num_instances must be positive");
  if (c.vocab_size == 0) invalid("vocab_size must be positive");
  if (c.mentions_per_document == 0) invalid("mentions_per_document must be positive");
  if (c.entity_terms.empty()) invalid("entity_terms is empty");
  if (c.mentions_per_document > c.entity_terms.size()) {
    invalid("mentions_per_document exceeds the number of entity terms");
  }
  if (!(c.label_rate >= 0 && c.label_rate <= 1)) invalid("label_rate outside [0, 1]");
  if (!(c.noise_rate >= 0 && c.noise_rate <= 1)) invalid("noise_rate outside [0, 1]");

  std::map<std::string, std::pair<std::string, std::string>> owner;  // token -> cue
  for (const auto& cue : c.cues) {
    if (!plan.applicable.count(cue.modifier)) {
      invalid("cue for non-applicable modifier '" + cue.modifier + "'");
    }
    const auto& def = c.schema.at(cue.modifier);
    if (!def.label_index(cue.label)) invalid("cue label " + cue.modifier + "=" + cue.label);
    if (cue.label == def.default_label) invalid("cue for default label of " + cue.modifier);
    auto toks = token_set(cue.phrase);
    if (toks.empty()) invalid("empty cue phrase");
    const auto key = std::make_pair(cue.modifier, cue.label);
    for (const auto& t : toks) {
      auto [it, fresh] = owner.emplace(t, key);
      if (!fresh && it->second != key) {
        invalid("cue token '" + t + "' is shared by two labels");
      }
    }
    plan.cues[key].push_back(cue.phrase);
  }
  for (const auto& name : plan.applicable) {
    const auto& def = c.schema.at(name);
    for (const auto& l : def.labels) {
      if (l != def.default_label && !plan.cues.count({name, l})) {
        invalid("no cue phrase for " + name + "=" + l);
      }
    }
  }
  std::set<std::string> reserved;
  for (const auto& [t, _] : owner) reserved.insert(t);
  for (const auto& term : c.entity_terms) {
    for (const auto& t : token_set(term)) {
      if (owner.count(t)) invalid("entity term '" + term + "' contains cue token '" + t + "'");
      reserved.insert(t);
    }
  }
  for (std::size_t i = 0; plan.filler.size() < c.vocab_size; ++i) {
    auto w = filler_word(i);
    if (!reserved.count(w)) plan.filler.push_back(std::move(w));
  }
  return plan;
}

// Appends words separated by single spaces, tracking code-point offsets.
class TextBuilder {
 public:
  Span append(const std::string& word) {
    if (!text_.empty()) {
      text_ += ' ';
      ++length_;
    }
    const std::size_t start = length_;
    text_ += word;
    length_ += text::decode_utf8(word).size();
    return {start, length_};
  }
  std::string str() && { return std::move(text_); }

 private:
  std::string text_;
  std::size_t length_ = 0;
};

}  // namespace

std::string filler_word(std::size_t index) {
  const std::size_t base = kConsonants.size() * kVowels.size();
  std::string w = syllable(index % base) + syllable((index / base) % base);
  for (std::size_t rest = index / (base * base); rest > 0; rest /= base) {
    w += syllable(rest % base);
  }
  return w;
}

SyntheticCorpus generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  const Plan plan = validate(config);
  std::mt19937_64 rng(seed);
  auto uniform = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto filler = [&](TextBuilder& b, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) b.append(plan.filler[uniform(plan.filler.size())]);
  };

  SyntheticCorpus out;
  Corpus& corpus = out.corpus;
  corpus.schema = config.schema;
  corpus.applicable = plan.applicable;

  const std::size_t per_doc = config.mentions_per_document;
  const std::size_t num_docs = (config.num_instances + per_doc - 1) / per_doc;
  std::size_t remaining = config.num_instances;
  for (std::size_t d = 0; d < num_docs; ++d) {
    char id_buf[32];
    std::snprintf(id_buf, sizeof(id_buf), "%05zu", d + 1);
    const std::string doc_id = config.doc_prefix + id_buf;
    const std::size_t k = std::min(per_doc, remaining);
    remaining -= k;

    std::vector<std::size_t> terms(config.entity_terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = i;
    std::shuffle(terms.begin(), terms.end(), rng);

    // Mention chosen per modifier when labels are exclusive within a document.
    std::map<std::string, std::size_t> exclusive_owner;
    if (config.exclusive_labels) {
      for (const auto& name : plan.applicable) exclusive_owner[name] = uniform(k);
    }

    TextBuilder builder;
    filler(builder, config.filler_before);
    std::vector<AnnotatedInstance> pending;
    for (std::size_t j = 0; j < k; ++j) {
      if (j > 0) filler(builder, config.filler_between);
      AnnotatedInstance inst;
      inst.id = doc_id + ":T" + std::to_string(j + 1);
      std::vector<std::string> phrases;
      for (const auto& def : config.schema.modifiers()) {
        if (!plan.applicable.count(def.name)) continue;
        std::string planted = def.default_label;
        const bool eligible = !config.exclusive_labels || exclusive_owner.at(def.name) == j;
        if (unit(rng) < config.label_rate && eligible) {
          std::vector<std::string> others;
          for (const auto& l : def.labels) {
            if (l != def.default_label) others.push_back(l);
          }
          planted = others[uniform(others.size())];
        }
        std::string phrase;
        if (planted != def.default_label) {
          const auto& options = plan.cues.at({def.name, planted});
          phrase = options[uniform(options.size())];
          phrases.push_back(phrase);
        }
        std::string gold = planted;
        if (config.noise_rate > 0 && unit(rng) < config.noise_rate) {
          std::vector<std::string> others;
          for (const auto& l : def.labels) {
            if (l != planted) others.push_back(l);
          }
          gold = others[uniform(others.size())];
        }
        if (gold != def.default_label) inst.labels[def.name] = gold;
        if (planted != def.default_label || gold != planted) {
          out.cue_table.push_back({inst.id, def.name, planted, gold, phrase});
        }
      }
      std::shuffle(phrases.begin(), phrases.end(), rng);
      for (const auto& p : phrases) builder.append(p);
      const Span span = builder.append(config.entity_terms[terms[j]]);
      inst.mention.doc_id = doc_id;
      inst.mention.type = "Entity";
      inst.mention.spans = {span};
      pending.push_back(std::move(inst));
    }
    filler(builder, config.filler_after);
    builder.append(".");
    Document doc(doc_id, std::move(builder).str());
    for (auto& inst : pending) {
      inst.mention.surface = {doc.substr(inst.mention.spans[0].start, inst.mention.spans[0].end)};
      corpus.instances.push_back(std::move(inst));
    }
    corpus.documents.emplace(doc_id, std::move(doc));
  }
  return out;
}

nlohmann::json to_json(const SynthConfig& c) {
  nlohmann::json cues = nlohmann::json::array();
  for (const auto& cue : c.cues) {
    cues.push_back({{"modifier", cue.modifier}, {"label", cue.label}, {"phrase", cue.phrase}});
  }
  return {
      {"schema", {{"modifiers", to_json(c.schema)}}},
      {"applicable", std::vector<std::string>(c.applicable.begin(), c.applicable.end())},
      {"cues", cues},
      {"entity_terms", c.entity_terms},
      {"num_instances", c.num_instances},
      {"vocab_size", c.vocab_size},
      {"label_rate", c.label_rate},
      {"noise_rate", c.noise_rate},
      {"mentions_per_document", c.mentions_per_document},
      {"filler_before", c.filler_before},
      {"filler_between", c.filler_between},
      {"filler_after", c.filler_after},
      {"doc_prefix", c.doc_prefix},
      {"exclusive_labels", c.exclusive_labels},
  };
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  try {
    SynthConfig c;
    if (j.contains("preset")) {
      const auto preset = j.at("preset").get<std::string>();
      if (preset == "disorder") {
        c = disorder_preset();
      } else if (preset == "substance_use") {
        c = substance_use_preset();
      } else {
        invalid("unknown preset '" + preset + "'");
      }
    }
    if (j.contains("schema")) c.schema = schema_from_json(j.at("schema"));
    if (j.contains("applicable")) c.applicable = j.at("applicable").get<std::set<std::string>>();
    if (j.contains("cues")) {
      c.cues.clear();
      for (const auto& cue : j.at("cues")) {
        c.cues.push_back({cue.at("modifier").get<std::string>(), cue.at("label").get<std::string>(),
                          cue.at("phrase").get<std::string>()});
      }
    }
    if (j.contains("entity_terms")) {
      c.entity_terms = j.at("entity_terms").get<std::vector<std::string>>();
    }
    c.num_instances = j.value("num_instances", c.num_instances);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.label_rate = j.value("label_rate", c.label_rate);
    c.noise_rate = j.value("noise_rate", c.noise_rate);
    c.mentions_per_document = j.value("mentions_per_document", c.mentions_per_document);
    c.filler_before = j.value("filler_before", c.filler_before);
    c.filler_between = j.value("filler_between", c.filler_between);
    c.filler_after = j.value("filler_after", c.filler_after);
    c.doc_prefix = j.value("doc_prefix", c.doc_prefix);
    c.exclusive_labels = j.value("exclusive_labels", c.exclusive_labels);
    // A subset of modifiers may be selected from a preset's schema.
    if (j.contains("modifiers_subset")) {
      auto keep = j.at("modifiers_subset").get<std::set<std::string>>();
      c.schema = c.schema.restricted_to(keep);
      std::set<std::string> applicable;
      for (const auto& n : (c.applicable.empty() ? keep : c.applicable)) {
        if (keep.count(n)) applicable.insert(n);
      }
      c.applicable = applicable;
      std::vector<CuePhrase> cues;
      for (const auto& cue : c.cues) {
        if (keep.count(cue.modifier)) cues.push_back(cue);
      }
      c.cues = std::move(cues);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("synthetic config: ") + e.what());
  }
}

namespace {

ModifierDef def(std::string name, std::vector<std::string> labels) {
  ModifierDef d{std::move(name), std::move(labels), {}};
  d.default_label = d.labels.front();
  return d;
}

const ModifierDef kNegation = def("negation", {"no", "yes"});
const ModifierDef kSubject = def("subject", {"patient", "family_member", "other"});
const ModifierDef kUncertainty = def("uncertainty", {"no", "yes"});
const ModifierDef kSeverity = def("severity", {"unmarked", "slight", "moderate", "severe"});

const std::vector<CuePhrase> kSharedCues = {
    {"negation", "yes", "no"},
    {"negation", "yes", "denies"},
    {"subject", "family_member", "mother"},
    {"subject", "family_member", "father"},
    {"subject", "other", "neighbor"},
    {"uncertainty", "yes", "possible"},
    {"uncertainty", "yes", "probable"},
    {"severity", "slight", "mild"},
    {"severity", "moderate", "moderate"},
    {"severity", "severe", "severe"},
};

}  // namespace

SynthConfig disorder_preset() {
  SynthConfig c;
  c.schema = ModifierSchema({
      kNegation,
      kSubject,
      kUncertainty,
      kSeverity,
      def("course", {"unmarked", "increased", "decreased", "improved", "worsened", "resolved"}),
      def("conditional", {"false", "true"}),
      def("generic", {"false", "true"}),
  });
  c.cues = kSharedCues;
  c.cues.insert(c.cues.end(), {
                                  {"course", "increased", "increasing"},
                                  {"course", "decreased", "decreasing"},
                                  {"course", "improved", "improving"},
                                  {"course", "worsened", "worsening"},
                                  {"course", "resolved", "resolved"},
                                  {"conditional", "true", "if"},
                                  {"generic", "true", "any"},
                              });
  c.entity_terms = {"cough",    "fever",     "rash",      "nausea",    "headache",
                    "edema",    "fatigue",   "dizziness", "chest pain", "back pain",
                    "vomiting", "anemia",    "pneumonia", "seizure",   "wheezing",
                    "syncope",  "palpitations", "hematoma", "ulcer",   "swelling"};
  c.doc_prefix = "dis";
  return c;
}

SynthConfig substance_use_preset() {
  SynthConfig c;
  c.schema = ModifierSchema({
      kNegation,
      kSubject,
      kUncertainty,
      kSeverity,
      def("doctime", {"overlaps", "before", "after"}),
      def("illicit_use", {"false", "true"}),
  });
  c.applicable = {"negation", "subject", "uncertainty", "doctime", "illicit_use"};
  for (const auto& cue : kSharedCues) {
    if (cue.modifier != "severity") c.cues.push_back(cue);
  }
  c.cues.insert(c.cues.end(), {
                                  {"doctime", "before", "history of"},
                                  {"doctime", "after", "planned"},
                                  {"illicit_use", "true", "illicit"},
                                  {"illicit_use", "true", "street"},
                              });
  c.entity_terms = {"heroin use", "opioid use", "cocaine",   "overdose",  "withdrawal",
                    "cravings",   "methadone",  "fentanyl",  "alcohol use", "relapse",
                    "suboxone",   "anxiety",    "depression", "suicidal ideation",
                    "benzodiazepines", "oxycodone", "injection", "intoxication",
                    "sedation", "agitation"};
  c.doc_prefix = "sud";
  return c;
}

}  // namespace modtl
