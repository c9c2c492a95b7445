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

#include "modtl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include "modtl/error.hpp"
#include "modtl/text.hpp"

namespace modtl {

std::optional<int> ModifierDef::label_index(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return static_cast<int>(i);
  }
  return std::nullopt;
}

int ModifierDef::default_index() const {
  auto idx = label_index(default_label);
  if (!idx) throw Error(ErrorKind::kInvalidConfig, "default label missing for " + name);
  return *idx;
}

ModifierSchema::ModifierSchema(std::vector<ModifierDef> modifiers)
    : modifiers_(std::move(modifiers)) {
  std::set<std::string> seen;
  for (const auto& m : modifiers_) {
    if (m.name.empty()) throw Error(ErrorKind::kInvalidConfig, "empty modifier name");
    if (!seen.insert(m.name).second) {
      throw Error(ErrorKind::kInvalidConfig, "duplicate modifier '" + m.name + "'");
    }
    if (m.labels.size() < 2) {
      throw Error(ErrorKind::kInvalidConfig,
                  "modifier '" + m.name + "' needs at least two labels");
    }
    std::set<std::string> labels(m.labels.begin(), m.labels.end());
    if (labels.size() != m.labels.size()) {
      throw Error(ErrorKind::kInvalidConfig,
                  "modifier '" + m.name + "' has duplicate labels");
    }
    if (!labels.count(m.default_label)) {
      throw Error(ErrorKind::kInvalidConfig, "default label '" + m.default_label +
                                                 "' is not a label of '" + m.name + "'");
    }
  }
}

const ModifierDef* ModifierSchema::find(std::string_view name) const {
  for (const auto& m : modifiers_) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

const ModifierDef& ModifierSchema::at(std::string_view name) const {
  if (const auto* m = find(name)) return *m;
  throw Error(ErrorKind::kUnknownModifier, std::string(name));
}

std::optional<std::size_t> ModifierSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < modifiers_.size(); ++i) {
    if (modifiers_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> ModifierSchema::names() const {
  std::vector<std::string> out;
  out.reserve(modifiers_.size());
  for (const auto& m : modifiers_) out.push_back(m.name);
  return out;
}

ModifierSchema ModifierSchema::restricted_to(const std::set<std::string>& names) const {
  std::vector<ModifierDef> kept;
  for (const auto& m : modifiers_) {
    if (names.count(m.name)) kept.push_back(m);
  }
  return ModifierSchema(std::move(kept));
}

nlohmann::json to_json(const ModifierSchema& schema) {
  nlohmann::json mods = nlohmann::json::array();
  for (const auto& m : schema.modifiers()) {
    mods.push_back({{"name", m.name}, {"labels", m.labels}, {"default", m.default_label}});
  }
  return mods;
}

ModifierSchema schema_from_json(const nlohmann::json& j) {
  const nlohmann::json& mods = j.is_object() ? j.at("modifiers") : j;
  if (!mods.is_array()) throw Error(ErrorKind::kInvalidConfig, "modifiers must be an array");
  std::vector<ModifierDef> defs;
  for (const auto& m : mods) {
    ModifierDef def;
    def.name = m.at("name").get<std::string>();
    def.labels = m.at("labels").get<std::vector<std::string>>();
    def.default_label = m.at("default").get<std::string>();
    defs.push_back(std::move(def));
  }
  return ModifierSchema(std::move(defs));
}

Document::Document(std::string id, std::string text)
    : id_(std::move(id)), text_(std::move(text)) {
  if (id_.empty()) throw Error(ErrorKind::kInvalidArgument, "document id is empty");
  if (text_.empty()) throw Error(ErrorKind::kInvalidText, "document '" + id_ + "' is empty");
  try {
    offsets_ = text::code_point_offsets(text_);
  } catch (const Error& e) {
    throw Error(ErrorKind::kInvalidText, "document '" + id_ + "': " + e.what());
  }
}

std::string Document::substr(std::size_t start, std::size_t end) const {
  if (start > end || end > length()) {
    throw Error(ErrorKind::kOffsetOutOfBounds,
                "[" + std::to_string(start) + ", " + std::to_string(end) +
                    ") outside document '" + id_ + "' of length " +
                    std::to_string(length()));
  }
  return text_.substr(offsets_[start], offsets_[end] - offsets_[start]);
}

const std::set<std::string>& Corpus::applicable_for(const AnnotatedInstance& inst) const {
  if (!inst.source.empty()) {
    auto it = source_applicable.find(inst.source);
    if (it != source_applicable.end()) return it->second;
  }
  return applicable;
}

const Document& Corpus::document(const std::string& id) const {
  auto it = documents.find(id);
  if (it == documents.end()) {
    throw Error(ErrorKind::kInvalidArgument, "unknown document '" + id + "'");
  }
  return it->second;
}

std::optional<std::string> Corpus::resolved_label(const AnnotatedInstance& inst,
                                                  const std::string& modifier) const {
  if (!applicable_for(inst).count(modifier)) return std::nullopt;
  auto it = inst.labels.find(modifier);
  if (it != inst.labels.end()) return it->second;
  return schema.at(modifier).default_label;
}

namespace {

void validate_spans(const Document& doc, const std::vector<Span>& spans) {
  if (spans.empty()) throw Error(ErrorKind::kInvalidArgument, "mention without spans");
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.start >= s.end || s.end > doc.length()) {
      throw Error(ErrorKind::kOffsetOutOfBounds,
                  "span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                      ") in document '" + doc.id() + "' of length " +
                      std::to_string(doc.length()));
    }
    if (i > 0 && spans[i - 1].end > s.start) {
      throw Error(ErrorKind::kInvalidArgument,
                  "overlapping or unsorted spans in document '" + doc.id() + "'");
    }
  }
}

}  // namespace

EntityMention make_mention(const Document& doc, std::vector<Span> spans,
                           std::string type) {
  std::sort(spans.begin(), spans.end());
  validate_spans(doc, spans);
  EntityMention m;
  m.doc_id = doc.id();
  m.type = std::move(type);
  m.spans = std::move(spans);
  for (const auto& s : m.spans) m.surface.push_back(doc.substr(s.start, s.end));
  return m;
}

void Corpus::validate() const {
  for (const auto& name : applicable) {
    if (!schema.find(name)) {
      throw Error(ErrorKind::kUnknownModifier, "applicable modifier '" + name + "'");
    }
  }
  std::unordered_set<std::string> ids;
  for (const auto& inst : instances) {
    if (!ids.insert(inst.id).second) {
      throw Error(ErrorKind::kInvalidArgument, "duplicate instance id '" + inst.id + "'");
    }
    const Document& doc = document(inst.mention.doc_id);
    validate_spans(doc, inst.mention.spans);
    if (inst.mention.surface.size() != inst.mention.spans.size()) {
      throw Error(ErrorKind::kSurfaceMismatch, "instance '" + inst.id + "'");
    }
    for (std::size_t i = 0; i < inst.mention.spans.size(); ++i) {
      const auto& s = inst.mention.spans[i];
      if (doc.substr(s.start, s.end) != inst.mention.surface[i]) {
        throw Error(ErrorKind::kSurfaceMismatch,
                    "instance '" + inst.id + "': '" + inst.mention.surface[i] + "' vs '" +
                        doc.substr(s.start, s.end) + "'");
      }
    }
    for (const auto& [mod, label] : inst.labels) {
      const ModifierDef* def = schema.find(mod);
      if (!def) throw Error(ErrorKind::kUnknownModifier, mod + " on " + inst.id);
      if (!def->label_index(label)) {
        throw Error(ErrorKind::kUnknownLabel, mod + "=" + label + " on " + inst.id);
      }
    }
  }
}

bool same_content(const Corpus& a, const Corpus& b) {
  if (!(a.schema == b.schema) || a.applicable != b.applicable) return false;
  if (a.documents.size() != b.documents.size()) return false;
  for (const auto& [id, doc] : a.documents) {
    auto it = b.documents.find(id);
    if (it == b.documents.end() || it->second.text() != doc.text()) return false;
  }
  if (a.instances.size() != b.instances.size()) return false;
  // Instance order is not part of the content.
  using Key = std::tuple<std::string, std::vector<Span>, std::vector<std::string>,
                         std::map<std::string, std::string>>;
  auto keys = [](const Corpus& c) {
    std::vector<Key> out;
    for (const auto& inst : c.instances) {
      out.emplace_back(inst.mention.doc_id, inst.mention.spans, inst.mention.surface,
                       inst.labels);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  return keys(a) == keys(b);
}

Corpus subset(const Corpus& corpus, const std::vector<std::size_t>& indices) {
  Corpus out;
  out.schema = corpus.schema;
  out.applicable = corpus.applicable;
  out.source_applicable = corpus.source_applicable;
  for (std::size_t idx : indices) {
    const auto& inst = corpus.instances.at(idx);
    out.instances.push_back(inst);
    if (!out.documents.count(inst.mention.doc_id)) {
      out.documents.emplace(inst.mention.doc_id, corpus.document(inst.mention.doc_id));
    }
  }
  return out;
}

CorpusSplits split_corpus(const Corpus& corpus, const SplitRatios& ratios,
                          std::uint64_t seed, bool by_document) {
  if (corpus.instances.empty()) throw Error(ErrorKind::kEmptyCorpus, "nothing to split");
  if (!(ratios.train > 0 && ratios.dev > 0 && ratios.test > 0) ||
      std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9) {
    throw Error(ErrorKind::kInvalidArgument,
                "split ratios must be positive and sum to 1");
  }
  const std::size_t n = corpus.instances.size();
  // The small slack keeps e.g. 0.29 * 100 from flooring to 28.
  const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * n + 1e-9));
  const auto n_dev = static_cast<std::size_t>(std::floor(ratios.dev * n + 1e-9));

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train_idx, dev_idx, test_idx;
  if (!by_document) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    train_idx.assign(order.begin(), order.begin() + n_train);
    dev_idx.assign(order.begin() + n_train, order.begin() + n_train + n_dev);
    test_idx.assign(order.begin() + n_train + n_dev, order.end());
  } else {
    std::map<std::string, std::vector<std::size_t>> by_doc;
    for (std::size_t i = 0; i < n; ++i) by_doc[corpus.instances[i].mention.doc_id].push_back(i);
    std::vector<std::string> docs;
    for (const auto& [id, _] : by_doc) docs.push_back(id);
    std::shuffle(docs.begin(), docs.end(), rng);
    for (const auto& id : docs) {
      auto& target = train_idx.size() < n_train ? train_idx
                     : dev_idx.size() < n_dev   ? dev_idx
                                                : test_idx;
      const auto& members = by_doc[id];
      target.insert(target.end(), members.begin(), members.end());
    }
  }
  for (auto* v : {&train_idx, &dev_idx, &test_idx}) std::sort(v->begin(), v->end());
  return {subset(corpus, train_idx), subset(corpus, dev_idx), subset(corpus, test_idx)};
}

namespace {

std::string namespaced(const std::string& ns, const std::string& id) {
  return ns + "__" + id;
}

void append_namespaced(const Corpus& src, const std::string& ns, Corpus& out) {
  for (const auto& [id, doc] : src.documents) {
    const std::string new_id = namespaced(ns, id);
    out.documents.emplace(new_id, Document(new_id, doc.text()));
  }
  for (const auto& inst : src.instances) {
    AnnotatedInstance copy = inst;
    copy.id = namespaced(ns, inst.id);
    copy.mention.doc_id = namespaced(ns, inst.mention.doc_id);
    copy.source = inst.source.empty() ? ns : ns + "." + inst.source;
    const auto& scope = src.applicable_for(inst);
    std::map<std::string, std::string> kept;
    for (const auto& [mod, label] : inst.labels) {
      if (scope.count(mod)) kept.emplace(mod, label);
    }
    copy.labels = std::move(kept);
    out.source_applicable[copy.source] = scope;
    out.instances.push_back(std::move(copy));
  }
}

}  // namespace

Corpus merge_corpora(const Corpus& a, const Corpus& b, const std::string& ns_a,
                     const std::string& ns_b) {
  if (ns_a == ns_b) throw Error(ErrorKind::kInvalidArgument, "namespaces must differ");
  std::vector<ModifierDef> defs = a.schema.modifiers();
  for (const auto& mb : b.schema.modifiers()) {
    if (const ModifierDef* ma = a.schema.find(mb.name)) {
      if (ma->labels != mb.labels || ma->default_label != mb.default_label) {
        auto join = [](const std::vector<std::string>& v) {
          std::string s;
          for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
          return "[" + s + "]";
        };
        throw Error(ErrorKind::kSchemaConflict,
                    mb.name + ": " + join(ma->labels) + " (default " + ma->default_label +
                        ") vs " + join(mb.labels) + " (default " + mb.default_label + ")");
      }
    } else {
      defs.push_back(mb);
    }
  }
  Corpus out;
  out.schema = ModifierSchema(std::move(defs));
  out.applicable = a.applicable;
  out.applicable.insert(b.applicable.begin(), b.applicable.end());
  append_namespaced(a, ns_a, out);
  append_namespaced(b, ns_b, out);
  return out;
}

Corpus restrict_to_modifiers(const Corpus& corpus, const std::set<std::string>& modifiers) {
  for (const auto& name : modifiers) {
    if (!corpus.schema.find(name)) {
      throw Error(ErrorKind::kUnknownModifier, "'" + name + "' is not in the schema");
    }
  }
  auto keep = [&](const std::set<std::string>& names) {
    std::set<std::string> out;
    for (const auto& n : names) {
      if (modifiers.count(n)) out.insert(n);
    }
    return out;
  };
  Corpus out;
  out.schema = corpus.schema.restricted_to(modifiers);
  out.documents = corpus.documents;
  out.applicable = keep(corpus.applicable);
  for (const auto& [src, scope] : corpus.source_applicable) out.source_applicable[src] = keep(scope);
  for (const auto& inst : corpus.instances) {
    AnnotatedInstance copy = inst;
    copy.labels.clear();
    for (const auto& [name, label] : inst.labels) {
      if (modifiers.count(name)) copy.labels.emplace(name, label);
    }
    out.instances.push_back(std::move(copy));
  }
  return out;
}

Corpus restrict_to_modifier(const Corpus& corpus, const std::string& modifier) {
  return restrict_to_modifiers(corpus, {modifier});
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  stats.documents = corpus.documents.size();
  stats.entities = corpus.instances.size();
  for (const auto& m : corpus.schema.modifiers()) {
    if (!corpus.applicable.count(m.name)) continue;
    stats.modifiers.push_back(m.name);
    stats.non_default[m.name] = 0;
    auto& counts = stats.label_counts[m.name];
    for (const auto& l : m.labels) counts[l] = 0;
  }
  for (const auto& inst : corpus.instances) {
    for (const auto& name : stats.modifiers) {
      auto label = corpus.resolved_label(inst, name);
      if (!label) continue;
      ++stats.label_counts[name][*label];
      if (*label != corpus.schema.at(name).default_label) ++stats.non_default[name];
    }
  }
  return stats;
}

}  // namespace modtl
