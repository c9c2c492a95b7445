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

#ifndef MODTL_CORPUS_HPP_
#define MODTL_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

namespace modtl {

// One modifier type with its ordered label universe. The default label is
// what an unannotated mention resolves to.
struct ModifierDef {
  std::string name;
  std::vector<std::string> labels;
  std::string default_label;

  std::optional<int> label_index(std::string_view label) const;
  int default_index() const;

  bool operator==(const ModifierDef&) const = default;
};

class ModifierSchema {
 public:
  ModifierSchema() = default;
  // Validates: unique names, >= 2 duplicate-free labels, default in labels.
  explicit ModifierSchema(std::vector<ModifierDef> modifiers);

  const std::vector<ModifierDef>& modifiers() const { return modifiers_; }
  std::size_t size() const { return modifiers_.size(); }
  bool empty() const { return modifiers_.empty(); }

  const ModifierDef* find(std::string_view name) const;
  const ModifierDef& at(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::vector<std::string> names() const;

  // Schema holding only the named modifiers, in this schema's order.
  ModifierSchema restricted_to(const std::set<std::string>& names) const;

  bool operator==(const ModifierSchema&) const = default;

 private:
  std::vector<ModifierDef> modifiers_;
};

nlohmann::json to_json(const ModifierSchema& schema);
ModifierSchema schema_from_json(const nlohmann::json& j);

// A document's raw text. Offsets everywhere are code-point indices.
class Document {
 public:
  Document() = default;
  // Validates UTF-8 and non-empty text.
  Document(std::string id, std::string text);

  const std::string& id() const { return id_; }
  const std::string& text() const { return text_; }
  std::size_t length() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }

  // Code points [start, end) as UTF-8.
  std::string substr(std::size_t start, std::size_t end) const;

  bool operator==(const Document& other) const {
    return id_ == other.id_ && text_ == other.text_;
  }

 private:
  std::string id_;
  std::string text_;
  std::vector<std::size_t> offsets_;
};

struct Span {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive

  bool operator==(const Span&) const = default;
  auto operator<=>(const Span&) const = default;
};

struct EntityMention {
  std::string doc_id;
  std::string type = "Entity";
  std::vector<Span> spans;
  std::vector<std::string> surface;  // one per span

  bool operator==(const EntityMention&) const = default;
};

struct AnnotatedInstance {
  std::string id;
  EntityMention mention;
  std::map<std::string, std::string> labels;
  // Source tag assigned by merge_corpora; empty for unmerged corpora.
  std::string source;

  bool operator==(const AnnotatedInstance&) const = default;
};

struct Corpus {
  ModifierSchema schema;
  std::map<std::string, Document> documents;
  std::vector<AnnotatedInstance> instances;
  std::set<std::string> applicable;
  // Per-source applicable sets for merged corpora.
  std::map<std::string, std::set<std::string>> source_applicable;

  // Modifiers annotated for this instance's source corpus.
  const std::set<std::string>& applicable_for(const AnnotatedInstance& inst) const;

  const Document& document(const std::string& id) const;

  // Resolved gold label for a modifier: the annotation, or the schema default
  // when the modifier is applicable to the instance. Empty when masked.
  std::optional<std::string> resolved_label(const AnnotatedInstance& inst,
                                            const std::string& modifier) const;

  // Throws on any broken invariant (dangling doc ids, bad spans, unknown
  // labels, surface mismatch).
  void validate() const;
};

// Equality on document texts, mention spans/surfaces and labels.
bool same_content(const Corpus& a, const Corpus& b);

// Sorted, validated spans; surfaces read from the document.
EntityMention make_mention(const Document& doc, std::vector<Span> spans,
                           std::string type = "Entity");

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct CorpusSplits {
  Corpus train;
  Corpus dev;
  Corpus test;
};

// Entity-based split by default; document-based keeps every instance of a
// document in one split (instance counts then only approximate the ratios).
CorpusSplits split_corpus(const Corpus& corpus, const SplitRatios& ratios,
                          std::uint64_t seed, bool by_document = false);

// Union of schemas, documents and instances. Document and instance ids are
// namespaced as "<ns>__<id>".
Corpus merge_corpora(const Corpus& a, const Corpus& b,
                     const std::string& ns_a = "a", const std::string& ns_b = "b");

// Corpus keeping the given subset of instances (in order) and the documents
// they reference.
Corpus subset(const Corpus& corpus, const std::vector<std::size_t>& indices);

// View keeping only the named modifiers (schema, applicability and labels).
// Names must be in the schema.
Corpus restrict_to_modifiers(const Corpus& corpus, const std::set<std::string>& modifiers);

// Single-modifier view used for single-task training.
Corpus restrict_to_modifier(const Corpus& corpus, const std::string& modifier);

// Instance and per-modifier non-default counts.
struct CorpusStats {
  std::size_t documents = 0;
  std::size_t entities = 0;
  std::vector<std::string> modifiers;
  std::map<std::string, std::size_t> non_default;
  std::map<std::string, std::map<std::string, std::size_t>> label_counts;
};

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace modtl

#endif  // MODTL_CORPUS_HPP_
