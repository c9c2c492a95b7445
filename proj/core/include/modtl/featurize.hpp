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

#ifndef MODTL_FEATURIZE_HPP_
#define MODTL_FEATURIZE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "modtl/corpus.hpp"

namespace modtl {

struct ContextWindow {
  std::string text;
  std::vector<Span> mention_offsets;  // relative to the window
  Span doc_span;                      // window in document coordinates
};

// Window of `before` characters left of the first span and `after` right of
// the last span, clamped to the document.
ContextWindow extract_context(const Document& doc, const EntityMention& mention,
                              std::size_t before = 200, std::size_t after = 50);

struct SequencePair {
  std::string first;
  std::string second;  // empty for the no-hint encoding
};

SequencePair build_pair(const ContextWindow& window, const EntityMention& mention,
                        bool hint);

// Text-to-token interface so a subword tokenizer can replace the word one.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
};

// Lower-cases, splits on Unicode whitespace, emits punctuation marks as
// single tokens.
class WordTokenizer final : public Tokenizer {
 public:
  explicit WordTokenizer(bool lowercase = true) : lowercase_(lowercase) {}
  std::vector<std::string> tokenize(std::string_view text) const override;
  bool lowercase() const { return lowercase_; }

 private:
  bool lowercase_;
};

inline constexpr std::int32_t kClsId = 0;
inline constexpr std::int32_t kSepId = 1;
inline constexpr std::int32_t kPadId = 2;
inline constexpr std::int32_t kUnkId = 3;
inline constexpr std::size_t kNumSpecialTokens = 4;

class TokenizerVocab {
 public:
  TokenizerVocab();
  // tokens excludes the four specials; ids start at kNumSpecialTokens.
  TokenizerVocab(std::vector<std::string> tokens, bool lowercase);

  std::int32_t id(std::string_view token) const;  // kUnkId when absent
  const std::string& token(std::int32_t id) const;
  std::size_t size() const { return tokens_.size(); }
  bool lowercase() const { return lowercase_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<std::int32_t> encode(std::string_view text) const;
  std::uint64_t hash() const;

  bool operator==(const TokenizerVocab& other) const {
    return tokens_ == other.tokens_ && lowercase_ == other.lowercase_;
  }

 private:
  std::vector<std::string> tokens_;  // includes specials
  std::unordered_map<std::string, std::int32_t> index_;
  bool lowercase_ = true;
  WordTokenizer tokenizer_;
};

nlohmann::json to_json(const TokenizerVocab& vocab);
TokenizerVocab vocab_from_json(const nlohmann::json& j);

// Vocabulary over all document texts, ordered by descending frequency then
// lexicographically. Tokens seen fewer than min_freq times are left out.
TokenizerVocab build_vocab(const Corpus& corpus, std::size_t min_freq = 1);

struct EncodedExample {
  std::string instance_id;
  std::vector<std::int32_t> token_ids;
  std::vector<std::uint8_t> segment_ids;
  std::vector<std::uint8_t> attention_mask;
  std::map<std::string, int> gold;        // modifier -> label index
  std::map<std::string, bool> head_mask;  // modifier -> participates in loss
  Span window_doc_span;

  std::size_t real_length() const;

  bool operator==(const EncodedExample&) const = default;
};

// CLS first [SEP] (second [SEP]), padded to max_len. Overlong inputs drop
// first-sequence tokens from the left.
EncodedExample encode(const SequencePair& pair, const TokenizerVocab& vocab,
                      std::map<std::string, int> gold,
                      std::map<std::string, bool> head_mask,
                      std::size_t max_len = 144);

struct FeatureConfig {
  std::size_t before = 200;
  std::size_t after = 50;
  std::size_t max_len = 144;
  bool hint = true;
  std::size_t min_freq = 1;

  std::uint64_t hash() const;
};

// One example per instance. Every schema modifier appears in head_mask;
// modifiers applicable to the instance's source carry gold (annotated or
// default), the rest are masked.
EncodedExample featurize_instance(const Corpus& corpus, const AnnotatedInstance& inst,
                                  const TokenizerVocab& vocab,
                                  const FeatureConfig& config);

std::vector<EncodedExample> featurize_corpus(const Corpus& corpus,
                                             const TokenizerVocab& vocab,
                                             const FeatureConfig& config,
                                             unsigned threads = 1);

// Binary cache of encoded examples keyed by vocab and feature-config hashes.
void write_cache(const std::filesystem::path& path,
                 const std::vector<EncodedExample>& examples,
                 std::uint64_t vocab_hash, std::uint64_t config_hash);

// nullopt when the file is missing, stale or from another format version.
std::optional<std::vector<EncodedExample>> read_cache(
    const std::filesystem::path& path, std::uint64_t vocab_hash,
    std::uint64_t config_hash);

}  // namespace modtl

#endif  // MODTL_FEATURIZE_HPP_
