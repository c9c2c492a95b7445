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

#include "modtl/featurize.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "modtl/error.hpp"
#include "modtl/parallel.hpp"
#include "modtl/text.hpp"

namespace modtl {

ContextWindow extract_context(const Document& doc, const EntityMention& mention,
                              std::size_t before, std::size_t after) {
  if (mention.spans.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "mention has no spans");
  }
  const std::size_t first = mention.spans.front().start;
  const std::size_t last = mention.spans.back().end;
  if (last > doc.length() || first >= last) {
    throw Error(ErrorKind::kOffsetOutOfBounds,
                "mention spans outside document '" + doc.id() + "'");
  }
  ContextWindow w;
  w.doc_span.start = first >= before ? first - before : 0;
  w.doc_span.end = std::min(doc.length(), last + after);
  w.text = doc.substr(w.doc_span.start, w.doc_span.end);
  for (const auto& s : mention.spans) {
    w.mention_offsets.push_back({s.start - w.doc_span.start, s.end - w.doc_span.start});
  }
  return w;
}

SequencePair build_pair(const ContextWindow& window, const EntityMention& mention,
                        bool hint) {
  SequencePair p{window.text, {}};
  if (hint) {
    for (std::size_t i = 0; i < mention.surface.size(); ++i) {
      if (i > 0) p.second += ' ';
      p.second += mention.surface[i];
    }
  }
  return p;
}

std::vector<std::string> WordTokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  std::u32string current;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(text::encode_utf8(current));
      current.clear();
    }
  };
  for (char32_t c : text::decode_utf8(text)) {
    if (text::is_whitespace(c)) {
      flush();
    } else if (text::is_punctuation(c)) {
      flush();
      out.push_back(text::encode_utf8(std::u32string(1, c)));
    } else {
      current += lowercase_ ? text::fold_case(c) : c;
    }
  }
  flush();
  return out;
}

TokenizerVocab::TokenizerVocab() : TokenizerVocab({}, true) {}

TokenizerVocab::TokenizerVocab(std::vector<std::string> tokens, bool lowercase)
    : lowercase_(lowercase), tokenizer_(lowercase) {
  tokens_ = {"[CLS]", "[SEP]", "[PAD]", "[UNK]"};
  tokens_.insert(tokens_.end(), std::make_move_iterator(tokens.begin()),
                 std::make_move_iterator(tokens.end()));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second) {
      throw Error(ErrorKind::kInvalidArgument, "duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

std::int32_t TokenizerVocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end() || it->second < static_cast<std::int32_t>(kNumSpecialTokens)) {
    return kUnkId;
  }
  return it->second;
}

const std::string& TokenizerVocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "token id out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::int32_t> TokenizerVocab::encode(std::string_view text) const {
  std::vector<std::int32_t> ids;
  for (const auto& t : tokenizer_.tokenize(text)) ids.push_back(id(t));
  return ids;
}

std::uint64_t TokenizerVocab::hash() const {
  std::uint64_t h = text::fnv1a64(lowercase_ ? "lower" : "cased");
  for (const auto& t : tokens_) h = text::fnv1a64(t + '\n', h);
  return h;
}

nlohmann::json to_json(const TokenizerVocab& vocab) {
  std::vector<std::string> tokens(vocab.tokens().begin() + kNumSpecialTokens,
                                  vocab.tokens().end());
  return {{"lowercase", vocab.lowercase()}, {"tokens", tokens}};
}

TokenizerVocab vocab_from_json(const nlohmann::json& j) {
  return TokenizerVocab(j.at("tokens").get<std::vector<std::string>>(),
                        j.value("lowercase", true));
}

TokenizerVocab build_vocab(const Corpus& corpus, std::size_t min_freq) {
  if (corpus.documents.empty() || corpus.instances.empty()) {
    throw Error(ErrorKind::kEmptyCorpus, "cannot build a vocabulary from an empty corpus");
  }
  const WordTokenizer tokenizer(true);
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& [id, doc] : corpus.documents) {
    for (auto& t : tokenizer.tokenize(doc.text())) ++counts[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [t, c] : counts) {
    if (c >= std::max<std::size_t>(min_freq, 1)) entries.emplace_back(t, c);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(entries.size());
  for (auto& e : entries) tokens.push_back(std::move(e.first));
  return TokenizerVocab(std::move(tokens), true);
}

std::size_t EncodedExample::real_length() const {
  return static_cast<std::size_t>(
      std::count(attention_mask.begin(), attention_mask.end(), std::uint8_t{1}));
}

EncodedExample encode(const SequencePair& pair, const TokenizerVocab& vocab,
                      std::map<std::string, int> gold, std::map<std::string, bool> head_mask,
                      std::size_t max_len) {
  for (const auto& [m, on] : head_mask) {
    if (on && !gold.count(m)) {
      throw Error(ErrorKind::kInvalidArgument, "unmasked head '" + m + "' without gold label");
    }
  }
  std::vector<std::int32_t> a = vocab.encode(pair.first);
  const bool hint = !pair.second.empty();
  const std::vector<std::int32_t> b = hint ? vocab.encode(pair.second) : std::vector<std::int32_t>{};
  const std::size_t fixed = 2 + (hint ? b.size() + 1 : 0);
  if (fixed > max_len) {
    throw Error(ErrorKind::kHintTooLong, "hint of " + std::to_string(b.size()) +
                                             " tokens does not fit max_len " +
                                             std::to_string(max_len));
  }
  const std::size_t room = max_len - fixed;
  if (a.size() > room) a.erase(a.begin(), a.end() - static_cast<std::ptrdiff_t>(room));

  EncodedExample ex;
  ex.token_ids.assign(max_len, kPadId);
  ex.segment_ids.assign(max_len, 0);
  ex.attention_mask.assign(max_len, 0);
  std::size_t pos = 0;
  auto put = [&](std::int32_t id, std::uint8_t segment) {
    ex.token_ids[pos] = id;
    ex.segment_ids[pos] = segment;
    ex.attention_mask[pos] = 1;
    ++pos;
  };
  put(kClsId, 0);
  for (auto id : a) put(id, 0);
  put(kSepId, 0);
  if (hint) {
    for (auto id : b) put(id, 1);
    put(kSepId, 1);
  }
  ex.gold = std::move(gold);
  ex.head_mask = std::move(head_mask);
  return ex;
}

std::uint64_t FeatureConfig::hash() const {
  const std::string repr = "before=" + std::to_string(before) + ";after=" +
                           std::to_string(after) + ";max_len=" + std::to_string(max_len) +
                           ";hint=" + (hint ? "1" : "0") +
                           ";min_freq=" + std::to_string(min_freq);
  return text::fnv1a64(repr);
}

EncodedExample featurize_instance(const Corpus& corpus, const AnnotatedInstance& inst,
                                  const TokenizerVocab& vocab, const FeatureConfig& config) {
  const Document& doc = corpus.document(inst.mention.doc_id);
  const ContextWindow window = extract_context(doc, inst.mention, config.before, config.after);
  std::map<std::string, int> gold;
  std::map<std::string, bool> mask;
  for (const auto& def : corpus.schema.modifiers()) {
    auto label = corpus.resolved_label(inst, def.name);
    mask[def.name] = label.has_value();
    if (label) gold[def.name] = *def.label_index(*label);
  }
  EncodedExample ex = encode(build_pair(window, inst.mention, config.hint), vocab,
                             std::move(gold), std::move(mask), config.max_len);
  ex.instance_id = inst.id;
  ex.window_doc_span = window.doc_span;
  return ex;
}

std::vector<EncodedExample> featurize_corpus(const Corpus& corpus, const TokenizerVocab& vocab,
                                             const FeatureConfig& config, unsigned threads) {
  std::vector<EncodedExample> out(corpus.instances.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i] = featurize_instance(corpus, corpus.instances[i], vocab, config);
  });
  return out;
}

namespace {

constexpr char kCacheMagic[8] = {'M', 'O', 'D', 'T', 'L', 'F', 'C', '1'};

template <typename T>
void put_le(std::ostream& os, T value) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>(static_cast<std::uint64_t>(value) >> (8 * i));
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw Error(ErrorKind::kIo, "truncated feature cache");
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{buf[i]} << (8 * i);
  return static_cast<T>(v);
}

void put_string(std::ostream& os, const std::string& s) {
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  std::string s(get_le<std::uint32_t>(is), '\0');
  if (!is.read(s.data(), static_cast<std::streamsize>(s.size()))) {
    throw Error(ErrorKind::kIo, "truncated feature cache");
  }
  return s;
}

}  // namespace

void write_cache(const std::filesystem::path& path, const std::vector<EncodedExample>& examples,
                 std::uint64_t vocab_hash, std::uint64_t config_hash) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    os.write(kCacheMagic, sizeof(kCacheMagic));
    put_le<std::uint64_t>(os, vocab_hash);
    put_le<std::uint64_t>(os, config_hash);
    put_le<std::uint64_t>(os, examples.size());
    for (const auto& ex : examples) {
      put_string(os, ex.instance_id);
      put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ex.token_ids.size()));
      for (auto id : ex.token_ids) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(id));
      for (auto s : ex.segment_ids) put_le<std::uint8_t>(os, s);
      for (auto m : ex.attention_mask) put_le<std::uint8_t>(os, m);
      put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ex.head_mask.size()));
      for (const auto& [name, on] : ex.head_mask) {
        put_string(os, name);
        put_le<std::uint8_t>(os, on ? 1 : 0);
        auto it = ex.gold.find(name);
        put_le<std::uint32_t>(os, it == ex.gold.end() ? 0xffffffffu
                                                       : static_cast<std::uint32_t>(it->second));
      }
      put_le<std::uint64_t>(os, ex.window_doc_span.start);
      put_le<std::uint64_t>(os, ex.window_doc_span.end);
    }
    if (!os) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::optional<std::vector<EncodedExample>> read_cache(const std::filesystem::path& path,
                                                      std::uint64_t vocab_hash,
                                                      std::uint64_t config_hash) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[sizeof(kCacheMagic)];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) {
    return std::nullopt;
  }
  // A truncated or damaged cache is a miss, like a stale one.
  try {
    if (get_le<std::uint64_t>(is) != vocab_hash) return std::nullopt;
    if (get_le<std::uint64_t>(is) != config_hash) return std::nullopt;
    std::vector<EncodedExample> out(get_le<std::uint64_t>(is));
    for (auto& ex : out) {
      ex.instance_id = get_string(is);
      const std::size_t n = get_le<std::uint32_t>(is);
      ex.token_ids.resize(n);
      ex.segment_ids.resize(n);
      ex.attention_mask.resize(n);
      for (auto& id : ex.token_ids) id = static_cast<std::int32_t>(get_le<std::uint32_t>(is));
      for (auto& s : ex.segment_ids) s = get_le<std::uint8_t>(is);
      for (auto& m : ex.attention_mask) m = get_le<std::uint8_t>(is);
      const std::size_t heads = get_le<std::uint32_t>(is);
      for (std::size_t h = 0; h < heads; ++h) {
        std::string name = get_string(is);
        ex.head_mask[name] = get_le<std::uint8_t>(is) != 0;
        const std::uint32_t g = get_le<std::uint32_t>(is);
        if (g != 0xffffffffu) ex.gold[name] = static_cast<int>(g);
      }
      ex.window_doc_span.start = get_le<std::uint64_t>(is);
      ex.window_doc_span.end = get_le<std::uint64_t>(is);
    }
    return out;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace modtl
