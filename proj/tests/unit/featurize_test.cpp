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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "modtl/error.hpp"
#include "modtl/featurize.hpp"
#include "modtl/synthetic.hpp"
#include "support/fixtures.hpp"

namespace modtl {
namespace {

using testing::TempDir;

std::string words(std::size_t n, const std::string& stem = "w") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + stem + std::to_string(i);
  return s;
}

TokenizerVocab vocab_of(const std::string& text) {
  std::vector<std::string> tokens;
  for (auto& t : WordTokenizer().tokenize(text)) {
    if (std::find(tokens.begin(), tokens.end(), t) == tokens.end()) tokens.push_back(t);
  }
  return TokenizerVocab(tokens, true);
}

TEST(Context, WindowArithmetic) {
  const Document doc("d", std::string(1000, 'a'));
  const ContextWindow w = extract_context(doc, make_mention(doc, {{300, 310}}));
  EXPECT_EQ(w.doc_span, (Span{100, 360}));
  EXPECT_EQ(w.mention_offsets, (std::vector<Span>{{200, 210}}));
  EXPECT_EQ(w.text.size(), 260u);
}

TEST(Context, ClampsAtBothEnds) {
  const Document doc("d", std::string(1000, 'a'));
  EXPECT_EQ(extract_context(doc, make_mention(doc, {{0, 5}})).doc_span, (Span{0, 55}));
  EXPECT_EQ(extract_context(doc, make_mention(doc, {{10, 15}, {980, 990}})).doc_span, (Span{0, 1000}));
}

TEST(Context, MentionSurfaceSitsAtRelativeOffsets) {
  SynthConfig cfg = disorder_preset();
  cfg.num_instances = 200;
  cfg.mentions_per_document = 3;
  const Corpus c = generate_synthetic(cfg, 6).corpus;
  const std::vector<std::pair<std::size_t, std::size_t>> sizes = {{200, 50}, {10, 3}, {0, 0}};
  for (const auto& [before, after] : sizes) {
    for (const auto& inst : c.instances) {
      const Document& doc = c.document(inst.mention.doc_id);
      const ContextWindow w = extract_context(doc, inst.mention, before, after);
      const Document window("w", w.text);
      for (std::size_t k = 0; k < inst.mention.spans.size(); ++k) {
        EXPECT_EQ(window.substr(w.mention_offsets[k].start, w.mention_offsets[k].end), inst.mention.surface[k]);
      }
    }
  }
}

TEST(Pair, HintIsTheMentionSurface) {
  const std::string text = "was having hallucinations, suicidal ideations and";
  const Document doc("d", text);
  const auto mention = make_mention(doc, {{11, 25}});
  const auto pair = build_pair(extract_context(doc, mention), mention, true);
  EXPECT_EQ(pair.first, text);
  EXPECT_EQ(pair.second, "hallucinations");
  EXPECT_EQ(build_pair(extract_context(doc, mention), mention, false).second, "");
}

TEST(Pair, DiscontiguousSurfacesJoinWithSpace) {
  const Document doc("d", "left leg has swelling");
  const auto mention = make_mention(doc, {{0, 8}, {13, 21}});
  EXPECT_EQ(build_pair(extract_context(doc, mention), mention, true).second, "left leg swelling");
}

TEST(Tokenizer, SplitsPunctuationAndFoldsCase) {
  EXPECT_EQ(WordTokenizer().tokenize("No cough.  Fever,chills"),
            (std::vector<std::string>{"no", "cough", ".", "fever", ",", "chills"}));
  EXPECT_EQ(WordTokenizer(false).tokenize("No"), std::vector<std::string>{"No"});
  EXPECT_EQ(WordTokenizer().tokenize("\xC3\x89TAT"), std::vector<std::string>{"\xC3\xA9tat"});
}

Corpus one_doc(const std::string& text) {
  Corpus c;
  c.schema = ModifierSchema({{"negation", {"no", "yes"}, "no"}});
  c.applicable = {"negation"};
  c.documents.emplace("d", Document("d", text));
  AnnotatedInstance inst;
  inst.id = "d:T1";
  inst.mention = make_mention(c.documents.at("d"), {{0, 2}});
  c.instances.push_back(inst);
  return c;
}

TEST(Vocab, BuildsFromCorpusText) {
  const TokenizerVocab v = build_vocab(one_doc("No cough. No cough."));
  EXPECT_EQ(v.size(), kNumSpecialTokens + 3);
  EXPECT_EQ(v.token(kClsId), "[CLS]");
  EXPECT_EQ(v.token(kSepId), "[SEP]");
  EXPECT_EQ(v.token(kPadId), "[PAD]");
  EXPECT_EQ(v.token(kUnkId), "[UNK]");
  // Equal counts fall back to lexicographic order.
  EXPECT_EQ(v.token(4), ".");
  EXPECT_EQ(v.token(5), "cough");
  EXPECT_EQ(v.token(6), "no");
  EXPECT_EQ(v.id("fever"), kUnkId);
}

TEST(Vocab, MinFreqMapsRareTokensToUnk) {
  const TokenizerVocab v = build_vocab(one_doc("no cough no cough rare"), 2);
  EXPECT_EQ(v.id("rare"), kUnkId);
  EXPECT_NE(v.id("cough"), kUnkId);
  EXPECT_EQ(v.encode("rare cough")[0], kUnkId);
}

TEST(Vocab, SpecialsNeverProducedByText) {
  const TokenizerVocab v = build_vocab(one_doc("a [CLS] b [SEP] c"));
  for (auto id : v.encode("[CLS] [SEP] [PAD] [UNK]")) {
    EXPECT_GE(id, static_cast<std::int32_t>(kNumSpecialTokens) - 1);
    EXPECT_NE(id, kClsId);
    EXPECT_NE(id, kSepId);
    EXPECT_NE(id, kPadId);
  }
}

TEST(Vocab, DeterministicAndSerializable) {
  SynthConfig cfg = disorder_preset();
  cfg.num_instances = 100;
  const Corpus c = generate_synthetic(cfg, 1).corpus;
  const TokenizerVocab a = build_vocab(c);
  const TokenizerVocab b = build_vocab(c);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.hash(), b.hash());
  const TokenizerVocab back = vocab_from_json(to_json(a));
  EXPECT_EQ(back, a);
  EXPECT_EQ(back.hash(), a.hash());
  EXPECT_THROW(build_vocab(Corpus{}), Error);
}

TEST(Encode, LayoutWithHint) {
  const std::string first = words(3);
  const TokenizerVocab v = vocab_of(first + " m");
  const EncodedExample ex = encode({first, "m"}, v, {}, {}, 144);
  EXPECT_EQ(ex.token_ids.size(), 144u);
  EXPECT_EQ(ex.real_length(), 7u);
  EXPECT_EQ(ex.token_ids[0], kClsId);
  EXPECT_EQ(ex.token_ids[4], kSepId);
  EXPECT_EQ(ex.token_ids[5], v.id("m"));
  EXPECT_EQ(ex.token_ids[6], kSepId);
  EXPECT_EQ(ex.token_ids[7], kPadId);
  EXPECT_EQ(ex.segment_ids[4], 0);
  EXPECT_EQ(ex.segment_ids[5], 1);
  EXPECT_EQ(ex.segment_ids[6], 1);
}

TEST(Encode, LeftTruncatesFirstSequence) {
  const std::string first = words(200);
  const TokenizerVocab v = vocab_of(first + " m1 m2");
  const EncodedExample ex = encode({first, "m1 m2"}, v, {}, {}, 144);
  EXPECT_EQ(ex.real_length(), 144u);
  EXPECT_EQ(ex.token_ids[1], v.id("w61"));
  EXPECT_EQ(ex.token_ids[139], v.id("w199"));
  EXPECT_EQ(ex.token_ids[140], kSepId);
  EXPECT_EQ(ex.token_ids[141], v.id("m1"));
  EXPECT_EQ(ex.token_ids[142], v.id("m2"));
  EXPECT_EQ(ex.token_ids[143], kSepId);
}

TEST(Encode, NoHintHasSingleSep) {
  const std::string first = words(5);
  const TokenizerVocab v = vocab_of(first);
  const EncodedExample ex = encode({first, ""}, v, {}, {}, 16);
  EXPECT_EQ(std::count(ex.token_ids.begin(), ex.token_ids.end(), kSepId), 1);
  EXPECT_TRUE(std::all_of(ex.segment_ids.begin(), ex.segment_ids.end(), [](auto s) { return s == 0; }));
}

TEST(Encode, HintTooLong) {
  const TokenizerVocab v = vocab_of(words(10));
  try {
    encode({"w0", words(10)}, v, {}, {}, 12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kHintTooLong);
  }
  EXPECT_NO_THROW(encode({"w0", words(10)}, v, {}, {}, 13));
}

TEST(Encode, UnmaskedHeadNeedsGold) {
  const TokenizerVocab v = vocab_of("a");
  EXPECT_THROW(encode({"a", "a"}, v, {}, {{"negation", true}}, 8), Error);
}

TEST(Encode, PropertiesOverRandomLengths) {
  std::mt19937_64 rng(17);
  const TokenizerVocab v = vocab_of(words(300) + " " + words(20, "h"));
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t max_len = 8 + rng() % 60;
    const std::size_t na = rng() % 120;
    const std::size_t nb = 1 + rng() % 4;
    const bool hint = rng() % 4 != 0;
    const std::string second = hint ? words(nb, "h") : "";
    const EncodedExample ex = encode({words(na), second}, v, {}, {}, max_len);
    ASSERT_EQ(ex.token_ids.size(), max_len);
    ASSERT_EQ(ex.segment_ids.size(), max_len);
    ASSERT_EQ(ex.attention_mask.size(), max_len);
    EXPECT_TRUE(std::is_sorted(ex.attention_mask.rbegin(), ex.attention_mask.rend()));
    EXPECT_EQ(ex.token_ids[0], kClsId);
    EXPECT_EQ(std::count(ex.token_ids.begin(), ex.token_ids.end(), kSepId), hint ? 2 : 1);
    const std::size_t len = ex.real_length();
    if (hint) {
      for (std::size_t k = 0; k < nb; ++k) {
        EXPECT_EQ(ex.token_ids[len - 1 - nb + k], v.id("h" + std::to_string(k)));
      }
    }
    EXPECT_EQ(len, std::min(max_len, 2 + na + (hint ? nb + 1 : 0)));
    EXPECT_EQ(encode({words(na), second}, v, {}, {}, max_len), ex);
  }
}

TEST(Featurize, GoldAndMaskFollowSchema) {
  SynthConfig cfg = substance_use_preset();
  cfg.num_instances = 50;
  const Corpus c = generate_synthetic(cfg, 3).corpus;
  const TokenizerVocab v = build_vocab(c);
  FeatureConfig fc;
  fc.max_len = 64;
  const auto examples = featurize_corpus(c, v, fc, 3);
  ASSERT_EQ(examples.size(), 50u);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    EXPECT_EQ(ex.instance_id, c.instances[i].id);
    EXPECT_FALSE(ex.head_mask.at("severity"));
    EXPECT_FALSE(ex.gold.count("severity"));
    for (const auto& name : c.applicable) {
      EXPECT_TRUE(ex.head_mask.at(name));
      EXPECT_EQ(c.schema.at(name).labels[ex.gold.at(name)], *c.resolved_label(c.instances[i], name));
    }
    EXPECT_EQ(ex, featurize_instance(c, c.instances[i], v, fc));
  }
  EXPECT_EQ(examples, featurize_corpus(c, v, fc, 1));
}

TEST(Cache, RoundTripsAndInvalidates) {
  SynthConfig cfg = disorder_preset();
  cfg.num_instances = 30;
  const Corpus c = generate_synthetic(cfg, 3).corpus;
  const TokenizerVocab v = build_vocab(c);
  FeatureConfig fc;
  const auto examples = featurize_corpus(c, v, fc);
  TempDir dir("cache");
  const auto path = dir / "train.features";
  write_cache(path, examples, v.hash(), fc.hash());
  const auto hit = read_cache(path, v.hash(), fc.hash());
  ASSERT_TRUE(hit);
  EXPECT_EQ(*hit, examples);
  FeatureConfig other = fc;
  other.hint = false;
  EXPECT_FALSE(read_cache(path, v.hash(), other.hash()));
  EXPECT_FALSE(read_cache(path, v.hash() + 1, fc.hash()));
  EXPECT_FALSE(read_cache(dir / "missing", v.hash(), fc.hash()));
  const std::string bytes = testing::read_file(path);
  testing::write_file(path, bytes.substr(0, bytes.size() / 2));
  EXPECT_FALSE(read_cache(path, v.hash(), fc.hash()));
}

}  // namespace
}  // namespace modtl
