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

#include "modtl/standoff.hpp"
#include "modtl/synthetic.hpp"
#include "support/fixtures.hpp"

namespace modtl {
namespace {

using testing::TempDir;
using testing::write_file;

const char* kSchema = R"({"modifiers": [
  {"name": "Negation", "labels": ["no", "yes"], "default": "no"},
  {"name": "Severity", "labels": ["unmarked", "severe"], "default": "unmarked"}]})";

const std::string kText = "Patient cough. left leg has swelling now";

TempDir corpus_dir(const std::string& ann) {
  TempDir dir("standoff");
  write_file(dir / "schema.json", kSchema);
  write_file(dir / "d1.txt", kText);
  write_file(dir / "d1.ann", ann);
  return dir;
}

std::vector<Diagnostic> parse_errors(const std::string& ann) {
  TempDir dir = corpus_dir(ann);
  try {
    parse_standoff(dir.path());
  } catch (const CorpusError& e) {
    return e.diagnostics();
  }
  return {};
}

TEST(Standoff, ParsesEntityWithAttribute) {
  TempDir dir = corpus_dir("T1\tDisorder 8 13\tcough\nA1\tNegation T1 yes\n");
  const Corpus c = parse_standoff(dir.path());
  ASSERT_EQ(c.instances.size(), 1u);
  const auto& inst = c.instances[0];
  EXPECT_EQ(inst.id, "d1:T1");
  EXPECT_EQ(inst.mention.type, "Disorder");
  EXPECT_EQ(inst.mention.spans, (std::vector<Span>{{8, 13}}));
  EXPECT_EQ(inst.labels, (std::map<std::string, std::string>{{"Negation", "yes"}}));
  EXPECT_EQ(c.resolved_label(inst, "Severity"), "unmarked");
}

TEST(Standoff, DiscontiguousSpans) {
  TempDir dir = corpus_dir("T2\tDisorder 15 23;28 36\tleft leg;swelling\n");
  const Corpus c = parse_standoff(dir.path());
  ASSERT_EQ(c.instances.size(), 1u);
  EXPECT_EQ(c.instances[0].mention.spans.size(), 2u);
  EXPECT_EQ(c.instances[0].mention.surface, (std::vector<std::string>{"left leg", "swelling"}));
  // The space-joined form of the fragments is accepted as well.
  TempDir joined = corpus_dir("T2\tDisorder 15 23;28 36\tleft leg swelling\n");
  EXPECT_EQ(parse_standoff(joined.path()).instances[0].mention.surface.size(), 2u);
}

TEST(Standoff, OffsetBeyondDocument) {
  const auto errors = parse_errors("T1\tDisorder 30 99\tswelling now\n");
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].kind, ErrorKind::kOffsetOutOfBounds);
  EXPECT_EQ(errors[0].line, 1u);
}

TEST(Standoff, CollectsEveryProblem) {
  const auto errors = parse_errors(
      "T1\tDisorder 8 13\tcougx\n"
      "T2\tDisorder 8 13\tcough\n"
      "A1\tNegation T2 maybe\n"
      "A2\tCourse T2 improved\n"
      "T3 broken line\n"
      "A3\tNegation T9 yes\n");
  std::vector<ErrorKind> kinds;
  for (const auto& d : errors) kinds.push_back(d.kind);
  EXPECT_EQ(kinds, (std::vector<ErrorKind>{ErrorKind::kSurfaceMismatch, ErrorKind::kMalformedLine,
                                           ErrorKind::kUnknownLabel, ErrorKind::kUnknownModifier,
                                           ErrorKind::kMalformedLine}));
  EXPECT_EQ(errors[0].line, 1u);
  EXPECT_EQ(errors[1].line, 5u);
  EXPECT_EQ(errors[2].file, "d1.ann");
}

TEST(Standoff, IgnoresOtherAnnotationKindsAndWarnsOnDuplicates) {
  TempDir dir = corpus_dir(
      "# comment\n"
      "T1\tDisorder 8 13\tcough\n"
      "R1\tRel Arg1:T1 Arg2:T1\n"
      "N1\tReference T1 db:1\tcough\n"
      "A1\tNegation T1 yes\n"
      "A2\tNegation T1 no\n");
  std::vector<Diagnostic> warnings;
  const Corpus c = parse_standoff(dir.path(), &warnings);
  EXPECT_EQ(c.instances.at(0).labels.at("Negation"), "yes");
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_EQ(warnings[0].line, 6u);
}

TEST(Standoff, MissingPairIsAnError) {
  TempDir dir = corpus_dir("T1\tDisorder 8 13\tcough\n");
  write_file(dir / "orphan.txt", "text");
  EXPECT_THROW(parse_standoff(dir.path()), CorpusError);
}

TEST(Standoff, RoundTripSyntheticCorpus) {
  SynthConfig cfg = disorder_preset();
  cfg.num_instances = 120;
  cfg.mentions_per_document = 3;
  const Corpus c = generate_synthetic(cfg, 4).corpus;
  TempDir dir("roundtrip");
  write_standoff(c, dir.path());
  const Corpus back = parse_standoff(dir.path(), nullptr, 3);
  EXPECT_TRUE(same_content(c, back));
  EXPECT_NO_THROW(back.validate());
}

TEST(Standoff, RoundTripDiscontiguousAndUnicode) {
  Corpus c;
  c.schema = ModifierSchema({{"Negation", {"no", "yes"}, "no"}});
  c.applicable = {"Negation"};
  c.documents.emplace("u", Document("u", "d\xC3\xA9nies fi\xC3\xA8vre; left leg swelling"));
  AnnotatedInstance a;
  a.id = "u:T1";
  a.mention = make_mention(c.documents.at("u"), {{7, 13}});
  a.labels["Negation"] = "yes";
  AnnotatedInstance b;
  b.id = "u:T2";
  b.mention = make_mention(c.documents.at("u"), {{15, 23}, {24, 32}});
  c.instances = {a, b};
  TempDir dir("roundtrip");
  write_standoff(c, dir.path());
  EXPECT_TRUE(same_content(c, parse_standoff(dir.path())));
  TempDir jdir("roundtrip-jsonl");
  write_jsonl_corpus(c, jdir.path());
  const Corpus back = load_corpus(jdir.path());
  EXPECT_TRUE(same_content(c, back));
  EXPECT_EQ(back.instances, c.instances);
}

TEST(Standoff, MergedCorpusKeepsSourceScopes) {
  SynthConfig ca = disorder_preset();
  ca.num_instances = 20;
  SynthConfig cb = substance_use_preset();
  cb.num_instances = 20;
  const Corpus m = merge_corpora(generate_synthetic(ca, 1).corpus, generate_synthetic(cb, 1).corpus);
  TempDir dir("merged");
  write_jsonl_corpus(m, dir.path());
  const Corpus back = load_corpus(dir.path());
  EXPECT_EQ(back.source_applicable, m.source_applicable);
  for (std::size_t i = 0; i < m.instances.size(); ++i) {
    for (const auto& name : m.schema.names()) {
      EXPECT_EQ(back.resolved_label(back.instances[i], name), m.resolved_label(m.instances[i], name));
    }
  }
}

TEST(Jsonl, ReportsBadLines) {
  TempDir dir = corpus_dir("");
  write_file(dir / "instances.jsonl",
             "{\"id\": \"a\", \"doc_id\": \"d1\", \"spans\": [[8, 13]], \"labels\": {\"Negation\": \"yes\"}}\n"
             "not json\n"
             "{\"id\": \"b\", \"doc_id\": \"nope\", \"spans\": [[8, 13]]}\n");
  try {
    load_corpus(dir.path());
    FAIL() << "expected CorpusError";
  } catch (const CorpusError& e) {
    ASSERT_EQ(e.diagnostics().size(), 2u);
    EXPECT_EQ(e.diagnostics()[0].line, 2u);
    EXPECT_EQ(e.diagnostics()[1].line, 3u);
  }
}

}  // namespace
}  // namespace modtl
