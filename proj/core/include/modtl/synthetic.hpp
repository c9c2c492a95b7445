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

#ifndef MODTL_SYNTHETIC_HPP_
#define MODTL_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modtl/corpus.hpp"

namespace modtl {

struct CuePhrase {
  std::string modifier;
  std::string label;
  std::string phrase;
};

// Generator for desk-scale corpora whose labels are planted as cue phrases
// immediately before each mention. With noise_rate == 0 every gold label is
// recoverable from the text.
struct SynthConfig {
  ModifierSchema schema;
  std::set<std::string> applicable;  // empty: every schema modifier
  std::vector<CuePhrase> cues;       // >= 1 per non-default applicable label
  std::vector<std::string> entity_terms;

  std::size_t num_instances = 1000;
  std::size_t vocab_size = 200;  // filler words
  double label_rate = 0.35;      // P(modifier takes a non-default label)
  double noise_rate = 0.0;       // P(gold label resampled after planting)
  std::size_t mentions_per_document = 1;
  std::size_t filler_before = 24;  // words before the first mention
  std::size_t filler_between = 2;  // words between mentions of one document
  std::size_t filler_after = 5;    // words after the last mention
  // At most one mention per document takes a non-default label for each
  // modifier, so a label cannot be read off the window alone.
  bool exclusive_labels = false;
  std::string doc_prefix = "doc";
};

struct PlantedCue {
  std::string instance_id;
  std::string modifier;
  std::string planted_label;  // label whose cue is in the text
  std::string gold_label;     // differs only for noisy draws
  std::string phrase;
};

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<PlantedCue> cue_table;
};

SyntheticCorpus generate_synthetic(const SynthConfig& config, std::uint64_t seed);

// Deterministic filler word for a vocabulary slot; independent of the seed so
// corpora generated with the same vocab_size share their filler vocabulary.
std::string filler_word(std::size_t index);

SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthConfig& config);

// Presets modelled on the two clinical corpora: a seven-modifier disorder
// schema and a six-modifier substance-use schema (severity declared but not
// annotated). They share negation, subject, uncertainty and severity.
SynthConfig disorder_preset();
SynthConfig substance_use_preset();

}  // namespace modtl

#endif  // MODTL_SYNTHETIC_HPP_
