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

#include "support/fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace modtl::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& prefix) {
  std::random_device rd;
  for (int attempt = 0;; ++attempt) {
    path_ = fs::temp_directory_path() / (prefix + "-" + std::to_string(rd()) + std::to_string(attempt));
    if (fs::create_directories(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  if (!path_.empty()) fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ModifierSchema small_schema() {
  return ModifierSchema({{"negation", {"no", "yes"}, "no"},
                         {"subject", {"patient", "family_member", "other"}, "patient"},
                         {"severity", {"unmarked", "slight", "moderate", "severe"}, "unmarked"}});
}

ModifierSchema random_schema(std::mt19937_64& rng, std::size_t n) {
  std::vector<ModifierDef> defs;
  for (std::size_t i = 0; i < n; ++i) {
    ModifierDef d;
    d.name = "m" + std::to_string(i);
    const std::size_t labels = 2 + rng() % 3;
    for (std::size_t k = 0; k < labels; ++k) d.labels.push_back("l" + std::to_string(k));
    d.default_label = d.labels[rng() % labels];
    defs.push_back(std::move(d));
  }
  return ModifierSchema(std::move(defs));
}

EncoderConfig tiny_encoder(std::size_t vocab_size, std::size_t hidden, std::size_t max_positions,
                           std::uint64_t seed) {
  EncoderConfig c;
  c.vocab_size = vocab_size;
  c.hidden_size = hidden;
  c.num_layers = 2;
  c.num_attention_heads = 4;
  c.feedforward_size = 2 * hidden;
  c.max_positions = max_positions;
  c.dropout_rate = 0.1;
  c.seed = seed;
  return c;
}

std::vector<EncodedExample> random_examples(std::mt19937_64& rng, const ModifierSchema& schema,
                                            std::size_t vocab_size, std::size_t count,
                                            std::size_t max_len, double mask_rate) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<EncodedExample> out;
  for (std::size_t e = 0; e < count; ++e) {
    EncodedExample ex;
    ex.instance_id = "x" + std::to_string(e);
    const std::size_t real = 5 + rng() % (max_len - 4);
    const std::size_t second = 1 + rng() % 2;
    ex.token_ids.assign(max_len, kPadId);
    ex.segment_ids.assign(max_len, 0);
    ex.attention_mask.assign(max_len, 0);
    ex.token_ids[0] = kClsId;
    for (std::size_t i = 1; i < real; ++i) {
      ex.token_ids[i] = static_cast<std::int32_t>(kNumSpecialTokens + rng() % (vocab_size - kNumSpecialTokens));
    }
    const std::size_t sep1 = real - second - 2;
    ex.token_ids[sep1] = kSepId;
    ex.token_ids[real - 1] = kSepId;
    for (std::size_t i = 0; i < real; ++i) {
      ex.attention_mask[i] = 1;
      ex.segment_ids[i] = i > sep1 ? 1 : 0;
    }
    bool any = false;
    for (const auto& def : schema.modifiers()) {
      const bool active = unit(rng) >= mask_rate;
      ex.head_mask[def.name] = active;
      if (active) {
        ex.gold[def.name] = static_cast<int>(rng() % def.labels.size());
        any = true;
      }
    }
    if (!any) {
      const auto& def = schema.modifiers().front();
      ex.head_mask[def.name] = true;
      ex.gold[def.name] = 0;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

PredictionSet random_predictions(std::mt19937_64& rng, const ModifierSchema& schema,
                                 std::size_t instances, double skew) {
  std::bernoulli_distribution take_default(skew);
  auto draw = [&](const ModifierDef& def) {
    if (take_default(rng)) return def.default_label;
    return def.labels[std::uniform_int_distribution<std::size_t>(0, def.labels.size() - 1)(rng)];
  };
  std::vector<PredictionRecord> records;
  for (std::size_t i = 0; i < instances; ++i) {
    for (const auto& def : schema.modifiers()) {
      const std::string gold = draw(def);
      records.push_back({"i" + std::to_string(i), def.name, gold, draw(def)});
    }
  }
  std::shuffle(records.begin(), records.end(), rng);
  return PredictionSet(schema, std::move(records));
}

}  // namespace modtl::testing
