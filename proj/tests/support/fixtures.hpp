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

#ifndef MODTL_TESTS_SUPPORT_FIXTURES_HPP_
#define MODTL_TESTS_SUPPORT_FIXTURES_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "modtl/corpus.hpp"
#include "modtl/evaluate.hpp"
#include "modtl/featurize.hpp"
#include "modtl/model.hpp"

namespace modtl::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "modtl");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  TempDir(TempDir&& other) noexcept : path_(std::move(other.path_)) { other.path_.clear(); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// negation {no, yes}, subject {patient, family_member, other},
// severity {unmarked, slight, moderate, severe}.
ModifierSchema small_schema();

// Random schema of `n` modifiers named m0.. with 2-4 labels each.
ModifierSchema random_schema(std::mt19937_64& rng, std::size_t n);

// Small encoder for gradient and invariance tests.
EncoderConfig tiny_encoder(std::size_t vocab_size, std::size_t hidden = 16,
                           std::size_t max_positions = 24, std::uint64_t seed = 7);

// Random encoded examples: real lengths in [min_len, max_len], a SEP-split
// pair layout, gold drawn per head and masks drawn with p(mask) = mask_rate.
std::vector<EncodedExample> random_examples(std::mt19937_64& rng, const ModifierSchema& schema,
                                            std::size_t vocab_size, std::size_t count,
                                            std::size_t max_len, double mask_rate = 0.25);

// Random predictions over every schema modifier for `instances` instances.
// Gold and predicted labels are skewed toward the default with p = skew.
PredictionSet random_predictions(std::mt19937_64& rng, const ModifierSchema& schema,
                                 std::size_t instances, double skew = 0.5);

}  // namespace modtl::testing

#endif  // MODTL_TESTS_SUPPORT_FIXTURES_HPP_
