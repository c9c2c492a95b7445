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

#ifndef MODTL_TEXT_HPP_
#define MODTL_TEXT_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace modtl::text {

// Decodes UTF-8 into code points. Throws Error(kInvalidText) on malformed
// input, overlong encodings, surrogates, or values above U+10FFFF.
std::u32string decode_utf8(std::string_view utf8);

std::string encode_utf8(std::u32string_view code_points);

// Byte offset of every code point plus a trailing entry equal to the byte
// length, so substr(i, j) is bytes [offsets[i], offsets[j]).
std::vector<std::size_t> code_point_offsets(std::string_view utf8);

bool is_whitespace(char32_t c);
bool is_punctuation(char32_t c);

// Simple case folding: ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic.
char32_t fold_case(char32_t c);

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

}  // namespace modtl::text

#endif  // MODTL_TEXT_HPP_
