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

#ifndef MODTL_STANDOFF_HPP_
#define MODTL_STANDOFF_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "modtl/corpus.hpp"
#include "modtl/error.hpp"

namespace modtl {

struct Diagnostic {
  ErrorKind kind;
  std::string file;
  std::size_t line = 0;
  std::string message;
};

// Thrown when ingestion finds errors. All problems found in the directory are
// collected; kind() reports the first one.
class CorpusError : public Error {
 public:
  explicit CorpusError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

// Reads <name>.txt / <name>.ann pairs plus schema.json from a directory.
//
// .ann grammar:
//   T<n>\t<Type> <start> <end>[;<start> <end>]*\t<surface[;surface]*>
//   A<n>\t<ModifierName> T<n> <Label>
// Comment (#), relation (R), event (E) and normalization (N) lines are
// ignored. Duplicate modifier annotations keep the first and add a warning.
Corpus parse_standoff(const std::filesystem::path& directory,
                      std::vector<Diagnostic>* warnings = nullptr,
                      unsigned threads = 1);

void write_standoff(const Corpus& corpus, const std::filesystem::path& directory);

// JSONL alternative: schema.json, <doc>.txt files and instances.jsonl with one
// {"id", "doc_id", "spans": [[s,e],...], "labels": {...}} object per line.
Corpus parse_jsonl_corpus(const std::filesystem::path& directory);
void write_jsonl_corpus(const Corpus& corpus, const std::filesystem::path& directory);

// Dispatches on the presence of instances.jsonl.
Corpus load_corpus(const std::filesystem::path& directory,
                   std::vector<Diagnostic>* warnings = nullptr,
                   unsigned threads = 1);

nlohmann::json schema_file_json(const Corpus& corpus);

}  // namespace modtl

#endif  // MODTL_STANDOFF_HPP_
