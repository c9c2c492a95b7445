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

#ifndef MODTL_ERROR_HPP_
#define MODTL_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace modtl {

enum class ErrorKind {
  kInvalidArgument,
  kIo,
  // Corpus ingestion.
  kMalformedLine,
  kOffsetOutOfBounds,
  kSurfaceMismatch,
  kUnknownModifier,
  kUnknownLabel,
  kInvalidText,
  kEmptyCorpus,
  kSchemaConflict,
  kInvalidConfig,
  // Featurization and model.
  kHintTooLong,
  kShapeMismatch,
  kNoActiveHeads,
  // Training.
  kDivergedLoss,
  kCheckpointVersionMismatch,
  kCorruptCheckpoint,
  // Evaluation.
  kEmptySet,
  kEmptyWeight,
  kAllClassesExcluded,
  kDegenerateTable,
  kSchemaMismatch,
};

std::string_view to_string(ErrorKind kind);

// Broad failure classes; the CLI maps these onto exit codes.
enum class ErrorClass { kUsage, kData, kNumerical };

ErrorClass classify(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace modtl

#endif  // MODTL_ERROR_HPP_
