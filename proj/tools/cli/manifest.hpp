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

#ifndef MODTL_TOOLS_CLI_MANIFEST_HPP_
#define MODTL_TOOLS_CLI_MANIFEST_HPP_

#include <chrono>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "modtl/corpus.hpp"

namespace modtl::cli {

// Run record written when a command starts and rewritten when it ends.
class RunManifest {
 public:
  RunManifest(std::filesystem::path path, std::string command, nlohmann::json config);

  void add_input(const std::string& role, const std::filesystem::path& path,
                 const std::string& content_hash);
  void add_artifact(const std::string& role, const std::filesystem::path& path);
  void set(const std::string& key, nlohmann::json value);
  void finalize(const std::string& status);

  const std::filesystem::path& path() const { return path_; }

 private:
  void write() const;

  std::filesystem::path path_;
  nlohmann::json doc_;
  std::chrono::steady_clock::time_point start_;
};

std::string corpus_hash(const Corpus& corpus);
std::string file_hash(const std::filesystem::path& path);

}  // namespace modtl::cli

#endif  // MODTL_TOOLS_CLI_MANIFEST_HPP_
