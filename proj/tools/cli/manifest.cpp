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

#include "cli/manifest.hpp"

#include <ctime>
#include <fstream>
#include <sstream>

#include "modtl/error.hpp"
#include "modtl/text.hpp"

#ifndef MODTL_VERSION
#define MODTL_VERSION "unknown"
#endif

namespace modtl::cli {

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunManifest::RunManifest(std::filesystem::path path, std::string command, nlohmann::json config)
    : path_(std::move(path)), start_(std::chrono::steady_clock::now()) {
  doc_ = {{"command", std::move(command)},
          {"code_version", MODTL_VERSION},
          {"config", std::move(config)},
          {"inputs", nlohmann::json::array()},
          {"artifacts", nlohmann::json::array()},
          {"status", "running"},
          {"timings", {{"started_at", utc_now()}}}};
  write();
}

void RunManifest::add_input(const std::string& role, const std::filesystem::path& path,
                            const std::string& content_hash) {
  doc_["inputs"].push_back({{"role", role}, {"path", path.string()}, {"hash", content_hash}});
}

void RunManifest::add_artifact(const std::string& role, const std::filesystem::path& path) {
  doc_["artifacts"].push_back({{"role", role}, {"path", path.string()}});
}

void RunManifest::set(const std::string& key, nlohmann::json value) { doc_[key] = std::move(value); }

void RunManifest::finalize(const std::string& status) {
  doc_["status"] = status;
  doc_["timings"]["finished_at"] = utc_now();
  doc_["timings"]["seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  write();
}

void RunManifest::write() const {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  const auto tmp = std::filesystem::path(path_.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw Error(ErrorKind::kIo, "cannot write manifest " + tmp.string());
    os << doc_.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path_);
}

std::string corpus_hash(const Corpus& corpus) {
  std::uint64_t h = text::fnv1a64(to_json(corpus.schema).dump());
  for (const auto& name : corpus.applicable) h = text::fnv1a64(name + '\n', h);
  for (const auto& [id, doc] : corpus.documents) {
    h = text::fnv1a64(id + '\0' + doc.text() + '\0', h);
  }
  for (const auto& inst : corpus.instances) {
    std::ostringstream os;
    os << inst.id << '\t' << inst.mention.doc_id << '\t' << inst.source;
    for (const auto& s : inst.mention.spans) os << '\t' << s.start << ':' << s.end;
    for (const auto& [m, l] : inst.labels) os << '\t' << m << '=' << l;
    h = text::fnv1a64(os.str() + '\n', h);
  }
  return text::hex64(h);
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return text::hex64(text::fnv1a64(ss.str()));
}

}  // namespace modtl::cli
