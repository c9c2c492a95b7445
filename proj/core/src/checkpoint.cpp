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

#include "modtl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "modtl/error.hpp"

namespace modtl {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'D', 'T', 'L', 'C', 'K', '\0'};

[[noreturn]] void corrupt(const std::string& msg) { throw Error(ErrorKind::kCorruptCheckpoint, msg); }

nlohmann::json features_json(const FeatureConfig& f) {
  return {{"before", f.before},
          {"after", f.after},
          {"max_len", f.max_len},
          {"hint", f.hint},
          {"min_freq", f.min_freq}};
}

FeatureConfig features_from(const nlohmann::json& j) {
  FeatureConfig f;
  f.before = j.at("before").get<std::size_t>();
  f.after = j.at("after").get<std::size_t>();
  f.max_len = j.at("max_len").get<std::size_t>();
  f.hint = j.at("hint").get<bool>();
  f.min_freq = j.at("min_freq").get<std::size_t>();
  return f;
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= std::uint64_t{static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])} << (8 * i);
  }
  return v;
}

void put_f32(std::string& out, double value) {
  const float f = static_cast<float>(value);
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f32(const std::string& in, std::size_t pos) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= std::uint32_t{static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])} << (8 * i);
  }
  float f;
  std::memcpy(&f, &bits, sizeof(f));
  return static_cast<double>(f);
}

}  // namespace

nlohmann::json to_json(const EpochRecord& r, bool with_timing) {
  nlohmann::json j = {{"epoch", r.epoch},
                      {"train_loss", r.train_loss},
                      {"dev_macro_f1", r.dev_macro_f1},
                      {"dev_metric", r.dev_metric},
                      {"improved", r.improved}};
  if (with_timing) j["seconds"] = r.seconds;
  return j;
}

std::string serialize_checkpoint(const Checkpoint& ck) {
  const MultiTaskModel& model = ck.model;
  nlohmann::json heads = nlohmann::json::array();
  for (const auto& h : model.params().heads) {
    heads.push_back({{"name", h.modifier}, {"labels", model.schema().at(h.modifier).labels}});
  }
  nlohmann::json history = nlohmann::json::array();
  for (const auto& r : ck.history) history.push_back(to_json(r, false));

  std::string payload;
  nlohmann::json tensors = nlohmann::json::array();
  model.params().visit([&](const std::string& name, const Matrix& m, ParamKind) {
    tensors.push_back({{"name", name},
                       {"shape", {m.rows(), m.cols()}},
                       {"dtype", "f32"},
                       {"offset", payload.size()}});
    for (Eigen::Index i = 0; i < m.size(); ++i) put_f32(payload, m.data()[i]);
  });

  const nlohmann::json manifest = {
      {"format", "modtl-checkpoint"},
      {"version", ck.version},
      {"name", ck.name},
      {"schema", to_json(model.schema())},
      {"encoder", to_json(model.config())},
      {"heads", heads},
      {"vocab", to_json(ck.vocab)},
      {"features", features_json(ck.features)},
      {"train_fingerprint", ck.train_fingerprint},
      {"best_epoch", ck.best_epoch},
      {"history", history},
      {"tensors", tensors},
  };
  const std::string text = manifest.dump();
  std::string out(kMagic, sizeof(kMagic));
  put_u64(out, text.size());
  out += text;
  out += payload;
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    corrupt("missing checkpoint header");
  }
  const std::uint64_t len = get_u64(bytes, sizeof(kMagic));
  const std::size_t body = sizeof(kMagic) + 8;
  if (len > bytes.size() - body) corrupt("manifest length exceeds file size");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(body),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(body + len));
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("manifest is not valid JSON: ") + e.what());
  }
  const std::size_t payload = body + len;
  try {
    const auto version = manifest.at("version").get<std::uint32_t>();
    if (version != kCheckpointVersion) {
      throw Error(ErrorKind::kCheckpointVersionMismatch,
                  "checkpoint version " + std::to_string(version) + ", expected " +
                      std::to_string(kCheckpointVersion));
    }
    const ModifierSchema schema = schema_from_json(manifest.at("schema"));
    const EncoderConfig config = encoder_config_from_json(manifest.at("encoder"));
    ModelParameters params;
    params.encoder = EncoderParams::zeros(config);
    for (const auto& def : schema.modifiers()) {
      ClassificationHead h;
      h.modifier = def.name;
      h.weight = Matrix::Zero(static_cast<Eigen::Index>(def.labels.size()),
                              static_cast<Eigen::Index>(config.hidden_size));
      h.bias = Matrix::Zero(1, static_cast<Eigen::Index>(def.labels.size()));
      params.heads.push_back(std::move(h));
    }
    std::map<std::string, nlohmann::json> entries;
    for (const auto& t : manifest.at("tensors")) entries[t.at("name").get<std::string>()] = t;
    if (bytes.size() - payload != params.parameter_count() * 4) {
      corrupt("payload size does not match the tensor table");
    }
    params.visit([&](const std::string& name, Matrix& m, ParamKind) {
      auto it = entries.find(name);
      if (it == entries.end()) corrupt("tensor " + name + " missing");
      const auto shape = it->second.at("shape").get<std::vector<Eigen::Index>>();
      if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols()) {
        corrupt("tensor " + name + " has wrong shape");
      }
      const std::size_t offset = payload + it->second.at("offset").get<std::size_t>();
      const std::size_t need = static_cast<std::size_t>(m.size()) * 4;
      if (offset > bytes.size() || need > bytes.size() - offset) corrupt("tensor " + name + " truncated");
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = get_f32(bytes, offset + static_cast<std::size_t>(i) * 4);
      }
      entries.erase(it);
    });
    if (!entries.empty()) corrupt("unexpected tensor " + entries.begin()->first);

    std::vector<EpochRecord> history;
    for (const auto& r : manifest.at("history")) {
      EpochRecord e;
      e.epoch = r.at("epoch").get<std::size_t>();
      e.train_loss = r.at("train_loss").get<double>();
      e.dev_macro_f1 = r.at("dev_macro_f1").get<std::map<std::string, double>>();
      e.dev_metric = r.at("dev_metric").get<double>();
      e.improved = r.at("improved").get<bool>();
      history.push_back(std::move(e));
    }
    return Checkpoint{version,
                      manifest.at("name").get<std::string>(),
                      MultiTaskModel(schema, config, std::move(params)),
                      vocab_from_json(manifest.at("vocab")),
                      features_from(manifest.at("features")),
                      manifest.at("train_fingerprint").get<std::string>(),
                      manifest.at("best_epoch").get<std::size_t>(),
                      std::move(history)};
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("malformed manifest: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
      throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace modtl
