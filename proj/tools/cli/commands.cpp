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

#include "cli/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cli/manifest.hpp"
#include "modtl/checkpoint.hpp"
#include "modtl/error.hpp"
#include "modtl/evaluate.hpp"
#include "modtl/standoff.hpp"
#include "modtl/synthetic.hpp"

namespace modtl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorKind::kInvalidConfig, msg);
}

json read_json_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    os << text;
  }
  fs::rename(tmp, path);
}

json features_to_json(const FeatureConfig& f) {
  return {{"before", f.before}, {"after", f.after}, {"max_len", f.max_len},
          {"hint", f.hint},     {"min_freq", f.min_freq}};
}

}  // namespace

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.output_dir = j.value("output_dir", c.output_dir.string());
    c.tag = j.value("tag", c.tag);
    if (j.contains("corpus")) c.corpora.push_back({j.at("corpus").get<std::string>(), "a"});
    if (j.contains("corpora")) {
      for (const auto& src : j.at("corpora")) {
        c.corpora.push_back({src.at("path").get<std::string>(), src.at("name").get<std::string>()});
      }
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split.train = s.value("train", c.split.train);
      c.split.dev = s.value("dev", c.split.dev);
      c.split.test = s.value("test", c.split.test);
      c.split_seed = s.value("seed", c.split_seed);
      c.split_by_document = s.value("by_document", c.split_by_document);
    }
    if (j.contains("features")) {
      const auto& f = j.at("features");
      c.features.before = f.value("before", c.features.before);
      c.features.after = f.value("after", c.features.after);
      c.features.max_len = f.value("max_len", c.features.max_len);
      c.features.hint = f.value("hint", c.features.hint);
      c.features.min_freq = f.value("min_freq", c.features.min_freq);
    }
    if (j.contains("encoder")) c.encoder = encoder_config_from_json(j.at("encoder"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      if (e.contains("exclude_classes")) {
        for (const auto& [mod, labels] : e.at("exclude_classes").items()) {
          c.eval.exclude_classes[mod] = labels.get<std::set<std::string>>();
        }
      }
      c.eval.include_default_in_micro = e.value("include_default", c.eval.include_default_in_micro);
      c.eval.include_default_in_macro =
          e.value("include_default_in_macro", c.eval.include_default_in_macro);
      c.eval.pooled_average = e.value("pooled_average", c.eval.pooled_average);
    }
    if (j.contains("source_checkpoint")) {
      c.source_checkpoint = j.at("source_checkpoint").get<std::string>();
    }
    c.refit_on_train_plus_dev = j.value("refit_on_train_plus_dev", c.refit_on_train_plus_dev);
    if (j.contains("synthetic")) c.synthetic = j.at("synthetic");
  } catch (const json::exception& e) {
    config_error(std::string("experiment config: ") + e.what());
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  json corpora = json::array();
  for (const auto& s : c.corpora) corpora.push_back({{"path", s.path.string()}, {"name", s.name}});
  json excl = json::object();
  for (const auto& [mod, labels] : c.eval.exclude_classes) {
    excl[mod] = std::vector<std::string>(labels.begin(), labels.end());
  }
  json j = {{"output_dir", c.output_dir.string()},
            {"tag", c.tag},
            {"corpora", corpora},
            {"split",
             {{"train", c.split.train},
              {"dev", c.split.dev},
              {"test", c.split.test},
              {"seed", c.split_seed},
              {"by_document", c.split_by_document}}},
            {"features", features_to_json(c.features)},
            {"encoder", modtl::to_json(c.encoder)},
            {"train", modtl::to_json(c.train)},
            {"eval",
             {{"exclude_classes", excl},
              {"include_default", c.eval.include_default_in_micro},
              {"include_default_in_macro", c.eval.include_default_in_macro},
              {"pooled_average", c.eval.pooled_average}}},
            {"refit_on_train_plus_dev", c.refit_on_train_plus_dev}};
  if (c.source_checkpoint) j["source_checkpoint"] = c.source_checkpoint->string();
  if (!c.synthetic.is_null()) j["synthetic"] = c.synthetic;
  return j;
}

void apply_path_overrides(ExperimentConfig& c) {
  if (const char* v = std::getenv("MODTL_OUTPUT_DIR"); v && *v) c.output_dir = v;
  if (const char* v = std::getenv("MODTL_CORPUS"); v && *v) c.corpora = {{v, "a"}};
  if (const char* v = std::getenv("MODTL_SOURCE_CHECKPOINT"); v && *v) c.source_checkpoint = fs::path(v);
}

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> before, after, max_len, batch_size, epochs, patience;
  std::optional<double> lr, weight_decay, gamma;
  std::optional<std::string> loss, output_dir, corpus, tag, source_checkpoint;
  bool no_hint = false;
  std::vector<std::string> exclude_class;
  bool include_default = false;
  bool pooled = false;
  bool refit = false;
  std::optional<unsigned> threads;
  std::vector<std::string> modifiers;

  std::string checkpoint;
  std::string split = "test";
  std::string predictions;
  std::string gold;
  std::string report_a, report_b;
  std::string out;
  std::string preset;
  std::string format = "standoff";
  std::optional<std::size_t> num_instances;
  bool continuity = false;
};

ExperimentConfig load_config(const Flags& f) {
  ExperimentConfig c = experiment_from_json(f.config.empty() ? json::object() : read_json_file(f.config));
  apply_path_overrides(c);
  if (f.output_dir) c.output_dir = *f.output_dir;
  if (f.corpus) c.corpora = {{*f.corpus, "a"}};
  if (f.tag) c.tag = *f.tag;
  if (f.source_checkpoint) c.source_checkpoint = fs::path(*f.source_checkpoint);
  if (f.seed) {
    c.train.seed = *f.seed;
    c.encoder.seed = *f.seed;
  }
  if (f.before) c.features.before = *f.before;
  if (f.after) c.features.after = *f.after;
  if (f.max_len) c.features.max_len = *f.max_len;
  if (f.no_hint) c.features.hint = false;
  if (f.lr) c.train.learning_rate = *f.lr;
  if (f.weight_decay) c.train.weight_decay = *f.weight_decay;
  if (f.batch_size) c.train.batch_size = *f.batch_size;
  if (f.epochs) c.train.max_epochs = *f.epochs;
  if (f.patience) c.train.patience = *f.patience;
  if (f.loss) {
    if (*f.loss == "ce") {
      c.train.loss.mode = LossConfig::Mode::kCrossEntropy;
    } else if (*f.loss == "focal") {
      c.train.loss.mode = LossConfig::Mode::kFocal;
    } else {
      config_error("--loss must be ce or focal");
    }
  }
  if (f.gamma) c.train.loss.gamma = *f.gamma;
  if (f.threads) c.train.threads = std::max(1u, *f.threads);
  for (const auto& spec : f.exclude_class) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size()) {
      config_error("--exclude-class expects <modifier>:<label>, got '" + spec + "'");
    }
    c.eval.exclude_classes[spec.substr(0, colon)].insert(spec.substr(colon + 1));
  }
  if (f.include_default) c.eval.include_default_in_micro = true;
  if (f.pooled) c.eval.pooled_average = true;
  if (f.refit) c.refit_on_train_plus_dev = true;
  c.train.validate();
  return c;
}

fs::path data_dir(const ExperimentConfig& c) { return c.output_dir / "data"; }
fs::path checkpoint_dir(const ExperimentConfig& c) { return c.output_dir / "checkpoints"; }
fs::path manifest_path(const ExperimentConfig& c, const std::string& name) {
  return c.output_dir / "manifests" / (name + ".json");
}

Corpus load_split(const ExperimentConfig& c, const std::string& split) {
  const fs::path dir = data_dir(c) / split;
  if (!fs::exists(dir / "instances.jsonl")) {
    throw Error(ErrorKind::kIo, "missing prepared split " + dir.string() + " (run prepare first)");
  }
  return parse_jsonl_corpus(dir);
}

Corpus load_source_corpora(const ExperimentConfig& c, unsigned threads, std::ostream& err) {
  if (c.corpora.empty()) config_error("no corpus configured (set \"corpus\" or --corpus)");
  if (c.corpora.size() > 2) config_error("at most two corpora can be merged");
  auto load = [&](const CorpusSource& s) {
    std::vector<Diagnostic> warnings;
    Corpus corpus = load_corpus(s.path, &warnings, threads);
    for (const auto& w : warnings) {
      err << "warning: " << w.file << ":" << w.line << ": " << w.message << '\n';
    }
    return corpus;
  };
  if (c.corpora.size() == 1) return load(c.corpora[0]);
  return merge_corpora(load(c.corpora[0]), load(c.corpora[1]), c.corpora[0].name, c.corpora[1].name);
}

std::string stats_table(const std::vector<std::pair<std::string, CorpusStats>>& rows) {
  std::ostringstream os;
  const auto& mods = rows.front().second.modifiers;
  std::size_t col = 10;
  for (const auto& m : mods) col = std::max(col, m.size() + 2);
  os << std::left << std::setw(10) << "corpus" << std::right << std::setw(11) << "documents"
     << std::setw(10) << "entities";
  for (const auto& m : mods) os << std::setw(static_cast<int>(col)) << m;
  os << '\n';
  for (const auto& [name, s] : rows) {
    os << std::left << std::setw(10) << name << std::right << std::setw(11) << s.documents
       << std::setw(10) << s.entities;
    for (const auto& m : mods) {
      auto it = s.non_default.find(m);
      os << std::setw(static_cast<int>(col)) << (it == s.non_default.end() ? 0 : it->second);
    }
    os << '\n';
  }
  os << "(modifier columns count non-default annotations)\n";
  return os.str();
}

json stats_json(const CorpusStats& s) {
  return {{"documents", s.documents},
          {"entities", s.entities},
          {"modifiers", s.modifiers},
          {"non_default", s.non_default},
          {"label_counts", s.label_counts}};
}

std::vector<EncodedExample> cached_features(const fs::path& cache, const Corpus& corpus,
                                            const TokenizerVocab& vocab, const FeatureConfig& f,
                                            unsigned threads) {
  if (auto hit = read_cache(cache, vocab.hash(), f.hash())) {
    if (hit->size() == corpus.instances.size()) return std::move(*hit);
  }
  return featurize_corpus(corpus, vocab, f, threads);
}

std::string strip_suffix(std::string name) {
  for (const std::string ext : {".ckpt"}) {
    if (name.size() > ext.size() && name.ends_with(ext)) name.resize(name.size() - ext.size());
  }
  return name;
}

// ---- commands -------------------------------------------------------------

int cmd_synth(const Flags& f, std::ostream& out) {
  SynthConfig sc;
  std::uint64_t seed = f.seed.value_or(42);
  fs::path dest = f.out;
  if (!f.config.empty()) {
    const json j = read_json_file(f.config);
    sc = synth_config_from_json(j.contains("synthetic") ? j.at("synthetic") : j);
    if (j.contains("synthetic") && j.at("synthetic").contains("seed") && !f.seed) {
      seed = j.at("synthetic").at("seed").get<std::uint64_t>();
    }
    if (const char* v = std::getenv("MODTL_CORPUS"); dest.empty() && v && *v) dest = v;
    if (dest.empty() && j.contains("synthetic") && j.at("synthetic").contains("out")) {
      dest = j.at("synthetic").at("out").get<std::string>();
    }
    if (dest.empty() && j.contains("corpus")) dest = j.at("corpus").get<std::string>();
  } else if (f.preset == "disorder") {
    sc = disorder_preset();
  } else if (f.preset == "substance_use") {
    sc = substance_use_preset();
  } else {
    config_error("synth needs --config or --preset {disorder,substance_use}");
  }
  if (f.num_instances) sc.num_instances = *f.num_instances;
  if (dest.empty()) config_error("synth needs --out");
  const SyntheticCorpus syn = generate_synthetic(sc, seed);
  fs::remove_all(dest);
  if (f.format == "jsonl") {
    write_jsonl_corpus(syn.corpus, dest);
  } else if (f.format == "standoff") {
    write_standoff(syn.corpus, dest);
  } else {
    config_error("--format must be standoff or jsonl");
  }
  std::ostringstream cues;
  for (const auto& c : syn.cue_table) {
    cues << json{{"instance_id", c.instance_id}, {"modifier", c.modifier},
                 {"planted", c.planted_label}, {"gold", c.gold_label}, {"phrase", c.phrase}}
                .dump()
         << '\n';
  }
  write_text(dest / "cues.jsonl", cues.str());
  out << "wrote " << syn.corpus.instances.size() << " instances in "
      << syn.corpus.documents.size() << " documents to " << dest.string() << '\n';
  return 0;
}

int cmd_stats(const Flags& f, std::ostream& out, std::ostream& err) {
  const ExperimentConfig c = load_config(f);
  const Corpus corpus = load_source_corpora(c, c.train.threads, err);
  const CorpusStats s = corpus_stats(corpus);
  out << stats_table({{"corpus", s}});
  if (!f.out.empty()) write_text(f.out, stats_json(s).dump(2) + "\n");
  return 0;
}

int cmd_prepare(const Flags& f, std::ostream& out, std::ostream& err) {
  const ExperimentConfig c = load_config(f);
  RunManifest manifest(manifest_path(c, "prepare"), "prepare", to_json(c));
  const Corpus corpus = load_source_corpora(c, c.train.threads, err);
  corpus.validate();
  for (const auto& src : c.corpora) manifest.add_input("corpus", src.path, "");
  manifest.set("corpus_hash", corpus_hash(corpus));

  const CorpusSplits splits = split_corpus(corpus, c.split, c.split_seed, c.split_by_document);
  const TokenizerVocab vocab = build_vocab(splits.train, c.features.min_freq);
  const fs::path data = data_dir(c);
  fs::remove_all(data);
  fs::create_directories(data);
  write_text(data / "vocab.json", modtl::to_json(vocab).dump() + "\n");
  manifest.add_artifact("vocab", data / "vocab.json");

  std::vector<std::pair<std::string, CorpusStats>> rows;
  json stats = json::object();
  for (const auto& [name, part] : {std::pair<std::string, const Corpus*>{"train", &splits.train},
                                   {"dev", &splits.dev},
                                   {"test", &splits.test}}) {
    write_jsonl_corpus(*part, data / name);
    const auto feats = featurize_corpus(*part, vocab, c.features, c.train.threads);
    write_cache(data / (name + ".features"), feats, vocab.hash(), c.features.hash());
    manifest.add_artifact(name, data / name);
    manifest.add_artifact(name + "_features", data / (name + ".features"));
    rows.emplace_back(name, corpus_stats(*part));
    stats[name] = stats_json(rows.back().second);
  }
  rows.emplace_back("total", corpus_stats(corpus));
  stats["total"] = stats_json(rows.back().second);
  const std::string table = stats_table(rows);
  write_text(data / "stats.json", stats.dump(2) + "\n");
  write_text(data / "stats.txt", table);
  manifest.add_artifact("stats", data / "stats.json");
  out << table;
  manifest.finalize("ok");
  return 0;
}

struct TrainOutcome {
  Checkpoint checkpoint;
  fs::path path;
};

void write_history(const fs::path& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  write_text(path, text);
}

// Trains one model on prepared splits and saves it as `name`.
TrainOutcome train_named(const ExperimentConfig& c, const std::string& name, const Corpus& train_c,
                         const Corpus& dev_c, const TokenizerVocab& vocab,
                         const Checkpoint* source, bool use_cache, RunManifest& manifest,
                         std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  const ModifierSchema heads = train_c.schema.restricted_to(train_c.applicable);
  auto fresh_model = [&] {
    return initial_model(heads, vocab, c.features, c.encoder, c.train.seed, source, &warnings);
  };
  MultiTaskModel model = fresh_model();
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  const auto train_ex = use_cache ? cached_features(data_dir(c) / "train.features", train_c, vocab,
                                                    c.features, c.train.threads)
                                  : featurize_corpus(train_c, vocab, c.features, c.train.threads);
  const auto dev_ex = use_cache ? cached_features(data_dir(c) / "dev.features", dev_c, vocab,
                                                  c.features, c.train.threads)
                                : featurize_corpus(dev_c, vocab, c.features, c.train.threads);
  std::vector<std::string> history;
  TrainCallbacks cb;
  cb.on_epoch = [&](const EpochRecord& r) {
    history.push_back(modtl::to_json(r, true).dump());
    out << name << " epoch " << r.epoch << " loss " << std::setprecision(6) << r.train_loss
        << " dev " << r.dev_metric << (r.improved ? " *" : "") << '\n';
  };
  Checkpoint ck = train(std::move(model), vocab, c.features, train_ex, dev_ex, c.train, cb);
  ck.name = name;
  const fs::path dir = checkpoint_dir(c);
  if (c.refit_on_train_plus_dev) {
    // Early stopping has no held-out data left, so the refit runs the
    // tuned number of epochs on train + dev.
    save_checkpoint(ck, dir / (name + ".tune.ckpt"));
    manifest.add_artifact("tuning_checkpoint", dir / (name + ".tune.ckpt"));
    TrainConfig refit = c.train;
    refit.max_epochs = std::max<std::size_t>(1, ck.best_epoch);
    refit.patience = 0;
    std::vector<EncodedExample> all = train_ex;
    all.insert(all.end(), dev_ex.begin(), dev_ex.end());
    history.push_back(json{{"refit_epochs", refit.max_epochs}}.dump());
    ck = train(fresh_model(), vocab, c.features, all, {}, refit, cb);
    ck.name = name;
  }
  write_history(dir / (name + ".history.jsonl"), history);
  const fs::path path = dir / (name + ".ckpt");
  save_checkpoint(ck, path);
  manifest.add_artifact("checkpoint", path);
  manifest.add_artifact("history", dir / (name + ".history.jsonl"));
  return {std::move(ck), path};
}

int cmd_train(const Flags& f, bool require_source, std::ostream& out, std::ostream& err) {
  const ExperimentConfig c = load_config(f);
  if (require_source && !c.source_checkpoint) config_error("transfer needs --source-checkpoint");
  std::optional<Checkpoint> source;
  std::string name = "mt-" + c.tag;
  if (c.source_checkpoint) {
    source = load_checkpoint(*c.source_checkpoint);
    std::string src = source->name.empty() ? strip_suffix(c.source_checkpoint->filename().string())
                                           : source->name;
    name = (src.starts_with("mt-") ? src : "mt-" + src) + "-" + c.tag;
  }
  RunManifest manifest(manifest_path(c, name), source ? "transfer" : "train", to_json(c));
  const Corpus train_c = load_split(c, "train");
  const Corpus dev_c = load_split(c, "dev");
  manifest.add_input("train", data_dir(c) / "train", corpus_hash(train_c));
  manifest.add_input("dev", data_dir(c) / "dev", corpus_hash(dev_c));
  if (source) manifest.add_input("source_checkpoint", *c.source_checkpoint, file_hash(*c.source_checkpoint));
  const TokenizerVocab vocab =
      source ? source->vocab : vocab_from_json(read_json_file(data_dir(c) / "vocab.json"));
  manifest.set("loss", {{"mode", c.train.loss.mode == LossConfig::Mode::kFocal ? "focal" : "ce"},
                        {"gamma", c.train.loss.gamma}});
  const auto start = std::chrono::steady_clock::now();
  const TrainOutcome r = train_named(c, name, train_c, dev_c, vocab, source ? &*source : nullptr,
                                     true, manifest, out, err);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest.set("best_epoch", r.checkpoint.best_epoch);
  manifest.set("heads", r.checkpoint.model.schema().names());
  manifest.set("train_seconds", seconds);
  out << "saved " << r.path.string() << " (best epoch " << r.checkpoint.best_epoch << ", "
      << r.checkpoint.model.schema().size() << " heads)\n";
  manifest.finalize("ok");
  return 0;
}

int cmd_single_task(const Flags& f, std::ostream& out, std::ostream& err) {
  const ExperimentConfig c = load_config(f);
  const Corpus train_c = load_split(c, "train");
  const Corpus dev_c = load_split(c, "dev");
  std::vector<std::string> mods = f.modifiers;
  if (mods.empty()) {
    for (const auto& def : train_c.schema.modifiers()) {
      if (train_c.applicable.count(def.name)) mods.push_back(def.name);
    }
  }
  const TokenizerVocab vocab = vocab_from_json(read_json_file(data_dir(c) / "vocab.json"));
  RunManifest manifest(manifest_path(c, "st-" + c.tag), "single-task", to_json(c));
  manifest.add_input("train", data_dir(c) / "train", corpus_hash(train_c));
  manifest.add_input("dev", data_dir(c) / "dev", corpus_hash(dev_c));
  json timings = json::object();
  for (const auto& m : mods) {
    if (!train_c.applicable.count(m)) {
      throw Error(ErrorKind::kUnknownModifier, "modifier '" + m + "' is not annotated in the corpus");
    }
    const auto start = std::chrono::steady_clock::now();
    const TrainOutcome r = train_named(c, "st-" + c.tag + "-" + m, restrict_to_modifier(train_c, m),
                                       restrict_to_modifier(dev_c, m), vocab, nullptr, false,
                                       manifest, out, err);
    timings[m] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << "saved " << r.path.string() << '\n';
  }
  manifest.set("train_seconds", timings);
  manifest.finalize("ok");
  return 0;
}

Corpus predict_target(const ExperimentConfig& c, const Flags& f, std::string& label,
                      std::ostream& err) {
  if (f.corpus) {
    label = fs::path(*f.corpus).filename().string();
    return load_source_corpora(c, c.train.threads, err);
  }
  label = f.split;
  return load_split(c, f.split);
}

int cmd_predict(const Flags& f, std::ostream& out, std::ostream& err) {
  const ExperimentConfig c = load_config(f);
  if (f.checkpoint.empty()) config_error("predict needs --checkpoint");
  const Checkpoint ck = load_checkpoint(f.checkpoint);
  std::string label;
  Corpus corpus = predict_target(c, f, label, err);
  // A checkpoint without a head for some annotated modifier (single-task
  // models) is scored on the modifiers it covers.
  std::set<std::string> covered;
  for (const auto& name : corpus.applicable) {
    if (ck.model.head(name)) {
      covered.insert(name);
    } else {
      err << "note: checkpoint has no head for '" << name << "'; not predicted\n";
    }
  }
  if (!covered.empty() && covered != corpus.applicable) {
    corpus = restrict_to_modifiers(corpus, covered);
  }
  const std::string stem = (ck.name.empty() ? strip_suffix(fs::path(f.checkpoint).filename().string())
                                            : ck.name) + "." + label;
  RunManifest manifest(manifest_path(c, "predict-" + stem), "predict", to_json(c));
  manifest.add_input("checkpoint", f.checkpoint, file_hash(f.checkpoint));
  manifest.add_input("corpus", label, corpus_hash(corpus));
  const PredictionSet preds = predict_corpus(ck, corpus, c.train.threads);
  const fs::path dest = f.out.empty() ? c.output_dir / "predictions" / (stem + ".jsonl") : fs::path(f.out);
  write_predictions(preds, dest);
  manifest.add_artifact("predictions", dest);
  manifest.finalize("ok");
  out << "wrote " << preds.records().size() << " predictions to " << dest.string() << '\n';
  return 0;
}

int cmd_eval(const Flags& f, std::ostream& out, std::ostream& err) {
  const ExperimentConfig c = load_config(f);
  if (f.predictions.empty()) config_error("eval needs --predictions");
  std::string label;
  Flags gold_flags = f;
  if (!f.gold.empty()) gold_flags.corpus = f.gold;
  ExperimentConfig gold_cfg = c;
  if (!f.gold.empty()) gold_cfg.corpora = {{f.gold, "a"}};
  Corpus gold = predict_target(gold_cfg, gold_flags, label, err);
  const PredictionSet raw =
      read_predictions(f.predictions, gold.schema.restricted_to(gold.applicable));
  // Predictions from a single-task model cover only their own modifier.
  const auto predicted = raw.modifiers();
  const std::set<std::string> present(predicted.begin(), predicted.end());
  if (!present.empty() && present != gold.applicable) gold = restrict_to_modifiers(gold, present);
  const PredictionSet set = with_gold_from(raw, gold);
  std::size_t expected = 0;
  for (const auto& inst : gold.instances) {
    for (const auto& def : gold.schema.modifiers()) expected += gold.resolved_label(inst, def.name) ? 1 : 0;
  }
  if (set.records().size() != expected) {
    throw Error(ErrorKind::kSchemaMismatch,
                "predictions cover " + std::to_string(set.records().size()) + " of " +
                    std::to_string(expected) + " instance/modifier pairs");
  }
  const EvalReport report = build_report(set, c.eval);
  const std::string stem = strip_suffix(fs::path(f.predictions).stem().string());
  const fs::path base = f.out.empty() ? c.output_dir / "reports" / stem : fs::path(f.out);
  RunManifest manifest(manifest_path(c, "eval-" + base.filename().string()), "eval", to_json(c));
  manifest.add_input("predictions", f.predictions, file_hash(f.predictions));
  manifest.add_input("gold", label, corpus_hash(gold));
  const std::string table = format_report_table(report);
  write_text(fs::path(base.string() + ".json"), to_json(report).dump(2) + "\n");
  write_text(fs::path(base.string() + ".txt"), table);
  manifest.add_artifact("report", base.string() + ".json");
  manifest.add_artifact("table", base.string() + ".txt");
  manifest.finalize("ok");
  out << table;
  return 0;
}

int cmd_compare(const Flags& f, std::ostream& out) {
  const ExperimentConfig c = load_config(f);
  if (f.report_a.empty() || f.report_b.empty()) config_error("compare needs --a and --b");
  const EvalReport a = report_from_json(read_json_file(f.report_a));
  const EvalReport b = report_from_json(read_json_file(f.report_b));
  const auto rows = compare_reports(a, b, f.continuity);
  const std::string table = format_comparison_table(rows);
  const fs::path base = f.out.empty() ? c.output_dir / "reports" / "comparison" : fs::path(f.out);
  write_text(fs::path(base.string() + ".json"), to_json(rows).dump(2) + "\n");
  write_text(fs::path(base.string() + ".txt"), table);
  out << table;
  return 0;
}

void add_experiment_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "Experiment config (JSON)");
  app->add_option("--output-dir", f.output_dir, "Output directory");
  app->add_option("--corpus", f.corpus, "Corpus directory");
  app->add_option("--tag", f.tag, "Name used in checkpoint names");
  app->add_option("--seed", f.seed, "Seed for initialization and shuffling");
  app->add_option("--threads", f.threads, "Worker thread cap");
}

void add_feature_flags(CLI::App* app, Flags& f) {
  app->add_option("--before", f.before, "Context characters before the mention");
  app->add_option("--after", f.after, "Context characters after the mention");
  app->add_option("--max-len", f.max_len, "Maximum sequence length");
  app->add_flag("--no-hint", f.no_hint, "Omit the mention after the separator");
}

void add_train_flags(CLI::App* app, Flags& f) {
  add_feature_flags(app, f);
  app->add_option("--lr", f.lr, "Learning rate");
  app->add_option("--weight-decay", f.weight_decay, "AdamW weight decay");
  app->add_option("--batch-size", f.batch_size, "Batch size");
  app->add_option("--epochs", f.epochs, "Maximum epochs");
  app->add_option("--patience", f.patience, "Early-stop patience (0 disables)");
  app->add_option("--loss", f.loss, "Loss: ce or focal")->check(CLI::IsMember({"ce", "focal"}));
  app->add_option("--gamma", f.gamma, "Focal loss gamma");
  app->add_flag("--refit-on-train-plus-dev", f.refit, "Refit on train+dev for the tuned epoch count");
}

void add_eval_flags(CLI::App* app, Flags& f) {
  app->add_option("--exclude-class", f.exclude_class, "Exclude <modifier>:<label> from F1");
  app->add_flag("--include-default", f.include_default, "Count the default class in micro F1");
  app->add_flag("--pooled-average", f.pooled, "Pool the Avg column over instances");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task entity modifier classification", "modtl"};
  app.require_subcommand(1);
  Flags f;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic annotated corpus");
  synth->add_option("--config", f.config, "Synthetic config (JSON)");
  synth->add_option("--preset", f.preset, "disorder or substance_use");
  synth->add_option("--num-instances", f.num_instances, "Number of mentions");
  synth->add_option("--seed", f.seed, "Generator seed");
  synth->add_option("--out", f.out, "Destination directory");
  synth->add_option("--format", f.format, "standoff or jsonl");

  auto* stats = app.add_subcommand("stats", "Print corpus statistics");
  add_experiment_flags(stats, f);
  stats->add_option("--out", f.out, "Also write statistics JSON here");

  auto* prepare = app.add_subcommand("prepare", "Split, build vocabulary and cache features");
  add_experiment_flags(prepare, f);
  add_feature_flags(prepare, f);

  auto* train_cmd = app.add_subcommand("train", "Train a multi-task model");
  add_experiment_flags(train_cmd, f);
  add_train_flags(train_cmd, f);
  train_cmd->add_option("--source-checkpoint", f.source_checkpoint, "Start from this checkpoint");

  auto* transfer = app.add_subcommand("transfer", "Fine-tune a checkpoint on a new corpus");
  add_experiment_flags(transfer, f);
  add_train_flags(transfer, f);
  transfer->add_option("--source-checkpoint", f.source_checkpoint, "Source checkpoint")->required();

  auto* single = app.add_subcommand("single-task", "Train one single-head model per modifier");
  add_experiment_flags(single, f);
  add_train_flags(single, f);
  single->add_option("--modifier", f.modifiers, "Modifier(s) to train (default: all)");

  auto* predict_cmd = app.add_subcommand("predict", "Predict modifiers for a corpus");
  add_experiment_flags(predict_cmd, f);
  predict_cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint file")->required();
  predict_cmd->add_option("--split", f.split, "Prepared split: train, dev or test");
  predict_cmd->add_option("--out", f.out, "Prediction file (JSONL)");

  auto* eval = app.add_subcommand("eval", "Score predictions against gold labels");
  add_experiment_flags(eval, f);
  add_eval_flags(eval, f);
  eval->add_option("--predictions", f.predictions, "Prediction file (JSONL)")->required();
  eval->add_option("--gold", f.gold, "Gold corpus directory (default: prepared split)");
  eval->add_option("--split", f.split, "Prepared split used as gold");
  eval->add_option("--out", f.out, "Report path prefix");

  auto* compare = app.add_subcommand("compare", "Chi-square comparison of two reports");
  add_experiment_flags(compare, f);
  compare->add_option("--a", f.report_a, "First report JSON")->required();
  compare->add_option("--b", f.report_b, "Second report JSON")->required();
  compare->add_option("--out", f.out, "Output path prefix");
  compare->add_flag("--continuity-correction", f.continuity, "Apply Yates' correction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) return cmd_synth(f, out);
    if (*stats) return cmd_stats(f, out, err);
    if (*prepare) return cmd_prepare(f, out, err);
    if (*train_cmd) return cmd_train(f, false, out, err);
    if (*transfer) return cmd_train(f, true, out, err);
    if (*single) return cmd_single_task(f, out, err);
    if (*predict_cmd) return cmd_predict(f, out, err);
    if (*eval) return cmd_eval(f, out, err);
    if (*compare) return cmd_compare(f, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    if (const auto* ce = dynamic_cast<const CorpusError*>(&e)) {
      for (const auto& d : ce->diagnostics()) {
        err << "  " << d.file << ":" << d.line << ": " << d.message << '\n';
      }
    }
    switch (classify(e.kind())) {
      case ErrorClass::kUsage:
        return 1;
      case ErrorClass::kNumerical:
        return 3;
      case ErrorClass::kData:
        return 2;
    }
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace modtl::cli
