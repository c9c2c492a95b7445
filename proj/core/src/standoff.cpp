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

#include "modtl/standoff.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "modtl/parallel.hpp"

namespace modtl {

namespace fs = std::filesystem;

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diags) {
  std::string msg = std::to_string(diags.size()) + " problem(s)";
  for (const auto& d : diags) {
    msg += "\n  " + d.file;
    if (d.line > 0) msg += ":" + std::to_string(d.line);
    msg += ": " + std::string(to_string(d.kind)) + ": " + d.message;
  }
  return msg;
}

ErrorKind first_kind(const std::vector<Diagnostic>& diags) {
  return diags.empty() ? ErrorKind::kInvalidArgument : diags.front().kind;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::optional<std::size_t> parse_offset(std::string_view s) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

struct Schema {
  ModifierSchema schema;
  std::set<std::string> applicable;
  std::map<std::string, std::set<std::string>> sources;
};

Schema read_schema(const fs::path& dir) {
  const fs::path path = dir / "schema.json";
  if (!fs::exists(path)) throw Error(ErrorKind::kIo, "missing " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, path.string() + ": " + e.what());
  }
  Schema out;
  try {
    out.schema = schema_from_json(j);
    if (j.contains("applicable")) {
      for (const auto& name : j.at("applicable")) out.applicable.insert(name.get<std::string>());
    } else {
      for (const auto& name : out.schema.names()) out.applicable.insert(name);
    }
    if (j.contains("sources")) {
      for (const auto& [src, mods] : j.at("sources").items()) {
        out.sources[src] = mods.get<std::set<std::string>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, path.string() + ": " + e.what());
  }
  for (const auto& name : out.applicable) {
    if (!out.schema.find(name)) {
      throw Error(ErrorKind::kUnknownModifier,
                  path.string() + ": applicable modifier '" + name + "' not in schema");
    }
  }
  return out;
}

struct ParsedFile {
  std::optional<Document> doc;
  std::vector<AnnotatedInstance> instances;
  std::vector<Diagnostic> errors;
  std::vector<Diagnostic> warnings;
};

ParsedFile parse_pair(const fs::path& txt, const fs::path& ann, const ModifierSchema& schema) {
  ParsedFile out;
  const std::string doc_id = txt.stem().string();
  const std::string ann_name = ann.filename().string();
  try {
    out.doc.emplace(doc_id, read_file(txt));
  } catch (const Error& e) {
    out.errors.push_back({e.kind(), txt.filename().string(), 0, e.what()});
    return out;
  }
  const Document& doc = *out.doc;
  std::string contents;
  try {
    contents = read_file(ann);
  } catch (const Error& e) {
    out.errors.push_back({e.kind(), ann_name, 0, e.what()});
    return out;
  }

  std::map<std::string, std::size_t> by_tag;  // T id -> instance index
  struct PendingAttr {
    std::size_t line;
    std::string modifier, target, label;
  };
  std::vector<PendingAttr> attrs;
  auto error = [&](ErrorKind kind, std::size_t line, std::string msg) {
    out.errors.push_back({kind, ann_name, line, std::move(msg)});
  };

  std::size_t lineno = 0;
  std::istringstream lines(contents);
  std::string line;
  while (std::getline(lines, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char kind = line.front();
    if (kind == '#' || kind == 'R' || kind == 'E' || kind == 'N' || kind == '*') continue;
    auto fields = split(line, '\t');
    if (kind == 'T') {
      if (fields.size() != 3) {
        error(ErrorKind::kMalformedLine, lineno, "expected 3 tab-separated fields");
        continue;
      }
      const std::string& tag = fields[0];
      const auto sp = fields[1].find(' ');
      if (sp == std::string::npos) {
        error(ErrorKind::kMalformedLine, lineno, "missing offsets");
        continue;
      }
      std::string type = fields[1].substr(0, sp);
      std::vector<Span> spans;
      bool ok = true;
      for (const auto& frag : split(std::string_view(fields[1]).substr(sp + 1), ';')) {
        auto parts = split_ws(frag);
        std::optional<std::size_t> s, e;
        if (parts.size() == 2) {
          s = parse_offset(parts[0]);
          e = parse_offset(parts[1]);
        }
        if (!s || !e || *s >= *e) {
          error(ErrorKind::kMalformedLine, lineno, "bad offset pair '" + frag + "'");
          ok = false;
          break;
        }
        spans.push_back({*s, *e});
      }
      if (!ok) continue;
      if (by_tag.count(tag)) {
        error(ErrorKind::kMalformedLine, lineno, "duplicate tag " + tag);
        continue;
      }
      bool in_bounds = true;
      for (const auto& s : spans) {
        if (s.end > doc.length()) {
          error(ErrorKind::kOffsetOutOfBounds, lineno,
                "span end " + std::to_string(s.end) + " beyond document length " +
                    std::to_string(doc.length()));
          in_bounds = false;
        }
      }
      if (!in_bounds) continue;
      EntityMention mention;
      try {
        mention = make_mention(doc, spans, type);
      } catch (const Error& e) {
        error(e.kind(), lineno, e.what());
        continue;
      }
      // Fragments may be ';'-separated (one per span) or space-joined.
      auto given = split(fields[2], ';');
      bool matches = given == mention.surface;
      if (!matches) {
        std::string joined;
        for (const auto& s : mention.surface) joined += (joined.empty() ? "" : " ") + s;
        matches = fields[2] == joined;
      }
      if (!matches) {
        error(ErrorKind::kSurfaceMismatch, lineno,
              tag + ": annotation text '" + fields[2] + "' does not match document");
        continue;
      }
      AnnotatedInstance inst;
      inst.id = doc_id + ":" + tag;
      inst.mention = std::move(mention);
      by_tag[tag] = out.instances.size();
      out.instances.push_back(std::move(inst));
    } else if (kind == 'A' || kind == 'M') {
      auto parts = fields.size() == 2 ? split_ws(fields[1]) : std::vector<std::string>{};
      if (parts.size() != 3) {
        error(ErrorKind::kMalformedLine, lineno, "expected 'A<n>\\t<Modifier> T<n> <Label>'");
        continue;
      }
      attrs.push_back({lineno, parts[0], parts[1], parts[2]});
    } else {
      error(ErrorKind::kMalformedLine, lineno, "unrecognized annotation kind");
    }
  }

  for (const auto& a : attrs) {
    auto it = by_tag.find(a.target);
    if (it == by_tag.end()) {
      error(ErrorKind::kMalformedLine, a.line, "attribute refers to unknown " + a.target);
      continue;
    }
    const ModifierDef* def = schema.find(a.modifier);
    if (!def) {
      error(ErrorKind::kUnknownModifier, a.line, "'" + a.modifier + "'");
      continue;
    }
    if (!def->label_index(a.label)) {
      error(ErrorKind::kUnknownLabel, a.line, a.modifier + "=" + a.label);
      continue;
    }
    auto& labels = out.instances[it->second].labels;
    if (auto prev = labels.find(a.modifier); prev != labels.end()) {
      out.warnings.push_back({ErrorKind::kMalformedLine, ann_name, a.line,
                              "duplicate " + a.modifier + " on " + a.target +
                                  "; keeping '" + prev->second + "'"});
      continue;
    }
    labels.emplace(a.modifier, a.label);
  }
  return out;
}

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void check_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIo, "not a directory: " + dir.string());
}

std::string tag_number(const AnnotatedInstance& inst) {
  const std::string prefix = inst.mention.doc_id + ":T";
  if (inst.id.rfind(prefix, 0) != 0) return {};
  std::string rest = inst.id.substr(prefix.size());
  if (rest.empty() || !std::all_of(rest.begin(), rest.end(), ::isdigit)) return {};
  return rest;
}

void check_doc_id(const std::string& id) {
  if (id.find('/') != std::string::npos || id.find('\\') != std::string::npos ||
      id == "." || id == ".." || id == "schema" || id == "instances") {
    throw Error(ErrorKind::kInvalidArgument, "document id '" + id + "' is not a safe file name");
  }
}

}  // namespace

CorpusError::CorpusError(std::vector<Diagnostic> diagnostics)
    : Error(first_kind(diagnostics), join_diagnostics(diagnostics)),
      diagnostics_(std::move(diagnostics)) {}

Corpus parse_standoff(const fs::path& dir, std::vector<Diagnostic>* warnings,
                      unsigned threads) {
  check_directory(dir);
  Schema schema = read_schema(dir);
  auto txts = files_with_extension(dir, ".txt");
  std::vector<Diagnostic> errors;
  for (const auto& ann : files_with_extension(dir, ".ann")) {
    auto txt = ann;
    txt.replace_extension(".txt");
    if (!fs::exists(txt)) {
      errors.push_back({ErrorKind::kIo, ann.filename().string(), 0, "no matching .txt"});
    }
  }
  std::vector<ParsedFile> parsed(txts.size());
  parallel_for(txts.size(), threads, [&](std::size_t i) {
    auto ann = txts[i];
    ann.replace_extension(".ann");
    if (!fs::exists(ann)) {
      parsed[i].errors.push_back(
          {ErrorKind::kIo, txts[i].filename().string(), 0, "no matching .ann"});
      return;
    }
    parsed[i] = parse_pair(txts[i], ann, schema.schema);
  });

  Corpus corpus;
  corpus.schema = schema.schema;
  corpus.applicable = schema.applicable;
  corpus.source_applicable = schema.sources;
  for (auto& p : parsed) {
    errors.insert(errors.end(), p.errors.begin(), p.errors.end());
    if (warnings) warnings->insert(warnings->end(), p.warnings.begin(), p.warnings.end());
    if (p.doc) {
      const std::string id = p.doc->id();
      corpus.documents.emplace(id, std::move(*p.doc));
    }
    for (auto& inst : p.instances) corpus.instances.push_back(std::move(inst));
  }
  if (!errors.empty()) throw CorpusError(std::move(errors));
  return corpus;
}

nlohmann::json schema_file_json(const Corpus& corpus) {
  nlohmann::json j;
  j["modifiers"] = to_json(corpus.schema);
  j["applicable"] = std::vector<std::string>(corpus.applicable.begin(), corpus.applicable.end());
  if (!corpus.source_applicable.empty()) {
    nlohmann::json sources = nlohmann::json::object();
    for (const auto& [src, mods] : corpus.source_applicable) {
      sources[src] = std::vector<std::string>(mods.begin(), mods.end());
    }
    j["sources"] = sources;
  }
  return j;
}

namespace {

void write_documents_and_schema(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "schema.json", schema_file_json(corpus).dump(2) + "\n");
  for (const auto& [id, doc] : corpus.documents) {
    check_doc_id(id);
    write_file(dir / (id + ".txt"), doc.text());
  }
}

}  // namespace

void write_standoff(const Corpus& corpus, const fs::path& dir) {
  write_documents_and_schema(corpus, dir);
  std::map<std::string, std::vector<const AnnotatedInstance*>> by_doc;
  for (const auto& inst : corpus.instances) by_doc[inst.mention.doc_id].push_back(&inst);
  for (const auto& [id, _] : corpus.documents) {
    auto& insts = by_doc[id];
    std::set<std::string> used;
    std::size_t next = 1;
    for (const auto* inst : insts) {
      if (auto n = tag_number(*inst); !n.empty()) {
        used.insert(n);
        next = std::max<std::size_t>(next, std::stoull(n) + 1);
      }
    }
    std::ostringstream ann;
    std::size_t attr = 1;
    for (const auto* inst : insts) {
      std::string n = tag_number(*inst);
      if (n.empty()) n = std::to_string(next++);
      ann << 'T' << n << '\t' << inst->mention.type;
      for (std::size_t k = 0; k < inst->mention.spans.size(); ++k) {
        ann << (k == 0 ? " " : ";") << inst->mention.spans[k].start << ' '
            << inst->mention.spans[k].end;
      }
      ann << '\t';
      for (std::size_t k = 0; k < inst->mention.surface.size(); ++k) {
        ann << (k == 0 ? "" : ";") << inst->mention.surface[k];
      }
      ann << '\n';
      for (const auto& [mod, label] : inst->labels) {
        ann << 'A' << attr++ << '\t' << mod << " T" << n << ' ' << label << '\n';
      }
    }
    write_file(dir / (id + ".ann"), ann.str());
  }
}

Corpus parse_jsonl_corpus(const fs::path& dir) {
  check_directory(dir);
  Schema schema = read_schema(dir);
  Corpus corpus;
  corpus.schema = schema.schema;
  corpus.applicable = schema.applicable;
  corpus.source_applicable = schema.sources;
  std::vector<Diagnostic> errors;
  for (const auto& txt : files_with_extension(dir, ".txt")) {
    try {
      const std::string id = txt.stem().string();
      corpus.documents.emplace(id, Document(id, read_file(txt)));
    } catch (const Error& e) {
      errors.push_back({e.kind(), txt.filename().string(), 0, e.what()});
    }
  }
  std::ifstream in(dir / "instances.jsonl");
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + (dir / "instances.jsonl").string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto diag = [&](ErrorKind kind, const std::string& msg) {
      errors.push_back({kind, "instances.jsonl", lineno, msg});
    };
    try {
      auto j = nlohmann::json::parse(line);
      AnnotatedInstance inst;
      const std::string doc_id = j.at("doc_id").get<std::string>();
      auto it = corpus.documents.find(doc_id);
      if (it == corpus.documents.end()) {
        diag(ErrorKind::kMalformedLine, "unknown doc_id '" + doc_id + "'");
        continue;
      }
      std::vector<Span> spans;
      for (const auto& s : j.at("spans")) {
        spans.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
      }
      inst.mention = make_mention(it->second, spans, j.value("type", std::string("Entity")));
      if (j.contains("surface") &&
          j.at("surface").get<std::vector<std::string>>() != inst.mention.surface) {
        diag(ErrorKind::kSurfaceMismatch, "surface does not match document");
        continue;
      }
      inst.id = j.value("id", doc_id + ":" + std::to_string(lineno));
      inst.source = j.value("source", std::string());
      bool ok = true;
      const nlohmann::json labels = j.value("labels", nlohmann::json::object());
      for (const auto& [mod, label] : labels.items()) {
        const ModifierDef* def = corpus.schema.find(mod);
        const std::string value = label.get<std::string>();
        if (!def) {
          diag(ErrorKind::kUnknownModifier, "'" + mod + "'");
          ok = false;
        } else if (!def->label_index(value)) {
          diag(ErrorKind::kUnknownLabel, mod + "=" + value);
          ok = false;
        } else {
          inst.labels.emplace(mod, value);
        }
      }
      if (ok) corpus.instances.push_back(std::move(inst));
    } catch (const nlohmann::json::exception& e) {
      diag(ErrorKind::kMalformedLine, e.what());
    } catch (const Error& e) {
      diag(e.kind(), e.what());
    }
  }
  if (!errors.empty()) throw CorpusError(std::move(errors));
  corpus.validate();
  return corpus;
}

void write_jsonl_corpus(const Corpus& corpus, const fs::path& dir) {
  write_documents_and_schema(corpus, dir);
  std::ostringstream out;
  for (const auto& inst : corpus.instances) {
    nlohmann::json j;
    j["id"] = inst.id;
    j["doc_id"] = inst.mention.doc_id;
    j["type"] = inst.mention.type;
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& s : inst.mention.spans) spans.push_back({s.start, s.end});
    j["spans"] = spans;
    j["surface"] = inst.mention.surface;
    j["labels"] = inst.labels;
    if (!inst.source.empty()) j["source"] = inst.source;
    out << j.dump() << '\n';
  }
  write_file(dir / "instances.jsonl", out.str());
}

Corpus load_corpus(const fs::path& dir, std::vector<Diagnostic>* warnings,
                   unsigned threads) {
  if (fs::exists(dir / "instances.jsonl")) return parse_jsonl_corpus(dir);
  return parse_standoff(dir, warnings, threads);
}

}  // namespace modtl
