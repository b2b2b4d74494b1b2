#include "debtscope/corpus.h"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>
#include <variant>

#include "debtscope/error.h"
#include "debtscope/util.h"
#include "json.hpp"

namespace debtscope {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kCorpusFormat = "debtscope-corpus";

// Returns the string at `key`, "" when absent or null, nullopt when present
// with a non-string type.
std::optional<std::string> OptionalString(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::string();
  if (!it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

// Either a parsed document or a rejection reason.
std::variant<Document, std::string> ParseJiraIssue(const json& issue) {
  if (!issue.is_object()) return std::string("record is not an object");
  auto key = issue.find("key");
  if (key == issue.end() || !key->is_string() || key->get<std::string>().empty()) {
    return std::string("missing key");
  }
  auto fields = issue.find("fields");
  if (fields == issue.end() || !fields->is_object()) return std::string("missing fields");
  auto summary = fields->find("summary");
  if (summary == fields->end() || !summary->is_string()) return std::string("missing fields.summary");
  auto description = OptionalString(*fields, "description");
  if (!description) return std::string("fields.description is not a string");

  Document doc;
  doc.id = key->get<std::string>();
  doc.summary = summary->get<std::string>();
  doc.description = *description;
  auto resolution = fields->find("resolution");
  doc.status = (resolution != fields->end() && !resolution->is_null()) ? Status::kResolved
                                                                        : Status::kUnresolved;
  auto project = fields->find("project");
  if (project != fields->end()) {
    if (project->is_object() && project->contains("key") && (*project)["key"].is_string()) {
      doc.project = (*project)["key"].get<std::string>();
    } else if (project->is_string()) {
      doc.project = project->get<std::string>();
    }
  }
  if (doc.project.empty()) {
    auto dash = doc.id.rfind('-');
    if (dash != std::string::npos) doc.project = doc.id.substr(0, dash);
  }
  auto created = fields->find("created");
  if (created != fields->end() && created->is_string()) doc.created_at = created->get<std::string>();
  doc.unified_text = UnifyText(doc.summary, doc.description);
  return doc;
}

std::variant<Document, std::string> ParseJsonlIssue(const json& rec) {
  if (!rec.is_object()) return std::string("record is not an object");
  auto id = rec.find("id");
  if (id == rec.end() || !id->is_string() || id->get<std::string>().empty()) {
    return std::string("missing id");
  }
  auto summary = rec.find("summary");
  if (summary == rec.end() || !summary->is_string()) return std::string("missing summary");
  auto description = OptionalString(rec, "description");
  if (!description) return std::string("description is not a string");
  auto project = OptionalString(rec, "project");
  if (!project) return std::string("project is not a string");

  Document doc;
  doc.id = id->get<std::string>();
  doc.project = *project;
  doc.summary = summary->get<std::string>();
  doc.description = *description;

  auto status = rec.find("status");
  if (status != rec.end() && !status->is_null()) {
    if (!status->is_string()) return std::string("status is not a string");
    try {
      doc.status = ParseStatus(status->get<std::string>());
    } catch (const ArgumentError& e) {
      return std::string(e.what());
    }
  } else if (rec.contains("resolution")) {
    doc.status = rec["resolution"].is_null() ? Status::kUnresolved : Status::kResolved;
  } else {
    return std::string("missing status/resolution");
  }
  auto created = rec.find("created_at");
  if (created != rec.end() && !created->is_null()) {
    if (!created->is_string()) return std::string("created_at is not a string");
    doc.created_at = created->get<std::string>();
  }
  doc.unified_text = UnifyText(doc.summary, doc.description);
  return doc;
}

ordered_json DocumentToJson(const Document& d) {
  ordered_json j;
  j["id"] = d.id;
  j["project"] = d.project;
  j["summary"] = d.summary;
  j["description"] = d.description;
  j["unified_text"] = d.unified_text;
  j["status"] = ToString(d.status);
  j["created_at"] = d.created_at ? ordered_json(*d.created_at) : ordered_json(nullptr);
  return j;
}

Document DocumentFromJson(const json& j) {
  Document d;
  d.id = j.at("id").get<std::string>();
  d.project = j.at("project").get<std::string>();
  d.summary = j.at("summary").get<std::string>();
  d.description = j.at("description").get<std::string>();
  d.unified_text = j.at("unified_text").get<std::string>();
  d.status = ParseStatus(j.at("status").get<std::string>());
  if (!j.at("created_at").is_null()) d.created_at = j.at("created_at").get<std::string>();
  return d;
}

}  // namespace

std::string_view ToString(Status s) { return s == Status::kResolved ? "resolved" : "unresolved"; }

Status ParseStatus(std::string_view s) {
  if (s == "resolved") return Status::kResolved;
  if (s == "unresolved") return Status::kUnresolved;
  throw ArgumentError("unknown status '" + std::string(s) + "'");
}

std::string UnifyText(std::string_view summary, std::string_view description) {
  std::string joined(summary);
  joined.push_back(' ');
  joined.append(description);
  return NormalizeWhitespace(joined);
}

Corpus::Corpus(std::vector<Document> documents, CorpusManifest manifest)
    : documents_(std::move(documents)), manifest_(std::move(manifest)) {
  index_.reserve(documents_.size());
  for (size_t i = 0; i < documents_.size(); ++i) {
    if (!index_.emplace(documents_[i].id, i).second) {
      throw Error("duplicate document id '" + documents_[i].id + "'");
    }
  }
}

std::optional<size_t> Corpus::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ExportFormat ParseExportFormat(std::string_view s) {
  if (s == "jira-json") return ExportFormat::kJiraJson;
  if (s == "jsonl") return ExportFormat::kJsonl;
  throw ArgumentError("unknown export format '" + std::string(s) + "' (expected jira-json or jsonl)");
}

IngestResult Ingest(std::istream& source, ExportFormat format, const IngestOptions& options) {
  std::vector<std::pair<size_t, std::variant<Document, std::string>>> parsed;

  if (format == ExportFormat::kJiraJson) {
    json root;
    try {
      root = json::parse(source);
    } catch (const json::parse_error& e) {
      throw Error("jira-json export does not parse: " + std::string(e.what()));
    }
    const json* issues = &root;
    if (root.is_object()) {
      auto it = root.find("issues");
      if (it == root.end() || !it->is_array()) throw Error("jira-json export has no 'issues' array");
      issues = &*it;
    } else if (!root.is_array()) {
      throw Error("jira-json export must be an object or an array");
    }
    size_t ordinal = 0;
    for (const auto& issue : *issues) parsed.emplace_back(++ordinal, ParseJiraIssue(issue));
  } else {
    std::string line;
    size_t lineno = 0;
    while (std::getline(source, line)) {
      ++lineno;
      if (NormalizeWhitespace(line).empty()) continue;
      json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (rec.is_discarded()) {
        parsed.emplace_back(lineno, std::string("invalid JSON"));
        continue;
      }
      parsed.emplace_back(lineno, ParseJsonlIssue(rec));
    }
  }

  IngestResult result;
  CorpusManifest manifest;
  manifest.source_path = options.source_path;
  manifest.ingest_time = options.ingest_time;
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  for (auto& [line, item] : parsed) {
    if (auto* reason = std::get_if<std::string>(&item)) {
      result.rejects.push_back({line, *reason});
      continue;
    }
    Document& doc = std::get<Document>(item);
    if (!seen.insert(doc.id).second) {
      throw Error("duplicate issue id '" + doc.id + "' at record " + std::to_string(line));
    }
    if (doc.status == Status::kResolved) {
      ++manifest.resolved;
      docs.push_back(std::move(doc));
    } else {
      ++manifest.unresolved;
    }
  }
  manifest.rejected = result.rejects.size();
  result.corpus = Corpus(std::move(docs), std::move(manifest));
  return result;
}

void WriteCorpus(const Corpus& corpus, std::ostream& out) {
  const auto& m = corpus.manifest();
  ordered_json header;
  header["format"] = kCorpusFormat;
  header["version"] = CorpusManifest::kFormatVersion;
  header["source_path"] = m.source_path;
  header["ingest_time"] = m.ingest_time;
  header["counts"] = {{"documents", corpus.size()},
                      {"resolved", m.resolved},
                      {"unresolved", m.unresolved},
                      {"rejected", m.rejected}};
  out << header.dump() << '\n';
  for (const auto& d : corpus.documents()) out << DocumentToJson(d).dump() << '\n';
}

Corpus ReadCorpus(std::istream& in, std::string_view origin) {
  const std::string where(origin);
  std::string line;
  if (!std::getline(in, line)) throw Error(where + ": empty corpus file (missing header)");
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.value("format", "") != kCorpusFormat) {
    throw Error(where + ": line 1 is not a corpus header");
  }
  if (header.value("version", -1) != CorpusManifest::kFormatVersion) {
    throw Error(where + ": unsupported corpus version " + header.value("version", json()).dump() +
                " (expected " + std::to_string(CorpusManifest::kFormatVersion) + ")");
  }
  CorpusManifest manifest;
  size_t expected = 0;
  try {
    manifest.source_path = header.at("source_path").get<std::string>();
    manifest.ingest_time = header.at("ingest_time").get<std::string>();
    const auto& counts = header.at("counts");
    expected = counts.at("documents").get<size_t>();
    manifest.resolved = counts.at("resolved").get<size_t>();
    manifest.unresolved = counts.at("unresolved").get<size_t>();
    manifest.rejected = counts.at("rejected").get<size_t>();
  } catch (const json::exception& e) {
    throw Error(where + ": malformed corpus header: " + e.what());
  }

  std::vector<Document> docs;
  docs.reserve(expected);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(where + ": line " + std::to_string(lineno) + " is not valid JSON");
    try {
      docs.push_back(DocumentFromJson(j));
    } catch (const std::exception& e) {
      throw Error(where + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (docs.size() != expected) {
    throw Error(where + ": header declares " + std::to_string(expected) + " documents but file holds " +
                std::to_string(docs.size()));
  }
  return Corpus(std::move(docs), std::move(manifest));
}

void SaveCorpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  WriteCorpus(corpus, out);
  out.flush();
  if (!out) throw Error("write failed for " + path);
}

Corpus LoadCorpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return ReadCorpus(in, path);
}

// ---- labels ----

std::string_view ToString(Label l) {
  switch (l) {
    case Label::kATD: return "ATD";
    case Label::kWeakATD: return "WeakATD";
    case Label::kNonATD: return "NonATD";
  }
  return "?";
}

Label ParseLabel(std::string_view s) {
  if (s == "ATD") return Label::kATD;
  if (s == "WeakATD" || s == "Weak-ATD") return Label::kWeakATD;
  if (s == "NonATD" || s == "Non-ATD") return Label::kNonATD;
  throw ArgumentError("unknown label '" + std::string(s) + "' (expected ATD, WeakATD or NonATD)");
}

void ValidateLabelRecord(const LabelRecord& r) {
  if (r.doc_id.empty()) throw ArgumentError("label record without doc_id");
  if (r.maybe_flag && r.label == Label::kWeakATD) {
    throw ArgumentError("maybe_flag is only valid with ATD or NonATD (doc " + r.doc_id + ")");
  }
}

std::string LabelRecordToJsonLine(const LabelRecord& r) {
  ordered_json j;
  j["doc_id"] = r.doc_id;
  j["annotator"] = r.annotator;
  j["label"] = ToString(r.label);
  j["maybe_flag"] = r.maybe_flag;
  j["final"] = r.final ? ordered_json(ToString(*r.final)) : ordered_json(nullptr);
  return j.dump();
}

LabelRecord LabelRecordFromJsonLine(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("label line is not a JSON object");
  LabelRecord r;
  try {
    r.doc_id = j.at("doc_id").get<std::string>();
    r.annotator = j.value("annotator", "");
    r.label = ParseLabel(j.at("label").get<std::string>());
    r.maybe_flag = j.value("maybe_flag", false);
    if (j.contains("final") && !j["final"].is_null()) r.final = ParseLabel(j["final"].get<std::string>());
  } catch (const json::exception& e) {
    throw Error(std::string("malformed label record: ") + e.what());
  }
  ValidateLabelRecord(r);
  return r;
}

std::vector<LabelRecord> LoadLabels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<LabelRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (NormalizeWhitespace(line).empty()) continue;
    try {
      out.push_back(LabelRecordFromJsonLine(line));
    } catch (const std::exception& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void SaveLabels(const std::vector<LabelRecord>& labels, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  for (const auto& r : labels) out << LabelRecordToJsonLine(r) << '\n';
  if (!out) throw Error("write failed for " + path);
}

}  // namespace debtscope
