#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace debtscope {

enum class Status { kResolved, kUnresolved };

std::string_view ToString(Status s);
Status ParseStatus(std::string_view s);

// One issue report. `unified_text` is the normalized summary + description.
struct Document {
  std::string id;
  std::string project;
  std::string summary;
  std::string description;
  std::string unified_text;
  Status status = Status::kResolved;
  std::optional<std::string> created_at;

  bool operator==(const Document&) const = default;
};

// Builds the unified text: summary, one space, description, whitespace
// collapsed and trimmed. An empty description yields the summary alone.
std::string UnifyText(std::string_view summary, std::string_view description);

struct RejectedRecord {
  size_t line = 0;  // 1-based line (jsonl) or record ordinal (jira-json)
  std::string reason;

  bool operator==(const RejectedRecord&) const = default;
};

struct CorpusManifest {
  static constexpr int kFormatVersion = 1;

  std::string source_path;
  std::string ingest_time;
  size_t resolved = 0;
  size_t unresolved = 0;
  size_t rejected = 0;

  bool operator==(const CorpusManifest&) const = default;
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Document> documents, CorpusManifest manifest);

  const std::vector<Document>& documents() const { return documents_; }
  const CorpusManifest& manifest() const { return manifest_; }
  size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }
  const Document& operator[](size_t i) const { return documents_[i]; }

  // Index of the document with `id`, if present.
  std::optional<size_t> Find(std::string_view id) const;

  bool operator==(const Corpus& other) const {
    return documents_ == other.documents_ && manifest_ == other.manifest_;
  }

 private:
  std::vector<Document> documents_;
  CorpusManifest manifest_;
  std::unordered_map<std::string, size_t> index_;
};

enum class ExportFormat { kJiraJson, kJsonl };

ExportFormat ParseExportFormat(std::string_view s);

struct IngestOptions {
  std::string source_path;
  std::string ingest_time;  // recorded verbatim in the manifest
};

struct IngestResult {
  Corpus corpus;
  std::vector<RejectedRecord> rejects;
};

// Parses an export and keeps resolved issues in source order. Malformed
// records are skipped and reported; a duplicate id throws.
IngestResult Ingest(std::istream& source, ExportFormat format, const IngestOptions& options);

// Canonical JSONL: a header line followed by one document per line.
void WriteCorpus(const Corpus& corpus, std::ostream& out);
Corpus ReadCorpus(std::istream& in, std::string_view origin = "<stream>");
void SaveCorpus(const Corpus& corpus, const std::string& path);
Corpus LoadCorpus(const std::string& path);

// ---- labels ----

enum class Label { kATD, kWeakATD, kNonATD };

std::string_view ToString(Label l);
Label ParseLabel(std::string_view s);

struct LabelRecord {
  std::string doc_id;
  std::string annotator;
  Label label = Label::kNonATD;
  bool maybe_flag = false;  // "Maybe | ATD" or "Maybe | Non-ATD"
  std::optional<Label> final;

  bool operator==(const LabelRecord&) const = default;
};

// Throws ArgumentError when maybe_flag is combined with WeakATD.
void ValidateLabelRecord(const LabelRecord& r);

std::string LabelRecordToJsonLine(const LabelRecord& r);
LabelRecord LabelRecordFromJsonLine(std::string_view line);

std::vector<LabelRecord> LoadLabels(const std::string& path);
void SaveLabels(const std::vector<LabelRecord>& labels, const std::string& path);

}  // namespace debtscope
