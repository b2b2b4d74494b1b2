#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "debtscope/active.h"
#include "debtscope/classify.h"
#include "debtscope/corpus.h"
#include "debtscope/explain.h"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace debtscope {

// A transport-neutral reply; the HTTP layer copies it verbatim.
struct ServiceResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  nlohmann::json Json() const { return nlohmann::json::parse(body); }
};

enum class SessionStatus { kSeeding, kQuerying, kTraining, kDone };
std::string_view ToString(SessionStatus s);

struct SessionConfig {
  std::string corpus_ref;
  Strategy strategy = Strategy::kRandom;
  size_t seed_size = 100;
  size_t batch_size = 100;
  ClassifierSpec classifier;
  ExplainConfig explain;
  LabelMergeMode merge = LabelMergeMode::kTruePlusWeak;
  double holdout_fraction = 0.2;  // used only when the corpus has gold labels
  uint64_t rng_seed = 0;
  std::string annotator = "annotator";
};

nlohmann::ordered_json ToJson(const SessionConfig& c);
// Throws ArgumentError on any invalid field.
SessionConfig SessionConfigFromJson(const nlohmann::json& j);

// Trains a model for a session. Swappable so tests can inject doubles.
using ModelFactory = std::function<std::unique_ptr<TextModel>(
    const ClassifierSpec& spec, const TrainingSet& data, std::shared_ptr<const FeatureSpace> features)>;

ModelFactory DefaultModelFactory();

class AnnotationService {
 public:
  // `state_dir`, when set, receives one directory per session holding its
  // config and append-only logs; sessions found there are replayed.
  explicit AnnotationService(std::optional<std::filesystem::path> state_dir = std::nullopt,
                             ModelFactory factory = DefaultModelFactory());
  ~AnnotationService();

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  // Registers a corpus under `name`. `gold`, if given, is parallel to the
  // documents and enables holdout evaluation.
  void AddCorpus(const std::string& name, Corpus corpus, std::optional<std::vector<Label>> gold = std::nullopt);

  // Replays every session found under the state directory.
  void Restore();

  ServiceResponse CreateSession(const std::string& body);
  ServiceResponse NextBatch(const std::string& session_id);
  ServiceResponse SubmitLabels(const std::string& session_id, const std::string& body);
  ServiceResponse GetExplanation(const std::string& doc_id, const std::string& session_id, const std::string& method);
  ServiceResponse LearningCurve(const std::string& session_id);
  ServiceResponse Snapshot(const std::string& session_id);

  // Wires the /v1 routes onto `server`.
  void Mount(httplib::Server& server);

  struct Session;
  struct CorpusEntry;

 private:
  std::shared_ptr<Session> FindSession(const std::string& id) const;
  std::shared_ptr<Session> BuildSession(const std::string& id, const SessionConfig& config);

  std::optional<std::filesystem::path> state_dir_;
  ModelFactory factory_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<CorpusEntry>> corpora_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  uint64_t next_session_ = 1;
};

// Blocks serving /v1 on host:port until the process is stopped.
void Serve(AnnotationService& service, const std::string& host, int port);

}  // namespace debtscope
