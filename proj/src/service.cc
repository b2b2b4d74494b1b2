#include "debtscope/service.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "debtscope/error.h"
#include "debtscope/textprep.h"
#include "debtscope/util.h"
#include "httplib.h"

namespace debtscope {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string_view ToString(SessionStatus s) {
  switch (s) {
    case SessionStatus::kSeeding: return "seeding";
    case SessionStatus::kQuerying: return "querying";
    case SessionStatus::kTraining: return "training";
    case SessionStatus::kDone: return "done";
  }
  return "unknown";
}

ordered_json ToJson(const SessionConfig& c) {
  ordered_json j;
  j["corpus_ref"] = c.corpus_ref;
  j["strategy"] = ToString(c.strategy);
  j["seed_size"] = c.seed_size;
  j["batch_size"] = c.batch_size;
  j["classifier"] = ToJson(c.classifier);
  j["explain_config"] = ToJson(c.explain);
  j["label_mode"] = ToString(c.merge);
  j["holdout_fraction"] = c.holdout_fraction;
  j["rng_seed"] = c.rng_seed;
  j["annotator"] = c.annotator;
  return j;
}

SessionConfig SessionConfigFromJson(const json& j) {
  if (!j.is_object()) throw ArgumentError("session config must be a JSON object");
  SessionConfig c;
  try {
    if (!j.contains("corpus_ref") || !j["corpus_ref"].is_string()) throw ArgumentError("corpus_ref is required");
    c.corpus_ref = j["corpus_ref"].get<std::string>();
    if (j.contains("strategy")) c.strategy = ParseStrategy(j["strategy"].get<std::string>());
    if (j.contains("seed_size")) {
      if (!j["seed_size"].is_number_integer() || j["seed_size"].get<long long>() <= 0) {
        throw ArgumentError("seed_size must be a positive integer");
      }
      c.seed_size = j["seed_size"].get<size_t>();
    }
    if (j.contains("batch_size")) {
      if (!j["batch_size"].is_number_integer() || j["batch_size"].get<long long>() <= 0) {
        throw ArgumentError("batch_size must be a positive integer");
      }
      c.batch_size = j["batch_size"].get<size_t>();
    }
    if (j.contains("classifier")) c.classifier = ClassifierSpecFromJson(j["classifier"]);
    if (j.contains("explain_config")) c.explain = ExplainConfigFromJson(j["explain_config"]);
    if (j.contains("label_mode")) c.merge = ParseLabelMergeMode(j["label_mode"].get<std::string>());
    c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
    if (!(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0)) {
      throw ArgumentError("holdout_fraction must lie in [0, 1)");
    }
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.annotator = j.value("annotator", c.annotator);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("malformed session config: ") + e.what());
  }
  Validate(c.explain);
  return c;
}

ModelFactory DefaultModelFactory() {
  return [](const ClassifierSpec& spec, const TrainingSet& data,
            std::shared_ptr<const FeatureSpace> features) -> std::unique_ptr<TextModel> {
    return Fit(spec, data, std::move(features));
  };
}

namespace {

ServiceResponse JsonReply(int status, const ordered_json& body) { return {status, body.dump(), "application/json"}; }

ServiceResponse ErrorReply(int status, const std::string& message) {
  ordered_json j;
  j["error"] = message;
  return JsonReply(status, j);
}

// Appends one line and syncs it to disk before returning.
void AppendDurable(const fs::path& path, const std::string& line) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error("cannot open " + path.string() + " for append");
  std::string data = line + "\n";
  const char* p = data.data();
  size_t left = data.size();
  while (left > 0) {
    ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      ::close(fd);
      throw Error("write failed on " + path.string());
    }
    p += n;
    left -= static_cast<size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

// Class frequencies with add-one smoothing. Stands in until the labeled set
// holds both classes.
class PriorModel final : public TextModel {
 public:
  PriorModel(std::span<const int> labels, size_t k) : probs_(k, 1.0) {
    for (int y : labels) probs_[static_cast<size_t>(y)] += 1.0;
    double total = static_cast<double>(labels.size() + k);
    for (double& p : probs_) p /= total;
  }
  size_t num_classes() const override { return probs_.size(); }
  ProbVector PredictTokens(const std::vector<std::string>&) const override { return {probs_}; }

 private:
  std::vector<double> probs_;
};

// Label the session trains on: "Maybe" hedges an ATD vote down to WeakATD.
Label TrainingLabel(const LabelRecord& r) {
  if (r.maybe_flag && r.label == Label::kATD) return Label::kWeakATD;
  return r.label;
}

}  // namespace

struct AnnotationService::CorpusEntry {
  Corpus corpus;
  std::vector<TokenizedDoc> docs;
  std::optional<std::vector<Label>> gold;
  std::shared_ptr<const FeatureSpace> tfidf;
  std::once_flag embeddings_once;
  std::vector<EmbeddingVector> embeddings;

  const std::vector<EmbeddingVector>& Embeddings() {
    std::call_once(embeddings_once, [&] {
      HashedBowProvider provider;
      embeddings.reserve(docs.size());
      for (const auto& d : docs) embeddings.push_back(provider.EmbedTokens(d.tokens));
    });
    return embeddings;
  }
};

struct AnnotationService::Session {
  std::string id;
  SessionConfig config;
  std::shared_ptr<CorpusEntry> corpus;
  std::shared_ptr<const FeatureSpace> features;
  std::optional<fs::path> dir;

  std::mutex mu;
  std::atomic<bool> training{false};
  SessionStatus status = SessionStatus::kSeeding;
  int iteration = 0;
  uint64_t model_version = 0;
  std::vector<int> pool;     // ascending
  std::vector<int> holdout;  // ascending
  std::vector<int> labeled;  // acquisition order
  std::vector<int> awaiting;
  bool issued = false;
  std::map<int, LabelRecord> received;  // current batch
  std::map<int, Label> final_labels;
  std::unique_ptr<TextModel> model;
  bool model_trained = false;  // false while only the prior is available
  Rng select_rng{0};
  std::vector<CurvePoint> curve;
  std::map<std::tuple<uint64_t, int, ExplainMethod>, std::string> explain_cache;

  bool Awaits(int idx) const { return std::find(awaiting.begin(), awaiting.end(), idx) != awaiting.end(); }
};

AnnotationService::AnnotationService(std::optional<fs::path> state_dir, ModelFactory factory)
    : state_dir_(std::move(state_dir)), factory_(std::move(factory)) {
  if (state_dir_) fs::create_directories(*state_dir_ / "sessions");
}

AnnotationService::~AnnotationService() = default;

void AnnotationService::AddCorpus(const std::string& name, Corpus corpus, std::optional<std::vector<Label>> gold) {
  if (gold && gold->size() != corpus.size()) {
    throw ArgumentError("gold labels for corpus '" + name + "' do not cover every document");
  }
  auto entry = std::make_shared<CorpusEntry>();
  entry->docs.reserve(corpus.size());
  for (const auto& d : corpus.documents()) entry->docs.push_back(Preprocess(d, PrepConfig{}));
  entry->tfidf = FeatureSpace::FitTfidf(entry->docs);
  entry->corpus = std::move(corpus);
  entry->gold = std::move(gold);
  std::unique_lock lock(registry_mutex_);
  corpora_[name] = std::move(entry);
}

std::shared_ptr<AnnotationService::Session> AnnotationService::FindSession(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<AnnotationService::Session> AnnotationService::BuildSession(const std::string& id,
                                                                            const SessionConfig& config) {
  std::shared_ptr<CorpusEntry> entry;
  {
    std::shared_lock lock(registry_mutex_);
    auto it = corpora_.find(config.corpus_ref);
    if (it != corpora_.end()) entry = it->second;
  }
  if (!entry) return nullptr;

  auto s = std::make_shared<Session>();
  s->id = id;
  s->config = config;
  s->corpus = entry;
  s->features = config.classifier.features == FeatureKind::kEmbedding
                    ? FeatureSpace::FromProvider(std::make_shared<HashedBowProvider>())
                    : entry->tfidf;
  s->select_rng = Rng(DeriveSeed(config.rng_seed, "select"));

  std::vector<int> rest(entry->docs.size());
  for (size_t i = 0; i < rest.size(); ++i) rest[i] = static_cast<int>(i);
  if (entry->gold && config.holdout_fraction > 0.0) {
    std::vector<int> classes;
    for (Label l : *entry->gold) classes.push_back(BinaryClass(l, config.merge));
    Rng holdout_rng(DeriveSeed(config.rng_seed, "holdout"));
    std::tie(s->holdout, rest) = StratifiedHoldout(classes, config.holdout_fraction, holdout_rng);
  }
  Rng seed_rng(DeriveSeed(config.rng_seed, "seed"));
  QueryInputs in;
  in.pool = rest;
  s->awaiting = SelectBatch(Strategy::kRandom, in, config.seed_size, seed_rng);
  std::set<int> chosen(s->awaiting.begin(), s->awaiting.end());
  for (int idx : rest) {
    if (!chosen.count(idx)) s->pool.push_back(idx);
  }
  s->status = s->awaiting.empty() ? SessionStatus::kDone : SessionStatus::kSeeding;
  return s;
}

ServiceResponse AnnotationService::CreateSession(const std::string& body) {
  SessionConfig config;
  try {
    config = SessionConfigFromJson(json::parse(body));
  } catch (const json::exception& e) {
    return ErrorReply(400, std::string("malformed JSON: ") + e.what());
  } catch (const ArgumentError& e) {
    ordered_json j;
    j["error"] = e.what();
    j["valid_strategies"] = StrategyNames();
    return JsonReply(400, j);
  }
  std::string id;
  {
    std::unique_lock lock(registry_mutex_);
    char buf[32];
    do {
      std::snprintf(buf, sizeof(buf), "s%06llu", static_cast<unsigned long long>(next_session_++));
    } while (sessions_.count(buf));
    id = buf;
  }
  auto s = BuildSession(id, config);
  if (!s) return ErrorReply(404, "unknown corpus '" + config.corpus_ref + "'");
  if (state_dir_) {
    s->dir = *state_dir_ / "sessions" / id;
    fs::create_directories(*s->dir);
    std::ofstream out(*s->dir / "session.json");
    ordered_json meta;
    meta["session_id"] = id;
    meta["config"] = ToJson(config);
    out << meta.dump(2) << "\n";
    if (!out) return ErrorReply(500, "cannot persist session config");
  }
  {
    std::unique_lock lock(registry_mutex_);
    sessions_[id] = s;
  }
  ordered_json j;
  j["session_id"] = id;
  j["status"] = ToString(s->status);
  j["seed_batch_size"] = s->awaiting.size();
  return JsonReply(201, j);
}

namespace {

ordered_json ProbsJson(const TextModel& model, const ProbVector& p) {
  ordered_json j;
  auto names = model.class_names();
  for (size_t c = 0; c < p.size(); ++c) j[names[c]] = p[c];
  return j;
}

}  // namespace

ServiceResponse AnnotationService::NextBatch(const std::string& session_id) {
  auto s = FindSession(session_id);
  if (!s) return ErrorReply(404, "unknown session '" + session_id + "'");
  if (s->training) return JsonReply(409, {{"status", "training"}, {"error", "model is training"}});
  std::lock_guard lock(s->mu);
  if (s->status == SessionStatus::kDone) return ErrorReply(410, "pool exhausted; session is done");
  if (s->issued) {
    ordered_json j;
    j["error"] = "previous batch is incomplete";
    j["status"] = ToString(s->status);
    j["outstanding"] = s->awaiting.size() - s->received.size();
    return JsonReply(409, j);
  }
  if (s->dir) {
    ordered_json ev;
    ev["iteration"] = s->iteration;
    AppendDurable(*s->dir / "issued.jsonl", ev.dump());
  }
  s->issued = true;

  ordered_json docs = ordered_json::array();
  for (int idx : s->awaiting) {
    const Document& d = s->corpus->corpus[static_cast<size_t>(idx)];
    ordered_json item;
    item["id"] = d.id;
    item["text"] = d.unified_text;
    item["summary"] = d.summary;
    item["description"] = d.description;
    if (s->model) item["predicted_probs"] = ProbsJson(*s->model, s->model->PredictProba(s->corpus->docs[idx]));
    docs.push_back(std::move(item));
  }
  ordered_json j;
  j["docs"] = std::move(docs);
  j["iteration"] = s->iteration;
  j["model_version"] = s->model_version;
  return JsonReply(200, j);
}

namespace {

// Retrains on everything labeled so far, evaluates, and picks the next batch.
void CompleteBatch(AnnotationService::Session& s, const ModelFactory& factory);

}  // namespace

ServiceResponse AnnotationService::SubmitLabels(const std::string& session_id, const std::string& body) {
  auto s = FindSession(session_id);
  if (!s) return ErrorReply(404, "unknown session '" + session_id + "'");
  if (s->training) return JsonReply(409, {{"status", "training"}, {"error", "model is training"}});
  json parsed;
  try {
    parsed = json::parse(body);
  } catch (const json::exception& e) {
    return ErrorReply(400, std::string("malformed JSON: ") + e.what());
  }
  if (!parsed.is_object() || !parsed.contains("labels") || !parsed["labels"].is_array()) {
    return ErrorReply(400, "body must be {\"labels\": [...]}");
  }

  std::lock_guard lock(s->mu);
  if (s->status == SessionStatus::kDone) return ErrorReply(410, "session is done");

  std::vector<std::pair<int, LabelRecord>> batch;
  std::map<int, Label> in_request;
  for (const auto& item : parsed["labels"]) {
    LabelRecord r;
    try {
      r.doc_id = item.at("doc_id").get<std::string>();
      r.label = ParseLabel(item.at("label").get<std::string>());
      r.maybe_flag = item.value("maybe_flag", false);
      r.annotator = s->config.annotator;
      ValidateLabelRecord(r);
    } catch (const json::exception& e) {
      return ErrorReply(422, std::string("malformed label entry: ") + e.what());
    } catch (const ArgumentError& e) {
      return ErrorReply(422, e.what());
    }
    auto idx = s->corpus->corpus.Find(r.doc_id);
    if (!idx || !s->issued || !s->Awaits(static_cast<int>(*idx))) {
      return ErrorReply(422, "document '" + r.doc_id + "' is not in the issued batch");
    }
    const int i = static_cast<int>(*idx);
    r.final = TrainingLabel(r);
    auto prev = s->received.find(i);
    if (prev != s->received.end() && prev->second.final != r.final) {
      return ErrorReply(422, "document '" + r.doc_id + "' already has a different label in this batch");
    }
    auto dup = in_request.find(i);
    if (dup != in_request.end() && dup->second != *r.final) {
      return ErrorReply(422, "conflicting labels for document '" + r.doc_id + "' in one request");
    }
    in_request[i] = *r.final;
    batch.emplace_back(i, std::move(r));
  }

  size_t accepted = 0;
  for (auto& [i, r] : batch) {
    if (s->received.count(i)) continue;
    if (s->dir) AppendDurable(*s->dir / "labels.jsonl", LabelRecordToJsonLine(r));
    s->received.emplace(i, std::move(r));
    ++accepted;
  }

  ordered_json j;
  j["accepted"] = accepted;
  const bool complete = s->received.size() == s->awaiting.size();
  if (complete) {
    s->training = true;
    s->status = SessionStatus::kTraining;
    try {
      CompleteBatch(*s, factory_);
    } catch (...) {
      s->training = false;
      throw;
    }
    s->training = false;
  }
  j["retrained"] = complete;
  j["iteration"] = s->iteration;
  j["model_version"] = s->model_version;
  j["status"] = ToString(s->status);
  if (complete && !s->curve.empty() && s->curve.back().iteration == s->iteration) {
    j["metrics"] = ToJson(s->curve.back().metrics);
  }
  return JsonReply(200, j);
}

namespace {

void CompleteBatch(AnnotationService::Session& s, const ModelFactory& factory) {
  auto& entry = *s.corpus;
  for (int idx : s.awaiting) {
    s.labeled.push_back(idx);
    s.final_labels[idx] = *s.received.at(idx).final;
  }
  s.awaiting.clear();
  s.received.clear();
  s.issued = false;

  std::vector<TokenizedDoc> train_docs;
  std::vector<int> train_labels;
  bool has[2] = {false, false};
  for (int idx : s.labeled) {
    train_docs.push_back(entry.docs[static_cast<size_t>(idx)]);
    int y = BinaryClass(s.final_labels.at(idx), s.config.merge);
    has[y] = true;
    train_labels.push_back(y);
  }
  s.model_trained = has[0] && has[1];
  if (s.model_trained) {
    s.model = factory(s.config.classifier, TrainingSet{train_docs, train_labels, 2}, s.features);
  } else {
    s.model = std::make_unique<PriorModel>(train_labels, 2);
  }
  ++s.model_version;
  ++s.iteration;
  s.explain_cache.clear();

  if (entry.gold && !s.holdout.empty()) {
    std::vector<int> predicted, gold;
    for (int idx : s.holdout) {
      predicted.push_back(static_cast<int>(s.model->PredictProba(entry.docs[static_cast<size_t>(idx)]).Argmax()));
      gold.push_back(BinaryClass((*entry.gold)[static_cast<size_t>(idx)], s.config.merge));
    }
    s.curve.push_back({s.iteration, s.labeled.size(), ComputeMetrics(predicted, gold, 1)});
  }

  if (s.pool.empty()) {
    s.status = SessionStatus::kDone;
    return;
  }
  Strategy strategy = s.model_trained ? s.config.strategy : Strategy::kRandom;
  std::vector<ProbVector> probs;
  if (NeedsModel(strategy)) {
    probs.resize(entry.docs.size());
    for (int idx : s.pool) probs[idx] = s.model->PredictProba(entry.docs[static_cast<size_t>(idx)]);
    if (strategy == Strategy::kContrastive) {
      for (int idx : s.labeled) probs[idx] = s.model->PredictProba(entry.docs[static_cast<size_t>(idx)]);
    }
  }
  QueryInputs in;
  in.pool = s.pool;
  in.labeled = s.labeled;
  in.probs = probs;
  if (NeedsEmbeddings(strategy)) in.embeddings = entry.Embeddings();
  s.awaiting = SelectBatch(strategy, in, s.config.batch_size, s.select_rng);
  std::set<int> chosen(s.awaiting.begin(), s.awaiting.end());
  std::erase_if(s.pool, [&](int idx) { return chosen.count(idx) > 0; });
  s.status = SessionStatus::kQuerying;
}

}  // namespace

ServiceResponse AnnotationService::GetExplanation(const std::string& doc_id, const std::string& session_id,
                                                  const std::string& method) {
  auto s = FindSession(session_id);
  if (!s) return ErrorReply(404, "unknown session '" + session_id + "'");
  ExplainMethod m;
  try {
    m = ParseExplainMethod(method);
  } catch (const ArgumentError& e) {
    return ErrorReply(400, e.what());
  }
  if (s->training) return JsonReply(409, {{"status", "training"}, {"error", "model is training"}});
  std::lock_guard lock(s->mu);
  if (!s->model) return ErrorReply(409, "no trained model yet; label the seed batch first");
  auto idx = s->corpus->corpus.Find(doc_id);
  if (!idx) return ErrorReply(404, "unknown document '" + doc_id + "'");
  auto key = std::make_tuple(s->model_version, static_cast<int>(*idx), m);
  auto cached = s->explain_cache.find(key);
  if (cached != s->explain_cache.end()) return {200, cached->second, "application/json"};

  Explanation e = Explain(m, *s->model, s->corpus->docs[*idx], 1, s->config.explain);
  ordered_json j = ToJson(e);
  j["model_version"] = s->model_version;
  std::string body = j.dump();
  s->explain_cache.emplace(key, body);
  return {200, body, "application/json"};
}

ServiceResponse AnnotationService::LearningCurve(const std::string& session_id) {
  auto s = FindSession(session_id);
  if (!s) return ErrorReply(404, "unknown session '" + session_id + "'");
  if (s->training) return JsonReply(409, {{"status", "training"}, {"error", "model is training"}});
  std::lock_guard lock(s->mu);
  return {200, CurveCsv(s->curve), "text/csv"};
}

ServiceResponse AnnotationService::Snapshot(const std::string& session_id) {
  auto s = FindSession(session_id);
  if (!s) return ErrorReply(404, "unknown session '" + session_id + "'");
  if (s->training) return JsonReply(409, {{"status", "training"}, {"error", "model is training"}});
  std::lock_guard lock(s->mu);
  const auto& corpus = s->corpus->corpus;
  auto ids = [&](const auto& indices) {
    ordered_json a = ordered_json::array();
    for (int idx : indices) a.push_back(corpus[static_cast<size_t>(idx)].id);
    return a;
  };
  ordered_json j;
  j["session_id"] = s->id;
  j["status"] = ToString(s->status);
  j["iteration"] = s->iteration;
  j["model_version"] = s->model_version;
  j["labeled_count"] = s->labeled.size();
  j["pool_count"] = s->pool.size();
  j["holdout_count"] = s->holdout.size();
  j["awaiting"] = ids(s->awaiting);
  j["batch_issued"] = s->issued;
  std::vector<int> got;
  for (const auto& [idx, r] : s->received) got.push_back(idx);
  j["received"] = ids(got);
  if (!s->curve.empty()) j["metrics"] = ToJson(s->curve.back().metrics);
  j["config"] = ToJson(s->config);
  return JsonReply(200, j);
}

void AnnotationService::Restore() {
  if (!state_dir_) return;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(*state_dir_ / "sessions")) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    std::ifstream in(dir / "session.json");
    if (!in) continue;
    json meta = json::parse(in);
    const std::string id = meta.at("session_id").get<std::string>();
    SessionConfig config = SessionConfigFromJson(meta.at("config"));
    auto s = BuildSession(id, config);
    if (!s) throw Error("session " + id + " refers to unknown corpus '" + config.corpus_ref + "'");
    s->dir = dir;

    std::set<int> issued_iterations;
    if (std::ifstream issued(dir / "issued.jsonl"); issued) {
      std::string line;
      while (std::getline(issued, line)) {
        if (!NormalizeWhitespace(line).empty()) issued_iterations.insert(json::parse(line).at("iteration").get<int>());
      }
    }
    if (std::ifstream labels(dir / "labels.jsonl"); labels) {
      std::string line;
      while (std::getline(labels, line)) {
        if (NormalizeWhitespace(line).empty()) continue;
        LabelRecord r = LabelRecordFromJsonLine(line);
        auto idx = s->corpus->corpus.Find(r.doc_id);
        if (!idx || !s->Awaits(static_cast<int>(*idx))) {
          throw Error("session " + id + ": replayed label for '" + r.doc_id + "' does not match the batch");
        }
        r.final = TrainingLabel(r);
        s->received.emplace(static_cast<int>(*idx), std::move(r));
        if (s->received.size() == s->awaiting.size()) CompleteBatch(*s, factory_);
      }
    }
    s->issued = s->status != SessionStatus::kDone && issued_iterations.count(s->iteration) > 0;

    std::unique_lock lock(registry_mutex_);
    sessions_[id] = s;
    if (id.size() > 1 && id[0] == 's') {
      next_session_ = std::max<uint64_t>(next_session_, std::stoull(id.substr(1)) + 1);
    }
  }
}

void AnnotationService::Mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  auto guarded = [send](httplib::Response& res, const std::function<ServiceResponse()>& fn) {
    try {
      send(res, fn());
    } catch (const ArgumentError& e) {
      send(res, ErrorReply(400, e.what()));
    } catch (const std::exception& e) {
      send(res, ErrorReply(500, e.what()));
    }
  };
  server.Post("/v1/sessions", [this, guarded](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return CreateSession(req.body); });
  });
  server.Get(R"(/v1/sessions/([^/]+)/next-batch)", [this, guarded](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return NextBatch(req.matches[1]); });
  });
  server.Post(R"(/v1/sessions/([^/]+)/labels)", [this, guarded](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return SubmitLabels(req.matches[1], req.body); });
  });
  server.Get(R"(/v1/sessions/([^/]+)/learning-curve)",
             [this, guarded](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] { return LearningCurve(req.matches[1]); });
             });
  server.Get(R"(/v1/sessions/([^/]+))", [this, guarded](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return Snapshot(req.matches[1]); });
  });
  server.Get(R"(/v1/documents/([^/]+)/explanation)",
             [this, guarded](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 if (!req.has_param("session")) return ErrorReply(400, "missing ?session=");
                 return GetExplanation(req.matches[1], req.get_param_value("session"),
                                       req.has_param("method") ? req.get_param_value("method") : "lime");
               });
             });
}

void Serve(AnnotationService& service, const std::string& host, int port) {
  httplib::Server server;
  service.Mount(server);
  if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace debtscope
