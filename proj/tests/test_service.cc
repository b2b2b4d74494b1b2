#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <future>
#include <set>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "debtscope/service.h"
#include "debtscope/synthetic.h"
#include "oracles.h"

using namespace debtscope;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("debtscope-svc-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

SyntheticCorpus SmallCorpus() {
  SyntheticConfig c;
  c.num_docs = 80;
  c.seed = 3;
  return GenerateSynthetic(c);
}

void Register(AnnotationService& svc, const SyntheticCorpus& syn, bool with_gold = true) {
  svc.AddCorpus("syn", syn.corpus, with_gold ? std::optional(syn.gold) : std::nullopt);
}

std::string Create(AnnotationService& svc, const std::string& extra = "") {
  auto r = svc.CreateSession(R"({"corpus_ref":"syn","strategy":"breaking-ties","seed_size":5,"batch_size":5,)"
                             R"("holdout_fraction":0.25,"rng_seed":1)" + extra + "}");
  REQUIRE(r.status == 201);
  return r.Json()["session_id"].get<std::string>();
}

json GoldLabels(const SyntheticCorpus& syn, const json& docs) {
  json labels = json::array();
  for (const auto& d : docs) {
    auto id = d["id"].get<std::string>();
    labels.push_back({{"doc_id", id}, {"label", std::string(ToString(syn.gold[*syn.corpus.Find(id)]))}});
  }
  return labels;
}

json LabelBatch(AnnotationService& svc, const SyntheticCorpus& syn, const std::string& id) {
  auto batch = svc.NextBatch(id);
  REQUIRE(batch.status == 200);
  auto r = svc.SubmitLabels(id, json{{"labels", GoldLabels(syn, batch.Json()["docs"])}}.dump());
  REQUIRE(r.status == 200);
  return r.Json();
}

ModelFactory ConstantFactory() {
  return [](const ClassifierSpec&, const TrainingSet&, std::shared_ptr<const FeatureSpace>) {
    return std::make_unique<oracle::ConstantModel>(0.4);
  };
}

}  // namespace

TEST_CASE("session creation") {
  auto syn = SmallCorpus();
  AnnotationService svc;
  Register(svc, syn);
  auto a = svc.CreateSession(R"({"corpus_ref":"syn","seed_size":5,"batch_size":5})");
  auto b = svc.CreateSession(R"({"corpus_ref":"syn","seed_size":5,"batch_size":5})");
  REQUIRE(a.status == 201);
  REQUIRE(b.status == 201);
  CHECK(a.Json()["session_id"] != b.Json()["session_id"]);
  CHECK(a.Json()["status"] == "seeding");
  CHECK(a.Json()["seed_batch_size"] == 5);

  auto bad = svc.CreateSession(R"({"corpus_ref":"syn","strategy":"margin"})");
  CHECK(bad.status == 400);
  CHECK(bad.Json()["valid_strategies"].size() == StrategyNames().size());
  CHECK(svc.CreateSession(R"({"corpus_ref":"nope"})").status == 404);
  CHECK(svc.CreateSession("not json").status == 400);
  CHECK(svc.CreateSession(R"({"corpus_ref":"syn","batch_size":0})").status == 400);
}

TEST_CASE("batch issuance and labeling protocol") {
  auto syn = SmallCorpus();
  AnnotationService svc;
  Register(svc, syn);
  auto id = Create(svc);
  CHECK(svc.NextBatch("s999999").status == 404);

  auto first = svc.NextBatch(id);
  REQUIRE(first.status == 200);
  auto docs = first.Json()["docs"];
  REQUIRE(docs.size() == 5);
  CHECK(docs[0].contains("text"));
  CHECK_FALSE(docs[0].contains("predicted_probs"));

  auto again = svc.NextBatch(id);
  CHECK(again.status == 409);
  CHECK(again.Json()["outstanding"] == 5);

  // A document outside the batch is rejected and nothing is recorded.
  std::set<std::string> issued;
  for (const auto& d : docs) issued.insert(d["id"].get<std::string>());
  std::string outsider;
  for (const auto& d : syn.corpus.documents()) {
    if (!issued.count(d.id)) {
      outsider = d.id;
      break;
    }
  }
  auto labels = GoldLabels(syn, docs);
  auto mixed = labels;
  mixed.push_back({{"doc_id", outsider}, {"label", "ATD"}});
  CHECK(svc.SubmitLabels(id, json{{"labels", mixed}}.dump()).status == 422);
  CHECK(svc.SubmitLabels(id, R"({"labels":[{"doc_id":"x","label":"Maybe"}]})").status == 422);
  CHECK(svc.SubmitLabels(id, "{}").status == 400);

  // Partial submissions merge: 3 then 2.
  json part1 = json::array(), part2 = json::array();
  for (size_t i = 0; i < labels.size(); ++i) (i < 3 ? part1 : part2).push_back(labels[i]);
  auto r1 = svc.SubmitLabels(id, json{{"labels", part1}}.dump()).Json();
  CHECK(r1["accepted"] == 3);
  CHECK(r1["retrained"] == false);
  CHECK(svc.Snapshot(id).Json()["received"].size() == 3);

  json conflict = part1[0];
  conflict["label"] = conflict["label"] == "ATD" ? "NonATD" : "ATD";
  CHECK(svc.SubmitLabels(id, json{{"labels", json::array({conflict})}}.dump()).status == 422);
  CHECK(svc.SubmitLabels(id, json{{"labels", json::array({part1[0], conflict})}}.dump()).status == 422);

  auto r2 = svc.SubmitLabels(id, json{{"labels", part2}}.dump()).Json();
  CHECK(r2["accepted"] == 2);
  CHECK(r2["retrained"] == true);
  CHECK(r2["iteration"] == 1);
  CHECK(r2["model_version"] == 1);

  auto next = svc.NextBatch(id);
  REQUIRE(next.status == 200);
  CHECK(next.Json()["docs"][0].contains("predicted_probs"));
  CHECK(next.Json()["iteration"] == 1);
}

TEST_CASE("sessions run to completion") {
  auto syn = SmallCorpus();
  AnnotationService svc;
  Register(svc, syn);
  auto id = Create(svc);
  int rounds = 0;
  json last;
  while (svc.Snapshot(id).Json()["status"] != "done") {
    last = LabelBatch(svc, syn, id);
    ++rounds;
    REQUIRE(rounds < 20);
  }
  CHECK(rounds == 12);  // 60 pool documents in batches of 5
  CHECK(svc.NextBatch(id).status == 410);
  auto curve = svc.LearningCurve(id);
  CHECK(curve.content_type == "text/csv");
  size_t lines = static_cast<size_t>(std::count(curve.body.begin(), curve.body.end(), '\n'));
  CHECK(lines == 13);
  CHECK(last.contains("metrics"));
}

TEST_CASE("explanations through the service") {
  auto syn = SmallCorpus();
  SUBCASE("default model") {
    AnnotationService svc;
    Register(svc, syn);
    auto id = Create(svc, R"(,"explain_config":{"shap":{"exact_max_tokens":10}})");
    const std::string doc = syn.corpus[0].id;
    CHECK(svc.GetExplanation(doc, id, "lime").status == 409);
    CHECK(svc.GetExplanation(doc, id, "anchors").status == 400);
    LabelBatch(svc, syn, id);
    CHECK(svc.GetExplanation("missing", id, "shap").status == 404);
    auto shap = svc.GetExplanation(doc, id, "shap");
    REQUIRE(shap.status == 200);
    auto j = shap.Json();
    double sum = j["base_value"].get<double>();
    for (const auto& w : j["weights"]) sum += w["weight"].get<double>();
    double tol = j["exact"].get<bool>() ? 1e-6 : 0.02;
    CHECK(std::abs(sum - j["predicted"]["ATD"].get<double>()) < tol);
    CHECK(j["model_version"] == 1);
    CHECK(svc.GetExplanation(doc, id, "shap").body == shap.body);
  }
  SUBCASE("constant model") {
    AnnotationService svc(std::nullopt, ConstantFactory());
    Register(svc, syn);
    auto id = Create(svc);
    LabelBatch(svc, syn, id);
    auto lime = svc.GetExplanation(syn.corpus[1].id, id, "lime");
    REQUIRE(lime.status == 200);
    for (const auto& w : lime.Json()["weights"]) CHECK(std::abs(w["weight"].get<double>()) < 1e-9);
  }
}

TEST_CASE("training blocks queries with 409") {
  auto syn = SmallCorpus();
  std::promise<void> entered, release;
  auto release_future = release.get_future().share();
  std::atomic<bool> first{true};
  ModelFactory slow = [&](const ClassifierSpec& spec, const TrainingSet& data,
                          std::shared_ptr<const FeatureSpace> features) -> std::unique_ptr<TextModel> {
    if (first.exchange(false)) {
      entered.set_value();
      release_future.wait();
    }
    return DefaultModelFactory()(spec, data, features);
  };
  AnnotationService svc(std::nullopt, slow);
  Register(svc, syn);
  auto id = Create(svc);
  auto batch = svc.NextBatch(id).Json();
  auto body = json{{"labels", GoldLabels(syn, batch["docs"])}}.dump();
  auto submit = std::async(std::launch::async, [&] { return svc.SubmitLabels(id, body); });
  entered.get_future().wait();
  auto busy = svc.NextBatch(id);
  CHECK(busy.status == 409);
  CHECK(busy.Json()["status"] == "training");
  CHECK(svc.GetExplanation(syn.corpus[0].id, id, "lime").status == 409);
  release.set_value();
  CHECK(submit.get().status == 200);
  CHECK(svc.NextBatch(id).status == 200);
}

TEST_CASE("state survives a restart without reissuing") {
  auto syn = SmallCorpus();
  TempDir dir;
  std::string id;
  json snapshot, outstanding;
  {
    AnnotationService svc(dir.path);
    Register(svc, syn);
    id = Create(svc);
    LabelBatch(svc, syn, id);
    LabelBatch(svc, syn, id);
    outstanding = svc.NextBatch(id).Json()["docs"];
    auto labels = GoldLabels(syn, outstanding);
    labels.erase(labels.begin() + 2, labels.end());
    REQUIRE(svc.SubmitLabels(id, json{{"labels", labels}}.dump()).status == 200);
    snapshot = svc.Snapshot(id).Json();
  }
  AnnotationService svc(dir.path);
  Register(svc, syn);
  svc.Restore();
  auto restored = svc.Snapshot(id).Json();
  CHECK(restored.dump() == snapshot.dump());
  CHECK(svc.NextBatch(id).status == 409);
  auto rest = GoldLabels(syn, outstanding);
  auto r = svc.SubmitLabels(id, json{{"labels", rest}}.dump()).Json();
  CHECK(r["accepted"] == 3);
  CHECK(r["iteration"] == 3);
  auto fresh = Create(svc);
  CHECK(fresh != id);
}

TEST_CASE("http routes") {
  auto syn = SmallCorpus();
  AnnotationService svc;
  Register(svc, syn);
  httplib::Server server;
  svc.Mount(server);
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto created = cli.Post("/v1/sessions", R"({"corpus_ref":"syn","seed_size":5,"batch_size":5})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  auto id = json::parse(created->body)["session_id"].get<std::string>();
  auto batch = cli.Get("/v1/sessions/" + id + "/next-batch");
  REQUIRE(batch);
  CHECK(batch->status == 200);
  auto labels = GoldLabels(syn, json::parse(batch->body)["docs"]);
  auto posted = cli.Post("/v1/sessions/" + id + "/labels", json{{"labels", labels}}.dump(), "application/json");
  REQUIRE(posted);
  CHECK(posted->status == 200);
  auto expl = cli.Get("/v1/documents/" + syn.corpus[0].id + "/explanation?session=" + id + "&method=lime");
  REQUIRE(expl);
  CHECK(expl->status == 200);
  auto no_session = cli.Get("/v1/documents/" + syn.corpus[0].id + "/explanation");
  REQUIRE(no_session);
  CHECK(no_session->status == 400);
  auto curve = cli.Get("/v1/sessions/" + id + "/learning-curve");
  REQUIRE(curve);
  CHECK(curve->get_header_value("Content-Type").find("text/csv") == 0);
  auto snap = cli.Get("/v1/sessions/" + id);
  REQUIRE(snap);
  CHECK(json::parse(snap->body)["iteration"] == 1);
  server.stop();
  t.join();
}
