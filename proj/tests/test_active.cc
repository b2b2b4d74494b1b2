#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "debtscope/active.h"
#include "debtscope/error.h"
#include "debtscope/synthetic.h"
#include "oracles.h"

using namespace debtscope;

namespace {

std::vector<TokenizedDoc> Tokenize(const Corpus& corpus) {
  std::vector<TokenizedDoc> docs;
  for (const auto& d : corpus.documents()) docs.push_back(Preprocess(d, PrepConfig{}));
  return docs;
}

struct BinaryFixture {
  std::vector<int> pool;
  std::vector<ProbVector> probs;
};

BinaryFixture RandomBinary(uint64_t seed, size_t n) {
  Rng rng(seed);
  BinaryFixture f;
  for (size_t i = 0; i < n; ++i) {
    // Coarse grid so exact ties show up.
    double q = seed % 2 ? rng.Uniform() : static_cast<double>(rng.Below(21)) / 20.0;
    f.probs.push_back({{1.0 - q, q}});
    if (rng.Uniform() < 0.7) f.pool.push_back(static_cast<int>(i));
  }
  return f;
}

}  // namespace

TEST_CASE("strategy names parse and misspellings list the options") {
  for (const auto& name : StrategyNames()) CHECK(ToString(ParseStrategy(name)) == name);
  try {
    ParseStrategy("margin");
    FAIL("expected an error");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("breaking-ties") != std::string::npos);
  }
}

TEST_CASE("uncertainty scores") {
  ProbVector p{{0.2, 0.8}};
  CHECK(LeastConfidenceScore(p) == doctest::Approx(0.2));
  CHECK(BreakingTiesScore(p) == doctest::Approx(-0.6));
  CHECK(EntropyScore(p) == doctest::Approx(-(0.2 * std::log(0.2) + 0.8 * std::log(0.8))));
  CHECK(KLDivergence(p, p) == doctest::Approx(0.0));
  ProbVector q{{0.5, 0.5}};
  CHECK(KLDivergence(p, q) == doctest::Approx(0.2 * std::log(0.4) + 0.8 * std::log(1.6)));
}

TEST_CASE("least confidence and breaking ties agree on binary problems") {
  for (uint64_t seed = 1; seed <= 200; ++seed) {
    auto f = RandomBinary(seed, 40 + seed % 60);
    QueryInputs in;
    in.pool = f.pool;
    in.probs = f.probs;
    for (size_t batch : {1, 5, 17}) {
      Rng r1(seed), r2(seed);
      auto a = SelectBatch(Strategy::kLeastConfidence, in, batch, r1);
      auto b = SelectBatch(Strategy::kBreakingTies, in, batch, r2);
      CHECK(std::set<int>(a.begin(), a.end()) == std::set<int>(b.begin(), b.end()));
      CHECK(a.size() == std::min(batch, f.pool.size()));
    }
  }
}

TEST_CASE("selection ties go to the smaller corpus index") {
  std::vector<ProbVector> probs(6, ProbVector{{0.5, 0.5}});
  std::vector<int> pool = {5, 3, 1, 4};
  QueryInputs in;
  in.pool = pool;
  in.probs = probs;
  Rng rng(1);
  auto picked = SelectBatch(Strategy::kBreakingTies, in, 2, rng);
  CHECK(picked == std::vector<int>{1, 3});
}

TEST_CASE("k-means picks one representative per well-separated pair") {
  std::vector<EmbeddingVector> emb = {
      EmbeddingVector({1.0, 0.0, 0.0}), EmbeddingVector({0.98, 0.05, 0.0}),
      EmbeddingVector({0.0, 0.0, 1.0}), EmbeddingVector({0.0, 0.04, 0.97}),
  };
  std::vector<int> pool = {0, 1, 2, 3};
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    auto picked = KMeansSelect(pool, emb, 2, 50, rng);
    REQUIRE(picked.size() == 2);
    std::sort(picked.begin(), picked.end());
    // The only partitions with minimal inertia split {0,1} from {2,3}.
    CHECK(picked[0] < 2);
    CHECK(picked[1] >= 2);
  }
}

TEST_CASE("contrastive score is mean KL to nearest labeled neighbors") {
  std::vector<EmbeddingVector> emb = {
      EmbeddingVector({1.0, 0.0}), EmbeddingVector({0.9, 0.1}), EmbeddingVector({0.0, 1.0}),
      EmbeddingVector({0.95, 0.05}),
  };
  std::vector<ProbVector> probs = {{{0.9, 0.1}}, {{0.2, 0.8}}, {{0.5, 0.5}}, {{0.6, 0.4}}};
  std::vector<int> labeled = {0, 1, 2};
  std::vector<int> pool = {3};
  QueryInputs in;
  in.pool = pool;
  in.labeled = labeled;
  in.probs = probs;
  in.embeddings = emb;
  in.contrastive_neighbors = 2;
  auto score = ScorePool(Strategy::kContrastive, in);
  double expected = (KLDivergence(probs[0], probs[3]) + KLDivergence(probs[1], probs[3])) / 2.0;
  double swapped = (KLDivergence(probs[3], probs[0]) + KLDivergence(probs[3], probs[1])) / 2.0;
  REQUIRE(score.size() == 1);
  CHECK((std::abs(score[0] - expected) < 1e-12 || std::abs(score[0] - swapped) < 1e-12));
}

TEST_CASE("stratified holdout keeps class proportions") {
  std::vector<int> classes;
  for (int i = 0; i < 1000; ++i) classes.push_back(i % 10 < 3 ? 1 : 0);
  Rng rng(4);
  auto [holdout, rest] = StratifiedHoldout(classes, 0.2, rng);
  CHECK(holdout.size() == 200);
  CHECK(rest.size() == 800);
  size_t pos = 0;
  for (int i : holdout) pos += classes[static_cast<size_t>(i)];
  CHECK(pos == 60);
  CHECK(std::is_sorted(holdout.begin(), holdout.end()));
}

TEST_CASE("label merge modes") {
  CHECK(BinaryClass(Label::kWeakATD, LabelMergeMode::kTruePlusWeak) == 1);
  CHECK(BinaryClass(Label::kWeakATD, LabelMergeMode::kTrueOnly) == 0);
  CHECK(BinaryClass(Label::kATD, LabelMergeMode::kTrueOnly) == 1);
  CHECK(BinaryClass(Label::kNonATD, LabelMergeMode::kTruePlusWeak) == 0);
  CHECK_THROWS_AS(ParseLabelMergeMode("weak"), ArgumentError);
}

TEST_CASE("iteration arithmetic on the synthetic corpus") {
  auto syn = GenerateSynthetic(SyntheticConfig{});
  auto docs = Tokenize(syn.corpus);
  SimulationConfig config;
  config.strategy = Strategy::kBreakingTies;
  config.classifier.kind = ClassifierKind::kNaiveBayes;
  config.holdout_fraction = 0.1;
  config.iterations = 25;
  config.rng_seed = 11;
  auto run = RunSimulation(config, docs, syn.gold);
  REQUIRE(run.curve.size() == 26);
  for (const auto& pt : run.curve) CHECK(pt.labeled_count == 100 + 100 * static_cast<size_t>(pt.iteration));
  CHECK(run.curve[16].labeled_count == 1700);
  CHECK(run.curve[25].labeled_count == 2600);
  CHECK(run.holdout.size() == 300);
  std::set<int> seen(run.labeled.begin(), run.labeled.end());
  CHECK(seen.size() == run.labeled.size());
  for (int h : run.holdout) CHECK(seen.count(h) == 0);
}

TEST_CASE("simulation is deterministic per seed") {
  SyntheticConfig sc;
  sc.num_docs = 400;
  auto syn = GenerateSynthetic(sc);
  auto docs = Tokenize(syn.corpus);
  SimulationConfig config;
  config.strategy = Strategy::kEmbeddingKMeans;
  config.seed_size = 40;
  config.batch_size = 30;
  config.iterations = 3;
  config.rng_seed = 5;
  auto a = RunSimulation(config, docs, syn.gold);
  auto b = RunSimulation(config, docs, syn.gold);
  CHECK(a.labeled == b.labeled);
  CHECK(CurveCsv(a.curve) == CurveCsv(b.curve));
  auto back = SimulationConfigFromJson(nlohmann::json::parse(ToJson(config).dump()));
  CHECK(ToJson(back).dump() == ToJson(config).dump());
}

TEST_CASE("a seed set that cannot contain both classes fails") {
  std::vector<TokenizedDoc> docs;
  std::vector<Label> gold;
  for (int i = 0; i < 100; ++i) {
    docs.push_back({"d" + std::to_string(i), {i == 0 ? "layer" : "typo"}, {}});
    gold.push_back(i == 0 ? Label::kATD : Label::kNonATD);
  }
  SimulationConfig config;
  config.seed_size = 5;
  config.batch_size = 5;
  config.holdout_fraction = 0.0;
  CHECK_THROWS_AS(RunSimulation(config, docs, gold), Error);
}

TEST_CASE("curve summaries") {
  std::vector<CurvePoint> curve(3);
  curve[0].labeled_count = 100;
  curve[1].labeled_count = 200;
  curve[2].labeled_count = 300;
  curve[0].metrics.f1 = 0.2;
  curve[1].metrics.f1 = 0.6;
  curve[2].metrics.f1 = 0.8;
  CHECK(AreaUnderCurve(curve) == doctest::Approx(((0.2 + 0.6) / 2 + (0.6 + 0.8) / 2) / 2));
  CHECK(LabelsToReach(curve, 0.6) == 200u);
  CHECK_FALSE(LabelsToReach(curve, 0.9).has_value());
  CHECK(CurveCsv(curve).rfind("iteration,labeled_count,precision,recall,f1\n", 0) == 0);
}
