// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <string>

#include "cli_scenario.h"
#include "debtscope/active.h"
#include "debtscope/explain.h"
#include "debtscope/filter.h"
#include "debtscope/stats.h"
#include "debtscope/synthetic.h"
#include "fixtures.h"
#include "oracles.h"

using namespace debtscope;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::vector<TokenizedDoc> Tokenize(const Corpus& corpus) {
  std::vector<TokenizedDoc> docs(corpus.size());
  ParallelFor(corpus.size(), [&](size_t i) { docs[i] = Preprocess(corpus[i], PrepConfig{}); });
  return docs;
}

Outcome SampleSizeTable() {
  int exact = 0;
  std::string misses;
  for (const auto& [population, expected] : oracle::kSampleSizeTable) {
    int64_t got = SampleSize({population});
    if (got == expected) {
      ++exact;
    } else {
      misses += Fmt(" %lld->%lld(want %lld)", static_cast<long long>(population), static_cast<long long>(got),
                    static_cast<long long>(expected));
    }
  }
  return {exact == 9, Fmt("%d/9 exact", exact) + misses};
}

Outcome IterationArithmetic() {
  auto syn = GenerateSynthetic(SyntheticConfig{});
  auto docs = Tokenize(syn.corpus);
  SimulationConfig config;
  config.strategy = Strategy::kBreakingTies;
  config.seed_size = 100;
  config.batch_size = 100;
  config.iterations = 25;
  config.holdout_fraction = 0.1;
  config.rng_seed = 42;
  auto run = RunSimulation(config, docs, syn.gold);
  if (run.curve.size() != 26) return {false, Fmt("curve has %zu points", run.curve.size())};
  size_t at16 = run.curve[16].labeled_count, at25 = run.curve[25].labeled_count;
  return {at16 == 1700 && at25 == 2600,
          Fmt("|labeled| = %zu at iteration 16, %zu at iteration 25 (pool %zu after holdout)", at16, at25,
              docs.size() - run.holdout.size())};
}

Outcome StrategyDirection() {
  auto syn = GenerateSynthetic(SyntheticConfig{});
  auto docs = Tokenize(syn.corpus);
  const int seeds = 10;
  std::vector<ActiveRun> bt(seeds), rnd(seeds);
  ParallelFor(2 * seeds, [&](size_t k) {
    SimulationConfig c;
    c.iterations = 10;
    c.rng_seed = 1000 + k % seeds;
    c.strategy = k < static_cast<size_t>(seeds) ? Strategy::kBreakingTies : Strategy::kRandom;
    (k < static_cast<size_t>(seeds) ? bt : rnd)[k % seeds] = RunSimulation(c, docs, syn.gold);
  });
  double mean_bt = 0, mean_rnd = 0;
  int wins = 0;
  size_t worst_reach = 0;
  for (int s = 0; s < seeds; ++s) {
    double a = AreaUnderCurve(bt[s].curve), b = AreaUnderCurve(rnd[s].curve);
    mean_bt += a / seeds;
    mean_rnd += b / seeds;
    const auto& last = rnd[s].curve.back();
    auto reach = LabelsToReach(bt[s].curve, last.metrics.f1);
    bool ok = a >= b && reach && static_cast<double>(*reach) <= 0.7 * static_cast<double>(last.labeled_count);
    wins += ok;
    worst_reach = std::max(worst_reach, reach ? *reach : SIZE_MAX);
  }
  return {mean_bt >= mean_rnd && wins >= 8,
          Fmt("mean AULC breaking-ties %.4f vs random %.4f; %d/10 pairings hold; worst reach %zu labels of %zu",
              mean_bt, mean_rnd, wins, worst_reach, rnd[0].curve.back().labeled_count)};
}

Outcome BinaryEquivalence() {
  size_t fixtures = 0, equal = 0;
  for (uint64_t seed = 1; seed <= 500; ++seed) {
    Rng rng(seed);
    const size_t n = 20 + rng.Below(200);
    std::vector<ProbVector> probs;
    std::vector<int> pool;
    for (size_t i = 0; i < n; ++i) {
      double q = seed % 2 ? rng.Uniform() : static_cast<double>(rng.Below(11)) / 10.0;
      probs.push_back({{1.0 - q, q}});
      if (rng.Uniform() < 0.8) pool.push_back(static_cast<int>(i));
    }
    QueryInputs in;
    in.pool = pool;
    in.probs = probs;
    for (size_t batch : {1, 10, 50}) {
      Rng r1(seed), r2(seed);
      auto a = SelectBatch(Strategy::kLeastConfidence, in, batch, r1);
      auto b = SelectBatch(Strategy::kBreakingTies, in, batch, r2);
      ++fixtures;
      equal += std::set<int>(a.begin(), a.end()) == std::set<int>(b.begin(), b.end());
    }
  }
  return {equal == fixtures, Fmt("%zu/%zu fixtures select identical sets", equal, fixtures)};
}

Outcome ShapleyCorrectness() {
  double worst_exact = 0, worst_mae = 0, worst_eff_exact = 0, worst_eff_sampled = 0;
  for (uint64_t seed = 1; seed <= 30; ++seed) {
    auto f = fixture::PlantedLinear(seed, 2 + seed % 7);  // 2..8 distinct tokens
    std::map<std::string, double> coef;
    for (const auto& [k, v] : f.coef) coef[k] = 20.0 * v;
    oracle::PlantedLinearModel model(coef, -0.4);
    auto brute = oracle::ShapleyByCoalitions(model, f.doc, 1);
    auto perm = oracle::ShapleyByPermutations(model, f.doc, 1);
    auto e = ExplainShap(model, f.doc, 1, ExplainConfig{});
    ExplainConfig sc;
    sc.shap.exact_max_tokens = 0;
    sc.rng_seed = seed;
    auto s = ExplainShap(model, f.doc, 1, sc);
    double sum_e = *e.base_value, sum_s = *s.base_value, mae = 0;
    for (size_t i = 0; i < brute.size(); ++i) {
      worst_exact = std::max({worst_exact, std::abs(e.weights[i].weight - brute[i]),
                              std::abs(e.weights[i].weight - perm[i])});
      mae += std::abs(s.weights[i].weight - brute[i]) / static_cast<double>(brute.size());
      sum_e += e.weights[i].weight;
      sum_s += s.weights[i].weight;
    }
    worst_mae = std::max(worst_mae, mae);
    worst_eff_exact = std::max(worst_eff_exact, std::abs(sum_e - e.predicted[1]));
    worst_eff_sampled = std::max(worst_eff_sampled, std::abs(sum_s - s.predicted[1]));
  }
  // Additive fixture: base 0.21, two tokens carrying 0.72, prediction 0.93.
  oracle::PlantedLinearModel additive({{"layer", 0.50}, {"depend", 0.22}}, 0.21, true);
  auto fig = ExplainShap(additive, TokenizedDoc{"d", {"layer", "depend", "button"}, {}}, 1, ExplainConfig{});
  double phi_sum = 0;
  for (const auto& w : fig.weights) phi_sum += w.weight;
  bool arithmetic = std::abs(*fig.base_value - 0.21) < 1e-12 && std::abs(phi_sum - 0.72) < 1e-12 &&
                    std::abs(fig.predicted[1] - 0.93) < 1e-12;
  return {worst_exact < 1e-9 && worst_mae < 0.05 && worst_eff_exact < 1e-6 && worst_eff_sampled < 0.02 && arithmetic,
          Fmt("max |exact-brute| %.2e, max sampled MAE %.4f, efficiency gap %.2e exact / %.2e sampled, "
              "base %.2f + %.2f = %.2f",
              worst_exact, worst_mae, worst_eff_exact, worst_eff_sampled, *fig.base_value, phi_sum, fig.predicted[1])};
}

Outcome LimeFidelity() {
  size_t agree = 0, total = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    auto f = fixture::PlantedLinear(seed, 10, 5);
    oracle::PlantedLinearModel model(f.coef, 0.5, true);
    ExplainConfig config;
    config.rng_seed = seed;
    auto e = ExplainLime(model, f.doc, 1, config);
    for (size_t r = 0; r < 5 && r < e.weights.size(); ++r) {
      auto it = f.coef.find(e.weights[r].token);
      double planted = it == f.coef.end() ? 0.0 : it->second;
      agree += planted != 0.0 && (planted > 0) == (e.weights[r].weight > 0);
      ++total;
    }
  }
  double worst_constant = 0;
  oracle::ConstantModel constant;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    ExplainConfig config;
    config.rng_seed = seed;
    auto e = ExplainLime(constant, fixture::RandomDoc(rng, 4 + seed % 10), 1, config);
    for (const auto& w : e.weights) worst_constant = std::max(worst_constant, std::abs(w.weight));
  }
  double rate = static_cast<double>(agree) / static_cast<double>(total);
  return {rate >= 0.9 && worst_constant < 1e-9,
          Fmt("sign agreement %.1f%% (%zu/%zu top-5 weights over 20 seeds); constant model max |w| %.1e", 100 * rate,
              agree, total, worst_constant)};
}

Outcome FilterOracle() {
  HashedBowProvider p(64, 1);
  Rng rng(7);
  FilterConfig cfg;
  cfg.keywords = {"cyclic depend", "layer bypass", "refactor", "core modul api"};
  cfg.threshold = 0.7;
  std::vector<TokenizedDoc> docs;
  for (int i = 0; i < 200; ++i) docs.push_back(fixture::RandomFilterDoc(rng, i));
  int same = 0;
  for (const auto& doc : docs) {
    auto got = FilterDoc(doc, cfg, p);
    auto want = oracle::BruteFilter(doc, cfg.keywords, cfg.ngram_sizes, cfg.threshold, p);
    bool ok = got.matched == want.matched && got.best_score == want.score;
    if (!doc.tokens.empty()) {
      ok = ok && got.best_ngram && got.best_ngram->start_index == want.start && got.best_ngram->n == want.n &&
           *got.best_keyword == want.keyword;
    }
    same += ok;
  }
  bool monotone = true;
  std::vector<bool> prev(docs.size(), true);
  std::string counts;
  for (double t : {0.5, 0.7, 0.9, 0.95}) {
    cfg.threshold = t;
    auto report = FilterCorpus(docs, cfg, p);
    for (size_t i = 0; i < docs.size(); ++i) {
      if (report.results[i].matched && !prev[i]) monotone = false;
      prev[i] = report.results[i].matched;
    }
    counts += Fmt(" %.2f:%zu", t, report.matched);
  }
  return {same == 200 && monotone,
          Fmt("%d/200 docs equal brute force; matched counts%s; monotone %s", same, counts.c_str(),
              monotone ? "yes" : "no")};
}

Outcome MetricsKappa() {
  Rng rng(2024);
  double worst = 0;
  bool self_one = true;
  for (int t = 0; t < 1000; ++t) {
    size_t n = 1 + rng.Below(80);
    int k = 2 + static_cast<int>(rng.Below(2));
    std::vector<int> a(n), b(n);
    for (size_t i = 0; i < n; ++i) {
      a[i] = static_cast<int>(rng.Below(k));
      b[i] = rng.Uniform() < 0.6 ? a[i] : static_cast<int>(rng.Below(k));
    }
    auto m = ComputeMetrics(a, b, 1);
    auto o = oracle::BruteMetrics(a, b, 1);
    worst = std::max({worst, std::abs(m.precision - o.precision), std::abs(m.recall - o.recall),
                      std::abs(m.f1 - o.f1), std::abs(CohensKappa(a, b) - oracle::BruteKappa(a, b, k))});
    self_one = self_one && CohensKappa(a, a) == 1.0;
  }
  auto rec = [](Label l, bool maybe, const char* who) { return LabelRecord{"D", who, l, maybe, std::nullopt}; };
  int cases = 0;
  cases += Adjudicate(std::vector<LabelRecord>{rec(Label::kNonATD, true, "a"), rec(Label::kNonATD, false, "b")}).final == Label::kNonATD;
  cases += Adjudicate(std::vector<LabelRecord>{rec(Label::kATD, true, "a"), rec(Label::kATD, false, "b")}).final == Label::kWeakATD;
  std::vector<LabelRecord> split = {rec(Label::kATD, false, "a"), rec(Label::kNonATD, false, "b")};
  cases += Adjudicate(split).needs_adjudication && Adjudicate(split, Label::kATD).final == Label::kATD;
  return {worst <= 1e-12 && self_one && cases == 3,
          Fmt("max deviation %.1e over 1000 vectors; kappa(a,a)=1 %s; %d/3 adjudication cases", worst,
              self_one ? "yes" : "no", cases)};
}

Outcome GradientCheck() {
  Rng rng(17);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const size_t k = 2 + trial % 2, d = 10, n = 16;
    std::vector<SparseVector> x(n);
    std::vector<int> y(n);
    std::vector<double> w(n);
    for (size_t i = 0; i < n; ++i) {
      x[i].dimension = d;
      for (uint32_t j = 0; j < d; ++j) {
        if (rng.Uniform() < 0.5) {
          x[i].index.push_back(j);
          x[i].value.push_back(rng.Normal());
        }
      }
      y[i] = static_cast<int>(rng.Below(k));
      w[i] = 0.5 + rng.Uniform();
    }
    LogisticParams p;
    p.num_classes = k;
    p.dimension = d;
    for (size_t i = 0; i < k * d; ++i) p.weights.push_back(0.3 * rng.Normal());
    for (size_t c = 0; c < k; ++c) p.bias.push_back(0.1 * rng.Normal());
    auto analytic = LogisticGradient(p, x, y, w, 0.7);
    auto numeric = oracle::NumericGradient(p, x, y, w, 0.7);
    double diff = 0, norm = 0;
    for (size_t i = 0; i < analytic.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      norm += numeric[i] * numeric[i];
    }
    worst = std::max(worst, std::sqrt(diff / norm));
  }
  return {worst < 1e-5, Fmt("max relative error %.2e over 20 fixtures", worst)};
}

Outcome Determinism() {
  auto dir = std::filesystem::temp_directory_path() / "debtscope-acceptance-replay";
  auto outcomes = scenario::RunAllCommands(dir);
  int ok = 0;
  std::string bad;
  for (const auto& o : outcomes) {
    if (o.identical) {
      ++ok;
    } else {
      bad += " " + o.command + "(" + o.detail + ")";
    }
  }
  std::filesystem::remove_all(dir);
  return {ok == static_cast<int>(outcomes.size()) && outcomes.size() == CommandNames().size(),
          Fmt("%d/%zu commands replay hash-identical", ok, outcomes.size()) + bad};
}

}  // namespace

int main() {
  const std::vector<std::tuple<std::string, double, std::function<Outcome()>>> criteria = {
      {"sample-size-table", 1, SampleSizeTable},
      {"iteration-arithmetic", 60, IterationArithmetic},
      {"strategy-direction", 300, StrategyDirection},
      {"binary-equivalence", 0, BinaryEquivalence},
      {"shapley-correctness", 0, ShapleyCorrectness},
      {"lime-fidelity", 0, LimeFidelity},
      {"filter-oracle", 0, FilterOracle},
      {"metrics-kappa-oracles", 0, MetricsKappa},
      {"logistic-gradient-check", 0, GradientCheck},
      {"cli-determinism", 0, Determinism},
  };
  int failures = 0;
  for (const auto& [name, budget, check] : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget > 0 && secs > budget) {
      o.pass = false;
      o.detail += Fmt(" [over %.0f s budget]", budget);
    }
    failures += !o.pass;
    std::printf("%s %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures;
}
