#include "debtscope/active.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "debtscope/error.h"

namespace debtscope {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<std::string>& StrategyNames() {
  static const std::vector<std::string> names = {"random",         "least-confidence", "prediction-entropy",
                                                 "breaking-ties",  "embedding-kmeans", "contrastive"};
  return names;
}

std::string_view ToString(Strategy s) { return StrategyNames()[static_cast<size_t>(s)]; }

Strategy ParseStrategy(std::string_view s) {
  const auto& names = StrategyNames();
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == s) return static_cast<Strategy>(i);
  }
  std::string valid;
  for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
  throw ArgumentError("unknown strategy '" + std::string(s) + "' (valid: " + valid + ")");
}

bool NeedsModel(Strategy s) { return s != Strategy::kRandom && s != Strategy::kEmbeddingKMeans; }

bool NeedsEmbeddings(Strategy s) { return s == Strategy::kEmbeddingKMeans || s == Strategy::kContrastive; }

std::string_view ToString(LabelMergeMode m) { return m == LabelMergeMode::kTrueOnly ? "true-only" : "true-plus-weak"; }

LabelMergeMode ParseLabelMergeMode(std::string_view s) {
  if (s == "true-only") return LabelMergeMode::kTrueOnly;
  if (s == "true-plus-weak") return LabelMergeMode::kTruePlusWeak;
  throw ArgumentError("unknown label mode '" + std::string(s) + "' (expected true-only or true-plus-weak)");
}

Label MergeLabel(Label label, LabelMergeMode mode) {
  if (label != Label::kWeakATD) return label;
  return mode == LabelMergeMode::kTruePlusWeak ? Label::kATD : Label::kNonATD;
}

int BinaryClass(Label label, LabelMergeMode mode) { return MergeLabel(label, mode) == Label::kATD ? 1 : 0; }

namespace {

// Largest and second-largest probabilities.
std::pair<double, double> TopTwo(const ProbVector& p) {
  double first = -1.0, second = -1.0;
  for (double v : p.probs) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  if (second < 0.0) second = 0.0;
  return {first, second};
}

// Pool positions ranked by (score desc, corpus index asc), truncated.
std::vector<int> TopByScore(std::span<const int> pool, const std::vector<double>& scores, size_t batch) {
  std::vector<size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return pool[a] < pool[b];
  };
  const size_t take = std::min(batch, pool.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);
  std::vector<int> out;
  out.reserve(take);
  for (size_t i = 0; i < take; ++i) out.push_back(pool[order[i]]);
  return out;
}

const ProbVector& ProbsFor(const QueryInputs& in, int idx) {
  if (static_cast<size_t>(idx) >= in.probs.size()) {
    throw ArgumentError("query strategy needs model probabilities for document index " + std::to_string(idx));
  }
  return in.probs[static_cast<size_t>(idx)];
}

const EmbeddingVector& EmbeddingFor(std::span<const EmbeddingVector> embeddings, int idx) {
  if (static_cast<size_t>(idx) >= embeddings.size()) {
    throw ArgumentError("query strategy needs an embedding for document index " + std::to_string(idx));
  }
  return embeddings[static_cast<size_t>(idx)];
}

double SparseDot(const EmbeddingVector& x, const std::vector<double>& dense) {
  double acc = 0.0;
  for (uint32_t i : x.nonzeros()) acc += x.values()[i] * dense[i];
  return acc;
}

}  // namespace

double LeastConfidenceScore(const ProbVector& p) { return 1.0 - TopTwo(p).first; }

double EntropyScore(const ProbVector& p) {
  double h = 0.0;
  for (double v : p.probs) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double BreakingTiesScore(const ProbVector& p) {
  auto [first, second] = TopTwo(p);
  // With two classes the runner-up is 1 - first. Both 1 - first and
  // 2 * first - 1 are exact for first >= 0.5, so the ranking matches least
  // confidence bit for bit, ties included.
  if (p.size() == 2) return 1.0 - 2.0 * first;
  return -(first - second);
}

double KLDivergence(const ProbVector& p, const ProbVector& q) {
  constexpr double kFloor = 1e-12;
  double kl = 0.0;
  for (size_t c = 0; c < p.size(); ++c) {
    if (p[c] <= 0.0) continue;
    kl += p[c] * std::log(p[c] / std::max(q[c], kFloor));
  }
  return kl;
}

std::vector<double> ScorePool(Strategy strategy, const QueryInputs& in) {
  std::vector<double> scores(in.pool.size(), 0.0);
  switch (strategy) {
    case Strategy::kLeastConfidence:
      for (size_t i = 0; i < in.pool.size(); ++i) scores[i] = LeastConfidenceScore(ProbsFor(in, in.pool[i]));
      break;
    case Strategy::kPredictionEntropy:
      for (size_t i = 0; i < in.pool.size(); ++i) scores[i] = EntropyScore(ProbsFor(in, in.pool[i]));
      break;
    case Strategy::kBreakingTies:
      for (size_t i = 0; i < in.pool.size(); ++i) scores[i] = BreakingTiesScore(ProbsFor(in, in.pool[i]));
      break;
    case Strategy::kContrastive: {
      if (in.labeled.empty()) break;
      const size_t k = std::min(in.contrastive_neighbors, in.labeled.size());
      std::vector<std::pair<double, int>> sims(in.labeled.size());
      for (size_t i = 0; i < in.pool.size(); ++i) {
        const auto& x = EmbeddingFor(in.embeddings, in.pool[i]);
        for (size_t j = 0; j < in.labeled.size(); ++j) {
          sims[j] = {Cosine(x, EmbeddingFor(in.embeddings, in.labeled[j])), in.labeled[j]};
        }
        std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end(),
                          [](const auto& a, const auto& b) {
                            if (a.first != b.first) return a.first > b.first;
                            return a.second < b.second;
                          });
        const ProbVector& px = ProbsFor(in, in.pool[i]);
        double total = 0.0;
        for (size_t r = 0; r < k; ++r) total += KLDivergence(px, ProbsFor(in, sims[r].second));
        scores[i] = total / static_cast<double>(k);
      }
      break;
    }
    case Strategy::kRandom:
    case Strategy::kEmbeddingKMeans:
      throw ArgumentError(std::string(ToString(strategy)) + " is not a score-ranked strategy");
  }
  return scores;
}

std::vector<int> KMeansSelect(std::span<const int> pool, std::span<const EmbeddingVector> embeddings, size_t k,
                              int iterations, Rng& rng) {
  if (pool.size() <= k) return {pool.begin(), pool.end()};
  if (k == 0) return {};
  const size_t n = pool.size();
  const size_t dim = EmbeddingFor(embeddings, pool[0]).dimension();
  std::vector<double> sq_norm(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& x = EmbeddingFor(embeddings, pool[i]);
    if (x.dimension() != dim) throw ArgumentError("k-means: embeddings differ in dimension");
    sq_norm[i] = x.norm() * x.norm();
  }
  std::vector<std::vector<double>> centroids;
  std::vector<double> centroid_sq;
  auto add_centroid_from_point = [&](size_t i) {
    std::vector<double> c(dim, 0.0);
    const auto& x = EmbeddingFor(embeddings, pool[i]);
    for (uint32_t t : x.nonzeros()) c[t] = x.values()[t];
    centroids.push_back(std::move(c));
    centroid_sq.push_back(sq_norm[i]);
  };
  auto dist2 = [&](size_t i, size_t c) {
    double d = sq_norm[i] - 2.0 * SparseDot(EmbeddingFor(embeddings, pool[i]), centroids[c]) + centroid_sq[c];
    return std::max(d, 0.0);
  };

  // k-means++ seeding.
  add_centroid_from_point(static_cast<size_t>(rng.Below(n)));
  std::vector<double> nearest(n);
  for (size_t i = 0; i < n; ++i) nearest[i] = dist2(i, 0);
  while (centroids.size() < k) {
    double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    size_t pick = 0;
    if (total <= 0.0) {
      pick = static_cast<size_t>(rng.Below(n));
    } else {
      double r = rng.Uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > r && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    add_centroid_from_point(pick);
    const size_t c = centroids.size() - 1;
    for (size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], dist2(i, c));
  }

  // Lloyd iterations.
  std::vector<size_t> assign(n, std::numeric_limits<size_t>::max());
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      size_t best = 0;
      double best_d = dist2(i, 0);
      for (size_t c = 1; c < k; ++c) {
        double d = dist2(i, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<size_t> counts(k, 0);
    for (size_t i = 0; i < n; ++i) {
      const auto& x = EmbeddingFor(embeddings, pool[i]);
      for (uint32_t t : x.nonzeros()) sums[assign[i]][t] += x.values()[t];
      ++counts[assign[i]];
    }
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      double sq = 0.0;
      for (size_t t = 0; t < dim; ++t) {
        centroids[c][t] = sums[c][t] / static_cast<double>(counts[c]);
        sq += centroids[c][t] * centroids[c][t];
      }
      centroid_sq[c] = sq;
    }
  }

  // Representative per centroid: nearest point not yet taken.
  std::vector<bool> taken(n, false);
  std::vector<int> out;
  out.reserve(k);
  for (size_t c = 0; c < k; ++c) {
    size_t best = n;
    double best_d = 0.0;
    for (size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      double d = dist2(i, c);
      if (best == n || d < best_d || (d == best_d && pool[i] < pool[best])) {
        best = i;
        best_d = d;
      }
    }
    taken[best] = true;
    out.push_back(pool[best]);
  }
  return out;
}

std::vector<int> SelectBatch(Strategy strategy, const QueryInputs& in, size_t batch, Rng& rng) {
  if (in.pool.empty() || batch == 0) return {};
  switch (strategy) {
    case Strategy::kRandom: {
      std::vector<int> ids(in.pool.begin(), in.pool.end());
      const size_t take = std::min(batch, ids.size());
      for (size_t i = 0; i < take; ++i) {
        size_t j = i + static_cast<size_t>(rng.Below(ids.size() - i));
        std::swap(ids[i], ids[j]);
      }
      ids.resize(take);
      return ids;
    }
    case Strategy::kEmbeddingKMeans:
      return KMeansSelect(in.pool, in.embeddings, batch, in.kmeans_iterations, rng);
    default:
      return TopByScore(in.pool, ScorePool(strategy, in), batch);
  }
}

// ---- simulation ----

ordered_json ToJson(const SimulationConfig& c) {
  ordered_json j;
  j["strategy"] = ToString(c.strategy);
  j["seed_size"] = c.seed_size;
  j["batch_size"] = c.batch_size;
  j["iterations"] = c.iterations;
  j["rng_seed"] = c.rng_seed;
  j["holdout_fraction"] = c.holdout_fraction;
  j["label_mode"] = ToString(c.merge);
  j["classifier"] = ToJson(c.classifier);
  j["warm_start"] = c.warm_start;
  j["kmeans_iterations"] = c.kmeans_iterations;
  j["contrastive_neighbors"] = c.contrastive_neighbors;
  j["embedding_dimension"] = c.embedding_dimension;
  return j;
}

SimulationConfig SimulationConfigFromJson(const json& j) {
  SimulationConfig c;
  c.strategy = ParseStrategy(j.at("strategy").get<std::string>());
  c.seed_size = j.value("seed_size", c.seed_size);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.iterations = j.value("iterations", c.iterations);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
  if (j.contains("label_mode")) c.merge = ParseLabelMergeMode(j["label_mode"].get<std::string>());
  if (j.contains("classifier")) c.classifier = ClassifierSpecFromJson(j["classifier"]);
  c.warm_start = j.value("warm_start", c.warm_start);
  c.kmeans_iterations = j.value("kmeans_iterations", c.kmeans_iterations);
  c.contrastive_neighbors = j.value("contrastive_neighbors", c.contrastive_neighbors);
  c.embedding_dimension = j.value("embedding_dimension", c.embedding_dimension);
  return c;
}

std::pair<std::vector<int>, std::vector<int>> StratifiedHoldout(std::span<const int> classes, double fraction,
                                                                Rng& rng) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ArgumentError("holdout fraction must lie in [0, 1)");
  int max_class = 0;
  for (int c : classes) max_class = std::max(max_class, c);
  std::vector<std::vector<int>> by_class(static_cast<size_t>(max_class) + 1);
  for (size_t i = 0; i < classes.size(); ++i) by_class[static_cast<size_t>(classes[i])].push_back(static_cast<int>(i));
  std::vector<int> holdout, rest;
  for (auto& members : by_class) {
    rng.Shuffle(members);
    size_t take = static_cast<size_t>(std::llround(fraction * static_cast<double>(members.size())));
    holdout.insert(holdout.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    rest.insert(rest.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(holdout.begin(), holdout.end());
  std::sort(rest.begin(), rest.end());
  return {std::move(holdout), std::move(rest)};
}

ActiveRun RunSimulation(const SimulationConfig& config, const std::vector<TokenizedDoc>& docs,
                        std::span<const Label> gold) {
  if (gold.size() != docs.size()) throw ArgumentError("gold labels must cover every document");
  if (config.seed_size == 0) throw ArgumentError("seed_size must be positive");
  if (config.batch_size == 0) throw ArgumentError("batch_size must be positive");
  if (config.iterations < 0) throw ArgumentError("iterations must be >= 0");

  ActiveRun run;
  run.config = config;
  std::vector<int> classes(docs.size());
  for (size_t i = 0; i < docs.size(); ++i) classes[i] = BinaryClass(gold[i], config.merge);

  Rng holdout_rng(DeriveSeed(config.rng_seed, "holdout"));
  auto [holdout, rest] = StratifiedHoldout(classes, config.holdout_fraction, holdout_rng);
  run.holdout = std::move(holdout);

  // Seed set: uniform sample of the non-holdout documents; one resample on a
  // single-class draw.
  std::vector<int> seed;
  for (int attempt = 0;; ++attempt) {
    Rng seed_rng(DeriveSeed(config.rng_seed, "seed", static_cast<uint64_t>(attempt)));
    QueryInputs in;
    in.pool = rest;
    seed = SelectBatch(Strategy::kRandom, in, config.seed_size, seed_rng);
    bool has_pos = false, has_neg = false;
    for (int idx : seed) (classes[static_cast<size_t>(idx)] == 1 ? has_pos : has_neg) = true;
    run.seed_attempts = attempt + 1;
    if (has_pos && has_neg) break;
    if (attempt == 1) {
      throw Error("seed set contains a single class after resampling; increase seed_size");
    }
  }
  run.labeled = seed;
  std::vector<bool> in_labeled(docs.size(), false);
  for (int idx : seed) in_labeled[static_cast<size_t>(idx)] = true;
  for (int idx : rest) {
    if (!in_labeled[static_cast<size_t>(idx)]) run.pool.push_back(idx);
  }

  // One feature space for the whole run, fitted on the unlabeled corpus text.
  auto features = config.classifier.features == FeatureKind::kEmbedding
                      ? FeatureSpace::FromProvider(
                            std::make_shared<HashedBowProvider>(config.embedding_dimension, config.rng_seed))
                      : FeatureSpace::FitTfidf(docs);
  std::vector<EmbeddingVector> embeddings;
  if (NeedsEmbeddings(config.strategy)) {
    HashedBowProvider provider(config.embedding_dimension, config.rng_seed);
    embeddings.reserve(docs.size());
    for (const auto& d : docs) embeddings.push_back(provider.EmbedTokens(d.tokens));
  }

  Rng select_rng(DeriveSeed(config.rng_seed, "select"));
  std::unique_ptr<Classifier> model;
  std::vector<ProbVector> probs(docs.size());
  std::vector<int> holdout_gold;
  for (int idx : run.holdout) holdout_gold.push_back(classes[static_cast<size_t>(idx)]);

  for (int it = 0;; ++it) {
    std::vector<TokenizedDoc> train_docs;
    std::vector<int> train_labels;
    train_docs.reserve(run.labeled.size());
    for (int idx : run.labeled) {
      train_docs.push_back(docs[static_cast<size_t>(idx)]);
      train_labels.push_back(classes[static_cast<size_t>(idx)]);
    }
    model = Fit(config.classifier, TrainingSet{train_docs, train_labels, 2}, features,
                config.warm_start ? model.get() : nullptr);

    std::vector<int> predicted;
    predicted.reserve(run.holdout.size());
    for (int idx : run.holdout) {
      predicted.push_back(static_cast<int>(model->PredictProba(docs[static_cast<size_t>(idx)]).Argmax()));
    }
    run.curve.push_back({it, run.labeled.size(), ComputeMetrics(predicted, holdout_gold, 1)});

    if (it >= config.iterations || run.pool.empty()) break;

    if (NeedsModel(config.strategy)) {
      for (int idx : run.pool) probs[static_cast<size_t>(idx)] = model->PredictProba(docs[static_cast<size_t>(idx)]);
      if (config.strategy == Strategy::kContrastive) {
        for (int idx : run.labeled) {
          probs[static_cast<size_t>(idx)] = model->PredictProba(docs[static_cast<size_t>(idx)]);
        }
      }
    }
    QueryInputs in;
    in.pool = run.pool;
    in.labeled = run.labeled;
    in.probs = probs;
    in.embeddings = embeddings;
    in.kmeans_iterations = config.kmeans_iterations;
    in.contrastive_neighbors = config.contrastive_neighbors;
    std::vector<int> batch = SelectBatch(config.strategy, in, config.batch_size, select_rng);

    std::vector<bool> chosen(docs.size(), false);
    for (int idx : batch) chosen[static_cast<size_t>(idx)] = true;
    run.labeled.insert(run.labeled.end(), batch.begin(), batch.end());
    std::erase_if(run.pool, [&](int idx) { return chosen[static_cast<size_t>(idx)]; });
  }
  return run;
}

double AreaUnderCurve(const std::vector<CurvePoint>& curve) {
  if (curve.empty()) return 0.0;
  if (curve.size() == 1) return curve.front().metrics.f1;
  double area = 0.0;
  for (size_t i = 1; i < curve.size(); ++i) {
    double dx = static_cast<double>(curve[i].labeled_count) - static_cast<double>(curve[i - 1].labeled_count);
    area += dx * 0.5 * (curve[i].metrics.f1 + curve[i - 1].metrics.f1);
  }
  double span = static_cast<double>(curve.back().labeled_count) - static_cast<double>(curve.front().labeled_count);
  return span > 0 ? area / span : curve.back().metrics.f1;
}

std::optional<size_t> LabelsToReach(const std::vector<CurvePoint>& curve, double f1) {
  for (const auto& p : curve) {
    if (p.metrics.f1 >= f1) return p.labeled_count;
  }
  return std::nullopt;
}

std::string CurveCsv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << "iteration,labeled_count,precision,recall,f1\n";
  char buf[128];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%zu,%.6f,%.6f,%.6f\n", p.iteration, p.labeled_count, p.metrics.precision,
                  p.metrics.recall, p.metrics.f1);
    out << buf;
  }
  return out.str();
}

ordered_json ToJson(const ActiveRun& run) {
  ordered_json j;
  j["config"] = ToJson(run.config);
  j["seed_attempts"] = run.seed_attempts;
  j["holdout_size"] = run.holdout.size();
  j["labeled_count"] = run.labeled.size();
  j["pool_remaining"] = run.pool.size();
  ordered_json curve = ordered_json::array();
  for (const auto& p : run.curve) {
    ordered_json point;
    point["iteration"] = p.iteration;
    point["labeled_count"] = p.labeled_count;
    point["metrics"] = ToJson(p.metrics);
    curve.push_back(std::move(point));
  }
  j["curve"] = std::move(curve);
  j["aulc"] = AreaUnderCurve(run.curve);
  return j;
}

}  // namespace debtscope
