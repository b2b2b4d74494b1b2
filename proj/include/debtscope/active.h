#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "debtscope/classify.h"
#include "debtscope/corpus.h"
#include "debtscope/embed.h"
#include "debtscope/stats.h"
#include "debtscope/util.h"
#include "json.hpp"

namespace debtscope {

enum class Strategy {
  kRandom,
  kLeastConfidence,
  kPredictionEntropy,
  kBreakingTies,
  kEmbeddingKMeans,
  kContrastive,
};

std::string_view ToString(Strategy s);
// Throws ArgumentError listing the valid names.
Strategy ParseStrategy(std::string_view s);
const std::vector<std::string>& StrategyNames();

bool NeedsModel(Strategy s);
bool NeedsEmbeddings(Strategy s);

// How the three-way annotation collapses to the binary training target.
enum class LabelMergeMode { kTrueOnly, kTruePlusWeak };

std::string_view ToString(LabelMergeMode m);
LabelMergeMode ParseLabelMergeMode(std::string_view s);
Label MergeLabel(Label label, LabelMergeMode mode);
// Binary class index after merging: 1 = ATD, 0 = NonATD.
int BinaryClass(Label label, LabelMergeMode mode);

// Uncertainty scores; higher means more worth labeling.
double LeastConfidenceScore(const ProbVector& p);
double EntropyScore(const ProbVector& p);
double BreakingTiesScore(const ProbVector& p);  // negated top-two margin
double KLDivergence(const ProbVector& p, const ProbVector& q);

struct QueryInputs {
  std::span<const int> pool;     // corpus indices
  std::span<const int> labeled;  // corpus indices
  // Indexed by corpus index. Model-based strategies read `probs`; the
  // k-means and contrastive strategies read `embeddings`.
  std::span<const ProbVector> probs;
  std::span<const EmbeddingVector> embeddings;
  int kmeans_iterations = 50;
  size_t contrastive_neighbors = 10;
};

// Per-pool-position score for the score-ranked strategies (uncertainty and
// contrastive).
std::vector<double> ScorePool(Strategy strategy, const QueryInputs& in);

// Picks min(batch, |pool|) distinct pool ids. Ties go to the smaller corpus
// index.
std::vector<int> SelectBatch(Strategy strategy, const QueryInputs& in, size_t batch, Rng& rng);

// Seeded k-means++ then Lloyd iterations over the pool embeddings; returns the
// pool point nearest each centroid (distinct).
std::vector<int> KMeansSelect(std::span<const int> pool, std::span<const EmbeddingVector> embeddings, size_t k,
                              int iterations, Rng& rng);

// ---- simulation ----

struct SimulationConfig {
  Strategy strategy = Strategy::kRandom;
  size_t seed_size = 100;
  size_t batch_size = 100;
  int iterations = 10;
  uint64_t rng_seed = 0;
  double holdout_fraction = 0.2;
  LabelMergeMode merge = LabelMergeMode::kTruePlusWeak;
  ClassifierSpec classifier;
  bool warm_start = false;
  int kmeans_iterations = 50;
  size_t contrastive_neighbors = 10;
  size_t embedding_dimension = HashedBowProvider::kDefaultDimension;
};

nlohmann::ordered_json ToJson(const SimulationConfig& c);
SimulationConfig SimulationConfigFromJson(const nlohmann::json& j);

struct CurvePoint {
  int iteration = 0;
  size_t labeled_count = 0;
  Metrics metrics;
};

struct ActiveRun {
  SimulationConfig config;
  std::vector<int> labeled;  // acquisition order
  std::vector<int> pool;     // ascending corpus index
  std::vector<int> holdout;  // ascending corpus index
  std::vector<CurvePoint> curve;
  int seed_attempts = 1;
};

// Simulated-oracle loop: stratified holdout, random seed set, then per
// iteration retrain from scratch, evaluate, query, reveal gold labels.
ActiveRun RunSimulation(const SimulationConfig& config, const std::vector<TokenizedDoc>& docs,
                        std::span<const Label> gold);

// Stratified split of `indices` by class; returns (holdout, rest), each ascending.
std::pair<std::vector<int>, std::vector<int>> StratifiedHoldout(std::span<const int> classes, double fraction,
                                                                Rng& rng);

// Normalized area under the F1-vs-labels curve (trapezoid rule).
double AreaUnderCurve(const std::vector<CurvePoint>& curve);
// Fewest labels at which the curve reaches `f1`, if it ever does.
std::optional<size_t> LabelsToReach(const std::vector<CurvePoint>& curve, double f1);

std::string CurveCsv(const std::vector<CurvePoint>& curve);
nlohmann::ordered_json ToJson(const ActiveRun& run);

}  // namespace debtscope
