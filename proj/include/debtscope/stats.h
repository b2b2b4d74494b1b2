#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "debtscope/corpus.h"
#include "debtscope/error.h"
#include "json.hpp"

namespace debtscope {

// ---- sample size ----

struct SampleSpec {
  int64_t population = 1;
  double confidence = 0.95;
  double margin = 0.05;
  double proportion = 0.5;
};

struct SampleSizeResult {
  double z = 0.0;
  double uncorrected_exact = 0.0;  // n0 = z^2 p (1 - p) / e^2
  int64_t uncorrected = 0;         // floor(n0), capped at N
  int64_t corrected = 0;           // ceil(n0 / (1 + (n0 - 1) / N)), capped at N
};

// z for the supported two-sided confidence levels (0.90, 0.95, 0.99).
double ZForConfidence(double confidence);

SampleSizeResult ComputeSampleSize(const SampleSpec& spec);

// Finite-population corrected sample size.
int64_t SampleSize(const SampleSpec& spec);

// ---- classification metrics ----

struct Confusion {
  size_t tp = 0, fp = 0, fn = 0, tn = 0;
  bool operator==(const Confusion&) const = default;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Confusion confusion;
};

Metrics MetricsFromConfusion(const Confusion& c);

template <typename T>
Metrics ComputeMetrics(std::span<const T> predicted, std::span<const T> gold, const T& positive) {
  if (predicted.size() != gold.size()) {
    throw ArgumentError("metrics: predicted and gold differ in length (" + std::to_string(predicted.size()) +
                        " vs " + std::to_string(gold.size()) + ")");
  }
  Confusion c;
  for (size_t i = 0; i < predicted.size(); ++i) {
    bool p = predicted[i] == positive;
    bool g = gold[i] == positive;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return MetricsFromConfusion(c);
}

template <typename T>
Metrics ComputeMetrics(const std::vector<T>& predicted, const std::vector<T>& gold, const T& positive) {
  return ComputeMetrics(std::span<const T>(predicted), std::span<const T>(gold), positive);
}

nlohmann::ordered_json ToJson(const Metrics& m);

// ---- agreement ----

// Cohen's kappa, (p_o - p_e) / (1 - p_e). Returns 1 when p_e == 1.
template <typename T>
double CohensKappa(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw ArgumentError("kappa: label vectors differ in length (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw ArgumentError("kappa: label vectors are empty");
  const double n = static_cast<double>(a.size());
  std::map<T, std::pair<size_t, size_t>> marginals;
  size_t agree = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) ++agree;
    ++marginals[a[i]].first;
    ++marginals[b[i]].second;
  }
  double p_o = static_cast<double>(agree) / n;
  double p_e = 0.0;
  for (const auto& [label, counts] : marginals) {
    p_e += (static_cast<double>(counts.first) / n) * (static_cast<double>(counts.second) / n);
  }
  if (p_e >= 1.0) return 1.0;
  return (p_o - p_e) / (1.0 - p_e);
}

template <typename T>
double CohensKappa(const std::vector<T>& a, const std::vector<T>& b) {
  return CohensKappa(std::span<const T>(a), std::span<const T>(b));
}

// ---- adjudication ----

struct Adjudication {
  std::optional<Label> final;
  bool needs_adjudication = false;
  std::string rule;  // which resolution rule fired
};

// Resolves one document's annotator records:
//  * no annotator on the ATD side                  -> NonATD
//  * ATD side unanimous and unhedged               -> ATD
//  * any "Maybe" (or WeakATD) with an ATD vote     -> WeakATD
//  * hard ATD vs Non-ATD split                     -> majority including the
//    tiebreaker; without a decisive majority the result needs adjudication.
Adjudication Adjudicate(std::span<const LabelRecord> records, std::optional<Label> tiebreaker = std::nullopt);

// Groups records by doc_id (first-seen order) and adjudicates each group.
// `tiebreakers` maps doc_id to a third-annotator label.
struct AdjudicatedDoc {
  std::string doc_id;
  Adjudication result;
};
std::vector<AdjudicatedDoc> AdjudicateAll(const std::vector<LabelRecord>& records,
                                          const std::map<std::string, Label>& tiebreakers);

}  // namespace debtscope
