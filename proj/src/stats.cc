#include "debtscope/stats.h"

#include <algorithm>
#include <cmath>

namespace debtscope {

double ZForConfidence(double confidence) {
  struct Row {
    double confidence;
    double z;
  };
  static constexpr Row kTable[] = {{0.90, 1.645}, {0.95, 1.96}, {0.99, 2.576}};
  for (const auto& row : kTable) {
    if (std::abs(row.confidence - confidence) < 1e-9) return row.z;
  }
  throw ArgumentError("unsupported confidence level " + std::to_string(confidence) +
                      " (supported: 0.90, 0.95, 0.99)");
}

SampleSizeResult ComputeSampleSize(const SampleSpec& spec) {
  if (spec.population < 1) throw ArgumentError("population must be >= 1");
  if (!(spec.margin > 0.0 && spec.margin < 1.0)) throw ArgumentError("margin of error must lie in (0, 1)");
  if (!(spec.proportion > 0.0 && spec.proportion < 1.0)) throw ArgumentError("proportion must lie in (0, 1)");
  SampleSizeResult r;
  r.z = ZForConfidence(spec.confidence);
  const double n0 = r.z * r.z * spec.proportion * (1.0 - spec.proportion) / (spec.margin * spec.margin);
  const double pop = static_cast<double>(spec.population);
  r.uncorrected_exact = n0;
  r.uncorrected = std::clamp<int64_t>(static_cast<int64_t>(std::floor(n0)), 1, spec.population);
  const double corrected = n0 / (1.0 + (n0 - 1.0) / pop);
  // The small slack keeps an exactly integral value from rounding up on
  // floating-point noise.
  r.corrected = std::clamp<int64_t>(static_cast<int64_t>(std::ceil(corrected - 1e-9)), 1, spec.population);
  return r;
}

int64_t SampleSize(const SampleSpec& spec) { return ComputeSampleSize(spec).corrected; }

Metrics MetricsFromConfusion(const Confusion& c) {
  Metrics m;
  m.confusion = c;
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

nlohmann::ordered_json ToJson(const Metrics& m) {
  nlohmann::ordered_json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["confusion"] = {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}, {"tn", m.confusion.tn}};
  return j;
}

Adjudication Adjudicate(std::span<const LabelRecord> records, std::optional<Label> tiebreaker) {
  if (records.size() < 2) throw ArgumentError("adjudication needs at least two annotator records");
  size_t atd_hard = 0, atd_soft = 0, non_hard = 0, non_soft = 0;
  for (const auto& r : records) {
    ValidateLabelRecord(r);
    switch (r.label) {
      case Label::kATD: (r.maybe_flag ? atd_soft : atd_hard)++; break;
      case Label::kWeakATD: atd_soft++; break;
      case Label::kNonATD: (r.maybe_flag ? non_soft : non_hard)++; break;
    }
  }
  const size_t atd_side = atd_hard + atd_soft;
  const size_t non_side = non_hard + non_soft;

  Adjudication out;
  if (atd_side == 0) {
    out.final = Label::kNonATD;
    out.rule = non_soft > 0 ? "maybe-non-atd-demoted" : "unanimous-non-atd";
    return out;
  }
  if (non_side == 0 && atd_soft == 0) {
    out.final = Label::kATD;
    out.rule = "unanimous-atd";
    return out;
  }
  if (atd_soft > 0 || non_soft > 0) {
    out.final = Label::kWeakATD;
    out.rule = "maybe-atd-weak";
    return out;
  }
  // Hard ATD vs Non-ATD split: majority vote with the third opinion.
  size_t atd_votes = atd_hard;
  size_t non_votes = non_hard;
  if (tiebreaker) {
    if (*tiebreaker == Label::kNonATD) {
      ++non_votes;
    } else {
      ++atd_votes;
    }
  }
  if (atd_votes == non_votes) {
    out.needs_adjudication = true;
    out.rule = tiebreaker ? "tied-after-tiebreaker" : "needs-tiebreaker";
    return out;
  }
  out.final = atd_votes > non_votes ? Label::kATD : Label::kNonATD;
  out.rule = "majority-vote";
  return out;
}

std::vector<AdjudicatedDoc> AdjudicateAll(const std::vector<LabelRecord>& records,
                                          const std::map<std::string, Label>& tiebreakers) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<LabelRecord>> groups;
  for (const auto& r : records) {
    auto [it, inserted] = groups.try_emplace(r.doc_id);
    if (inserted) order.push_back(r.doc_id);
    it->second.push_back(r);
  }
  std::vector<AdjudicatedDoc> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    const auto& group = groups[id];
    std::optional<Label> tb;
    if (auto it = tiebreakers.find(id); it != tiebreakers.end()) tb = it->second;
    if (group.size() < 2) {
      out.push_back({id, Adjudication{std::nullopt, true, "single-annotator"}});
      continue;
    }
    out.push_back({id, Adjudicate(group, tb)});
  }
  return out;
}

}  // namespace debtscope
