#include "debtscope/explain.h"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "debtscope/error.h"
#include "debtscope/util.h"

namespace debtscope {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view ToString(ExplainMethod m) { return m == ExplainMethod::kLime ? "lime" : "shap"; }

ExplainMethod ParseExplainMethod(std::string_view s) {
  if (s == "lime") return ExplainMethod::kLime;
  if (s == "shap") return ExplainMethod::kShap;
  throw ArgumentError("unknown explanation method '" + std::string(s) + "' (expected lime or shap)");
}

void Validate(const ExplainConfig& c) {
  if (c.lime.num_samples < 10) throw ArgumentError("lime.num_samples must be >= 10");
  if (!(c.lime.kernel_width > 0)) throw ArgumentError("lime.kernel_width must be > 0");
  if (c.lime.ridge < 0) throw ArgumentError("lime.ridge must be >= 0");
  if (c.lime.top_k < 1) throw ArgumentError("lime.top_k must be >= 1");
  if (c.shap.exact_max_tokens < 0 || c.shap.exact_max_tokens > 20) {
    throw ArgumentError("shap.exact_max_tokens must lie in [0, 20]");
  }
  if (c.shap.num_permutations < 2) throw ArgumentError("shap.num_permutations must be >= 2");
}

ordered_json ToJson(const ExplainConfig& c) {
  ordered_json j;
  j["lime"] = {{"num_samples", c.lime.num_samples},
               {"kernel_width", c.lime.kernel_width},
               {"ridge", c.lime.ridge},
               {"top_k", c.lime.top_k}};
  j["shap"] = {{"exact_max_tokens", c.shap.exact_max_tokens}, {"num_permutations", c.shap.num_permutations}};
  j["rng_seed"] = c.rng_seed;
  return j;
}

ExplainConfig ExplainConfigFromJson(const json& j) {
  ExplainConfig c;
  if (j.contains("lime")) {
    const auto& l = j["lime"];
    c.lime.num_samples = l.value("num_samples", c.lime.num_samples);
    c.lime.kernel_width = l.value("kernel_width", c.lime.kernel_width);
    c.lime.ridge = l.value("ridge", c.lime.ridge);
    c.lime.top_k = l.value("top_k", c.lime.top_k);
  }
  if (j.contains("shap")) {
    const auto& s = j["shap"];
    c.shap.exact_max_tokens = s.value("exact_max_tokens", c.shap.exact_max_tokens);
    c.shap.num_permutations = s.value("num_permutations", c.shap.num_permutations);
  }
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  Validate(c);
  return c;
}

Players CollectPlayers(const TokenizedDoc& doc) {
  Players p;
  std::unordered_map<std::string, size_t> seen;
  p.owner.reserve(doc.tokens.size());
  for (size_t i = 0; i < doc.tokens.size(); ++i) {
    auto [it, inserted] = seen.emplace(doc.tokens[i], p.tokens.size());
    if (inserted) {
      p.tokens.push_back(doc.tokens[i]);
      p.first_index.push_back(i);
    }
    p.owner.push_back(it->second);
  }
  return p;
}

std::vector<std::string> ApplyMask(const TokenizedDoc& doc, const Players& players, const std::vector<bool>& keep) {
  std::vector<std::string> out;
  out.reserve(doc.tokens.size());
  for (size_t i = 0; i < doc.tokens.size(); ++i) {
    if (keep[players.owner[i]]) out.push_back(doc.tokens[i]);
  }
  return out;
}

namespace {

void CheckInputs(const TextModel& model, const TokenizedDoc& doc, size_t target, const ExplainConfig& config) {
  Validate(config);
  if (doc.tokens.empty()) throw ArgumentError("cannot explain a document without tokens");
  if (target >= model.num_classes()) {
    throw ArgumentError("target class " + std::to_string(target) + " outside model's " +
                        std::to_string(model.num_classes()) + " classes");
  }
}

double Evaluate(const TextModel& model, const TokenizedDoc& doc, const Players& players, const std::vector<bool>& keep,
                size_t target) {
  try {
    return model.PredictTokens(ApplyMask(doc, players, keep)).probs.at(target);
  } catch (const std::exception& e) {
    throw Error("model prediction failed on a perturbation of " + doc.doc_id + ": " + e.what());
  }
}

Explanation Skeleton(ExplainMethod method, const TextModel& model, const TokenizedDoc& doc, size_t target,
                     const ExplainConfig& config) {
  Explanation e;
  e.doc_id = doc.doc_id;
  e.method = method;
  e.target = target;
  e.class_names = model.class_names();
  e.predicted = model.PredictTokens(doc.tokens);
  ordered_json h = ToJson(config);
  h["method"] = ToString(method);
  e.config_hash = Sha256Hex(h.dump());
  return e;
}

TokenWeight MakeWeight(const TokenizedDoc& doc, const Players& players, size_t player, double weight) {
  TokenWeight w{players.tokens[player], players.first_index[player], weight, {}};
  if (doc.raw_spans.size() == doc.tokens.size()) {
    for (size_t i = 0; i < doc.tokens.size(); ++i) {
      if (players.owner[i] == player) w.spans.push_back(doc.raw_spans[i]);
    }
  }
  return w;
}

}  // namespace

Explanation ExplainLime(const TextModel& model, const TokenizedDoc& doc, size_t target, const ExplainConfig& config) {
  CheckInputs(model, doc, target, config);
  const Players players = CollectPlayers(doc);
  const size_t m = players.tokens.size();
  const size_t samples = static_cast<size_t>(config.lime.num_samples);
  Rng rng(DeriveSeed(config.rng_seed, "lime"));

  Eigen::MatrixXd z = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(m));
  Eigen::VectorXd y(samples);
  Eigen::VectorXd w(samples);
  std::vector<size_t> order(m);
  const double sigma2 = config.lime.kernel_width * config.lime.kernel_width;
  for (size_t s = 0; s < samples; ++s) {
    std::vector<bool> keep(m, true);
    if (s > 0) {
      // Remove a uniformly drawn number of distinct tokens; row 0 is the
      // unperturbed document.
      size_t remove = 1 + static_cast<size_t>(rng.Below(m));
      std::iota(order.begin(), order.end(), 0);
      for (size_t r = 0; r < remove; ++r) {
        size_t pick = r + static_cast<size_t>(rng.Below(m - r));
        std::swap(order[r], order[pick]);
        keep[order[r]] = false;
        z(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(order[r])) = 0.0;
      }
    }
    size_t kept = static_cast<size_t>(std::count(keep.begin(), keep.end(), true));
    double distance = kept == 0 ? 1.0 : 1.0 - std::sqrt(static_cast<double>(kept) / static_cast<double>(m));
    w(static_cast<Eigen::Index>(s)) = std::exp(-distance * distance / sigma2);
    y(static_cast<Eigen::Index>(s)) = Evaluate(model, doc, players, keep, target);
  }

  // Weighted ridge with an unpenalized intercept: center by weighted means.
  const double wsum = w.sum();
  Eigen::RowVectorXd zmean = (w.transpose() * z) / wsum;
  const double ymean = w.dot(y) / wsum;
  Eigen::MatrixXd zc = z.rowwise() - zmean;
  Eigen::VectorXd yc = y.array() - ymean;
  Eigen::MatrixXd gram = zc.transpose() * w.asDiagonal() * zc;
  gram.diagonal().array() += config.lime.ridge;
  Eigen::VectorXd rhs = zc.transpose() * (w.asDiagonal() * yc);
  Eigen::VectorXd beta = gram.ldlt().solve(rhs);

  Explanation e = Skeleton(ExplainMethod::kLime, model, doc, target, config);
  std::vector<size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return std::abs(beta(static_cast<Eigen::Index>(a))) > std::abs(beta(static_cast<Eigen::Index>(b)));
  });
  const size_t keep_top = std::min(m, static_cast<size_t>(config.lime.top_k));
  for (size_t r = 0; r < keep_top; ++r) {
    e.weights.push_back(MakeWeight(doc, players, idx[r], beta(static_cast<Eigen::Index>(idx[r]))));
  }
  return e;
}

Explanation ExplainShap(const TextModel& model, const TokenizedDoc& doc, size_t target, const ExplainConfig& config) {
  CheckInputs(model, doc, target, config);
  const Players players = CollectPlayers(doc);
  const size_t n = players.tokens.size();
  std::vector<double> phi(n, 0.0);
  double base = 0.0;
  bool exact = n <= static_cast<size_t>(config.shap.exact_max_tokens);

  if (exact) {
    const size_t coalitions = size_t{1} << n;
    std::vector<double> v(coalitions);
    std::vector<bool> keep(n);
    for (size_t mask = 0; mask < coalitions; ++mask) {
      for (size_t i = 0; i < n; ++i) keep[i] = (mask >> i) & 1u;
      v[mask] = Evaluate(model, doc, players, keep, target);
    }
    // weight(s) = s! (n - s - 1)! / n! = 1 / (n * C(n - 1, s))
    std::vector<double> weight(n);
    double binom = 1.0;
    for (size_t s = 0; s < n; ++s) {
      weight[s] = 1.0 / (static_cast<double>(n) * binom);
      binom = binom * static_cast<double>(n - 1 - s) / static_cast<double>(s + 1);
    }
    for (size_t mask = 0; mask < coalitions; ++mask) {
      const size_t size = static_cast<size_t>(std::popcount(mask));
      for (size_t i = 0; i < n; ++i) {
        if ((mask >> i) & 1u) continue;
        phi[i] += weight[size] * (v[mask | (size_t{1} << i)] - v[mask]);
      }
    }
    base = v[0];
  } else {
    Rng rng(DeriveSeed(config.rng_seed, "shap"));
    std::vector<bool> keep(n, false);
    base = Evaluate(model, doc, players, keep, target);
    std::fill(keep.begin(), keep.end(), true);
    const double full = Evaluate(model, doc, players, keep, target);
    const size_t pairs = (static_cast<size_t>(config.shap.num_permutations) + 1) / 2;
    std::vector<size_t> perm(n);
    size_t walks = 0;
    for (size_t p = 0; p < pairs; ++p) {
      std::iota(perm.begin(), perm.end(), 0);
      rng.Shuffle(perm);
      for (int direction = 0; direction < 2; ++direction) {
        std::fill(keep.begin(), keep.end(), false);
        double prev = base;
        for (size_t step = 0; step < n; ++step) {
          size_t player = direction == 0 ? perm[step] : perm[n - 1 - step];
          keep[player] = true;
          double cur = step + 1 == n ? full : Evaluate(model, doc, players, keep, target);
          phi[player] += cur - prev;
          prev = cur;
        }
        ++walks;
      }
    }
    for (double& x : phi) x /= static_cast<double>(walks);
  }

  Explanation e = Skeleton(ExplainMethod::kShap, model, doc, target, config);
  e.base_value = base;
  e.exact = exact;
  for (size_t i = 0; i < n; ++i) e.weights.push_back(MakeWeight(doc, players, i, phi[i]));
  return e;
}

Explanation Explain(ExplainMethod method, const TextModel& model, const TokenizedDoc& doc, size_t target,
                    const ExplainConfig& config) {
  return method == ExplainMethod::kLime ? ExplainLime(model, doc, target, config)
                                        : ExplainShap(model, doc, target, config);
}

ordered_json ToJson(const Explanation& e) {
  ordered_json j;
  j["doc_id"] = e.doc_id;
  j["method"] = ToString(e.method);
  ordered_json predicted = ordered_json::object();
  for (size_t c = 0; c < e.predicted.size(); ++c) {
    std::string name = c < e.class_names.size() ? e.class_names[c] : "class" + std::to_string(c);
    predicted[name] = e.predicted[c];
  }
  j["predicted"] = std::move(predicted);
  j["base_value"] = e.base_value ? ordered_json(*e.base_value) : ordered_json(nullptr);
  ordered_json weights = ordered_json::array();
  for (const auto& w : e.weights) {
    ordered_json item;
    item["token"] = w.token;
    item["index"] = w.index;
    item["weight"] = w.weight;
    ordered_json spans = ordered_json::array();
    for (auto [b, en] : w.spans) spans.push_back({b, en});
    item["spans"] = std::move(spans);
    weights.push_back(std::move(item));
  }
  j["weights"] = std::move(weights);
  j["target"] = e.target < e.class_names.size() ? e.class_names[e.target] : std::to_string(e.target);
  j["exact"] = e.exact;
  j["config_hash"] = e.config_hash;
  return j;
}

std::string RenderText(const Explanation& e) {
  std::ostringstream out;
  char buf[160];
  const std::string target = e.target < e.class_names.size() ? e.class_names[e.target] : std::to_string(e.target);
  out << e.doc_id << " [" << ToString(e.method) << "] predicted:";
  for (size_t c = 0; c < e.predicted.size(); ++c) {
    std::snprintf(buf, sizeof(buf), " %s=%.2f", c < e.class_names.size() ? e.class_names[c].c_str() : "?",
                  e.predicted[c]);
    out << buf;
  }
  out << '\n';
  std::vector<TokenWeight> sorted = e.weights;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TokenWeight& a, const TokenWeight& b) { return std::abs(a.weight) > std::abs(b.weight); });
  double scale = 0.0;
  for (const auto& w : sorted) scale = std::max(scale, std::abs(w.weight));
  if (e.method == ExplainMethod::kShap && e.base_value) {
    std::snprintf(buf, sizeof(buf), "base %.4f -> p(%s) %.4f\n", *e.base_value, target.c_str(),
                  e.predicted[e.target]);
    out << buf;
  }
  for (const auto& w : sorted) {
    int len = scale > 0 ? static_cast<int>(std::lround(30.0 * std::abs(w.weight) / scale)) : 0;
    std::string bar(static_cast<size_t>(len), e.method == ExplainMethod::kLime ? '#' : (w.weight >= 0 ? '+' : '-'));
    std::snprintf(buf, sizeof(buf), "  %-24s %+9.4f %s\n", w.token.c_str(), w.weight, bar.c_str());
    out << buf;
  }
  return out.str();
}

}  // namespace debtscope
