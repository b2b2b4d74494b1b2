#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "debtscope/classify.h"
#include "debtscope/textprep.h"
#include "json.hpp"

namespace debtscope {

enum class ExplainMethod { kLime, kShap };

std::string_view ToString(ExplainMethod m);
ExplainMethod ParseExplainMethod(std::string_view s);

struct LimeConfig {
  int num_samples = 1000;
  double kernel_width = 0.25;
  double ridge = 1.0;
  int top_k = 10;
};

struct ShapConfig {
  int exact_max_tokens = 12;
  int num_permutations = 2048;
};

struct ExplainConfig {
  LimeConfig lime;
  ShapConfig shap;
  uint64_t rng_seed = 0;
};

// Throws ArgumentError on out-of-range settings.
void Validate(const ExplainConfig& config);
nlohmann::ordered_json ToJson(const ExplainConfig& config);
ExplainConfig ExplainConfigFromJson(const nlohmann::json& j);

struct TokenWeight {
  std::string token;
  size_t index = 0;  // first occurrence in the document's token list
  double weight = 0.0;
  // Byte spans of every occurrence in the source text, when known.
  std::vector<std::pair<size_t, size_t>> spans;
};

struct Explanation {
  std::string doc_id;
  ExplainMethod method = ExplainMethod::kLime;
  size_t target = 1;
  std::vector<std::string> class_names;
  ProbVector predicted;
  std::optional<double> base_value;  // shap only
  std::vector<TokenWeight> weights;
  bool exact = false;                // shap: exhaustive coalitions
  std::string config_hash;
};

nlohmann::ordered_json ToJson(const Explanation& e);

// Distinct tokens in first-occurrence order; each is one perturbation feature.
struct Players {
  std::vector<std::string> tokens;
  std::vector<size_t> first_index;
  std::vector<size_t> owner;  // token position -> player
};

Players CollectPlayers(const TokenizedDoc& doc);

// Document restricted to the players whose bit is set; every occurrence of a
// removed player is deleted.
std::vector<std::string> ApplyMask(const TokenizedDoc& doc, const Players& players, const std::vector<bool>& keep);

// Perturbation-based weighted ridge surrogate.
Explanation ExplainLime(const TextModel& model, const TokenizedDoc& doc, size_t target, const ExplainConfig& config);

// Shapley attribution over distinct tokens. Exact enumeration when the
// player count is at most shap.exact_max_tokens; antithetic permutation
// sampling otherwise.
Explanation ExplainShap(const TextModel& model, const TokenizedDoc& doc, size_t target, const ExplainConfig& config);

Explanation Explain(ExplainMethod method, const TextModel& model, const TokenizedDoc& doc, size_t target,
                    const ExplainConfig& config);

// Plain-text renderings: a bar list (lime) or a signed force list (shap).
std::string RenderText(const Explanation& e);

}  // namespace debtscope
