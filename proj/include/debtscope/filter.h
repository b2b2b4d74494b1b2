#pragma once

#include <optional>
#include <string>
#include <vector>

#include "debtscope/embed.h"
#include "debtscope/textprep.h"
#include "json.hpp"

namespace debtscope {

inline constexpr double kDefaultFilterThreshold = 0.9;

struct FilterConfig {
  double threshold = kDefaultFilterThreshold;
  std::vector<int> ngram_sizes = {1, 2, 3};
  std::vector<std::string> keywords;
};

struct FilterResult {
  std::string doc_id;
  bool matched = false;
  std::optional<NGram> best_ngram;
  std::optional<std::string> best_keyword;
  double best_score = 0.0;

  bool operator==(const FilterResult&) const = default;
};

struct FilterReport {
  std::vector<FilterResult> results;  // corpus order
  size_t matched = 0;
  size_t unmatched = 0;
};

// Sliding-window matcher. Keyword embeddings are computed once at
// construction; the object is read-only afterwards.
class KeywordFilter {
 public:
  KeywordFilter(FilterConfig config, const EmbeddingProvider& provider);

  // Scores every window of every configured size against every keyword and
  // keeps the maximum. Ties go to the earlier window start, then the smaller
  // window size, then the lexicographically smaller keyword.
  FilterResult Apply(const TokenizedDoc& doc) const;

  FilterReport ApplyAll(const std::vector<TokenizedDoc>& docs, unsigned threads = 0) const;

  const FilterConfig& config() const { return config_; }

 private:
  FilterConfig config_;
  const EmbeddingProvider& provider_;
  std::vector<EmbeddingVector> keyword_vectors_;  // aligned with sorted config_.keywords
};

FilterResult FilterDoc(const TokenizedDoc& doc, const FilterConfig& config, const EmbeddingProvider& provider);
FilterReport FilterCorpus(const std::vector<TokenizedDoc>& docs, const FilterConfig& config,
                          const EmbeddingProvider& provider, unsigned threads = 0);

nlohmann::ordered_json ToJson(const FilterResult& r);
nlohmann::ordered_json SummaryJson(const FilterReport& report, const FilterConfig& config);

}  // namespace debtscope
