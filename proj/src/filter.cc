#include "debtscope/filter.h"

#include <algorithm>

#include "debtscope/error.h"
#include "debtscope/util.h"

namespace debtscope {

using nlohmann::ordered_json;

KeywordFilter::KeywordFilter(FilterConfig config, const EmbeddingProvider& provider)
    : config_(std::move(config)), provider_(provider) {
  if (!(config_.threshold > 0.0 && config_.threshold <= 1.0)) {
    throw ArgumentError("filter threshold must lie in (0, 1]");
  }
  if (config_.keywords.empty()) throw ArgumentError("filter needs at least one keyword");
  if (config_.ngram_sizes.empty()) throw ArgumentError("filter needs at least one n-gram size");
  for (int n : config_.ngram_sizes) {
    if (n < 1 || n > 3) throw ArgumentError("n-gram size must be 1, 2 or 3");
  }
  std::sort(config_.ngram_sizes.begin(), config_.ngram_sizes.end());
  config_.ngram_sizes.erase(std::unique(config_.ngram_sizes.begin(), config_.ngram_sizes.end()),
                            config_.ngram_sizes.end());
  std::sort(config_.keywords.begin(), config_.keywords.end());
  config_.keywords.erase(std::unique(config_.keywords.begin(), config_.keywords.end()), config_.keywords.end());
  keyword_vectors_ = provider_.EmbedBatch(config_.keywords);
}

FilterResult KeywordFilter::Apply(const TokenizedDoc& doc) const {
  FilterResult result;
  result.doc_id = doc.doc_id;
  const size_t len = doc.tokens.size();
  bool have_best = false;
  // Start-major order realizes the tie-break with a strict comparison.
  for (size_t start = 0; start < len; ++start) {
    for (int n : config_.ngram_sizes) {
      const size_t un = static_cast<size_t>(n);
      if (start + un > len) break;
      std::string text = JoinTokens(doc.tokens, start, start + un);
      EmbeddingVector window = provider_.Embed(text);
      for (size_t k = 0; k < keyword_vectors_.size(); ++k) {
        double score = Cosine(window, keyword_vectors_[k]);
        if (!have_best || score > result.best_score) {
          have_best = true;
          result.best_score = score;
          result.best_ngram = NGram{text, n, doc.doc_id, start};
          result.best_keyword = config_.keywords[k];
        }
      }
    }
  }
  result.matched = have_best && result.best_score > config_.threshold;
  return result;
}

FilterReport KeywordFilter::ApplyAll(const std::vector<TokenizedDoc>& docs, unsigned threads) const {
  FilterReport report;
  report.results.resize(docs.size());
  ParallelFor(docs.size(), [&](size_t i) { report.results[i] = Apply(docs[i]); }, threads);
  for (const auto& r : report.results) {
    if (r.matched) {
      ++report.matched;
    } else {
      ++report.unmatched;
    }
  }
  return report;
}

FilterResult FilterDoc(const TokenizedDoc& doc, const FilterConfig& config, const EmbeddingProvider& provider) {
  return KeywordFilter(config, provider).Apply(doc);
}

FilterReport FilterCorpus(const std::vector<TokenizedDoc>& docs, const FilterConfig& config,
                          const EmbeddingProvider& provider, unsigned threads) {
  return KeywordFilter(config, provider).ApplyAll(docs, threads);
}

ordered_json ToJson(const FilterResult& r) {
  ordered_json j;
  j["doc_id"] = r.doc_id;
  j["matched"] = r.matched;
  j["best_ngram"] = r.best_ngram ? ordered_json(r.best_ngram->text) : ordered_json(nullptr);
  j["best_keyword"] = r.best_keyword ? ordered_json(*r.best_keyword) : ordered_json(nullptr);
  j["best_score"] = r.best_score;
  return j;
}

ordered_json SummaryJson(const FilterReport& report, const FilterConfig& config) {
  ordered_json j;
  j["documents"] = report.results.size();
  j["matched"] = report.matched;
  j["unmatched"] = report.unmatched;
  j["threshold"] = config.threshold;
  j["ngram_sizes"] = config.ngram_sizes;
  j["keywords"] = config.keywords.size();
  return j;
}

}  // namespace debtscope
