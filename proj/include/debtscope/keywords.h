#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "debtscope/embed.h"
#include "debtscope/textprep.h"
#include "json.hpp"

namespace debtscope {

enum class KeywordMethod { kTfidf, kEmbedSim, kSeeded };

std::string_view ToString(KeywordMethod m);
KeywordMethod ParseKeywordMethod(std::string_view s);

struct KeywordEntry {
  std::string ngram;
  int n = 1;
  double score = 0.0;

  bool operator==(const KeywordEntry&) const = default;
};

struct KeywordSet {
  KeywordMethod method = KeywordMethod::kTfidf;
  int n = 1;
  int top_k = 15;
  std::vector<KeywordEntry> entries;  // score descending, ties by text
  std::string source_corpus_hash;
  std::string blacklist_hash;
};

inline constexpr int kDefaultTopK = 15;
inline constexpr double kDefaultSeedBlend = 0.5;

// Default seed terms for seed-guided extraction.
const std::vector<std::string>& DefaultSeedKeywords();

// Drops entries with any token shorter than three characters, entries whose
// text or any token is blacklisted, and identifier-like tokens (no vowel, or
// longer than 25 characters).
std::vector<KeywordEntry> PostFilter(std::vector<KeywordEntry> entries, const std::vector<std::string>& blacklist);

// Frequency-based: score(g) = sum_d tf(g, d) * idf(g),
// idf(g) = ln((1 + N) / (1 + df(g))) + 1.
KeywordSet ExtractTfidf(const std::vector<TokenizedDoc>& docs, int n, int top_k,
                        const std::vector<std::string>& blacklist = {});

// Embedding similarity: each document's own n-grams are scored by cosine
// against the document embedding; a phrase's corpus score is its maximum.
KeywordSet ExtractEmbedSim(const std::vector<TokenizedDoc>& docs, const EmbeddingProvider& provider, int n,
                           int top_k, const std::vector<std::string>& blacklist = {}, unsigned threads = 0);

// Seed-guided: (1 - blend) * embedsim score + blend * max cosine to a seed.
KeywordSet ExtractSeeded(const std::vector<TokenizedDoc>& docs, const EmbeddingProvider& provider,
                         const std::vector<std::string>& seeds, int n, int top_k, double blend,
                         const std::vector<std::string>& blacklist = {}, unsigned threads = 0);

std::string CorpusHash(const std::vector<TokenizedDoc>& docs);
std::string BlacklistHash(const std::vector<std::string>& blacklist);

nlohmann::ordered_json ToJson(const KeywordSet& set);
KeywordSet KeywordSetFromJson(const nlohmann::json& j);

// Reads a keyword file written by the CLI: a JSON array of keyword sets (or
// a single set). Returns the distinct phrases across all sets, sorted.
std::vector<std::string> LoadKeywordPhrases(const std::string& path);

}  // namespace debtscope
