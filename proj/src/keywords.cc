#include "debtscope/keywords.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "debtscope/error.h"
#include "debtscope/util.h"

namespace debtscope {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool HasVowel(std::string_view tok) {
  return tok.find_first_of("aeiouy") != std::string_view::npos;
}

void ValidateCommon(int n, int top_k) {
  if (n < 1 || n > 3) throw ArgumentError("n-gram size must be 1, 2 or 3 (got " + std::to_string(n) + ")");
  if (top_k <= 0) throw ArgumentError("top_k must be positive (got " + std::to_string(top_k) + ")");
}

KeywordSet Finish(KeywordMethod method, int n, int top_k, std::vector<KeywordEntry> entries,
                  const std::vector<TokenizedDoc>& docs, const std::vector<std::string>& blacklist) {
  entries = PostFilter(std::move(entries), blacklist);
  std::stable_sort(entries.begin(), entries.end(), [](const KeywordEntry& a, const KeywordEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ngram < b.ngram;
  });
  if (entries.size() > static_cast<size_t>(top_k)) entries.resize(static_cast<size_t>(top_k));
  KeywordSet set;
  set.method = method;
  set.n = n;
  set.top_k = top_k;
  set.entries = std::move(entries);
  set.source_corpus_hash = CorpusHash(docs);
  set.blacklist_hash = BlacklistHash(blacklist);
  return set;
}

// Max cosine between each document's own n-grams and the document vector,
// keyed by phrase. Per-document partials are merged in document order.
std::map<std::string, double> EmbedSimScores(const std::vector<TokenizedDoc>& docs,
                                             const EmbeddingProvider& provider, int n, unsigned threads) {
  std::vector<std::map<std::string, double>> partial(docs.size());
  ParallelFor(
      docs.size(),
      [&](size_t i) {
        const auto& doc = docs[i];
        if (doc.tokens.empty()) return;
        std::vector<std::string> phrases;
        std::unordered_set<std::string> seen;
        for (auto& g : NGrams(doc, n)) {
          if (seen.insert(g.text).second) phrases.push_back(std::move(g.text));
        }
        if (phrases.empty()) return;
        std::vector<std::string> texts;
        texts.reserve(phrases.size() + 1);
        texts.push_back(JoinTokens(doc.tokens, 0, doc.tokens.size()));
        texts.insert(texts.end(), phrases.begin(), phrases.end());
        auto vecs = provider.EmbedBatch(texts);
        for (size_t p = 0; p < phrases.size(); ++p) {
          partial[i][phrases[p]] = Cosine(vecs[p + 1], vecs[0]);
        }
      },
      threads);
  std::map<std::string, double> merged;
  for (const auto& part : partial) {
    for (const auto& [phrase, score] : part) {
      auto [it, inserted] = merged.emplace(phrase, score);
      if (!inserted) it->second = std::max(it->second, score);
    }
  }
  return merged;
}

}  // namespace

std::string_view ToString(KeywordMethod m) {
  switch (m) {
    case KeywordMethod::kTfidf: return "tfidf";
    case KeywordMethod::kEmbedSim: return "embedsim";
    case KeywordMethod::kSeeded: return "seeded";
  }
  return "?";
}

KeywordMethod ParseKeywordMethod(std::string_view s) {
  if (s == "tfidf") return KeywordMethod::kTfidf;
  if (s == "embedsim") return KeywordMethod::kEmbedSim;
  if (s == "seeded") return KeywordMethod::kSeeded;
  throw ArgumentError("unknown keyword method '" + std::string(s) + "' (expected tfidf, embedsim or seeded)");
}

const std::vector<std::string>& DefaultSeedKeywords() {
  static const std::vector<std::string> seeds = {"move", "refactor", "remove", "dependency", "couple", "update"};
  return seeds;
}

std::vector<KeywordEntry> PostFilter(std::vector<KeywordEntry> entries, const std::vector<std::string>& blacklist) {
  std::unordered_set<std::string> banned;
  for (const auto& b : blacklist) banned.insert(ToLower(NormalizeWhitespace(b)));
  std::vector<KeywordEntry> kept;
  kept.reserve(entries.size());
  for (auto& e : entries) {
    if (banned.contains(e.ngram)) continue;
    bool drop = false;
    for (const auto& tok : SplitString(e.ngram, ' ')) {
      if (tok.size() < 3 || tok.size() > 25 || !HasVowel(tok) || banned.contains(tok)) {
        drop = true;
        break;
      }
    }
    if (!drop) kept.push_back(std::move(e));
  }
  return kept;
}

KeywordSet ExtractTfidf(const std::vector<TokenizedDoc>& docs, int n, int top_k,
                        const std::vector<std::string>& blacklist) {
  ValidateCommon(n, top_k);
  if (docs.empty()) throw ArgumentError("tf-idf extraction needs a non-empty corpus");
  std::unordered_map<std::string, std::pair<double, size_t>> stats;  // tf sum, df
  for (const auto& doc : docs) {
    std::unordered_set<std::string> in_doc;
    for (auto& g : NGrams(doc, n)) {
      auto& s = stats[g.text];
      s.first += 1.0;
      if (in_doc.insert(g.text).second) ++s.second;
    }
  }
  const double total = static_cast<double>(docs.size());
  std::vector<KeywordEntry> entries;
  entries.reserve(stats.size());
  for (const auto& [phrase, s] : stats) {
    double idf = std::log((1.0 + total) / (1.0 + static_cast<double>(s.second))) + 1.0;
    entries.push_back({phrase, n, s.first * idf});
  }
  return Finish(KeywordMethod::kTfidf, n, top_k, std::move(entries), docs, blacklist);
}

KeywordSet ExtractEmbedSim(const std::vector<TokenizedDoc>& docs, const EmbeddingProvider& provider, int n,
                           int top_k, const std::vector<std::string>& blacklist, unsigned threads) {
  ValidateCommon(n, top_k);
  std::vector<KeywordEntry> entries;
  for (const auto& [phrase, score] : EmbedSimScores(docs, provider, n, threads)) {
    entries.push_back({phrase, n, score});
  }
  return Finish(KeywordMethod::kEmbedSim, n, top_k, std::move(entries), docs, blacklist);
}

KeywordSet ExtractSeeded(const std::vector<TokenizedDoc>& docs, const EmbeddingProvider& provider,
                         const std::vector<std::string>& seeds, int n, int top_k, double blend,
                         const std::vector<std::string>& blacklist, unsigned threads) {
  ValidateCommon(n, top_k);
  if (seeds.empty()) throw ArgumentError("seed-guided extraction needs at least one seed keyword");
  if (!(blend >= 0.0 && blend <= 1.0)) throw ArgumentError("blend must lie in [0, 1]");
  auto base = EmbedSimScores(docs, provider, n, threads);
  auto seed_vecs = provider.EmbedBatch(seeds);

  std::vector<std::string> phrases;
  phrases.reserve(base.size());
  for (const auto& kv : base) phrases.push_back(kv.first);
  std::vector<double> seed_score(phrases.size(), 0.0);
  if (blend > 0.0) {
    ParallelFor(
        phrases.size(),
        [&](size_t i) {
          auto v = provider.Embed(phrases[i]);
          double best = -1.0;
          for (const auto& s : seed_vecs) best = std::max(best, Cosine(v, s));
          seed_score[i] = best;
        },
        threads);
  }
  std::vector<KeywordEntry> entries;
  entries.reserve(phrases.size());
  for (size_t i = 0; i < phrases.size(); ++i) {
    double embedsim = base[phrases[i]];
    double score = blend == 0.0 ? embedsim : (1.0 - blend) * embedsim + blend * seed_score[i];
    entries.push_back({phrases[i], n, score});
  }
  return Finish(KeywordMethod::kSeeded, n, top_k, std::move(entries), docs, blacklist);
}

std::string CorpusHash(const std::vector<TokenizedDoc>& docs) {
  std::string buf;
  for (const auto& d : docs) {
    buf += d.doc_id;
    buf.push_back('\t');
    buf += JoinTokens(d.tokens, 0, d.tokens.size());
    buf.push_back('\n');
  }
  return Sha256Hex(buf);
}

std::string BlacklistHash(const std::vector<std::string>& blacklist) {
  std::vector<std::string> sorted;
  for (const auto& b : blacklist) sorted.push_back(ToLower(NormalizeWhitespace(b)));
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::string buf;
  for (const auto& b : sorted) buf += b + "\n";
  return Sha256Hex(buf);
}

ordered_json ToJson(const KeywordSet& set) {
  ordered_json j;
  j["method"] = ToString(set.method);
  j["n"] = set.n;
  ordered_json entries = ordered_json::array();
  for (const auto& e : set.entries) {
    ordered_json item;
    item["ngram"] = e.ngram;
    item["score"] = e.score;
    entries.push_back(std::move(item));
  }
  j["entries"] = std::move(entries);
  j["blacklist_hash"] = set.blacklist_hash;
  j["top_k"] = set.top_k;
  j["source_corpus_hash"] = set.source_corpus_hash;
  return j;
}

KeywordSet KeywordSetFromJson(const json& j) {
  KeywordSet set;
  set.method = ParseKeywordMethod(j.at("method").get<std::string>());
  set.n = j.at("n").get<int>();
  set.top_k = j.value("top_k", kDefaultTopK);
  set.blacklist_hash = j.value("blacklist_hash", "");
  set.source_corpus_hash = j.value("source_corpus_hash", "");
  for (const auto& e : j.at("entries")) {
    set.entries.push_back({e.at("ngram").get<std::string>(), set.n, e.at("score").get<double>()});
  }
  return set;
}

std::vector<std::string> LoadKeywordPhrases(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(path + " is not valid JSON");
  std::set<std::string> phrases;
  auto absorb = [&](const json& set_json) {
    for (const auto& e : KeywordSetFromJson(set_json).entries) phrases.insert(e.ngram);
  };
  try {
    if (j.is_array()) {
      for (const auto& s : j) absorb(s);
    } else {
      absorb(j);
    }
  } catch (const json::exception& e) {
    throw Error(path + ": malformed keyword set: " + e.what());
  }
  return {phrases.begin(), phrases.end()};
}

}  // namespace debtscope
