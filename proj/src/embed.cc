#include "debtscope/embed.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "debtscope/error.h"
#include "debtscope/util.h"
#include "httplib.h"

namespace debtscope {

using nlohmann::json;
using nlohmann::ordered_json;

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  double sum = 0.0;
  for (size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] != 0.0) {
      nonzeros_.push_back(static_cast<uint32_t>(i));
      sum += values_[i] * values_[i];
    }
  }
  norm_ = std::sqrt(sum);
}

double Cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw ArgumentError("cosine: dimension mismatch (" + std::to_string(a.dimension()) + " vs " +
                        std::to_string(b.dimension()) + ")");
  }
  if (a.norm() == 0.0 || b.norm() == 0.0) return 0.0;
  // Walking the non-zeros of either operand in index order gives the same
  // sum as the dense loop; the skipped terms are exact zeros.
  const auto& av = a.values();
  const auto& bv = b.values();
  double dot = 0.0;
  const auto& idx = a.nonzeros().size() <= b.nonzeros().size() ? a.nonzeros() : b.nonzeros();
  for (uint32_t i : idx) dot += av[i] * bv[i];
  double c = dot / (a.norm() * b.norm());
  return std::clamp(c, -1.0, 1.0);
}

std::string_view ToString(ProviderKind k) {
  switch (k) {
    case ProviderKind::kHashedBow: return "hashed-bow";
    case ProviderKind::kTfidfVector: return "tfidf-vector";
    case ProviderKind::kExternal: return "external";
  }
  return "?";
}

std::vector<EmbeddingVector> EmbeddingProvider::EmbedBatch(const std::vector<std::string>& texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(Embed(t));
  return out;
}

EmbeddingVector EmbeddingProvider::EmbedTokens(const std::vector<std::string>& tokens) const {
  return Embed(JoinTokens(tokens, 0, tokens.size()));
}

namespace {

ordered_json PrepToJson(const PrepConfig& p) {
  ordered_json j;
  j["stem"] = p.stem;
  j["remove_stopwords"] = p.remove_stopwords;
  j["min_token_len"] = p.min_token_len;
  j["stopwords"] = kStopWordListVersion;
  return j;
}

PrepConfig PrepFromJson(const json& j) {
  PrepConfig p;
  p.stem = j.value("stem", true);
  p.remove_stopwords = j.value("remove_stopwords", true);
  p.min_token_len = j.value("min_token_len", 1);
  return p;
}

void NormalizeInPlace(std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  if (sum == 0.0) return;
  double norm = std::sqrt(sum);
  for (double& x : v) x /= norm;
}

}  // namespace

// ---- hashed bag of words ----

HashedBowProvider::HashedBowProvider(size_t dimension, uint64_t seed, PrepConfig prep)
    : dimension_(dimension), seed_(seed), prep_(prep) {
  if (dimension_ == 0) throw ArgumentError("hashed-bow dimension must be positive");
}

EmbeddingVector HashedBowProvider::Embed(std::string_view text) const {
  return EmbedTokens(Tokenize(text, prep_));
}

EmbeddingVector HashedBowProvider::EmbedTokens(const std::vector<std::string>& tokens) const {
  std::vector<double> values(dimension_, 0.0);
  for (const auto& tok : tokens) {
    uint64_t h = HashString(tok, seed_);
    size_t bucket = static_cast<size_t>(h % dimension_);
    values[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  NormalizeInPlace(values);
  return EmbeddingVector(std::move(values));
}

ordered_json HashedBowProvider::Describe() const {
  ordered_json j;
  j["kind"] = ToString(kind());
  j["dimension"] = dimension_;
  j["seed"] = seed_;
  j["prep"] = PrepToJson(prep_);
  return j;
}

// ---- tf-idf vectors ----

TfidfVectorProvider::TfidfVectorProvider(const std::vector<TokenizedDoc>& docs, PrepConfig prep)
    : prep_(prep) {
  std::map<std::string, size_t> df;
  for (const auto& d : docs) {
    std::vector<std::string> uniq = d.tokens;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (auto& t : uniq) ++df[t];
  }
  const double n = static_cast<double>(docs.size());
  vocabulary_.reserve(df.size());
  idf_.reserve(df.size());
  for (const auto& [term, count] : df) {
    vocabulary_.push_back(term);
    idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
}

TfidfVectorProvider::TfidfVectorProvider(std::vector<std::string> vocabulary, std::vector<double> idf,
                                         PrepConfig prep)
    : vocabulary_(std::move(vocabulary)), idf_(std::move(idf)), prep_(prep) {
  if (vocabulary_.size() != idf_.size()) throw ArgumentError("tfidf vocabulary/idf size mismatch");
  if (!std::is_sorted(vocabulary_.begin(), vocabulary_.end())) {
    throw ArgumentError("tfidf vocabulary must be sorted");
  }
}

long TfidfVectorProvider::IndexOf(std::string_view token) const {
  auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), token);
  if (it == vocabulary_.end() || *it != token) return -1;
  return static_cast<long>(it - vocabulary_.begin());
}

EmbeddingVector TfidfVectorProvider::Embed(std::string_view text) const {
  return EmbedTokens(Tokenize(text, prep_));
}

EmbeddingVector TfidfVectorProvider::EmbedTokens(const std::vector<std::string>& tokens) const {
  std::vector<double> values(vocabulary_.size(), 0.0);
  for (const auto& t : tokens) {
    long idx = IndexOf(t);
    if (idx >= 0) values[static_cast<size_t>(idx)] += 1.0;
  }
  for (size_t i = 0; i < values.size(); ++i) values[i] *= idf_[i];
  NormalizeInPlace(values);
  return EmbeddingVector(std::move(values));
}

ordered_json TfidfVectorProvider::Describe() const {
  ordered_json j;
  j["kind"] = ToString(kind());
  j["dimension"] = vocabulary_.size();
  j["prep"] = PrepToJson(prep_);
  j["vocabulary"] = vocabulary_;
  j["idf"] = idf_;
  return j;
}

// ---- external ----

ExternalProvider::ExternalProvider(std::string host, int port, double timeout_seconds)
    : host_(std::move(host)), port_(port), timeout_seconds_(timeout_seconds) {
  httplib::Client cli(host_, port_);
  cli.set_connection_timeout(std::chrono::duration<double>(timeout_seconds_));
  cli.set_read_timeout(std::chrono::duration<double>(timeout_seconds_));
  auto res = cli.Get("/meta");
  if (!res) throw ProviderError("embedding provider " + host_ + ":" + std::to_string(port_) + " unreachable");
  if (res->status != 200) throw ProviderError("GET /meta returned HTTP " + std::to_string(res->status));
  json meta = json::parse(res->body, nullptr, false);
  if (meta.is_discarded() || !meta.contains("dimension") || !meta["dimension"].is_number_unsigned()) {
    throw ProviderError("GET /meta did not return a dimension");
  }
  dimension_ = meta["dimension"].get<size_t>();
  if (dimension_ == 0) throw ProviderError("provider declared dimension 0");
}

EmbeddingVector ExternalProvider::Embed(std::string_view text) const {
  return EmbedBatch({std::string(text)}).front();
}

std::vector<EmbeddingVector> ExternalProvider::EmbedBatch(const std::vector<std::string>& texts) const {
  if (texts.empty()) return {};
  httplib::Client cli(host_, port_);
  cli.set_connection_timeout(std::chrono::duration<double>(timeout_seconds_));
  cli.set_read_timeout(std::chrono::duration<double>(timeout_seconds_));
  json body = {{"texts", texts}};
  auto res = cli.Post("/embed", body.dump(), "application/json");
  if (!res) throw ProviderError("embedding provider " + host_ + ":" + std::to_string(port_) + " unreachable");
  if (res->status != 200) throw ProviderError("POST /embed returned HTTP " + std::to_string(res->status));
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("vectors") || !reply["vectors"].is_array()) {
    throw ProviderError("POST /embed reply has no vectors array");
  }
  const auto& vectors = reply["vectors"];
  if (vectors.size() != texts.size()) {
    throw ProviderError("POST /embed returned " + std::to_string(vectors.size()) + " vectors for " +
                        std::to_string(texts.size()) + " texts");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    std::vector<double> values;
    try {
      values = v.get<std::vector<double>>();
    } catch (const json::exception&) {
      throw ProviderError("POST /embed returned a non-numeric vector");
    }
    if (values.size() != dimension_) {
      throw ProviderError("POST /embed vector has dimension " + std::to_string(values.size()) +
                          ", expected " + std::to_string(dimension_));
    }
    out.emplace_back(std::move(values));
  }
  return out;
}

ordered_json ExternalProvider::Describe() const {
  ordered_json j;
  j["kind"] = ToString(kind());
  j["dimension"] = dimension_;
  j["host"] = host_;
  j["port"] = port_;
  return j;
}

std::unique_ptr<EmbeddingProvider> ProviderFromJson(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  PrepConfig prep = j.contains("prep") ? PrepFromJson(j["prep"]) : PrepConfig{};
  if (kind == "hashed-bow") {
    return std::make_unique<HashedBowProvider>(j.at("dimension").get<size_t>(), j.value("seed", uint64_t{0}),
                                               prep);
  }
  if (kind == "tfidf-vector") {
    return std::make_unique<TfidfVectorProvider>(j.at("vocabulary").get<std::vector<std::string>>(),
                                                 j.at("idf").get<std::vector<double>>(), prep);
  }
  if (kind == "external") {
    return std::make_unique<ExternalProvider>(j.at("host").get<std::string>(), j.at("port").get<int>());
  }
  throw ArgumentError("unknown provider kind '" + kind + "'");
}

}  // namespace debtscope
