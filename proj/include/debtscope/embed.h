#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "debtscope/textprep.h"
#include "json.hpp"

namespace debtscope {

// Dense vector with its Euclidean norm cached at construction.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  size_t dimension() const { return values_.size(); }
  double norm() const { return norm_; }
  // Indices of non-zero entries, ascending.
  const std::vector<uint32_t>& nonzeros() const { return nonzeros_; }

 private:
  std::vector<double> values_;
  std::vector<uint32_t> nonzeros_;
  double norm_ = 0.0;
};

// Cosine similarity, clamped to [-1, 1]. Returns 0 when either norm is 0.
// Throws ArgumentError on dimension mismatch.
double Cosine(const EmbeddingVector& a, const EmbeddingVector& b);

enum class ProviderKind { kHashedBow, kTfidfVector, kExternal };

std::string_view ToString(ProviderKind k);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual ProviderKind kind() const = 0;
  virtual size_t dimension() const = 0;
  virtual EmbeddingVector Embed(std::string_view text) const = 0;
  // Default implementation embeds one text at a time.
  virtual std::vector<EmbeddingVector> EmbedBatch(const std::vector<std::string>& texts) const;
  // Embeds tokens that are already preprocessed. Default joins and re-embeds.
  virtual EmbeddingVector EmbedTokens(const std::vector<std::string>& tokens) const;
  // Configuration snapshot for manifests and model files.
  virtual nlohmann::ordered_json Describe() const = 0;
};

// Signed feature hashing of preprocessed tokens into `dimension` buckets,
// L2-normalized.
class HashedBowProvider final : public EmbeddingProvider {
 public:
  static constexpr size_t kDefaultDimension = 4096;

  explicit HashedBowProvider(size_t dimension = kDefaultDimension, uint64_t seed = 0,
                             PrepConfig prep = PrepConfig{});

  ProviderKind kind() const override { return ProviderKind::kHashedBow; }
  size_t dimension() const override { return dimension_; }
  EmbeddingVector Embed(std::string_view text) const override;
  EmbeddingVector EmbedTokens(const std::vector<std::string>& tokens) const override;
  nlohmann::ordered_json Describe() const override;

  uint64_t seed() const { return seed_; }
  const PrepConfig& prep() const { return prep_; }

 private:
  size_t dimension_;
  uint64_t seed_;
  PrepConfig prep_;
};

// TF-IDF weights over a vocabulary fitted on a document collection.
// idf(t) = ln((1 + N) / (1 + df(t))) + 1; vectors are L2-normalized.
class TfidfVectorProvider final : public EmbeddingProvider {
 public:
  TfidfVectorProvider(const std::vector<TokenizedDoc>& docs, PrepConfig prep = PrepConfig{});
  TfidfVectorProvider(std::vector<std::string> vocabulary, std::vector<double> idf, PrepConfig prep);

  ProviderKind kind() const override { return ProviderKind::kTfidfVector; }
  size_t dimension() const override { return vocabulary_.size(); }
  EmbeddingVector Embed(std::string_view text) const override;
  EmbeddingVector EmbedTokens(const std::vector<std::string>& tokens) const override;
  nlohmann::ordered_json Describe() const override;

  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& idf() const { return idf_; }
  // Vocabulary index of `token`, or -1.
  long IndexOf(std::string_view token) const;

 private:
  std::vector<std::string> vocabulary_;  // sorted
  std::vector<double> idf_;
  PrepConfig prep_;
};

// Client for a remote embedding service:
//   GET  /meta  -> {"dimension": d}
//   POST /embed {"texts": [...]} -> {"vectors": [[...], ...]}
// Any transport or protocol failure throws ProviderError.
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExternalProvider final : public EmbeddingProvider {
 public:
  ExternalProvider(std::string host, int port, double timeout_seconds = 30.0);

  ProviderKind kind() const override { return ProviderKind::kExternal; }
  size_t dimension() const override { return dimension_; }
  EmbeddingVector Embed(std::string_view text) const override;
  std::vector<EmbeddingVector> EmbedBatch(const std::vector<std::string>& texts) const override;
  nlohmann::ordered_json Describe() const override;

 private:
  std::string host_;
  int port_;
  double timeout_seconds_;
  size_t dimension_ = 0;
};

// Builds a provider from a Describe() snapshot. tfidf-vector snapshots must
// carry their vocabulary.
std::unique_ptr<EmbeddingProvider> ProviderFromJson(const nlohmann::json& j);

}  // namespace debtscope
