#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "debtscope/embed.h"
#include "debtscope/textprep.h"
#include "json.hpp"

namespace debtscope {

// Per-class probabilities; entries in [0, 1] summing to 1.
struct ProbVector {
  std::vector<double> probs;

  size_t Argmax() const;
  double operator[](size_t i) const { return probs[i]; }
  size_t size() const { return probs.size(); }
};

// Anything that maps a token sequence to class probabilities. Explanations
// and query strategies only see this interface.
class TextModel {
 public:
  virtual ~TextModel() = default;
  virtual size_t num_classes() const = 0;
  virtual ProbVector PredictTokens(const std::vector<std::string>& tokens) const = 0;
  virtual std::vector<std::string> class_names() const;

  ProbVector PredictProba(const TokenizedDoc& doc) const { return PredictTokens(doc.tokens); }
};

struct SparseVector {
  std::vector<uint32_t> index;
  std::vector<double> value;
  size_t dimension = 0;
};

SparseVector ToSparse(const EmbeddingVector& v);

enum class ClassifierKind { kNaiveBayes, kLogistic, kExternal };
enum class FeatureKind { kTfidfVector, kEmbedding };

std::string_view ToString(ClassifierKind k);
std::string_view ToString(FeatureKind k);
ClassifierKind ParseClassifierKind(std::string_view s);
FeatureKind ParseFeatureKind(std::string_view s);

struct Hyperparams {
  double l2 = 0.1;
  int epochs = 200;
  double lr = 1.0;  // initial step; backtracking adjusts it
  double nb_alpha = 1.0;
  bool class_weights = false;  // inverse-frequency weighting of the logistic loss
};

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::kLogistic;
  FeatureKind features = FeatureKind::kTfidfVector;
  Hyperparams hyperparams;
  uint64_t rng_seed = 0;
  // kExternal only.
  std::string external_host = "127.0.0.1";
  int external_port = 0;
};

nlohmann::ordered_json ToJson(const ClassifierSpec& spec);
ClassifierSpec ClassifierSpecFromJson(const nlohmann::json& j);

// Maps token sequences to feature vectors. The tf-idf space also exposes raw
// term counts over its vocabulary (used by naive Bayes).
class FeatureSpace {
 public:
  static std::shared_ptr<const FeatureSpace> FitTfidf(const std::vector<TokenizedDoc>& docs,
                                                      PrepConfig prep = PrepConfig{});
  static std::shared_ptr<const FeatureSpace> FromProvider(std::shared_ptr<const EmbeddingProvider> provider);
  static std::shared_ptr<const FeatureSpace> FromJson(const nlohmann::json& j);

  FeatureKind kind() const { return kind_; }
  size_t dimension() const { return provider_->dimension(); }
  SparseVector Weighted(const std::vector<std::string>& tokens) const;
  SparseVector Counts(const std::vector<std::string>& tokens) const;
  nlohmann::ordered_json ToJson() const;

 private:
  FeatureKind kind_ = FeatureKind::kTfidfVector;
  std::shared_ptr<const EmbeddingProvider> provider_;
  const TfidfVectorProvider* tfidf_ = nullptr;
};

class Classifier : public TextModel {
 public:
  virtual ClassifierKind kind() const = 0;
  virtual nlohmann::ordered_json ToJson() const = 0;
};

struct TrainingSet {
  std::span<const TokenizedDoc> docs;
  std::span<const int> labels;  // class indices in [0, num_classes)
  size_t num_classes = 2;
};

// Trains from scratch. Throws ArgumentError when a class has no examples.
// `features` defaults to a tf-idf space fitted on the training documents
// (or a 4096-d hashed space for embedding features). `warm_start`, when it
// is a compatible logistic model, seeds the weights instead of zeros.
std::unique_ptr<Classifier> Fit(const ClassifierSpec& spec, const TrainingSet& data,
                                std::shared_ptr<const FeatureSpace> features = nullptr,
                                const Classifier* warm_start = nullptr);

std::unique_ptr<Classifier> ClassifierFromJson(const nlohmann::json& j);

// ---- logistic regression internals, exposed for verification ----

struct LogisticParams {
  size_t num_classes = 2;
  size_t dimension = 0;
  std::vector<double> weights;  // row-major [class][feature]
  std::vector<double> bias;     // [class]
};

// Mean weighted cross-entropy plus (l2 / (2N)) * ||W||^2; bias unpenalized.
double LogisticLoss(const LogisticParams& p, std::span<const SparseVector> x, std::span<const int> y,
                    std::span<const double> sample_weight, double l2);

// Gradient of LogisticLoss, laid out as weights followed by bias.
std::vector<double> LogisticGradient(const LogisticParams& p, std::span<const SparseVector> x,
                                     std::span<const int> y, std::span<const double> sample_weight, double l2);

std::vector<double> Softmax(std::span<const double> logits);

// ---- external adapter ----
//   POST /fit {"num_classes", "examples": [{"tokens": [...], "label": i}]} -> {"model_id"}
//   POST /predict_proba {"model_id", "docs": [[...tokens...], ...]} -> {"probs": [[...], ...]}

}  // namespace debtscope
