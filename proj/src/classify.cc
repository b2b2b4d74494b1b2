#include "debtscope/classify.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "debtscope/error.h"
#include "httplib.h"

namespace debtscope {

using nlohmann::json;
using nlohmann::ordered_json;

size_t ProbVector::Argmax() const {
  size_t best = 0;
  for (size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

std::vector<std::string> TextModel::class_names() const {
  const size_t k = num_classes();
  if (k == 2) return {"NonATD", "ATD"};
  std::vector<std::string> names;
  for (size_t i = 0; i < k; ++i) names.push_back("class" + std::to_string(i));
  return names;
}

SparseVector ToSparse(const EmbeddingVector& v) {
  SparseVector s;
  s.dimension = v.dimension();
  s.index = v.nonzeros();
  s.value.reserve(s.index.size());
  for (uint32_t i : s.index) s.value.push_back(v.values()[i]);
  return s;
}

std::string_view ToString(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::kNaiveBayes: return "naive-bayes";
    case ClassifierKind::kLogistic: return "logistic";
    case ClassifierKind::kExternal: return "external";
  }
  return "?";
}

std::string_view ToString(FeatureKind k) {
  return k == FeatureKind::kTfidfVector ? "tfidf-vector" : "embedding";
}

ClassifierKind ParseClassifierKind(std::string_view s) {
  if (s == "naive-bayes") return ClassifierKind::kNaiveBayes;
  if (s == "logistic") return ClassifierKind::kLogistic;
  if (s == "external") return ClassifierKind::kExternal;
  throw ArgumentError("unknown classifier '" + std::string(s) + "' (expected naive-bayes, logistic or external)");
}

FeatureKind ParseFeatureKind(std::string_view s) {
  if (s == "tfidf-vector") return FeatureKind::kTfidfVector;
  if (s == "embedding") return FeatureKind::kEmbedding;
  throw ArgumentError("unknown feature kind '" + std::string(s) + "' (expected tfidf-vector or embedding)");
}

ordered_json ToJson(const ClassifierSpec& spec) {
  ordered_json j;
  j["kind"] = ToString(spec.kind);
  j["features"] = ToString(spec.features);
  j["hyperparams"] = {{"l2", spec.hyperparams.l2},
                      {"epochs", spec.hyperparams.epochs},
                      {"lr", spec.hyperparams.lr},
                      {"nb_alpha", spec.hyperparams.nb_alpha},
                      {"class_weights", spec.hyperparams.class_weights}};
  j["rng_seed"] = spec.rng_seed;
  if (spec.kind == ClassifierKind::kExternal) {
    j["external_host"] = spec.external_host;
    j["external_port"] = spec.external_port;
  }
  return j;
}

ClassifierSpec ClassifierSpecFromJson(const json& j) {
  ClassifierSpec spec;
  if (j.contains("kind")) spec.kind = ParseClassifierKind(j["kind"].get<std::string>());
  if (j.contains("features")) spec.features = ParseFeatureKind(j["features"].get<std::string>());
  if (j.contains("hyperparams")) {
    const auto& h = j["hyperparams"];
    spec.hyperparams.l2 = h.value("l2", spec.hyperparams.l2);
    spec.hyperparams.epochs = h.value("epochs", spec.hyperparams.epochs);
    spec.hyperparams.lr = h.value("lr", spec.hyperparams.lr);
    spec.hyperparams.nb_alpha = h.value("nb_alpha", spec.hyperparams.nb_alpha);
    spec.hyperparams.class_weights = h.value("class_weights", spec.hyperparams.class_weights);
  }
  spec.rng_seed = j.value("rng_seed", uint64_t{0});
  spec.external_host = j.value("external_host", spec.external_host);
  spec.external_port = j.value("external_port", spec.external_port);
  if (spec.hyperparams.l2 < 0) throw ArgumentError("l2 must be >= 0");
  if (spec.hyperparams.epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (!(spec.hyperparams.lr > 0)) throw ArgumentError("lr must be > 0");
  if (spec.hyperparams.nb_alpha < 0) throw ArgumentError("nb_alpha must be >= 0");
  return spec;
}

// ---- feature space ----

std::shared_ptr<const FeatureSpace> FeatureSpace::FitTfidf(const std::vector<TokenizedDoc>& docs, PrepConfig prep) {
  auto fs = std::make_shared<FeatureSpace>();
  auto provider = std::make_shared<TfidfVectorProvider>(docs, prep);
  fs->kind_ = FeatureKind::kTfidfVector;
  fs->tfidf_ = provider.get();
  fs->provider_ = std::move(provider);
  return fs;
}

std::shared_ptr<const FeatureSpace> FeatureSpace::FromProvider(std::shared_ptr<const EmbeddingProvider> provider) {
  if (!provider) throw ArgumentError("feature space needs a provider");
  auto fs = std::make_shared<FeatureSpace>();
  fs->tfidf_ = dynamic_cast<const TfidfVectorProvider*>(provider.get());
  fs->kind_ = fs->tfidf_ ? FeatureKind::kTfidfVector : FeatureKind::kEmbedding;
  fs->provider_ = std::move(provider);
  return fs;
}

std::shared_ptr<const FeatureSpace> FeatureSpace::FromJson(const json& j) {
  return FromProvider(std::shared_ptr<const EmbeddingProvider>(ProviderFromJson(j)));
}

SparseVector FeatureSpace::Weighted(const std::vector<std::string>& tokens) const {
  return ToSparse(provider_->EmbedTokens(tokens));
}

SparseVector FeatureSpace::Counts(const std::vector<std::string>& tokens) const {
  if (!tfidf_) throw ArgumentError("term counts require a tf-idf feature space");
  std::vector<std::pair<uint32_t, double>> hits;
  for (const auto& t : tokens) {
    long idx = tfidf_->IndexOf(t);
    if (idx >= 0) hits.emplace_back(static_cast<uint32_t>(idx), 1.0);
  }
  std::sort(hits.begin(), hits.end());
  SparseVector s;
  s.dimension = tfidf_->dimension();
  for (const auto& [i, v] : hits) {
    if (!s.index.empty() && s.index.back() == i) {
      s.value.back() += v;
    } else {
      s.index.push_back(i);
      s.value.push_back(v);
    }
  }
  return s;
}

ordered_json FeatureSpace::ToJson() const { return provider_->Describe(); }

// ---- shared math ----

std::vector<double> Softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

namespace {

std::vector<double> Logits(const LogisticParams& p, const SparseVector& x) {
  std::vector<double> z(p.bias);
  for (size_t c = 0; c < p.num_classes; ++c) {
    const double* row = p.weights.data() + c * p.dimension;
    double acc = 0.0;
    for (size_t k = 0; k < x.index.size(); ++k) acc += row[x.index[k]] * x.value[k];
    z[c] += acc;
  }
  return z;
}

void CheckLabels(std::span<const int> labels, size_t num_classes) {
  std::vector<size_t> counts(num_classes, 0);
  for (int y : labels) {
    if (y < 0 || static_cast<size_t>(y) >= num_classes) {
      throw ArgumentError("label index " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
    }
    ++counts[static_cast<size_t>(y)];
  }
  for (size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw ArgumentError("training set has no examples of class " + std::to_string(c) +
                          "; label a larger seed set so every class is represented");
    }
  }
}

void CheckDimension(const SparseVector& x, size_t expected) {
  if (x.dimension != expected) {
    throw ArgumentError("feature dimension mismatch: model expects " + std::to_string(expected) + ", got " +
                        std::to_string(x.dimension));
  }
}

// ---- naive Bayes ----

class NaiveBayesModel final : public Classifier {
 public:
  NaiveBayesModel(std::shared_ptr<const FeatureSpace> features, size_t num_classes, std::vector<double> log_prior,
                  std::vector<double> log_likelihood, ClassifierSpec spec)
      : features_(std::move(features)),
        num_classes_(num_classes),
        log_prior_(std::move(log_prior)),
        log_likelihood_(std::move(log_likelihood)),
        spec_(std::move(spec)) {}

  ClassifierKind kind() const override { return ClassifierKind::kNaiveBayes; }
  size_t num_classes() const override { return num_classes_; }

  ProbVector PredictTokens(const std::vector<std::string>& tokens) const override {
    SparseVector x = features_->Counts(tokens);
    CheckDimension(x, features_->dimension());
    const size_t dim = features_->dimension();
    std::vector<double> scores(log_prior_);
    for (size_t c = 0; c < num_classes_; ++c) {
      for (size_t k = 0; k < x.index.size(); ++k) scores[c] += x.value[k] * log_likelihood_[c * dim + x.index[k]];
    }
    return ProbVector{Softmax(scores)};
  }

  ordered_json ToJson() const override {
    ordered_json j;
    j["kind"] = ToString(kind());
    j["spec"] = debtscope::ToJson(spec_);
    j["num_classes"] = num_classes_;
    j["features"] = features_->ToJson();
    j["log_prior"] = log_prior_;
    j["log_likelihood"] = log_likelihood_;
    return j;
  }

 private:
  std::shared_ptr<const FeatureSpace> features_;
  size_t num_classes_;
  std::vector<double> log_prior_;
  std::vector<double> log_likelihood_;  // [class][term]
  ClassifierSpec spec_;
};

std::unique_ptr<Classifier> FitNaiveBayes(const ClassifierSpec& spec, const TrainingSet& data,
                                          std::shared_ptr<const FeatureSpace> features) {
  if (features->kind() != FeatureKind::kTfidfVector) {
    throw ArgumentError("naive-bayes needs term-count features (use tfidf-vector)");
  }
  const size_t k = data.num_classes;
  const size_t dim = features->dimension();
  const double alpha = spec.hyperparams.nb_alpha;
  std::vector<double> class_docs(k, 0.0);
  std::vector<double> class_terms(k, 0.0);
  std::vector<double> term_counts(k * dim, 0.0);
  for (size_t i = 0; i < data.docs.size(); ++i) {
    const size_t c = static_cast<size_t>(data.labels[i]);
    class_docs[c] += 1.0;
    SparseVector x = features->Counts(data.docs[i].tokens);
    for (size_t t = 0; t < x.index.size(); ++t) {
      term_counts[c * dim + x.index[t]] += x.value[t];
      class_terms[c] += x.value[t];
    }
  }
  const double n = static_cast<double>(data.docs.size());
  std::vector<double> log_prior(k);
  std::vector<double> log_likelihood(k * dim);
  for (size_t c = 0; c < k; ++c) {
    log_prior[c] = std::log(class_docs[c] / n);
    const double denom = class_terms[c] + alpha * static_cast<double>(dim);
    for (size_t t = 0; t < dim; ++t) {
      log_likelihood[c * dim + t] = std::log((term_counts[c * dim + t] + alpha) / denom);
    }
  }
  return std::make_unique<NaiveBayesModel>(std::move(features), k, std::move(log_prior), std::move(log_likelihood),
                                           spec);
}

// ---- logistic regression ----

class LogisticModel final : public Classifier {
 public:
  LogisticModel(std::shared_ptr<const FeatureSpace> features, LogisticParams params, ClassifierSpec spec)
      : features_(std::move(features)), params_(std::move(params)), spec_(std::move(spec)) {}

  ClassifierKind kind() const override { return ClassifierKind::kLogistic; }
  size_t num_classes() const override { return params_.num_classes; }

  ProbVector PredictTokens(const std::vector<std::string>& tokens) const override {
    SparseVector x = features_->Weighted(tokens);
    CheckDimension(x, params_.dimension);
    return ProbVector{Softmax(Logits(params_, x))};
  }

  ordered_json ToJson() const override {
    ordered_json j;
    j["kind"] = ToString(kind());
    j["spec"] = debtscope::ToJson(spec_);
    j["num_classes"] = params_.num_classes;
    j["features"] = features_->ToJson();
    j["weights"] = params_.weights;
    j["bias"] = params_.bias;
    return j;
  }

  const LogisticParams& params() const { return params_; }

 private:
  std::shared_ptr<const FeatureSpace> features_;
  LogisticParams params_;
  ClassifierSpec spec_;
};

std::unique_ptr<Classifier> FitLogistic(const ClassifierSpec& spec, const TrainingSet& data,
                                        std::shared_ptr<const FeatureSpace> features, const Classifier* warm_start) {
  const size_t k = data.num_classes;
  const size_t n = data.docs.size();
  std::vector<SparseVector> x;
  x.reserve(n);
  for (const auto& d : data.docs) x.push_back(features->Weighted(d.tokens));

  std::vector<double> sample_weight(n, 1.0);
  if (spec.hyperparams.class_weights) {
    std::vector<double> counts(k, 0.0);
    for (int y : data.labels) counts[static_cast<size_t>(y)] += 1.0;
    for (size_t i = 0; i < n; ++i) {
      sample_weight[i] = static_cast<double>(n) / (static_cast<double>(k) * counts[static_cast<size_t>(data.labels[i])]);
    }
  }

  LogisticParams p;
  p.num_classes = k;
  p.dimension = features->dimension();
  p.weights.assign(k * p.dimension, 0.0);
  p.bias.assign(k, 0.0);
  if (const auto* warm = dynamic_cast<const LogisticModel*>(warm_start)) {
    if (warm->params().num_classes == k && warm->params().dimension == p.dimension) p = warm->params();
  }

  // Full-batch gradient descent with Armijo backtracking; the step grows
  // after each accepted move and halves on rejection.
  const double l2 = spec.hyperparams.l2;
  double step = spec.hyperparams.lr;
  double loss = LogisticLoss(p, x, data.labels, sample_weight, l2);
  for (int epoch = 0; epoch < spec.hyperparams.epochs; ++epoch) {
    std::vector<double> g = LogisticGradient(p, x, data.labels, sample_weight, l2);
    double g2 = 0.0;
    for (double v : g) g2 += v * v;
    if (g2 < 1e-20) break;
    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      LogisticParams q = p;
      for (size_t i = 0; i < q.weights.size(); ++i) q.weights[i] -= step * g[i];
      for (size_t c = 0; c < k; ++c) q.bias[c] -= step * g[q.weights.size() + c];
      double next = LogisticLoss(q, x, data.labels, sample_weight, l2);
      if (next <= loss - 1e-4 * step * g2) {
        p = std::move(q);
        loss = next;
        accepted = true;
        step *= 1.25;
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) break;
  }
  return std::make_unique<LogisticModel>(std::move(features), std::move(p), spec);
}

// ---- external ----

class ExternalModel final : public Classifier {
 public:
  ExternalModel(ClassifierSpec spec, std::string model_id, size_t num_classes)
      : spec_(std::move(spec)), model_id_(std::move(model_id)), num_classes_(num_classes) {}

  ClassifierKind kind() const override { return ClassifierKind::kExternal; }
  size_t num_classes() const override { return num_classes_; }

  ProbVector PredictTokens(const std::vector<std::string>& tokens) const override {
    json body = {{"model_id", model_id_}, {"docs", json::array({tokens})}};
    json reply = Post(spec_, "/predict_proba", body);
    if (!reply.contains("probs") || !reply["probs"].is_array() || reply["probs"].size() != 1) {
      throw Error("external classifier: /predict_proba reply has no probs row");
    }
    std::vector<double> probs;
    try {
      probs = reply["probs"][0].get<std::vector<double>>();
    } catch (const json::exception&) {
      throw Error("external classifier: non-numeric probabilities");
    }
    if (probs.size() != num_classes_) throw Error("external classifier: wrong number of class probabilities");
    double sum = 0.0;
    for (double v : probs) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error("external classifier: probability outside [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw Error("external classifier: probabilities do not sum to 1");
    for (double& v : probs) v /= sum;
    return ProbVector{std::move(probs)};
  }

  ordered_json ToJson() const override {
    ordered_json j;
    j["kind"] = ToString(kind());
    j["spec"] = debtscope::ToJson(spec_);
    j["num_classes"] = num_classes_;
    j["model_id"] = model_id_;
    return j;
  }

  static json Post(const ClassifierSpec& spec, const std::string& path, const json& body) {
    httplib::Client cli(spec.external_host, spec.external_port);
    cli.set_read_timeout(std::chrono::seconds(600));
    auto res = cli.Post(path, body.dump(), "application/json");
    if (!res) throw Error("external classifier " + spec.external_host + ":" + std::to_string(spec.external_port) + " unreachable");
    if (res->status != 200) throw Error("external classifier: " + path + " returned HTTP " + std::to_string(res->status));
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw Error("external classifier: " + path + " returned invalid JSON");
    return reply;
  }

 private:
  ClassifierSpec spec_;
  std::string model_id_;
  size_t num_classes_;
};

std::unique_ptr<Classifier> FitExternal(const ClassifierSpec& spec, const TrainingSet& data) {
  json examples = json::array();
  for (size_t i = 0; i < data.docs.size(); ++i) {
    examples.push_back({{"tokens", data.docs[i].tokens}, {"label", data.labels[i]}});
  }
  json reply = ExternalModel::Post(spec, "/fit", {{"num_classes", data.num_classes}, {"examples", examples}});
  if (!reply.contains("model_id") || !reply["model_id"].is_string()) {
    throw Error("external classifier: /fit reply has no model_id");
  }
  return std::make_unique<ExternalModel>(spec, reply["model_id"].get<std::string>(), data.num_classes);
}

}  // namespace

std::unique_ptr<Classifier> Fit(const ClassifierSpec& spec, const TrainingSet& data,
                                std::shared_ptr<const FeatureSpace> features, const Classifier* warm_start) {
  if (data.docs.size() != data.labels.size()) throw ArgumentError("training docs and labels differ in length");
  if (data.num_classes < 2) throw ArgumentError("need at least two classes");
  CheckLabels(data.labels, data.num_classes);
  if (spec.kind == ClassifierKind::kExternal) return FitExternal(spec, data);

  if (!features) {
    if (spec.features == FeatureKind::kTfidfVector) {
      std::vector<TokenizedDoc> docs(data.docs.begin(), data.docs.end());
      features = FeatureSpace::FitTfidf(docs);
    } else {
      features = FeatureSpace::FromProvider(std::make_shared<HashedBowProvider>());
    }
  }
  if (spec.kind == ClassifierKind::kNaiveBayes) return FitNaiveBayes(spec, data, std::move(features));
  return FitLogistic(spec, data, std::move(features), warm_start);
}

std::unique_ptr<Classifier> ClassifierFromJson(const json& j) {
  const auto kind = ParseClassifierKind(j.at("kind").get<std::string>());
  ClassifierSpec spec = ClassifierSpecFromJson(j.at("spec"));
  const size_t k = j.at("num_classes").get<size_t>();
  if (kind == ClassifierKind::kExternal) {
    return std::make_unique<ExternalModel>(spec, j.at("model_id").get<std::string>(), k);
  }
  auto features = FeatureSpace::FromJson(j.at("features"));
  if (kind == ClassifierKind::kNaiveBayes) {
    auto lp = j.at("log_prior").get<std::vector<double>>();
    auto ll = j.at("log_likelihood").get<std::vector<double>>();
    if (lp.size() != k || ll.size() != k * features->dimension()) throw Error("naive-bayes model arrays have wrong size");
    return std::make_unique<NaiveBayesModel>(std::move(features), k, std::move(lp), std::move(ll), spec);
  }
  LogisticParams p;
  p.num_classes = k;
  p.dimension = features->dimension();
  p.weights = j.at("weights").get<std::vector<double>>();
  p.bias = j.at("bias").get<std::vector<double>>();
  if (p.weights.size() != k * p.dimension || p.bias.size() != k) throw Error("logistic model arrays have wrong size");
  return std::make_unique<LogisticModel>(std::move(features), std::move(p), spec);
}

double LogisticLoss(const LogisticParams& p, std::span<const SparseVector> x, std::span<const int> y,
                    std::span<const double> sample_weight, double l2) {
  const double n = static_cast<double>(x.size());
  double loss = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    auto z = Logits(p, x[i]);
    double mx = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    loss += sample_weight[i] * (lse - z[static_cast<size_t>(y[i])]);
  }
  double sq = 0.0;
  for (double w : p.weights) sq += w * w;
  return loss / n + 0.5 * l2 * sq / n;
}

std::vector<double> LogisticGradient(const LogisticParams& p, std::span<const SparseVector> x,
                                     std::span<const int> y, std::span<const double> sample_weight, double l2) {
  const size_t k = p.num_classes;
  const double n = static_cast<double>(x.size());
  std::vector<double> g(p.weights.size() + k, 0.0);
  for (size_t i = 0; i < x.size(); ++i) {
    auto prob = Softmax(Logits(p, x[i]));
    for (size_t c = 0; c < k; ++c) {
      double r = sample_weight[i] * (prob[c] - (static_cast<size_t>(y[i]) == c ? 1.0 : 0.0)) / n;
      double* row = g.data() + c * p.dimension;
      for (size_t t = 0; t < x[i].index.size(); ++t) row[x[i].index[t]] += r * x[i].value[t];
      g[p.weights.size() + c] += r;
    }
  }
  for (size_t i = 0; i < p.weights.size(); ++i) g[i] += l2 * p.weights[i] / n;
  return g;
}

}  // namespace debtscope
