#include "debtscope/commands.h"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "debtscope/active.h"
#include "debtscope/classify.h"
#include "debtscope/corpus.h"
#include "debtscope/error.h"
#include "debtscope/explain.h"
#include "debtscope/filter.h"
#include "debtscope/keywords.h"
#include "debtscope/stats.h"
#include "debtscope/synthetic.h"
#include "debtscope/textprep.h"
#include "debtscope/util.h"

namespace debtscope {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

const std::vector<std::string>& CommandNames() {
  static const std::vector<std::string> names = {
      "ingest",   "generate-synthetic", "extract-keywords", "filter",  "sample-size",
      "adjudicate", "simulate",         "evaluate",         "explain",
  };
  return names;
}

std::string UtcNow() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

template <typename T>
T Get(const json& cfg, const char* key, T fallback) {
  if (!cfg.contains(key) || cfg[key].is_null()) return fallback;
  try {
    return cfg[key].get<T>();
  } catch (const json::exception&) {
    throw ArgumentError(std::string("config field '") + key + "' has the wrong type");
  }
}

std::string Require(const json& cfg, const char* key) {
  std::string v = Get<std::string>(cfg, key, "");
  if (v.empty()) throw ArgumentError(std::string("missing required option '") + key + "'");
  return v;
}

void EnsureParent(const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void WriteText(const std::string& path, const std::string& text) {
  EnsureParent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed: " + path);
}

std::vector<TokenizedDoc> TokenizeAll(const Corpus& corpus) {
  std::vector<TokenizedDoc> docs(corpus.size());
  ParallelFor(corpus.size(), [&](size_t i) { docs[i] = Preprocess(corpus[i], PrepConfig{}); });
  return docs;
}

std::vector<std::string> ReadWordList(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::string w = ToLower(NormalizeWhitespace(line));
    if (!w.empty() && w[0] != '#') words.push_back(w);
  }
  return words;
}

// One gold label per document: a recorded final label wins, a lone record
// stands as-is (Maybe|ATD counts as WeakATD), otherwise the group is
// adjudicated. Unresolvable documents are left out.
std::map<std::string, Label> GoldLabels(const std::vector<LabelRecord>& records) {
  std::map<std::string, std::vector<LabelRecord>> groups;
  for (const auto& r : records) groups[r.doc_id].push_back(r);
  std::map<std::string, Label> gold;
  for (const auto& [id, group] : groups) {
    std::optional<Label> final;
    for (const auto& r : group) {
      if (r.final) final = r.final;
    }
    if (!final && group.size() == 1) {
      final = group[0].maybe_flag && group[0].label == Label::kATD ? Label::kWeakATD : group[0].label;
    }
    if (!final) final = Adjudicate(group).final;
    if (final) gold[id] = *final;
  }
  return gold;
}

std::vector<int> ParseNgrams(const json& cfg) {
  auto sizes = Get<std::vector<int>>(cfg, "ngrams", {1, 2, 3});
  if (sizes.empty()) throw ArgumentError("ngrams must not be empty");
  for (int n : sizes) {
    if (n < 1 || n > 3) throw ArgumentError("ngram sizes must lie in 1..3 (got " + std::to_string(n) + ")");
  }
  return sizes;
}

// ---- subcommands ----

CommandResult RunIngest(const json& cfg) {
  CommandResult r;
  const std::string input = Require(cfg, "input");
  const std::string out = Require(cfg, "out");
  const ExportFormat format = ParseExportFormat(Require(cfg, "format"));
  const std::string rejects_path = Get<std::string>(cfg, "rejects", "");
  std::ifstream in(input, std::ios::binary);
  if (!in) throw Error("cannot open " + input);
  IngestResult res = Ingest(in, format, {input, Require(cfg, "ingest_time")});
  EnsureParent(out);
  SaveCorpus(res.corpus, out);
  r.inputs = {input};
  r.outputs = {out};
  if (!rejects_path.empty()) {
    std::string text;
    for (const auto& rej : res.rejects) {
      ordered_json j;
      j["line"] = rej.line;
      j["reason"] = rej.reason;
      text += j.dump() + "\n";
    }
    WriteText(rejects_path, text);
    r.outputs.push_back(rejects_path);
  }
  const auto& m = res.corpus.manifest();
  std::ostringstream rep;
  rep << "ingested " << res.corpus.size() << " documents (resolved " << m.resolved << ", unresolved " << m.unresolved
      << ", rejected " << m.rejected << ")\n";
  r.report = rep.str();
  return r;
}

CommandResult RunGenerateSynthetic(const json& cfg) {
  CommandResult r;
  SyntheticConfig sc;
  sc.num_docs = Get<size_t>(cfg, "num_docs", sc.num_docs);
  sc.seed = Get<uint64_t>(cfg, "seed", sc.seed);
  const std::string out = Require(cfg, "out");
  const std::string gold_path = Require(cfg, "gold");
  SyntheticCorpus syn = GenerateSynthetic(sc);
  EnsureParent(out);
  SaveCorpus(syn.corpus, out);
  std::vector<LabelRecord> labels;
  for (size_t i = 0; i < syn.gold.size(); ++i) {
    labels.push_back({syn.corpus[i].id, "gold", syn.gold[i], false, syn.gold[i]});
  }
  EnsureParent(gold_path);
  SaveLabels(labels, gold_path);
  r.outputs = {out, gold_path};
  r.rng_seeds["synthetic"] = sc.seed;
  r.report = "generated " + std::to_string(sc.num_docs) + " documents\n";
  return r;
}

CommandResult RunExtractKeywords(const json& cfg) {
  CommandResult r;
  const std::string corpus_path = Require(cfg, "corpus");
  const std::string out = Require(cfg, "out");
  const KeywordMethod method = ParseKeywordMethod(Get<std::string>(cfg, "method", "tfidf"));
  const int top = Get<int>(cfg, "top", kDefaultTopK);
  const double blend = Get<double>(cfg, "blend", kDefaultSeedBlend);
  const auto sizes = ParseNgrams(cfg);
  Corpus corpus = LoadCorpus(corpus_path);
  r.inputs.push_back(corpus_path);

  std::vector<TokenizedDoc> all = TokenizeAll(corpus);
  std::vector<TokenizedDoc> docs;
  const std::string labels_path = Get<std::string>(cfg, "labels", "");
  if (labels_path.empty()) {
    docs = std::move(all);
  } else {
    r.inputs.push_back(labels_path);
    auto gold = GoldLabels(LoadLabels(labels_path));
    for (auto& d : all) {
      auto it = gold.find(d.doc_id);
      if (it != gold.end() && it->second != Label::kNonATD) docs.push_back(std::move(d));
    }
    if (docs.empty()) throw ArgumentError("no ATD-labeled documents to extract keywords from");
  }

  std::vector<std::string> blacklist;
  const std::string blacklist_path = Get<std::string>(cfg, "blacklist", "");
  if (!blacklist_path.empty()) {
    blacklist = ReadWordList(blacklist_path);
    r.inputs.push_back(blacklist_path);
  }
  auto seeds = Get<std::vector<std::string>>(cfg, "seeds", {});
  if (seeds.empty()) seeds = DefaultSeedKeywords();

  HashedBowProvider provider(Get<size_t>(cfg, "dimension", HashedBowProvider::kDefaultDimension),
                             Get<uint64_t>(cfg, "provider_seed", 0));
  ordered_json sets = ordered_json::array();
  std::ostringstream rep;
  for (int n : sizes) {
    KeywordSet set;
    switch (method) {
      case KeywordMethod::kTfidf: set = ExtractTfidf(docs, n, top, blacklist); break;
      case KeywordMethod::kEmbedSim: set = ExtractEmbedSim(docs, provider, n, top, blacklist); break;
      case KeywordMethod::kSeeded: set = ExtractSeeded(docs, provider, seeds, n, top, blend, blacklist); break;
    }
    rep << n << "-grams:";
    for (const auto& e : set.entries) rep << " " << e.ngram;
    rep << "\n";
    sets.push_back(ToJson(set));
  }
  WriteText(out, sets.dump(2) + "\n");
  r.outputs = {out};
  r.report = rep.str();
  return r;
}

CommandResult RunFilter(const json& cfg) {
  CommandResult r;
  const std::string corpus_path = Require(cfg, "corpus");
  const std::string out = Require(cfg, "out");
  FilterConfig fc;
  fc.threshold = Get<double>(cfg, "threshold", kDefaultFilterThreshold);
  fc.ngram_sizes = ParseNgrams(cfg);
  fc.keywords = Get<std::vector<std::string>>(cfg, "keyword_list", {});
  const std::string kw_path = Get<std::string>(cfg, "keywords", "");
  if (!kw_path.empty()) {
    auto phrases = LoadKeywordPhrases(kw_path);
    fc.keywords.insert(fc.keywords.end(), phrases.begin(), phrases.end());
  }
  if (fc.keywords.empty()) throw ArgumentError("filter needs --keywords or --keyword");
  Corpus corpus = LoadCorpus(corpus_path);
  r.inputs.push_back(corpus_path);
  if (!kw_path.empty()) r.inputs.push_back(kw_path);

  HashedBowProvider provider(Get<size_t>(cfg, "dimension", HashedBowProvider::kDefaultDimension),
                             Get<uint64_t>(cfg, "provider_seed", 0));
  FilterReport report = FilterCorpus(TokenizeAll(corpus), fc, provider);
  std::string lines;
  for (const auto& res : report.results) lines += ToJson(res).dump() + "\n";
  WriteText(out, lines);
  r.outputs = {out};
  const std::string summary = Get<std::string>(cfg, "summary", "");
  if (!summary.empty()) {
    WriteText(summary, SummaryJson(report, fc).dump(2) + "\n");
    r.outputs.push_back(summary);
  }
  r.report = "matched " + std::to_string(report.matched) + " of " + std::to_string(report.results.size()) +
             " documents at threshold " + std::to_string(fc.threshold) + "\n";
  return r;
}

CommandResult RunSampleSize(const json& cfg) {
  CommandResult r;
  SampleSpec spec;
  if (!cfg.contains("population")) throw ArgumentError("missing required option 'population'");
  spec.population = Get<int64_t>(cfg, "population", 0);
  spec.confidence = Get<double>(cfg, "confidence", spec.confidence);
  spec.margin = Get<double>(cfg, "margin", spec.margin);
  spec.proportion = Get<double>(cfg, "proportion", spec.proportion);
  const bool fpc = Get<bool>(cfg, "fpc", true);
  SampleSizeResult res = ComputeSampleSize(spec);
  const int64_t n = fpc ? res.corrected : res.uncorrected;
  r.report = std::to_string(n) + "\n";
  const std::string out = Get<std::string>(cfg, "out", "");
  if (!out.empty()) {
    ordered_json j;
    j["population"] = spec.population;
    j["confidence"] = spec.confidence;
    j["margin"] = spec.margin;
    j["proportion"] = spec.proportion;
    j["z"] = res.z;
    j["n0"] = res.uncorrected_exact;
    j["uncorrected"] = res.uncorrected;
    j["corrected"] = res.corrected;
    j["sample_size"] = n;
    WriteText(out, j.dump(2) + "\n");
    r.outputs = {out};
  }
  return r;
}

CommandResult RunAdjudicate(const json& cfg) {
  CommandResult r;
  const std::string labels_path = Require(cfg, "labels");
  const std::string out = Require(cfg, "out");
  std::vector<LabelRecord> records = LoadLabels(labels_path);
  r.inputs.push_back(labels_path);
  std::map<std::string, Label> tiebreakers;
  const std::string tb_path = Get<std::string>(cfg, "tiebreakers", "");
  if (!tb_path.empty()) {
    for (const auto& t : LoadLabels(tb_path)) tiebreakers[t.doc_id] = t.label;
    r.inputs.push_back(tb_path);
  }
  auto results = AdjudicateAll(records, tiebreakers);
  std::string lines;
  size_t pending = 0;
  std::map<std::string, size_t> per_label;
  for (const auto& a : results) {
    ordered_json j;
    j["doc_id"] = a.doc_id;
    j["final"] = a.result.final ? json(ToString(*a.result.final)) : json(nullptr);
    j["needs_adjudication"] = a.result.needs_adjudication;
    j["rule"] = a.result.rule;
    lines += j.dump() + "\n";
    if (a.result.needs_adjudication) ++pending;
    if (a.result.final) ++per_label[std::string(ToString(*a.result.final))];
  }
  WriteText(out, lines);
  r.outputs = {out};

  // Agreement between the first two annotators (by name) on shared docs.
  std::set<std::string> names;
  for (const auto& rec : records) names.insert(rec.annotator);
  std::ostringstream rep;
  rep << "documents " << results.size() << ", needs adjudication " << pending;
  for (const auto& [label, count] : per_label) rep << ", " << label << " " << count;
  rep << "\n";
  ordered_json summary;
  summary["documents"] = results.size();
  summary["needs_adjudication"] = pending;
  summary["labels"] = per_label;
  if (names.size() >= 2) {
    auto it = names.begin();
    const std::string a = *it++, b = *it;
    std::map<std::string, std::pair<std::optional<Label>, std::optional<Label>>> pairs;
    for (const auto& rec : records) {
      if (rec.annotator == a) pairs[rec.doc_id].first = rec.label;
      if (rec.annotator == b) pairs[rec.doc_id].second = rec.label;
    }
    std::vector<int> la, lb;
    for (const auto& [id, p] : pairs) {
      if (p.first && p.second) {
        la.push_back(static_cast<int>(*p.first));
        lb.push_back(static_cast<int>(*p.second));
      }
    }
    if (!la.empty()) {
      double kappa = CohensKappa(la, lb);
      summary["kappa"] = {{"annotators", {a, b}}, {"shared_documents", la.size()}, {"value", kappa}};
      char buf[96];
      std::snprintf(buf, sizeof(buf), "kappa(%s, %s) = %.4f over %zu documents\n", a.c_str(), b.c_str(), kappa,
                    la.size());
      rep << buf;
    }
  }
  const std::string summary_path = Get<std::string>(cfg, "summary", "");
  if (!summary_path.empty()) {
    WriteText(summary_path, summary.dump(2) + "\n");
    r.outputs.push_back(summary_path);
  }
  r.report = rep.str();
  return r;
}

// Corpus + gold labels for simulate/evaluate: either files or the synthetic
// generator.
struct LabeledData {
  std::vector<TokenizedDoc> docs;
  std::vector<Label> gold;
};

LabeledData LoadLabeledData(const json& cfg, CommandResult& r) {
  LabeledData data;
  const std::string corpus_path = Get<std::string>(cfg, "corpus", "");
  if (corpus_path.empty()) {
    SyntheticConfig sc;
    sc.num_docs = Get<size_t>(cfg, "synthetic_docs", sc.num_docs);
    sc.seed = Get<uint64_t>(cfg, "synthetic_seed", sc.seed);
    r.rng_seeds["synthetic"] = sc.seed;
    SyntheticCorpus syn = GenerateSynthetic(sc);
    data.docs = TokenizeAll(syn.corpus);
    data.gold = std::move(syn.gold);
    return data;
  }
  const std::string labels_path = Require(cfg, "labels");
  Corpus corpus = LoadCorpus(corpus_path);
  auto gold = GoldLabels(LoadLabels(labels_path));
  r.inputs.push_back(corpus_path);
  r.inputs.push_back(labels_path);
  std::vector<TokenizedDoc> all = TokenizeAll(corpus);
  for (auto& d : all) {
    auto it = gold.find(d.doc_id);
    if (it == gold.end()) continue;
    data.gold.push_back(it->second);
    data.docs.push_back(std::move(d));
  }
  if (data.docs.empty()) throw ArgumentError("no corpus document has a gold label");
  return data;
}

ClassifierSpec SpecFromConfig(const json& cfg) {
  if (cfg.contains("classifier")) return ClassifierSpecFromJson(cfg["classifier"]);
  return ClassifierSpec{};
}

CommandResult RunSimulate(const json& cfg) {
  CommandResult r;
  const std::string out_dir = Require(cfg, "out");
  const int runs = Get<int>(cfg, "runs", 1);
  if (runs < 1) throw ArgumentError("runs must be >= 1");
  SimulationConfig base;
  base.strategy = ParseStrategy(Get<std::string>(cfg, "strategy", "random"));
  base.seed_size = Get<size_t>(cfg, "seed_size", base.seed_size);
  base.batch_size = Get<size_t>(cfg, "batch", base.batch_size);
  base.iterations = Get<int>(cfg, "iterations", base.iterations);
  base.holdout_fraction = Get<double>(cfg, "holdout", base.holdout_fraction);
  base.merge = ParseLabelMergeMode(Get<std::string>(cfg, "label_mode", "true-plus-weak"));
  base.classifier = SpecFromConfig(cfg);
  base.warm_start = Get<bool>(cfg, "warm_start", false);
  const uint64_t seed = Get<uint64_t>(cfg, "rng_seed", 0);
  if (base.seed_size == 0 || base.batch_size == 0) throw ArgumentError("seed-size and batch must be positive");
  if (base.iterations < 0) throw ArgumentError("iterations must be >= 0");
  if (!(base.holdout_fraction >= 0.0 && base.holdout_fraction < 1.0)) {
    throw ArgumentError("holdout must lie in [0, 1)");
  }

  LabeledData data = LoadLabeledData(cfg, r);
  fs::create_directories(out_dir);
  std::vector<ActiveRun> results(static_cast<size_t>(runs));
  std::vector<uint64_t> seeds(static_cast<size_t>(runs));
  for (int i = 0; i < runs; ++i) seeds[static_cast<size_t>(i)] = DeriveSeed(seed, "run", static_cast<uint64_t>(i));
  ParallelFor(static_cast<size_t>(runs), [&](size_t i) {
    SimulationConfig c = base;
    c.rng_seed = seeds[i];
    results[i] = RunSimulation(c, data.docs, data.gold);
  });

  ordered_json summary;
  summary["strategy"] = ToString(base.strategy);
  summary["runs"] = runs;
  ordered_json per_run = ordered_json::array();
  double mean_aulc = 0.0;
  for (int i = 0; i < runs; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "run-%02d", i);
    const auto& run = results[static_cast<size_t>(i)];
    std::string csv = (fs::path(out_dir) / (std::string(name) + ".csv")).string();
    std::string js = (fs::path(out_dir) / (std::string(name) + ".json")).string();
    WriteText(csv, CurveCsv(run.curve));
    WriteText(js, ToJson(run).dump(2) + "\n");
    r.outputs.push_back(csv);
    r.outputs.push_back(js);
    double aulc = AreaUnderCurve(run.curve);
    mean_aulc += aulc / runs;
    per_run.push_back({{"run", i}, {"rng_seed", seeds[static_cast<size_t>(i)]}, {"aulc", aulc},
                       {"final_f1", run.curve.empty() ? 0.0 : run.curve.back().metrics.f1},
                       {"labeled", run.labeled.size()}});
  }
  summary["mean_aulc"] = mean_aulc;
  summary["per_run"] = per_run;
  std::string summary_path = (fs::path(out_dir) / "summary.json").string();
  WriteText(summary_path, summary.dump(2) + "\n");
  r.outputs.push_back(summary_path);
  r.rng_seeds["base"] = seed;
  r.rng_seeds["runs"] = seeds;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s: %d run(s), mean AULC %.4f\n", std::string(ToString(base.strategy)).c_str(),
                runs, mean_aulc);
  r.report = buf;
  return r;
}

CommandResult RunEvaluate(const json& cfg) {
  CommandResult r;
  const std::string out = Require(cfg, "out");
  const double train_fraction = Get<double>(cfg, "train_fraction", 0.8);
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ArgumentError("train-fraction must lie in (0, 1)");
  const uint64_t seed = Get<uint64_t>(cfg, "rng_seed", 0);
  const LabelMergeMode merge = ParseLabelMergeMode(Get<std::string>(cfg, "label_mode", "true-plus-weak"));
  ClassifierSpec spec = SpecFromConfig(cfg);
  spec.rng_seed = seed;
  LabeledData data = LoadLabeledData(cfg, r);

  std::vector<int> classes;
  for (Label l : data.gold) classes.push_back(BinaryClass(l, merge));
  Rng rng(DeriveSeed(seed, "split"));
  auto [test, train] = StratifiedHoldout(classes, 1.0 - train_fraction, rng);
  std::vector<TokenizedDoc> train_docs;
  std::vector<int> train_labels;
  for (int i : train) {
    train_docs.push_back(data.docs[static_cast<size_t>(i)]);
    train_labels.push_back(classes[static_cast<size_t>(i)]);
  }
  auto model = Fit(spec, TrainingSet{train_docs, train_labels, 2});
  std::vector<int> predicted, gold;
  for (int i : test) {
    predicted.push_back(static_cast<int>(model->PredictProba(data.docs[static_cast<size_t>(i)]).Argmax()));
    gold.push_back(classes[static_cast<size_t>(i)]);
  }
  Metrics m = ComputeMetrics(predicted, gold, 1);
  ordered_json j;
  j["classifier"] = ToJson(spec);
  j["label_mode"] = ToString(merge);
  j["train_size"] = train.size();
  j["test_size"] = test.size();
  j["metrics"] = ToJson(m);
  WriteText(out, j.dump(2) + "\n");
  r.outputs = {out};
  const std::string model_out = Get<std::string>(cfg, "model_out", "");
  if (!model_out.empty()) {
    WriteText(model_out, model->ToJson().dump() + "\n");
    r.outputs.push_back(model_out);
  }
  r.rng_seeds["split"] = seed;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "precision %.4f recall %.4f f1 %.4f (train %zu, test %zu)\n", m.precision, m.recall,
                m.f1, train.size(), test.size());
  r.report = buf;
  return r;
}

CommandResult RunExplain(const json& cfg) {
  CommandResult r;
  const std::string corpus_path = Require(cfg, "corpus");
  const std::string model_path = Require(cfg, "model");
  const std::string out = Require(cfg, "out");
  const ExplainMethod method = ParseExplainMethod(Get<std::string>(cfg, "method", "lime"));
  const auto ids = Get<std::vector<std::string>>(cfg, "doc_ids", {});
  if (ids.empty()) throw ArgumentError("explain needs at least one --doc");
  ExplainConfig ec = cfg.contains("explain_config") ? ExplainConfigFromJson(cfg["explain_config"]) : ExplainConfig{};
  ec.rng_seed = Get<uint64_t>(cfg, "rng_seed", ec.rng_seed);
  Validate(ec);
  const size_t target = Get<size_t>(cfg, "target", 1);

  Corpus corpus = LoadCorpus(corpus_path);
  std::ifstream in(model_path);
  if (!in) throw Error("cannot open " + model_path);
  auto model = ClassifierFromJson(json::parse(in));
  if (target >= model->num_classes()) throw ArgumentError("target class out of range");
  r.inputs = {corpus_path, model_path};

  ordered_json all = ordered_json::array();
  std::string rendered;
  for (const auto& id : ids) {
    auto idx = corpus.Find(id);
    if (!idx) throw ArgumentError("unknown document '" + id + "'");
    TokenizedDoc doc = Preprocess(corpus[*idx], PrepConfig{});
    Explanation e = Explain(method, *model, doc, target, ec);
    all.push_back(ToJson(e));
    rendered += RenderText(e);
  }
  WriteText(out, all.dump(2) + "\n");
  r.outputs = {out};
  r.rng_seeds["explain"] = ec.rng_seed;
  r.report = rendered;
  return r;
}

}  // namespace

CommandResult RunCommand(std::string_view command, const json& config) {
  if (command == "ingest") return RunIngest(config);
  if (command == "generate-synthetic") return RunGenerateSynthetic(config);
  if (command == "extract-keywords") return RunExtractKeywords(config);
  if (command == "filter") return RunFilter(config);
  if (command == "sample-size") return RunSampleSize(config);
  if (command == "adjudicate") return RunAdjudicate(config);
  if (command == "simulate") return RunSimulate(config);
  if (command == "evaluate") return RunEvaluate(config);
  if (command == "explain") return RunExplain(config);
  throw ArgumentError("unknown command '" + std::string(command) + "'");
}

ordered_json ToJson(const RunManifest& m) {
  auto files = [](const auto& list) {
    ordered_json a = ordered_json::array();
    for (const auto& [path, hash] : list) a.push_back({{"path", path}, {"sha256", hash}});
    return a;
  };
  ordered_json j;
  j["format"] = "debtscope-manifest";
  j["command"] = m.command;
  j["tool_version"] = m.tool_version;
  j["config"] = m.config;
  j["inputs"] = files(m.inputs);
  j["outputs"] = files(m.outputs);
  j["rng_seeds"] = m.rng_seeds;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  return j;
}

RunManifest RunManifestFromJson(const json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.tool_version = j.value("tool_version", "");
    m.config = j.at("config");
    for (const auto& f : j.at("inputs")) m.inputs.emplace_back(f.at("path"), f.at("sha256"));
    for (const auto& f : j.at("outputs")) m.outputs.emplace_back(f.at("path"), f.at("sha256"));
    m.rng_seeds = j.value("rng_seeds", ordered_json::object());
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string ManifestPath(std::string_view command, const json& config) {
  std::string explicit_path = Get<std::string>(config, "manifest", "");
  if (!explicit_path.empty()) return explicit_path;
  std::string out = Get<std::string>(config, "out", "");
  if (out.empty()) return "";
  if (command == "simulate") return (fs::path(out) / "manifest.json").string();
  return out + ".manifest.json";
}

RunManifest RunAndRecord(std::string_view command, const ordered_json& config, bool echo_report) {
  RunManifest m;
  m.command = std::string(command);
  m.config = config;
  m.tool_version = std::string(kToolVersion);
  m.started_at = UtcNow();
  CommandResult result = RunCommand(command, json(config));
  m.finished_at = UtcNow();
  for (const auto& p : result.inputs) m.inputs.emplace_back(p, Sha256File(p));
  for (const auto& p : result.outputs) m.outputs.emplace_back(p, Sha256File(p));
  m.rng_seeds = result.rng_seeds;
  const std::string path = ManifestPath(command, json(config));
  if (!path.empty()) WriteText(path, ToJson(m).dump(2) + "\n");
  if (echo_report) {
    std::fputs(result.report.c_str(), stdout);
    std::fflush(stdout);
  }
  return m;
}

ReplayReport Replay(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open " + manifest_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ArgumentError("manifest " + manifest_path + " is not JSON: " + e.what());
  }
  RunManifest m = RunManifestFromJson(j);
  for (const auto& [path, hash] : m.inputs) {
    if (Sha256File(path) != hash) throw Error("input " + path + " changed since the manifest was written");
  }
  ReplayReport report;
  report.result = RunCommand(m.command, json(m.config));
  std::map<std::string, std::string> now;
  for (const auto& p : report.result.outputs) now[p] = Sha256File(p);
  for (const auto& [path, hash] : m.outputs) {
    auto it = now.find(path);
    std::string actual = it == now.end() ? "" : it->second;
    if (actual != hash) {
      report.identical = false;
      report.mismatches.push_back({path, hash, actual});
    }
  }
  if (now.size() != m.outputs.size()) report.identical = false;
  return report;
}

}  // namespace debtscope
