#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "debtscope/commands.h"
#include "debtscope/corpus.h"
#include "debtscope/error.h"
#include "debtscope/service.h"
#include "debtscope/util.h"

using nlohmann::ordered_json;
using namespace debtscope;

namespace {

std::string Absolute(const std::string& p) {
  return p.empty() ? p : std::filesystem::absolute(p).lexically_normal().string();
}

struct ClassifierFlags {
  std::string kind = "logistic";
  std::string features = "tfidf-vector";
  double l2 = Hyperparams{}.l2;
  int epochs = Hyperparams{}.epochs;
  double lr = Hyperparams{}.lr;
  double nb_alpha = Hyperparams{}.nb_alpha;
  bool class_weights = false;

  void Add(CLI::App* cmd) {
    cmd->add_option("--classifier", kind, "naive-bayes | logistic")->capture_default_str();
    cmd->add_option("--features", features, "tfidf-vector | embedding")->capture_default_str();
    cmd->add_option("--l2", l2, "L2 penalty")->capture_default_str();
    cmd->add_option("--epochs", epochs, "gradient steps")->capture_default_str();
    cmd->add_option("--lr", lr, "initial step size")->capture_default_str();
    cmd->add_option("--nb-alpha", nb_alpha, "naive Bayes smoothing")->capture_default_str();
    cmd->add_flag("--class-weights", class_weights, "inverse-frequency loss weights");
  }

  ordered_json Json(uint64_t seed) const {
    ClassifierSpec spec;
    spec.kind = ParseClassifierKind(kind);
    spec.features = ParseFeatureKind(features);
    spec.hyperparams = {l2, epochs, lr, nb_alpha, class_weights};
    spec.rng_seed = seed;
    return ToJson(spec);
  }
};

int Fail(int code, const std::string& message) {
  std::fprintf(stderr, "debtscope: %s\n", message.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"debtscope: architecture technical debt mining and active-learning toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  ordered_json config;
  std::string command;
  std::string manifest;

  // ingest
  std::string input, format, out, rejects, ingest_time;
  auto* ingest = app.add_subcommand("ingest", "parse an issue export into a canonical corpus");
  ingest->add_option("--input", input, "export file")->required();
  ingest->add_option("--format", format, "jira-json | jsonl")->required();
  ingest->add_option("--out", out, "corpus JSONL to write")->required();
  ingest->add_option("--rejects", rejects, "write rejected records here");
  ingest->add_option("--ingest-time", ingest_time, "timestamp recorded in the corpus header (default: now)");

  // generate-synthetic
  size_t num_docs = 3000;
  uint64_t syn_seed = 7;
  std::string gold_out;
  auto* synth = app.add_subcommand("generate-synthetic", "write the planted-keyword evaluation corpus");
  synth->add_option("--out", out, "corpus JSONL")->required();
  synth->add_option("--gold", gold_out, "gold labels JSONL")->required();
  synth->add_option("--docs", num_docs, "document count")->capture_default_str();
  synth->add_option("--seed", syn_seed, "generator seed")->capture_default_str();

  // extract-keywords
  std::string corpus, labels, method = "tfidf", blacklist;
  std::vector<int> ngrams = {1, 2, 3};
  int top = 15;
  double blend = 0.5;
  std::vector<std::string> seeds;
  size_t dimension = 4096;
  auto* kw = app.add_subcommand("extract-keywords", "rank ATD-indicative n-grams");
  kw->add_option("--corpus", corpus, "corpus JSONL")->required();
  kw->add_option("--labels", labels, "restrict to documents labeled ATD or WeakATD");
  kw->add_option("--method", method, "tfidf | embedsim | seeded")->capture_default_str();
  kw->add_option("--ngrams", ngrams, "n-gram sizes")->delimiter(',')->capture_default_str();
  kw->add_option("--top", top, "entries per n")->capture_default_str();
  kw->add_option("--blend", blend, "seed weight for --method seeded")->capture_default_str();
  kw->add_option("--seed-keyword", seeds, "seed keyword (repeatable)");
  kw->add_option("--blacklist", blacklist, "file with one excluded word per line");
  kw->add_option("--dim", dimension, "hashed embedding dimension")->capture_default_str();
  kw->add_option("--out", out, "keyword JSON")->required();

  // filter
  std::string keywords;
  std::vector<std::string> keyword_list;
  double threshold = 0.9;
  std::string summary;
  auto* filter = app.add_subcommand("filter", "flag documents matching extracted keywords");
  filter->add_option("--corpus", corpus, "corpus JSONL")->required();
  filter->add_option("--keywords", keywords, "keyword JSON from extract-keywords");
  filter->add_option("--keyword", keyword_list, "inline keyword (repeatable)");
  filter->add_option("--threshold", threshold, "cosine threshold")->capture_default_str();
  filter->add_option("--ngrams", ngrams, "window sizes")->delimiter(',')->capture_default_str();
  filter->add_option("--dim", dimension, "hashed embedding dimension")->capture_default_str();
  filter->add_option("--out", out, "per-document results JSONL")->required();
  filter->add_option("--summary", summary, "summary JSON");

  // sample-size
  int64_t population = 0;
  double confidence = 0.95, margin = 0.05, proportion = 0.5;
  bool no_fpc = false;
  auto* ss = app.add_subcommand("sample-size", "Cochran sample size with finite-population correction");
  ss->add_option("--population", population, "population size N")->required()->check(CLI::PositiveNumber);
  ss->add_option("--confidence", confidence, "0.90 | 0.95 | 0.99")->capture_default_str();
  ss->add_option("--margin", margin, "margin of error")->capture_default_str();
  ss->add_option("--proportion", proportion, "expected proportion")->capture_default_str();
  ss->add_flag("--no-fpc", no_fpc, "report the uncorrected n0");
  ss->add_option("--out", out, "also write a JSON record here");

  // adjudicate
  std::string tiebreakers;
  auto* adj = app.add_subcommand("adjudicate", "merge two annotators' labels and report agreement");
  adj->add_option("--labels", labels, "label records JSONL")->required();
  adj->add_option("--tiebreakers", tiebreakers, "third-annotator label records JSONL");
  adj->add_option("--out", out, "adjudicated JSONL")->required();
  adj->add_option("--summary", summary, "summary JSON with counts and kappa");

  // simulate
  std::string strategy = "random", label_mode = "true-plus-weak";
  int runs = 1, iterations = 10;
  size_t seed_size = 100, batch = 100;
  double holdout = 0.2;
  uint64_t rng_seed = 0;
  bool warm_start = false;
  ClassifierFlags cls;
  auto* sim = app.add_subcommand("simulate", "simulated-oracle active-learning runs");
  sim->add_option("--corpus", corpus, "corpus JSONL (default: built-in synthetic corpus)");
  sim->add_option("--labels", labels, "gold labels JSONL (required with --corpus)");
  sim->add_option("--strategy", strategy, "query strategy")->capture_default_str();
  sim->add_option("--runs", runs, "independent runs (executed in parallel)")->capture_default_str();
  sim->add_option("--seed-size", seed_size, "initial random sample")->capture_default_str();
  sim->add_option("--batch", batch, "labels per iteration")->capture_default_str();
  sim->add_option("--iterations", iterations, "query rounds")->capture_default_str();
  sim->add_option("--holdout", holdout, "stratified evaluation fraction")->capture_default_str();
  sim->add_option("--label-mode", label_mode, "true-only | true-plus-weak")->capture_default_str();
  sim->add_option("--seed", rng_seed, "base RNG seed (DEBTSCOPE_SEED overrides)")->capture_default_str();
  sim->add_flag("--warm-start", warm_start, "initialize each fit from the previous model");
  sim->add_option("--out", out, "output directory")->required();
  cls.Add(sim);

  // evaluate
  double train_fraction = 0.8;
  std::string model_out;
  auto* ev = app.add_subcommand("evaluate", "train on a stratified split and report precision/recall/F1");
  ev->add_option("--corpus", corpus, "corpus JSONL (default: built-in synthetic corpus)");
  ev->add_option("--labels", labels, "gold labels JSONL (required with --corpus)");
  ev->add_option("--train-fraction", train_fraction, "training share")->capture_default_str();
  ev->add_option("--label-mode", label_mode, "true-only | true-plus-weak")->capture_default_str();
  ev->add_option("--seed", rng_seed, "split seed (DEBTSCOPE_SEED overrides)")->capture_default_str();
  ev->add_option("--out", out, "metrics JSON")->required();
  ev->add_option("--model-out", model_out, "write the trained model JSON");
  cls.Add(ev);

  // explain
  std::string model;
  std::vector<std::string> doc_ids;
  std::string explain_method = "lime";
  int lime_samples = LimeConfig{}.num_samples, lime_top = LimeConfig{}.top_k;
  int shap_exact = ShapConfig{}.exact_max_tokens, shap_perms = ShapConfig{}.num_permutations;
  auto* ex = app.add_subcommand("explain", "token attributions for model predictions");
  ex->add_option("--corpus", corpus, "corpus JSONL")->required();
  ex->add_option("--model", model, "model JSON from evaluate --model-out")->required();
  ex->add_option("--doc", doc_ids, "document id (repeatable)")->required();
  ex->add_option("--method", explain_method, "lime | shap")->capture_default_str();
  ex->add_option("--seed", rng_seed, "sampling seed (DEBTSCOPE_SEED overrides)")->capture_default_str();
  ex->add_option("--lime-samples", lime_samples, "perturbations")->capture_default_str();
  ex->add_option("--lime-top", lime_top, "tokens kept")->capture_default_str();
  ex->add_option("--shap-exact-max", shap_exact, "exact enumeration up to this many tokens")->capture_default_str();
  ex->add_option("--shap-permutations", shap_perms, "sampled permutations")->capture_default_str();
  ex->add_option("--out", out, "explanations JSON")->required();

  // serve
  std::string host = "127.0.0.1", state_dir;
  int port = 8080;
  std::vector<std::string> corpora, golds;
  auto* serve = app.add_subcommand("serve", "run the /v1 annotation service");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--corpus", corpora, "name=path (repeatable)")->required();
  serve->add_option("--gold", golds, "name=labels.jsonl enabling holdout metrics (repeatable)");
  serve->add_option("--state-dir", state_dir, "durable session state; replayed on start");

  // replay
  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest and compare output hashes");
  replay->add_option("manifest", manifest, "manifest JSON")->required();

  for (auto* sub : {ingest, synth, kw, filter, ss, adj, sim, ev, ex}) {
    sub->add_option("--manifest", manifest, "manifest path (default derived from --out)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    auto set_manifest = [&] {
      if (!manifest.empty()) config["manifest"] = Absolute(manifest);
    };
    if (*ingest) {
      command = "ingest";
      config["input"] = Absolute(input);
      config["format"] = format;
      config["out"] = Absolute(out);
      if (!rejects.empty()) config["rejects"] = Absolute(rejects);
      config["ingest_time"] = ingest_time.empty() ? UtcNow() : ingest_time;
    } else if (*synth) {
      command = "generate-synthetic";
      config["out"] = Absolute(out);
      config["gold"] = Absolute(gold_out);
      config["num_docs"] = num_docs;
      config["seed"] = SeedFromEnv(syn_seed);
    } else if (*kw) {
      command = "extract-keywords";
      config["corpus"] = Absolute(corpus);
      if (!labels.empty()) config["labels"] = Absolute(labels);
      config["method"] = method;
      config["ngrams"] = ngrams;
      config["top"] = top;
      config["blend"] = blend;
      config["seeds"] = seeds;
      if (!blacklist.empty()) config["blacklist"] = Absolute(blacklist);
      config["dimension"] = dimension;
      config["out"] = Absolute(out);
    } else if (*filter) {
      command = "filter";
      config["corpus"] = Absolute(corpus);
      if (!keywords.empty()) config["keywords"] = Absolute(keywords);
      config["keyword_list"] = keyword_list;
      config["threshold"] = threshold;
      config["ngrams"] = ngrams;
      config["dimension"] = dimension;
      config["out"] = Absolute(out);
      if (!summary.empty()) config["summary"] = Absolute(summary);
    } else if (*ss) {
      command = "sample-size";
      config["population"] = population;
      config["confidence"] = confidence;
      config["margin"] = margin;
      config["proportion"] = proportion;
      config["fpc"] = !no_fpc;
      if (!out.empty()) config["out"] = Absolute(out);
    } else if (*adj) {
      command = "adjudicate";
      config["labels"] = Absolute(labels);
      if (!tiebreakers.empty()) config["tiebreakers"] = Absolute(tiebreakers);
      config["out"] = Absolute(out);
      if (!summary.empty()) config["summary"] = Absolute(summary);
    } else if (*sim || *ev) {
      const uint64_t seed = SeedFromEnv(rng_seed);
      if (!corpus.empty()) {
        if (labels.empty()) throw ArgumentError("--labels is required with --corpus");
        config["corpus"] = Absolute(corpus);
        config["labels"] = Absolute(labels);
      }
      config["label_mode"] = label_mode;
      config["classifier"] = cls.Json(seed);
      config["rng_seed"] = seed;
      config["out"] = Absolute(out);
      if (*sim) {
        command = "simulate";
        config["strategy"] = strategy;
        config["runs"] = runs;
        config["seed_size"] = seed_size;
        config["batch"] = batch;
        config["iterations"] = iterations;
        config["holdout"] = holdout;
        config["warm_start"] = warm_start;
      } else {
        command = "evaluate";
        config["train_fraction"] = train_fraction;
        if (!model_out.empty()) config["model_out"] = Absolute(model_out);
      }
    } else if (*ex) {
      command = "explain";
      config["corpus"] = Absolute(corpus);
      config["model"] = Absolute(model);
      config["doc_ids"] = doc_ids;
      config["method"] = explain_method;
      config["rng_seed"] = SeedFromEnv(rng_seed);
      ExplainConfig ec;
      ec.lime.num_samples = lime_samples;
      ec.lime.top_k = lime_top;
      ec.shap.exact_max_tokens = shap_exact;
      ec.shap.num_permutations = shap_perms;
      config["explain_config"] = ToJson(ec);
      config["out"] = Absolute(out);
    } else if (*serve) {
      AnnotationService service(state_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(state_dir));
      std::map<std::string, std::string> gold_paths;
      for (const auto& g : golds) {
        auto eq = g.find('=');
        if (eq == std::string::npos) throw ArgumentError("--gold expects name=path");
        gold_paths[g.substr(0, eq)] = g.substr(eq + 1);
      }
      for (const auto& c : corpora) {
        auto eq = c.find('=');
        if (eq == std::string::npos) throw ArgumentError("--corpus expects name=path");
        std::string name = c.substr(0, eq);
        Corpus loaded = LoadCorpus(c.substr(eq + 1));
        std::optional<std::vector<Label>> gold;
        if (auto it = gold_paths.find(name); it != gold_paths.end()) {
          std::map<std::string, Label> by_id;
          for (const auto& r : LoadLabels(it->second)) by_id[r.doc_id] = r.final.value_or(r.label);
          std::vector<Label> g;
          for (const auto& d : loaded.documents()) {
            auto f = by_id.find(d.id);
            if (f == by_id.end()) throw ArgumentError("gold file for '" + name + "' misses document " + d.id);
            g.push_back(f->second);
          }
          gold = std::move(g);
        }
        service.AddCorpus(name, std::move(loaded), std::move(gold));
      }
      service.Restore();
      std::fprintf(stderr, "debtscope: serving /v1 on %s:%d\n", host.c_str(), port);
      Serve(service, host, port);
      return 0;
    } else if (*replay) {
      ReplayReport report = Replay(manifest);
      std::fputs(report.result.report.c_str(), stdout);
      if (!report.identical) {
        for (const auto& m : report.mismatches) {
          std::fprintf(stderr, "mismatch %s: expected %s got %s\n", m.path.c_str(), m.expected.c_str(),
                       m.actual.empty() ? "(missing)" : m.actual.c_str());
        }
        return Fail(1, "replay outputs differ from the manifest");
      }
      std::printf("replay identical: %s\n", manifest.c_str());
      return 0;
    }
    set_manifest();
    RunAndRecord(command, config);
    return 0;
  } catch (const ArgumentError& e) {
    return Fail(2, e.what());
  } catch (const std::exception& e) {
    return Fail(1, e.what());
  }
}
