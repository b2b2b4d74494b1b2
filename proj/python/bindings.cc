#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "debtscope/active.h"
#include "debtscope/classify.h"
#include "debtscope/commands.h"
#include "debtscope/error.h"
#include "debtscope/explain.h"
#include "debtscope/filter.h"
#include "debtscope/stats.h"
#include "debtscope/synthetic.h"

namespace py = pybind11;
using namespace debtscope;
using nlohmann::json;

// Structured values cross the boundary as JSON text; the Python package
// decodes them.
namespace {

std::vector<TokenizedDoc> Prepare(const std::vector<std::string>& texts) {
  std::vector<TokenizedDoc> docs;
  for (size_t i = 0; i < texts.size(); ++i) docs.push_back(Preprocess(std::to_string(i), texts[i], PrepConfig{}));
  return docs;
}

int64_t SampleSizeFor(int64_t population, double confidence, double margin, double proportion, bool fpc) {
  auto r = ComputeSampleSize({population, confidence, margin, proportion});
  return fpc ? r.corrected : r.uncorrected;
}

std::vector<std::string> Tokens(const std::string& text) { return Preprocess("", text, PrepConfig{}).tokens; }

std::string FilterTexts(const std::vector<std::string>& texts, const std::vector<std::string>& keywords,
                        double threshold, const std::vector<int>& ngrams, size_t dimension) {
  FilterConfig config{threshold, ngrams, keywords};
  HashedBowProvider provider(dimension);
  auto report = FilterCorpus(Prepare(texts), config, provider);
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : report.results) out.push_back(ToJson(r));
  return out.dump();
}

std::string MetricsJson(const std::vector<int>& predicted, const std::vector<int>& gold, int positive) {
  return ToJson(ComputeMetrics(predicted, gold, positive)).dump();
}

double Kappa(const std::vector<int>& a, const std::vector<int>& b) { return CohensKappa(a, b); }

std::string Synthetic(size_t num_docs, uint64_t seed) {
  SyntheticConfig c;
  c.num_docs = num_docs;
  c.seed = seed;
  auto syn = GenerateSynthetic(c);
  json docs = json::array();
  for (size_t i = 0; i < syn.corpus.size(); ++i) {
    const auto& d = syn.corpus[i];
    docs.push_back({{"id", d.id}, {"text", d.unified_text}, {"label", ToString(syn.gold[i])}});
  }
  return docs.dump();
}

std::string Train(const std::vector<std::string>& texts, const std::vector<int>& labels, const std::string& spec) {
  auto docs = Prepare(texts);
  auto model = Fit(ClassifierSpecFromJson(json::parse(spec)), TrainingSet{docs, labels, 2});
  return model->ToJson().dump();
}

std::vector<std::vector<double>> Predict(const std::string& model_json, const std::vector<std::string>& texts) {
  auto model = ClassifierFromJson(json::parse(model_json));
  std::vector<std::vector<double>> out;
  for (const auto& d : Prepare(texts)) out.push_back(model->PredictProba(d).probs);
  return out;
}

std::string ExplainText(const std::string& model_json, const std::string& text, const std::string& method,
                        const std::string& config) {
  auto model = ClassifierFromJson(json::parse(model_json));
  auto doc = Preprocess("doc", text, PrepConfig{});
  auto e = Explain(ParseExplainMethod(method), *model, doc, 1, ExplainConfigFromJson(json::parse(config)));
  return ToJson(e).dump();
}

std::string Simulate(const std::string& config, const std::vector<std::string>& texts,
                     const std::vector<std::string>& labels) {
  if (texts.size() != labels.size()) throw ArgumentError("texts and labels differ in length");
  std::vector<Label> gold;
  for (const auto& l : labels) gold.push_back(ParseLabel(l));
  auto run = RunSimulation(SimulationConfigFromJson(json::parse(config)), Prepare(texts), gold);
  return ToJson(run).dump();
}

std::string RunRecorded(const std::string& command, const std::string& config) {
  return ToJson(RunAndRecord(command, nlohmann::ordered_json::parse(config), false)).dump();
}

std::string ReplayManifest(const std::string& path) {
  auto r = Replay(path);
  json mismatches = json::array();
  for (const auto& m : r.mismatches) mismatches.push_back({{"path", m.path}, {"expected", m.expected}, {"actual", m.actual}});
  return json{{"identical", r.identical}, {"mismatches", mismatches}}.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "debtscope core bindings";
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def("sample_size", &SampleSizeFor, py::arg("population"), py::arg("confidence") = 0.95,
        py::arg("margin") = 0.05, py::arg("proportion") = 0.5, py::arg("fpc") = true);
  m.def("preprocess", &Tokens, py::arg("text"));
  m.def("filter_texts", &FilterTexts, py::arg("texts"), py::arg("keywords"), py::arg("threshold"),
        py::arg("ngrams"), py::arg("dimension"));
  m.def("metrics", &MetricsJson, py::arg("predicted"), py::arg("gold"), py::arg("positive") = 1);
  m.def("cohens_kappa", &Kappa, py::arg("a"), py::arg("b"));
  m.def("generate_synthetic", &Synthetic, py::arg("num_docs"), py::arg("seed"));
  m.def("train", &Train, py::arg("texts"), py::arg("labels"), py::arg("spec"));
  m.def("predict", &Predict, py::arg("model"), py::arg("texts"));
  m.def("explain", &ExplainText, py::arg("model"), py::arg("text"), py::arg("method"), py::arg("config"));
  m.def("simulate", &Simulate, py::arg("config"), py::arg("texts"), py::arg("labels"));
  m.def("strategies", &StrategyNames);
  m.def("run_command", &RunRecorded, py::arg("command"), py::arg("config"));
  m.def("replay", &ReplayManifest, py::arg("manifest"));
}
