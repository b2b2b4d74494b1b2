#include "debtscope/synthetic.h"

#include <array>
#include <cmath>
#include <string>
#include <unordered_map>

#include "debtscope/error.h"
#include "debtscope/util.h"

namespace debtscope {

namespace {

const std::vector<std::string> kAtdCommon = {
    "architecture", "dependency", "coupling",  "layering",  "refactor", "module",
    "interface",    "circular",   "monolith",  "decouple",  "abstraction", "component",
};

const std::vector<std::string> kAtdRare = {
    "cyclic",     "bypass",      "layer",      "facade",     "adapter",    "boundary",   "subsystem",
    "microservice", "shim",      "workaround", "entangle",   "godclass",   "hub",        "modularity",
    "encapsulation", "leaky",    "upstream",   "downstream", "legacy",     "migration",  "split",
    "extract",    "restructure", "spaghetti",  "hardwired",  "hardcoded",  "duplication", "shared",
    "classpath",  "package",     "namespace",  "plugin",     "registry",   "singleton",  "global",
    "inheritance", "hierarchy",  "contract",   "protocol",   "schema",     "ownership",  "cohesion",
    "tangled",    "overlap",     "redundant",  "scatter",    "centralize", "consolidate", "partition",
    "isolate",
};

const std::vector<std::string> kOtherCommon = {
    "typo",    "crash",    "button", "exception", "translation", "documentation",
    "spelling", "tooltip", "color",  "timeout",   "warning",     "display",
};

const std::vector<std::string> kOtherRare = {
    "nullpointer", "overflow",  "locale",   "font",      "icon",     "padding",  "margin",    "scroll",
    "keyboard",    "shortcut",  "dialog",   "checkbox",  "dropdown", "javadoc",  "readme",    "changelog",
    "license",     "copyright", "version",  "release",   "flaky",    "assertion", "stacktrace", "regression",
    "encoding",    "unicode",   "newline",  "whitespace", "indent",  "format",   "rounding",  "precision",
    "date",        "timezone",  "password", "login",     "session",  "cookie",   "cache",     "memory",
    "leak",        "deadlock",  "race",     "thread",    "socket",   "port",     "proxy",     "certificate",
    "upload",      "download",
};

const std::vector<std::string> kProjects = {"ALPHA", "BRAVO", "CHARLIE", "DELTA", "ECHO"};

const std::array<const char*, 16> kOnsets = {"b", "d", "f", "g", "k", "l", "m", "n",
                                             "p", "r", "s", "t", "v", "z", "br", "st"};
const std::array<const char*, 5> kVowels = {"a", "e", "i", "o", "u"};
const std::array<const char*, 6> kCodas = {"", "n", "r", "l", "m", "x"};

// Pronounceable filler vocabulary, disjoint from the planted lists.
std::vector<std::string> MakeFiller(size_t count, Rng& rng) {
  std::vector<std::string> words;
  std::unordered_map<std::string, bool> seen;
  while (words.size() < count) {
    int syllables = 2 + static_cast<int>(rng.Below(2));
    std::string w;
    for (int s = 0; s < syllables; ++s) {
      w += kOnsets[rng.Below(kOnsets.size())];
      w += kVowels[rng.Below(kVowels.size())];
    }
    w += kCodas[rng.Below(kCodas.size())];
    if (seen.emplace(w, true).second) words.push_back(w);
  }
  return words;
}

// Zipf-like draw over [0, n).
size_t ZipfIndex(size_t n, Rng& rng) {
  double u = rng.Uniform();
  double x = std::exp(u * std::log(static_cast<double>(n) + 1.0)) - 1.0;
  return std::min(static_cast<size_t>(x), n - 1);
}

const std::string& Pick(const std::vector<std::string>& v, Rng& rng) { return v[rng.Below(v.size())]; }

}  // namespace

SyntheticCorpus GenerateSynthetic(const SyntheticConfig& config) {
  if (config.num_docs == 0) throw ArgumentError("synthetic corpus needs at least one document");
  if (!(config.atd_fraction > 0.0 && config.atd_fraction < 1.0)) {
    throw ArgumentError("atd_fraction must lie in (0, 1)");
  }
  Rng vocab_rng(DeriveSeed(config.seed, "vocab"));
  const std::vector<std::string> filler = MakeFiller(1500, vocab_rng);

  Rng rng(DeriveSeed(config.seed, "docs"));
  std::vector<Document> docs;
  std::vector<Label> gold;
  docs.reserve(config.num_docs);
  gold.reserve(config.num_docs);

  for (size_t i = 0; i < config.num_docs; ++i) {
    const bool atd = rng.Uniform() < config.atd_fraction;
    const auto& own_common = atd ? kAtdCommon : kOtherCommon;
    const auto& own_rare = atd ? kAtdRare : kOtherRare;
    const auto& other_common = atd ? kOtherCommon : kAtdCommon;

    std::vector<std::string> signal;
    const bool easy = rng.Uniform() < 0.55;
    if (easy) {
      int k = 2 + static_cast<int>(rng.Below(3));
      for (int j = 0; j < k; ++j) signal.push_back(Pick(own_common, rng));
    } else {
      signal.push_back(Pick(own_rare, rng));
      if (rng.Uniform() < 0.5) signal.push_back(Pick(own_rare, rng));
      if (rng.Uniform() < 0.6) signal.push_back(Pick(other_common, rng));
    }

    const size_t length = 12 + rng.Below(24);
    std::vector<std::string> words;
    words.reserve(length + signal.size());
    for (size_t j = 0; j < length; ++j) words.push_back(filler[ZipfIndex(filler.size(), rng)]);
    for (const auto& s : signal) {
      size_t pos = rng.Below(words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), s);
    }

    const size_t summary_len = std::min<size_t>(words.size(), 4 + rng.Below(4));
    std::string summary, description;
    for (size_t j = 0; j < words.size(); ++j) {
      std::string& target = j < summary_len ? summary : description;
      if (!target.empty()) target += ' ';
      target += words[j];
    }

    Label label = atd ? Label::kATD : Label::kNonATD;
    if (atd && rng.Uniform() < config.weak_fraction) label = Label::kWeakATD;
    if (rng.Uniform() < config.label_noise) label = atd ? Label::kNonATD : Label::kATD;

    Document d;
    d.id = "SYN-" + std::to_string(i + 1);
    d.project = kProjects[i % kProjects.size()];
    d.summary = std::move(summary);
    d.description = std::move(description);
    d.unified_text = UnifyText(d.summary, d.description);
    d.status = Status::kResolved;
    docs.push_back(std::move(d));
    gold.push_back(label);
  }

  CorpusManifest manifest;
  manifest.source_path = "synthetic:seed=" + std::to_string(config.seed);
  manifest.ingest_time = "1970-01-01T00:00:00Z";
  manifest.resolved = docs.size();
  return {Corpus(std::move(docs), std::move(manifest)), std::move(gold)};
}

}  // namespace debtscope
