#pragma once

// Randomized fixtures shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "debtscope/textprep.h"
#include "debtscope/util.h"
#include "oracles.h"

namespace fixture {

inline const std::vector<std::string> kWords = {
    "layer", "depend", "cyclic", "bypass", "hack",  "todo",   "typo",  "button", "crash", "core",
    "modul", "api",    "coupl",  "legaci", "patch", "config", "cach",  "thread", "queue", "schema",
};

// A document over `distinct` words drawn without replacement, with some
// repeated occurrences.
inline debtscope::TokenizedDoc RandomDoc(debtscope::Rng& rng, size_t distinct, const std::string& id = "fx") {
  std::vector<std::string> pool = kWords;
  rng.Shuffle(pool);
  pool.resize(distinct);
  debtscope::TokenizedDoc doc;
  doc.doc_id = id;
  doc.tokens = pool;
  size_t extra = rng.Below(distinct + 1);
  for (size_t i = 0; i < extra; ++i) doc.tokens.push_back(pool[rng.Below(distinct)]);
  rng.Shuffle(doc.tokens);
  return doc;
}

inline const std::vector<std::string> kFilterVocab = {
    "layer", "bypass", "cyclic", "depend", "core",  "modul", "refactor",
    "typo",  "button", "crash",  "remov",  "api",   "facad", "split"};

// Up to eight tokens drawn with replacement; empty documents included.
inline debtscope::TokenizedDoc RandomFilterDoc(debtscope::Rng& rng, int id) {
  debtscope::TokenizedDoc d;
  d.doc_id = "F-" + std::to_string(id);
  size_t len = rng.Below(9);
  for (size_t i = 0; i < len; ++i) d.tokens.push_back(kFilterVocab[rng.Below(kFilterVocab.size())]);
  return d;
}

struct PlantedFixture {
  debtscope::TokenizedDoc doc;
  std::map<std::string, double> coef;  // nonzero entries only
};

// Linear scorer with `active` nonzero coefficients of random sign and
// magnitudes in [0.03, 0.09] on a doc with `distinct` words. The bias keeps
// every coalition inside (0, 1) so the clamp never engages.
inline PlantedFixture PlantedLinear(uint64_t seed, size_t distinct = 10, size_t active = 5) {
  debtscope::Rng rng(seed);
  PlantedFixture f;
  f.doc = RandomDoc(rng, distinct);
  auto players = debtscope::CollectPlayers(f.doc);
  std::vector<std::string> words = players.tokens;
  rng.Shuffle(words);
  for (size_t i = 0; i < std::min(active, words.size()); ++i) {
    double mag = 0.03 + 0.06 * rng.Uniform();
    f.coef[words[i]] = rng.Uniform() < 0.5 ? -mag : mag;
  }
  return f;
}

}  // namespace fixture
