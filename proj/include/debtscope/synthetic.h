#pragma once

#include <cstdint>
#include <vector>

#include "debtscope/corpus.h"

namespace debtscope {

// Two-class issue corpus with planted keyword distributions, used for the
// simulated-oracle experiments. Fully determined by the seed.
struct SyntheticConfig {
  size_t num_docs = 3000;
  double atd_fraction = 0.3;
  double weak_fraction = 0.15;  // share of ATD docs marked WeakATD
  double label_noise = 0.02;
  uint64_t seed = 7;
};

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<Label> gold;  // parallel to corpus.documents
};

SyntheticCorpus GenerateSynthetic(const SyntheticConfig& config = SyntheticConfig{});

}  // namespace debtscope
