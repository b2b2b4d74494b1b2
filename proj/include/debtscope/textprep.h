#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "debtscope/corpus.h"

namespace debtscope {

struct PrepConfig {
  bool stem = true;
  bool remove_stopwords = true;
  int min_token_len = 1;

  bool operator==(const PrepConfig&) const = default;
};

struct TokenizedDoc {
  std::string doc_id;
  std::vector<std::string> tokens;
  // Byte offsets [begin, end) into the source text, one per token.
  std::vector<std::pair<size_t, size_t>> raw_spans;
};

struct NGram {
  std::string text;
  int n = 1;
  std::string doc_id;
  size_t start_index = 0;

  bool operator==(const NGram&) const = default;
};

// Version tag of the bundled stop-word list; recorded in run manifests.
inline constexpr std::string_view kStopWordListVersion = "en-basic-v1";

bool IsStopWord(std::string_view lowercase_word);

// Porter (1980) suffix stripper on a lowercase ASCII word.
std::string PorterStem(std::string_view word);

// Applies PorterStem until the word stops changing, so stemming an already
// stemmed token is a no-op.
std::string StemToFixpoint(std::string_view word);

// Blanks Jira {code}/{noformat} blocks, markdown fences, inline markup macros
// and URLs with spaces. Byte offsets of the surviving text are unchanged.
std::string StripMarkup(std::string_view text);

TokenizedDoc Preprocess(std::string_view doc_id, std::string_view text, const PrepConfig& config);
TokenizedDoc Preprocess(const Document& doc, const PrepConfig& config);

// Convenience for embedding and the CLI: tokens only.
std::vector<std::string> Tokenize(std::string_view text, const PrepConfig& config);

std::string JoinTokens(const std::vector<std::string>& tokens, size_t begin, size_t end);

// Consecutive windows of n tokens. Throws ArgumentError unless 1 <= n <= 3.
std::vector<NGram> NGrams(const TokenizedDoc& doc, int n);

}  // namespace debtscope
