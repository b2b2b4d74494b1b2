#include "debtscope/textprep.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>
#include <unordered_set>

#include "debtscope/error.h"

namespace debtscope {

namespace {

// Bundled English stop-word list (en-basic-v1). Append-only; any change
// requires bumping kStopWordListVersion.
constexpr std::array<std::string_view, 179> kStopWords = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've", "you'll",
    "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "she's",
    "her", "hers", "herself", "it", "it's", "its", "itself", "they", "them", "their", "theirs",
    "themselves", "what", "which", "who", "whom", "this", "that", "that'll", "these", "those", "am",
    "is", "are", "was", "were", "be", "been", "being", "have", "has", "had", "having", "do", "does",
    "did", "doing", "a", "an", "the", "and", "but", "if", "or", "because", "as", "until", "while", "of",
    "at", "by", "for", "with", "about", "against", "between", "into", "through", "during", "before",
    "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over", "under",
    "again", "further", "then", "once", "here", "there", "when", "where", "why", "how", "all", "any",
    "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not", "only", "own",
    "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don", "don't", "should",
    "should've", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn",
    "couldn't", "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven",
    "haven't", "isn", "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't",
    "shan", "shan't", "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't",
    "wouldn", "wouldn't"};

const std::unordered_set<std::string_view>& StopWordSet() {
  static const std::unordered_set<std::string_view> set(kStopWords.begin(), kStopWords.end());
  return set;
}

bool IsAlnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

void Blank(std::string& s, size_t begin, size_t end) {
  for (size_t i = begin; i < end && i < s.size(); ++i) s[i] = ' ';
}

// Blanks everything between paired `open` markers, markers included. An
// unterminated block extends to the end of the text.
void BlankPairedBlocks(std::string& s, const std::regex& marker) {
  std::vector<std::pair<size_t, size_t>> hits;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), marker); it != std::sregex_iterator(); ++it) {
    hits.emplace_back(static_cast<size_t>(it->position()), static_cast<size_t>(it->position() + it->length()));
  }
  for (size_t i = 0; i < hits.size(); i += 2) {
    size_t end = (i + 1 < hits.size()) ? hits[i + 1].second : s.size();
    Blank(s, hits[i].first, end);
  }
}

}  // namespace

bool IsStopWord(std::string_view lowercase_word) { return StopWordSet().contains(lowercase_word); }

std::string StripMarkup(std::string_view text) {
  static const std::regex kCodeMarker(R"(\{code(:[^}]*)?\})", std::regex::icase);
  static const std::regex kNoformatMarker(R"(\{noformat(:[^}]*)?\})", std::regex::icase);
  static const std::regex kFence("```");
  static const std::regex kMacro(R"(\{(quote|color|panel|note|warning|info|tip)(:[^}]*)?\})", std::regex::icase);
  static const std::regex kUrl(R"((https?|ftp)://[^\s\]\)\}|>]+|www\.[^\s\]\)\}|>]+)", std::regex::icase);

  std::string s(text);
  const bool may_have_markup = s.find_first_of("{`") != std::string::npos ||
                               s.find("://") != std::string::npos || s.find("www.") != std::string::npos || s.find("WWW.") != std::string::npos;
  if (!may_have_markup) return s;
  BlankPairedBlocks(s, kCodeMarker);
  BlankPairedBlocks(s, kNoformatMarker);
  BlankPairedBlocks(s, kFence);
  for (const auto* re : {&kMacro, &kUrl}) {
    std::vector<std::pair<size_t, size_t>> hits;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), *re); it != std::sregex_iterator(); ++it) {
      hits.emplace_back(static_cast<size_t>(it->position()), static_cast<size_t>(it->position() + it->length()));
    }
    for (auto [b, e] : hits) Blank(s, b, e);
  }
  return s;
}

TokenizedDoc Preprocess(std::string_view doc_id, std::string_view text, const PrepConfig& config) {
  TokenizedDoc out;
  out.doc_id = std::string(doc_id);
  const std::string clean = StripMarkup(text);
  const size_t min_len = static_cast<size_t>(std::max(1, config.min_token_len));

  size_t i = 0;
  while (i < clean.size()) {
    if (!IsAlnum(clean[i])) {
      ++i;
      continue;
    }
    size_t begin = i;
    bool has_letter = false;
    while (i < clean.size() && IsAlnum(clean[i])) {
      has_letter |= std::isalpha(static_cast<unsigned char>(clean[i])) != 0;
      ++i;
    }
    if (!has_letter) continue;  // bare numbers carry no signal
    std::string token(clean.substr(begin, i - begin));
    for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (config.remove_stopwords && IsStopWord(token)) continue;
    if (config.stem) {
      token = StemToFixpoint(token);
      // A stem can collide with a stop word ("wills" -> "will").
      if (config.remove_stopwords && IsStopWord(token)) continue;
    }
    if (token.size() < min_len) continue;
    out.tokens.push_back(std::move(token));
    out.raw_spans.emplace_back(begin, i);
  }
  return out;
}

TokenizedDoc Preprocess(const Document& doc, const PrepConfig& config) {
  return Preprocess(doc.id, doc.unified_text, config);
}

std::vector<std::string> Tokenize(std::string_view text, const PrepConfig& config) {
  return Preprocess("", text, config).tokens;
}

std::string JoinTokens(const std::vector<std::string>& tokens, size_t begin, size_t end) {
  std::string out;
  for (size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out.append(tokens[i]);
  }
  return out;
}

std::vector<NGram> NGrams(const TokenizedDoc& doc, int n) {
  if (n < 1 || n > 3) throw ArgumentError("n-gram size must be 1, 2 or 3 (got " + std::to_string(n) + ")");
  std::vector<NGram> out;
  const size_t un = static_cast<size_t>(n);
  if (doc.tokens.size() < un) return out;
  out.reserve(doc.tokens.size() - un + 1);
  for (size_t s = 0; s + un <= doc.tokens.size(); ++s) {
    out.push_back(NGram{JoinTokens(doc.tokens, s, s + un), n, doc.doc_id, s});
  }
  return out;
}

}  // namespace debtscope
