#include "doctest.h"
#include "debtscope/error.h"
#include "debtscope/textprep.h"

using namespace debtscope;

TEST_CASE("porter stemmer reference vocabulary") {
  const std::vector<std::pair<const char*, const char*>> cases = {
      {"caresses", "caress"},   {"ponies", "poni"},       {"ties", "ti"},          {"caress", "caress"},
      {"cats", "cat"},          {"feed", "feed"},         {"agreed", "agre"},      {"plastered", "plaster"},
      {"bled", "bled"},         {"motoring", "motor"},    {"sing", "sing"},        {"conflated", "conflat"},
      {"troubled", "troubl"},   {"sized", "size"},        {"hopping", "hop"},      {"tanned", "tan"},
      {"falling", "fall"},      {"hissing", "hiss"},      {"fizzed", "fizz"},      {"failing", "fail"},
      {"filing", "file"},       {"happy", "happi"},       {"sky", "sky"},          {"relational", "relat"},
      {"conditional", "condit"}, {"rational", "ration"},  {"digitizer", "digit"},  {"operator", "oper"},
      {"feudalism", "feudal"},  {"decisiveness", "decis"}, {"hopefulness", "hope"}, {"callousness", "callous"},
      {"triplicate", "triplic"}, {"formative", "form"},   {"formalize", "formal"}, {"electrical", "electr"},
      {"hopeful", "hope"},      {"goodness", "good"},     {"revival", "reviv"},    {"allowance", "allow"},
      {"inference", "infer"},   {"airliner", "airlin"},   {"adjustable", "adjust"}, {"defensible", "defens"},
      {"irritant", "irrit"},    {"replacement", "replac"}, {"adjustment", "adjust"}, {"dependent", "depend"},
      {"adoption", "adopt"},    {"communism", "commun"},  {"activate", "activ"},   {"effective", "effect"},
      {"probate", "probat"},    {"rate", "rate"},         {"cease", "ceas"},       {"controll", "control"},
      {"roll", "roll"},         {"generalization", "gener"}, {"dependency", "depend"}, {"refactor", "refactor"},
  };
  for (const auto& [in, out] : cases) {
    CAPTURE(in);
    CHECK(PorterStem(in) == out);
  }
}

TEST_CASE("preprocess lowercases, drops stop words and stems") {
  auto d = Preprocess("d1", "Refactor the Dependency!", PrepConfig{});
  CHECK(d.tokens == std::vector<std::string>{"refactor", "depend"});
  REQUIRE(d.raw_spans.size() == 2);
  CHECK(d.raw_spans[0] == std::make_pair<size_t, size_t>(0, 8));
  CHECK(d.raw_spans[1] == std::make_pair<size_t, size_t>(13, 23));
}

TEST_CASE("preprocess strips markup, urls and numbers") {
  const std::string text = "See {code}int x = 1;{code} and https://example.org/a?b=1 issue 4711 layering";
  auto d = Preprocess("d", text, PrepConfig{});
  CHECK(d.tokens == std::vector<std::string>{"see", "issu", "layer"});
  for (size_t i = 0; i < d.tokens.size(); ++i) {
    auto [b, e] = d.raw_spans[i];
    CHECK(e > b);
    CHECK(e <= text.size());
  }
}

TEST_CASE("preprocess is idempotent") {
  const std::vector<std::string> texts = {
      "Generalizations of the relational operators were conditionally adopted",
      "Cyclic dependencies between the UI layer and persistence; bypassing the facade",
      "happy hopping ponies feed agreed formalities",
  };
  for (const auto& t : texts) {
    auto once = Preprocess("x", t, PrepConfig{});
    std::string joined = JoinTokens(once.tokens, 0, once.tokens.size());
    auto twice = Preprocess("x", joined, PrepConfig{});
    CHECK(twice.tokens == once.tokens);
  }
}

TEST_CASE("config switches") {
  PrepConfig raw{false, false, 1};
  CHECK(Tokenize("The Dependencies", raw) == std::vector<std::string>{"the", "dependencies"});
  PrepConfig longish{true, true, 5};
  CHECK(Tokenize("move the big dependency", longish) == std::vector<std::string>{"depend"});
}

TEST_CASE("ngrams") {
  TokenizedDoc d{"d", {"a", "b", "c"}, {}};
  auto bi = NGrams(d, 2);
  REQUIRE(bi.size() == 2);
  CHECK(bi[0].text == "a b");
  CHECK(bi[1].start_index == 1);
  CHECK(NGrams(d, 3).size() == 1);
  CHECK(NGrams(TokenizedDoc{"e", {"a"}, {}}, 2).empty());
  CHECK_THROWS_AS(NGrams(d, 4), ArgumentError);
  CHECK_THROWS_AS(NGrams(d, 0), ArgumentError);
}
