#include <cmath>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "oracles.h"
#include "debtscope/embed.h"
#include "debtscope/error.h"
#include "debtscope/util.h"

using namespace debtscope;

TEST_CASE("cosine basics") {
  EmbeddingVector a({1.0, 0.0, 2.0});
  EmbeddingVector b({2.0, 0.0, 4.0});
  EmbeddingVector c({0.0, 3.0, 0.0});
  EmbeddingVector z({0.0, 0.0, 0.0});
  CHECK(Cosine(a, b) == doctest::Approx(1.0));
  CHECK(Cosine(a, c) == 0.0);
  CHECK(Cosine(a, z) == 0.0);
  CHECK(Cosine(a, EmbeddingVector({-1.0, 0.0, -2.0})) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(Cosine(a, EmbeddingVector({1.0})), ArgumentError);
  CHECK(a.nonzeros() == std::vector<uint32_t>{0, 2});
}

TEST_CASE("sparse cosine equals the dense definition bit for bit") {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(64, 0.0), y(64, 0.0);
    for (int i = 0; i < 64; ++i) {
      if (rng.Uniform() < 0.2) x[i] = rng.Normal();
      if (rng.Uniform() < 0.5) y[i] = rng.Normal();
    }
    CHECK(Cosine(EmbeddingVector(x), EmbeddingVector(y)) == oracle::DenseCosine(x, y));
  }
}

TEST_CASE("hashed bag of words is deterministic and normalized") {
  HashedBowProvider p(512, 3);
  auto v1 = p.Embed("Move the dependency out of the core module");
  auto v2 = p.Embed("Move the dependency out of the core module");
  CHECK(v1.values() == v2.values());
  CHECK(v1.norm() == doctest::Approx(1.0));
  CHECK(p.Embed("the of and").norm() == 0.0);
  CHECK(Cosine(p.Embed("dependencies"), p.Embed("dependency")) == doctest::Approx(1.0));
  HashedBowProvider other(512, 4);
  CHECK(other.Embed("dependency").values() != v1.values());
}

TEST_CASE("hashed bag of words approximates set overlap") {
  // Monte Carlo: two documents sharing k of m distinct tokens have expected
  // cosine close to k / m, and disjoint documents close to 0.
  HashedBowProvider p;
  Rng rng(5);
  auto word = [&](int i) { return "tok" + std::string(1, static_cast<char>('a' + i % 26)) + "x" + std::to_string(i) + "q"; };
  double disjoint = 0.0, shared = 0.0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::string> a, b, c;
    for (int i = 0; i < 20; ++i) {
      a.push_back(word(t * 1000 + i));
      c.push_back(word(t * 1000 + 500 + i));
      b.push_back(i < 10 ? a.back() : word(t * 1000 + 100 + i));
    }
    disjoint += Cosine(p.EmbedTokens(a), p.EmbedTokens(c));
    shared += Cosine(p.EmbedTokens(a), p.EmbedTokens(b));
  }
  CHECK(std::fabs(disjoint / trials) < 0.01);
  CHECK(shared / trials == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("tf-idf vector provider") {
  std::vector<TokenizedDoc> docs = {{"a", {"layer", "bypass"}, {}}, {"b", {"layer", "typo"}, {}}};
  TfidfVectorProvider p(docs);
  REQUIRE(p.vocabulary() == std::vector<std::string>{"bypass", "layer", "typo"});
  CHECK(p.idf()[1] == doctest::Approx(std::log(3.0 / 3.0) + 1.0));
  CHECK(p.idf()[0] == doctest::Approx(std::log(3.0 / 2.0) + 1.0));
  CHECK(p.IndexOf("typo") == 2);
  CHECK(p.IndexOf("missing") == -1);
  auto v = p.EmbedTokens({"bypass", "bypass", "unknown"});
  CHECK(v.values()[0] == doctest::Approx(1.0));
  auto back = ProviderFromJson(p.Describe());
  CHECK(back->EmbedTokens({"layer", "typo"}).values() == p.EmbedTokens({"layer", "typo"}).values());
}

TEST_CASE("external provider over http") {
  httplib::Server server;
  server.Get("/meta", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"dimension":3})", "application/json");
  });
  server.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json vectors = nlohmann::json::array();
    for (const auto& t : body["texts"]) {
      double len = static_cast<double>(t.get<std::string>().size());
      vectors.push_back({len, 1.0, t.get<std::string>() == "bad" ? -1.0 : 0.0});
    }
    if (body["texts"].size() == 1 && body["texts"][0] == "short") vectors[0] = {1.0};
    res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ExternalProvider p("127.0.0.1", port, 5.0);
  CHECK(p.dimension() == 3);
  auto v = p.Embed("abcd");
  CHECK(v.values() == std::vector<double>{4.0, 1.0, 0.0});
  auto batch = p.EmbedBatch({"a", "bad"});
  CHECK(batch.size() == 2);
  CHECK_THROWS_AS(p.Embed("short"), ProviderError);

  server.stop();
  t.join();
  CHECK_THROWS_AS(ExternalProvider("127.0.0.1", port, 0.5), ProviderError);
}
