#include "doctest.h"
#include "oracles.h"
#include "debtscope/error.h"
#include "debtscope/stats.h"
#include "debtscope/util.h"

using namespace debtscope;

TEST_CASE("sample size reproduces the reference table") {
  for (const auto& [population, expected] : oracle::kSampleSizeTable) {
    CAPTURE(population);
    CHECK(SampleSize({population}) == expected);
  }
  auto r = ComputeSampleSize({1000000});
  CHECK(r.uncorrected == 384);
  CHECK(r.uncorrected_exact == doctest::Approx(384.16));
  CHECK(r.z == 1.96);
}

TEST_CASE("sample size edge cases") {
  CHECK(SampleSize({1}) == 1);
  CHECK(SampleSize({24823, 0.99}) > SampleSize({24823, 0.95}));
  CHECK(SampleSize({24823, 0.90}) < SampleSize({24823, 0.95}));
  CHECK_THROWS_AS(SampleSize({0}), ArgumentError);
  CHECK_THROWS_AS(SampleSize({100, 0.8}), ArgumentError);
  CHECK_THROWS_AS(SampleSize({100, 0.95, 0.0}), ArgumentError);
  CHECK_THROWS_AS(SampleSize({100, 0.95, 0.05, 1.5}), ArgumentError);
}

TEST_CASE("metrics on a fixed confusion") {
  // tp = 72, fp = 28, fn = 29
  std::vector<int> pred, gold;
  for (int i = 0; i < 72; ++i) pred.push_back(1), gold.push_back(1);
  for (int i = 0; i < 28; ++i) pred.push_back(1), gold.push_back(0);
  for (int i = 0; i < 29; ++i) pred.push_back(0), gold.push_back(1);
  for (int i = 0; i < 50; ++i) pred.push_back(0), gold.push_back(0);
  auto m = ComputeMetrics(pred, gold, 1);
  CHECK(m.precision == doctest::Approx(0.72));
  CHECK(m.recall == doctest::Approx(72.0 / 101.0));
  CHECK(m.f1 == doctest::Approx(2 * 0.72 * (72.0 / 101.0) / (0.72 + 72.0 / 101.0)));
  CHECK(m.confusion == Confusion{72, 28, 29, 50});
  CHECK(ComputeMetrics(std::vector<int>{0, 0}, std::vector<int>{0, 0}, 1).f1 == 0.0);
  CHECK_THROWS_AS(ComputeMetrics(std::vector<int>{1}, std::vector<int>{1, 0}, 1), ArgumentError);
}

TEST_CASE("metrics and kappa match brute force on random vectors") {
  Rng rng(2024);
  for (int t = 0; t < 1000; ++t) {
    size_t n = 1 + rng.Below(60);
    int k = 2 + static_cast<int>(rng.Below(2));
    std::vector<int> a(n), b(n);
    for (size_t i = 0; i < n; ++i) {
      a[i] = static_cast<int>(rng.Below(k));
      b[i] = rng.Uniform() < 0.6 ? a[i] : static_cast<int>(rng.Below(k));
    }
    auto m = ComputeMetrics(a, b, 1);
    auto o = oracle::BruteMetrics(a, b, 1);
    CHECK(m.precision == doctest::Approx(o.precision).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(o.recall).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(o.f1).epsilon(1e-12));
    CHECK(CohensKappa(a, b) == doctest::Approx(oracle::BruteKappa(a, b, k)).epsilon(1e-12));
    CHECK(CohensKappa(a, a) == 1.0);
  }
}

TEST_CASE("kappa fixture") {
  // 50 items: 20 agree-yes, 15 agree-no, 10 yes/no, 5 no/yes.
  // p_o = 0.7, p_e = 0.6*0.5 + 0.4*0.5 = 0.5, kappa = 0.4.
  std::vector<int> a, b;
  auto add = [&](int x, int y, int count) {
    for (int i = 0; i < count; ++i) a.push_back(x), b.push_back(y);
  };
  add(1, 1, 20);
  add(0, 0, 15);
  add(1, 0, 10);
  add(0, 1, 5);
  CHECK(CohensKappa(a, b) == doctest::Approx(0.4));
  // 0.6 fixture: p_o = 0.8, p_e = 0.5.
  a.clear();
  b.clear();
  add(1, 1, 40);
  add(0, 0, 40);
  add(1, 0, 10);
  add(0, 1, 10);
  CHECK(CohensKappa(a, b) == doctest::Approx(0.6));
  CHECK_THROWS_AS(CohensKappa(std::vector<int>{}, std::vector<int>{}), ArgumentError);
}

TEST_CASE("adjudication resolution cases") {
  auto rec = [](Label l, bool maybe, const char* who) { return LabelRecord{"D", who, l, maybe, std::nullopt}; };
  SUBCASE("Maybe | Non-ATD against Non-ATD resolves to Non-ATD") {
    std::vector<LabelRecord> r = {rec(Label::kNonATD, true, "a"), rec(Label::kNonATD, false, "b")};
    auto out = Adjudicate(r);
    CHECK(out.final == Label::kNonATD);
    CHECK_FALSE(out.needs_adjudication);
  }
  SUBCASE("Maybe | ATD against ATD resolves to Weak-ATD") {
    std::vector<LabelRecord> r = {rec(Label::kATD, true, "a"), rec(Label::kATD, false, "b")};
    CHECK(Adjudicate(r).final == Label::kWeakATD);
  }
  SUBCASE("ATD against Non-ATD goes to a third annotator") {
    std::vector<LabelRecord> r = {rec(Label::kATD, false, "a"), rec(Label::kNonATD, false, "b")};
    auto pending = Adjudicate(r);
    CHECK(pending.needs_adjudication);
    CHECK_FALSE(pending.final);
    CHECK(Adjudicate(r, Label::kATD).final == Label::kATD);
    CHECK(Adjudicate(r, Label::kNonATD).final == Label::kNonATD);
  }
  SUBCASE("agreement") {
    std::vector<LabelRecord> r = {rec(Label::kATD, false, "a"), rec(Label::kATD, false, "b")};
    CHECK(Adjudicate(r).final == Label::kATD);
  }
  SUBCASE("single record is rejected") {
    std::vector<LabelRecord> r = {rec(Label::kATD, false, "a")};
    CHECK_THROWS_AS(Adjudicate(r), ArgumentError);
  }
}

TEST_CASE("adjudicate all groups by document") {
  std::vector<LabelRecord> recs = {
      {"D1", "a", Label::kATD, false, std::nullopt},
      {"D2", "a", Label::kNonATD, false, std::nullopt},
      {"D1", "b", Label::kNonATD, false, std::nullopt},
      {"D2", "b", Label::kNonATD, true, std::nullopt},
      {"D3", "a", Label::kATD, false, std::nullopt},
  };
  auto out = AdjudicateAll(recs, {{"D1", Label::kATD}});
  REQUIRE(out.size() == 3);
  CHECK(out[0].doc_id == "D1");
  CHECK(out[0].result.final == Label::kATD);
  CHECK(out[1].result.final == Label::kNonATD);
  CHECK(out[2].result.needs_adjudication);
}
