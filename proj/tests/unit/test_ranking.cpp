#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "contrarank/errors.hpp"
#include "contrarank/ranking.hpp"
#include "fuzz.hpp"

using namespace contrarank;

namespace {

ScoredCandidate cand(double qa, double e, double n, double c) {
  ScoredCandidate s;
  s.answer_text = "a";
  s.hypothesis_text = "h";
  s.qa_confidence = qa;
  s.nli = {e, n, c};
  return s;
}

QuestionRecord record(std::vector<ScoredCandidate> cs) {
  QuestionRecord r;
  r.question_id = "q";
  r.dataset_id = "d";
  r.context_text = "ctx";
  r.gold.choice_index = 0;
  r.candidates = std::move(cs);
  return r;
}

CalibrationModel model(const char* fs, double b, std::vector<double> w) {
  CalibrationModel m;
  m.feature_set = FeatureSet::parse(fs);
  m.intercept = b;
  m.weights = std::move(w);
  return m;
}

}  // namespace

TEST_SUITE("ranking") {
  TEST_CASE("rank_score") {
    const auto c = cand(0.3, 0.64, 0.16, 0.2);
    CHECK(rank_score(RankingPolicy::single(Feature::kEntail), c) == 0.64);
    CHECK(rank_score(RankingPolicy::single(Feature::kContradict), c) == 0.8);
    CHECK(rank_score(RankingPolicy::single(Feature::kQa), c) == 0.3);
    CHECK(rank_score(RankingPolicy::single(Feature::kNeutral), c) == 0.16);
    CHECK(rank_score(RankingPolicy::calibrated(model("E+C", 0, {0, 0})), c) == 0.5);
  }

  TEST_CASE("select_answer examples") {
    auto r = record({cand(0, 0.1, 0, 0.9), cand(0, 0.8, 0.1, 0.1), cand(0, 0.5, 0.1, 0.4)});
    const auto ranked = select_answer(RankingPolicy::single(Feature::kContradict), r);
    CHECK(selected_index(ranked) == 1);
    CHECK(std::count_if(ranked.begin(), ranked.end(), [](auto& a) { return a.selected; }) == 1);

    r = record({cand(0.2, 0, 0, 1), cand(0.5, 0, 0, 1), cand(0.5, 0, 0, 1)});
    CHECK(selected_index(select_answer(RankingPolicy::single(Feature::kQa), r)) == 1);

    r = record({cand(0.8, 0.6, 0.3, 0.1), cand(0.8, 0.6, 0.0, 0.4 + 0.3)});
    const auto m = model("QA+E+C", 0.1, {2.0, 1.5, -1.3});
    CHECK(selected_index(select_answer(RankingPolicy::calibrated(m), r)) == 0);

    CHECK_THROWS_AS(select_answer(RankingPolicy::single(Feature::kQa), record({})), InputError);
  }

  TEST_CASE("question_confidence") {
    auto r = record({cand(0.2, 0.1, 0.2, 0.7), cand(0.93, 0.5, 0.3, 0.2)});
    CHECK(question_confidence(RankingPolicy::single(Feature::kQa), r) == 0.93);
    r = record({cand(0.5, 0.41, 0.54, 0.05)});
    CHECK(question_confidence(RankingPolicy::single(Feature::kEntail), r) == 0.41);
    CHECK(question_confidence(RankingPolicy::single(Feature::kContradict), r) == 0.95);
  }

  TEST_CASE("explain_selection") {
    const auto r = record({cand(0.9, 0.6, 0.3, 0.1), cand(0.1, 0.1, 0.2, 0.7), cand(0.2, 0.3, 0.4, 0.3),
                           cand(0.3, 0.2, 0.2, 0.6)});
    const auto ex = explain_selection(RankingPolicy::single(Feature::kQa), r);
    REQUIRE(ex.size() == 4);
    CHECK(ex[0].selected);
    CHECK(ex[0].dominant == NliClass::kEntailment);
    CHECK_FALSE(ex[0].contradicted);
    CHECK(ex[1].dominant == NliClass::kContradiction);
    CHECK(ex[1].contradicted);
    CHECK(ex[2].dominant == NliClass::kNeutral);
    CHECK(std::count_if(ex.begin(), ex.end(), [](auto& e) { return !e.selected; }) == 3);
    CHECK(to_string(NliClass::kContradiction) == "contradiction");
    CHECK(dominant_class({0.4, 0.4, 0.2}) == NliClass::kEntailment);
    CHECK(dominant_class({0.2, 0.4, 0.4}) == NliClass::kNeutral);
  }

  TEST_CASE("policy parsing and names") {
    CHECK(RankingPolicy::parse("qa").name() == "QA");
    CHECK(RankingPolicy::parse("C").name() == "C");
    CHECK_THROWS_AS(RankingPolicy::parse("x"), ConfigError);
    CHECK_THROWS(RankingPolicy::parse("calibrated:/no/such/model.json"));
    CHECK(RankingPolicy::calibrated(model("QA+E+C", 0, {1, 1, 1})).name() == "QA+E+C");
  }

  TEST_CASE("single(C) is the argmin of contradiction") {
    Rng rng(5);
    for (std::size_t i = 0; i < 500; ++i) {
      const auto r = fuzz::mc_record(rng, i, 2 + rng.below(5), i % 2 ? 10 : 0);
      std::size_t best = 0;
      for (std::size_t k = 1; k < r.candidates.size(); ++k)
        if (r.candidates[k].nli.contradict < r.candidates[best].nli.contradict) best = k;
      CHECK(selected_index(select_answer(RankingPolicy::single(Feature::kContradict), r)) == best);
    }
  }

  TEST_CASE("select_all matches per-record selection on both backends") {
    Rng rng(6);
    std::vector<QuestionRecord> rs;
    for (std::size_t i = 0; i < 3000; ++i) rs.push_back(fuzz::mc_record(rng, i, 2 + rng.below(4), 8));
    const auto m = model("QA+E+C", -0.2, {1.3, 0.7, -2.0});
    for (const auto& p : {RankingPolicy::single(Feature::kQa), RankingPolicy::single(Feature::kContradict),
                          RankingPolicy::calibrated(m)}) {
      const auto par = select_all(p, rs);
      CHECK(par == select_all(p, rs, Backend::kSerial));
      for (std::size_t i = 0; i < rs.size(); ++i) CHECK(par[i] == selected_index(select_answer(p, rs[i])));
    }
  }
}
