#include <doctest.h>

#include <cmath>
#include <fstream>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <json.hpp>

#include "contrarank/metrics.hpp"
#include "contrarank/random.hpp"
#include "oracles.hpp"

using namespace contrarank;

TEST_SUITE("metrics") {
  TEST_CASE("normalize_answer") {
    CHECK(normalize_answer("The  Denver Broncos!") == "denver broncos");
    CHECK(normalize_answer("an apple, a day") == "apple day");
    CHECK(normalize_answer("theory") == "theory");
    CHECK(normalize_answer("...") == "");
  }

  TEST_CASE("token_f1 examples") {
    CHECK(token_f1("Paris", "paris") == 1.0);
    CHECK(token_f1("in Paris France", "Paris") == doctest::Approx(0.5));
    const std::vector<std::string> none;
    CHECK(token_f1("", none) == 1.0);
    CHECK(token_f1("anything", none) == 0.0);
    const std::vector<std::string> only_articles{"the"};
    CHECK(token_f1("", only_articles) == 1.0);
    const std::vector<std::string> mixed{"the", "Paris"};
    CHECK(token_f1("", mixed) == 0.0);
    CHECK(token_f1("Paris", mixed) == 1.0);
  }

  TEST_CASE("token_f1 golden file") {
    std::ifstream in(TEST_DATA_DIR "/token_f1_golden.jsonl");
    REQUIRE(in);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      const auto golds = j["golds"].get<std::vector<std::string>>();
      CAPTURE(line);
      CHECK(token_f1(j["prediction"].get<std::string>(), golds) ==
            doctest::Approx(j["f1"].get<double>()).epsilon(1e-15));
      ++n;
    }
    CHECK(n == 25);
  }

  TEST_CASE("exact_sum is correctly rounded and order-free") {
    const std::vector<double> cancel{1e100, 1.0, -1e100, 1e-100};
    CHECK(exact_sum(cancel) == 1.0);
    const std::vector<double> tenths(10, 0.1);
    CHECK(exact_sum(tenths) == 1.0);
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> v;
      const auto n = 1 + rng.below(40);
      for (std::size_t i = 0; i < n; ++i) v.push_back((rng.uniform() - 0.5) * std::pow(10.0, rng.below(30)));
      const double s = exact_sum(v);
      boost::multiprecision::number<boost::multiprecision::cpp_bin_float<200>> wide = 0;
      for (double x : v) wide += x;
      CHECK(s == static_cast<double>(wide));
      std::vector<double> rev(v.rbegin(), v.rend());
      CHECK(exact_sum(rev) == s);
    }
  }

  TEST_CASE("average ranks share tied positions") {
    const std::vector<double> v{3.0, 1.0, 3.0, 2.0, 3.0};
    CHECK(average_ranks(v) == std::vector<double>{4.0, 1.0, 4.0, 2.0, 4.0});
  }

  TEST_CASE("spearman_rho") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> up{2, 4, 6, 8, 100};
    const std::vector<double> down{5, 4, 3, 2, 1};
    CHECK(*spearman_rho(x, up) == doctest::Approx(1.0));
    CHECK(*spearman_rho(x, down) == doctest::Approx(-1.0));
    const std::vector<double> flat{1, 1, 1, 1, 1};
    CHECK_FALSE(spearman_rho(x, flat).has_value());
    CHECK_FALSE(spearman_rho(std::vector<double>{1.0}, std::vector<double>{2.0}).has_value());
    CHECK_FALSE(spearman_rho(x, std::vector<double>{1, 2}).has_value());
  }

  TEST_CASE("spearman_rho agrees with an O(n^2) reference on tied data") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
      const auto n = 2 + rng.below(200);
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < n; ++i) {
        xs.push_back(static_cast<double>(rng.below(7)));
        ys.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
      }
      const auto got = spearman_rho(xs, ys);
      const double want = oracle::spearman(xs, ys);
      if (std::isnan(want)) {
        CHECK_FALSE(got.has_value());
      } else {
        REQUIRE(got.has_value());
        CHECK(std::fabs(*got - want) <= 1e-12);
      }
    }
  }
}
