#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "stm/signal.hpp"

using namespace stm;

TEST_CASE("one_hot fixtures") {
  CHECK(one_hot(2, 5) == std::vector<double>{0, 0, 1, 0, 0});
  CHECK(one_hot(0, 1) == std::vector<double>{1});
  for (int k = 0; k < 4; ++k) {
    auto v = one_hot(k, 4);
    double s = 0.0;
    for (double x : v) s += x;
    CHECK(s == 1.0);
  }
  CHECK_THROWS_AS(one_hot(5, 5), ValidationError);
}

TEST_CASE("sentiment proportions") {
  SentimentLexicon lex;
  lex.positive = {"good"};
  lex.negative = {"bad"};
  auto [p, n] = sentiment({"good", "bad", "thing"}, lex);
  CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(n == doctest::Approx(1.0 / 3).epsilon(1e-12));

  auto [p2, n2] = sentiment({"thing", "stuff"}, lex);
  CHECK(p2 == 0.0);
  CHECK(n2 == 0.0);

  auto [p3, n3] = sentiment({"good", "good"}, lex);
  CHECK(p3 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(n3 == 0.0);

  SentimentLexicon clash;
  clash.positive = {"odd"};
  clash.negative = {"odd"};
  CHECK_THROWS_AS(clash.validate(), ValidationError);
}

TEST_CASE("daily_aggregate fixtures") {
  std::vector<TweetRecord> recs;
  recs.push_back({100, 0, 0.2, 0.0});     // day 0
  recs.push_back({200, 1, 0.4, 0.1});     // day 0
  recs.push_back({90000, 1, 0.6, 0.2});   // day 1
  auto days = daily_aggregate(recs, 2);
  REQUIRE(days.size() == 2);
  CHECK(days[0].day == 0);
  CHECK(days[0].t == std::vector<double>{0.5, 0.5});
  CHECK(days[0].p == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(days[0].n == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(days[0].tweet_count == 2);
  CHECK(days[1].t == std::vector<double>{0.0, 1.0});  // single tweet one-hot

  // negative timestamps floor toward earlier days
  std::vector<TweetRecord> pre;
  pre.push_back({-1, 0, 0.0, 0.0});
  auto d = daily_aggregate(pre, 1);
  CHECK(d[0].day == -1);
}

TEST_CASE("align_next_day_returns") {
  std::vector<DailyFeatures> feats;
  for (long day = 0; day < 8; ++day) {
    DailyFeatures f;
    f.day = day;
    f.t = {1.0, 0.0};
    f.p = 0.1;
    f.n = 0.2;
    f.tweet_count = 1;
    feats.push_back(f);
  }
  std::vector<PricePoint> prices;
  for (long day = 0; day <= 8; ++day)
    if (day != 4) prices.push_back({day, 100.0 + day * 10.0});

  std::vector<std::vector<double>> X;
  std::vector<double> y;
  align_next_day_returns(feats, prices, &X, &y);
  // day 3 (missing d+1) and day 4 (missing d) are dropped
  REQUIRE(X.size() == 6);
  CHECK(y[0] == doctest::Approx(110.0 / 100.0 - 1.0).epsilon(1e-12));
  CHECK(X[0] == std::vector<double>{0.1, 0.2, 1.0, 0.0});  // p, n, t order

  std::vector<PricePoint> sparse = {{0, 100.0}, {1, 110.0}};
  CHECK_THROWS_AS(align_next_day_returns(feats, sparse, &X, &y), DataError);
}

TEST_CASE("ols_fit exact line is degenerate-flagged") {
  std::vector<std::vector<double>> X = {{1, 1}, {1, 2}, {1, 3}};
  std::vector<double> y = {2, 4, 6};
  auto fit = ols_fit(X, y);
  CHECK(fit.coef[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(fit.coef[1] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(fit.degenerate);
  CHECK(fit.stderr_[0] == 0.0);
  CHECK(fit.pvalue[0] == 0.0);
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("ols_fit recovers planted coefficients within 3 stderr") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> gauss(0.0, 1.0), noise(0.0, 0.1);
  const int n = 1000, p = 7;
  std::vector<double> beta = {0.5, -0.3, 0.2, 0.0, 1.0, -0.7, 0.05};
  std::vector<std::vector<double>> X(n, std::vector<double>(p));
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    double mean = 0.0;
    for (int j = 0; j < p; ++j) {
      X[i][j] = gauss(rng);
      mean += beta[j] * X[i][j];
    }
    y[i] = mean + noise(rng);
  }
  auto fit = ols_fit(X, y);
  CHECK(fit.residual_df == n - p);
  for (int j = 0; j < p; ++j)
    CHECK(std::fabs(fit.coef[j] - beta[j]) < 3.0 * fit.stderr_[j]);
  // strong coefficients are flagged significant
  CHECK(fit.pvalue[4] < 0.01);
  CHECK(significance_stars(fit.pvalue[4]) == "**");
}

TEST_CASE("ols_fit rejects rank-deficient designs") {
  std::vector<std::vector<double>> X = {{1, 2}, {2, 4}, {3, 6}, {4, 8}};
  std::vector<double> y = {1, 2, 3, 4};
  CHECK_THROWS_AS(ols_fit(X, y), NumericError);
  CHECK_THROWS_AS(ols_fit({{1.0}}, {1.0}), DataError);
}

TEST_CASE("t distribution fixtures") {
  CHECK(t_cdf(0.0, 7) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t_cdf(1.0, 1) == doctest::Approx(0.75).epsilon(1e-10));  // Cauchy arctan
  CHECK(two_sided_p(1.96, 1400) == doctest::Approx(0.0501).epsilon(0.02));
  CHECK(std::fabs(two_sided_p(1.96, 1400) - 0.0501) < 1e-3);
  CHECK(two_sided_p(4.819, 1400) < 0.001);  // reported as 0.000 with two stars
  CHECK(significance_stars(two_sided_p(4.819, 1400)) == "**");
  CHECK_THROWS_AS(t_cdf(1.0, 0), ValidationError);
}

TEST_CASE("significance star thresholds") {
  CHECK(significance_stars(0.049) == "*");
  CHECK(significance_stars(0.05) == "");
  CHECK(significance_stars(0.009) == "**");
  CHECK(significance_stars(0.01) == "*");
  CHECK(significance_stars(0.5) == "");
}

TEST_CASE("date round-trips") {
  CHECK(parse_date("1970-01-01") == 0);
  CHECK(parse_date("1970-01-02") == 1);
  CHECK(day_to_string(0) == "1970-01-01");
  long day = parse_date("2015-06-17");
  CHECK(day_to_string(day) == "2015-06-17");
  CHECK_THROWS_AS(parse_date("2015-13-01"), DataError);
  CHECK_THROWS_AS(parse_date("junk"), DataError);
}
