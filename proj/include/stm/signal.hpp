#ifndef STM_SIGNAL_HPP
#define STM_SIGNAL_HPP

#include <string>
#include <unordered_set>
#include <vector>

#include "stm/errors.hpp"

namespace stm {

struct SentimentLexicon {
  std::unordered_set<std::string> positive;
  std::unordered_set<std::string> negative;

  void validate() const;
};

struct TweetRecord {
  long long timestamp = 0;  // seconds since epoch, UTC
  int label = 0;
  double p = 0.0;
  double n = 0.0;
};

struct DailyFeatures {
  long day = 0;  // days since epoch, UTC
  std::vector<double> t;
  double p = 0.0;
  double n = 0.0;
  int tweet_count = 0;
};

struct RegressionResult {
  std::vector<double> coef;
  std::vector<double> stderr_;
  std::vector<double> tstat;
  std::vector<double> pvalue;
  double r2 = 0.0;
  int residual_df = 0;
  bool degenerate = false;  // zero residual variance
};

std::vector<double> one_hot(int label, int K);

// Proportions of tokens found in the positive / negative vocabulary.
std::pair<double, double> sentiment(const std::vector<std::string>& tokens,
                                    const SentimentLexicon& lexicon);

std::vector<DailyFeatures> daily_aggregate(const std::vector<TweetRecord>& records,
                                           int K);

struct PricePoint {
  long day = 0;
  double close = 0.0;
};

// Row per day with features and closes for d and d+1; y = simple next-day
// return; X columns are [p, n, t_0 .. t_{K-1}].
void align_next_day_returns(const std::vector<DailyFeatures>& features,
                            const std::vector<PricePoint>& prices,
                            std::vector<std::vector<double>>* X,
                            std::vector<double>* y);

RegressionResult ols_fit(const std::vector<std::vector<double>>& X,
                         const std::vector<double>& y);

double t_cdf(double t, int df);
double two_sided_p(double t, int df);

// "**" below 0.01, "*" below 0.05, empty otherwise.
std::string significance_stars(double pvalue);

std::string day_to_string(long day);
long parse_date(const std::string& yyyy_mm_dd);

}  // namespace stm

#endif
