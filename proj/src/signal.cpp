#include "stm/signal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

namespace stm {

void SentimentLexicon::validate() const {
  for (const auto& w : positive)
    if (negative.count(w))
      throw ValidationError("lexicon: '" + w + "' is both positive and negative");
}

std::vector<double> one_hot(int label, int K) {
  if (label < 0 || label >= K) throw ValidationError("one_hot: label out of range");
  std::vector<double> v(K, 0.0);
  v[label] = 1.0;
  return v;
}

std::pair<double, double> sentiment(const std::vector<std::string>& tokens,
                                    const SentimentLexicon& lexicon) {
  if (tokens.empty()) throw DataError("sentiment: empty token list");
  double pos = 0, neg = 0;
  for (const auto& t : tokens) {
    if (lexicon.positive.count(t)) ++pos;
    if (lexicon.negative.count(t)) ++neg;
  }
  return {pos / tokens.size(), neg / tokens.size()};
}

std::vector<DailyFeatures> daily_aggregate(const std::vector<TweetRecord>& records,
                                           int K) {
  std::map<long, DailyFeatures> by_day;
  for (const auto& rec : records) {
    long day = static_cast<long>(rec.timestamp >= 0
                                     ? rec.timestamp / 86400
                                     : (rec.timestamp - 86399) / 86400);
    auto& feat = by_day[day];
    if (feat.tweet_count == 0) {
      feat.day = day;
      feat.t.assign(K, 0.0);
    }
    auto oh = one_hot(rec.label, K);
    for (int k = 0; k < K; ++k) feat.t[k] += oh[k];
    feat.p += rec.p;
    feat.n += rec.n;
    ++feat.tweet_count;
  }
  std::vector<DailyFeatures> out;
  for (auto& [day, feat] : by_day) {
    for (auto& x : feat.t) x /= feat.tweet_count;
    feat.p /= feat.tweet_count;
    feat.n /= feat.tweet_count;
    out.push_back(std::move(feat));
  }
  return out;
}

void align_next_day_returns(const std::vector<DailyFeatures>& features,
                            const std::vector<PricePoint>& prices,
                            std::vector<std::vector<double>>* X,
                            std::vector<double>* y) {
  std::map<long, double> close_of;
  for (const auto& p : prices) {
    if (p.close <= 0) throw DataError("prices must be strictly positive");
    close_of[p.day] = p.close;
  }
  X->clear();
  y->clear();
  size_t K = 0;
  for (const auto& f : features) {
    K = f.t.size();
    auto today = close_of.find(f.day);
    auto next = close_of.find(f.day + 1);
    if (today == close_of.end() || next == close_of.end()) continue;
    std::vector<double> row;
    row.reserve(2 + f.t.size());
    row.push_back(f.p);
    row.push_back(f.n);
    for (double t : f.t) row.push_back(t);
    X->push_back(std::move(row));
    y->push_back(next->second / today->second - 1.0);
  }
  if (X->size() < K + 3)
    throw DataError("align: insufficient overlap between features and prices (" +
                    std::to_string(X->size()) + " usable rows)");
}

namespace {

// regularized incomplete beta via Lentz continued fraction
double betacf(double a, double b, double x) {
  const double FPMIN = 1e-300;
  const int MAXIT = 300;
  const double EPS = 1e-15;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < FPMIN) d = FPMIN;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= MAXIT; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < FPMIN) d = FPMIN;
    c = 1.0 + aa / c;
    if (std::fabs(c) < FPMIN) c = FPMIN;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < FPMIN) d = FPMIN;
    c = 1.0 + aa / c;
    if (std::fabs(c) < FPMIN) c = FPMIN;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < EPS) break;
  }
  return h;
}

double inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double t_cdf(double t, int df) {
  if (df < 1) throw ValidationError("t_cdf: df must be >= 1");
  if (t == 0.0) return 0.5;
  double x = df / (df + t * t);
  double tail = 0.5 * inc_beta(df / 2.0, 0.5, x);
  return t > 0 ? 1.0 - tail : tail;
}

double two_sided_p(double t, int df) {
  double x = df / (df + t * t);
  return inc_beta(df / 2.0, 0.5, x);
}

std::string significance_stars(double pvalue) {
  if (pvalue < 0.01) return "**";
  if (pvalue < 0.05) return "*";
  return "";
}

RegressionResult ols_fit(const std::vector<std::vector<double>>& X,
                         const std::vector<double>& y) {
  const int n = static_cast<int>(X.size());
  if (n == 0 || y.size() != X.size()) throw ValidationError("ols: shape mismatch");
  const int p = static_cast<int>(X[0].size());
  if (n <= p) throw DataError("ols: need more rows than columns");

  // Householder QR of A, applied to y as well
  std::vector<std::vector<double>> A = X;
  std::vector<double> qty = y;
  double max_diag = 0.0;
  for (int j = 0; j < p; ++j) {
    double norm = 0.0;
    for (int i = j; i < n; ++i) norm += A[i][j] * A[i][j];
    norm = std::sqrt(norm);
    if (A[j][j] > 0) norm = -norm;
    max_diag = std::max(max_diag, std::fabs(norm));
    if (std::fabs(norm) < 1e-12 * std::max(1.0, max_diag))
      throw NumericError("ols: rank-deficient design matrix at column " +
                         std::to_string(j));
    std::vector<double> v(n - j);
    v[0] = A[j][j] - norm;
    for (int i = j + 1; i < n; ++i) v[i - j] = A[i][j];
    double vnorm2 = 0.0;
    for (double t : v) vnorm2 += t * t;
    if (vnorm2 > 0) {
      for (int col = j; col < p; ++col) {
        double dot = 0.0;
        for (int i = j; i < n; ++i) dot += v[i - j] * A[i][col];
        double s = 2.0 * dot / vnorm2;
        for (int i = j; i < n; ++i) A[i][col] -= s * v[i - j];
      }
      double dot = 0.0;
      for (int i = j; i < n; ++i) dot += v[i - j] * qty[i];
      double s = 2.0 * dot / vnorm2;
      for (int i = j; i < n; ++i) qty[i] -= s * v[i - j];
    }
  }

  // back-substitution R beta = (Q^T y)[0..p)
  RegressionResult result;
  result.coef.assign(p, 0.0);
  for (int i = p - 1; i >= 0; --i) {
    double s = qty[i];
    for (int j = i + 1; j < p; ++j) s -= A[i][j] * result.coef[j];
    result.coef[i] = s / A[i][i];
  }

  double rss = 0.0;
  for (int i = p; i < n; ++i) rss += qty[i] * qty[i];
  double y2 = 0.0, ymean = 0.0;
  for (double v : y) {
    y2 += v * v;
    ymean += v;
  }
  ymean /= n;
  double tss = 0.0;
  for (double v : y) tss += (v - ymean) * (v - ymean);
  result.r2 = tss > 0 ? 1.0 - rss / tss : 0.0;
  result.residual_df = n - p;
  result.degenerate = rss <= 1e-12 * std::max(1.0, y2);

  // (X^T X)^-1 diagonal from R^-1: inv row sums of squares
  std::vector<std::vector<double>> rinv(p, std::vector<double>(p, 0.0));
  for (int i = p - 1; i >= 0; --i) {
    rinv[i][i] = 1.0 / A[i][i];
    for (int j = i + 1; j < p; ++j) {
      double s = 0.0;
      for (int k = i + 1; k <= j; ++k) s += A[i][k] * rinv[k][j];
      rinv[i][j] = -s / A[i][i];
    }
  }
  const double sigma2 = rss / result.residual_df;
  result.stderr_.assign(p, 0.0);
  result.tstat.assign(p, 0.0);
  result.pvalue.assign(p, 0.0);
  for (int i = 0; i < p; ++i) {
    double diag = 0.0;
    for (int j = i; j < p; ++j) diag += rinv[i][j] * rinv[i][j];
    result.stderr_[i] = std::sqrt(sigma2 * diag);
    if (result.degenerate || result.stderr_[i] == 0.0) {
      result.stderr_[i] = result.degenerate ? 0.0 : result.stderr_[i];
      result.tstat[i] = 0.0;
      result.pvalue[i] = 0.0;
    } else {
      result.tstat[i] = result.coef[i] / result.stderr_[i];
      result.pvalue[i] = two_sided_p(result.tstat[i], result.residual_df);
    }
  }
  return result;
}

std::string day_to_string(long day) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

long parse_date(const std::string& s) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3)
    throw DataError("bad date: " + s);
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{unsigned(m)}, std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) throw DataError("bad date: " + s);
  return sys_days{ymd}.time_since_epoch().count();
}

}  // namespace stm
