#include "stm/lda.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "stm/io.hpp"

namespace stm {

void LdaParams::validate() const {
  if (K < 1) throw ValidationError("lda: K must be >= 1");
  if (alpha <= 0) throw ValidationError("lda: alpha must be > 0");
  if (eta <= 0) throw ValidationError("lda: eta must be > 0");
  if (!(kappa > 0.5 && kappa <= 1.0))
    throw ValidationError("lda: kappa must be in (0.5, 1]");
  if (tau0 < 0) throw ValidationError("lda: tau0 must be >= 0");
  if (batch_size < 1) throw ValidationError("lda: batch_size must be >= 1");
  if (passes < 1) throw ValidationError("lda: passes must be >= 1");
}

double digamma(double x) {
  if (x <= 0) throw NumericError("digamma: x must be > 0");
  double result = 0.0;
  // recurrence psi(x) = psi(x+1) - 1/x up to the asymptotic range
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv;
  result -= inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 -
            inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
  return result;
}

VariationalState lda_init(int V, const LdaParams& params, std::mt19937_64& rng) {
  params.validate();
  if (V < 1) throw DataError("lda: empty vocabulary");
  VariationalState state;
  state.lambda.assign(params.K, std::vector<double>(V));
  std::gamma_distribution<double> gamma(100.0, 0.01);
  for (auto& row : state.lambda)
    for (auto& x : row) x = gamma(rng);
  return state;
}

std::vector<std::vector<double>> expectation_log_beta(
    const std::vector<std::vector<double>>& lambda) {
  std::vector<std::vector<double>> elog(lambda.size());
  for (size_t k = 0; k < lambda.size(); ++k) {
    double total = std::accumulate(lambda[k].begin(), lambda[k].end(), 0.0);
    double psi_total = digamma(total);
    elog[k].resize(lambda[k].size());
    for (size_t w = 0; w < lambda[k].size(); ++w)
      elog[k][w] = digamma(lambda[k][w]) - psi_total;
  }
  return elog;
}

DocPosterior lda_e_step(const Document& doc,
                        const std::vector<std::vector<double>>& elog_beta,
                        const LdaParams& params) {
  const int K = params.K;
  DocPosterior post;
  post.gamma.assign(K, params.alpha + static_cast<double>(doc.length) / K);
  post.phi_local.assign(doc.ids.size(), std::vector<double>(K));
  post.converged = false;
  std::vector<double> elog_theta(K);
  for (int it = 0; it < params.max_inner; ++it) {
    double gamma_total = std::accumulate(post.gamma.begin(), post.gamma.end(), 0.0);
    double psi_total = digamma(gamma_total);
    for (int k = 0; k < K; ++k) elog_theta[k] = digamma(post.gamma[k]) - psi_total;

    std::vector<double> gamma_new(K, params.alpha);
    for (size_t i = 0; i < doc.ids.size(); ++i) {
      const int w = doc.ids[i];
      double mx = -1e300;
      for (int k = 0; k < K; ++k) {
        post.phi_local[i][k] = elog_theta[k] + elog_beta[k][w];
        mx = std::max(mx, post.phi_local[i][k]);
      }
      double norm = 0.0;
      for (int k = 0; k < K; ++k) {
        post.phi_local[i][k] = std::exp(post.phi_local[i][k] - mx);
        norm += post.phi_local[i][k];
      }
      for (int k = 0; k < K; ++k) {
        post.phi_local[i][k] /= norm;
        gamma_new[k] += doc.counts[i] * post.phi_local[i][k];
      }
    }
    double change = 0.0;
    for (int k = 0; k < K; ++k) change += std::fabs(gamma_new[k] - post.gamma[k]);
    post.gamma = std::move(gamma_new);
    if (change / K < params.tol) {
      post.converged = true;
      break;
    }
  }
  return post;
}

double lda_learning_rate(long long t, double tau0, double kappa) {
  return std::pow(tau0 + static_cast<double>(t), -kappa);
}

void lda_m_step_online(VariationalState& state,
                       const std::vector<std::vector<double>>& scaled_stats,
                       double rho, const LdaParams& params) {
  for (size_t k = 0; k < state.lambda.size(); ++k)
    for (size_t w = 0; w < state.lambda[k].size(); ++w)
      state.lambda[k][w] = (1.0 - rho) * state.lambda[k][w] +
                           rho * (params.eta + scaled_stats[k][w]);
  ++state.t;
}

namespace {

// theta-side and word-side terms for one document given its fitted posterior.
double doc_elbo_terms(const Document& doc, const DocPosterior& post,
                      const std::vector<std::vector<double>>& elog_beta,
                      const LdaParams& params) {
  const int K = params.K;
  double gamma_total = std::accumulate(post.gamma.begin(), post.gamma.end(), 0.0);
  double psi_total = digamma(gamma_total);
  std::vector<double> elog_theta(K);
  for (int k = 0; k < K; ++k) elog_theta[k] = digamma(post.gamma[k]) - psi_total;

  double score = 0.0;
  for (size_t i = 0; i < doc.ids.size(); ++i) {
    const int w = doc.ids[i];
    for (int k = 0; k < K; ++k) {
      double p = post.phi_local[i][k];
      if (p > 0)
        score += doc.counts[i] * p * (elog_theta[k] + elog_beta[k][w] - std::log(p));
    }
  }
  score += std::lgamma(K * params.alpha) - K * std::lgamma(params.alpha);
  for (int k = 0; k < K; ++k) {
    score += (params.alpha - post.gamma[k]) * elog_theta[k];
    score += std::lgamma(post.gamma[k]);
  }
  score -= std::lgamma(gamma_total);
  return score;
}

double global_elbo_term(const VariationalState& state, const LdaParams& params) {
  double score = 0.0;
  for (const auto& row : state.lambda) {
    const int V = static_cast<int>(row.size());
    double total = std::accumulate(row.begin(), row.end(), 0.0);
    double psi_total = digamma(total);
    score += std::lgamma(V * params.eta) - V * std::lgamma(params.eta);
    for (double lam : row) {
      double elog = digamma(lam) - psi_total;
      score += (params.eta - lam) * elog + std::lgamma(lam);
    }
    score -= std::lgamma(total);
  }
  return score;
}

}  // namespace

double lda_elbo(const Corpus& corpus, const VariationalState& state,
                const LdaParams& params) {
  auto elog_beta = expectation_log_beta(state.lambda);
  double score = 0.0;
  for (const auto& doc : corpus.docs) {
    DocPosterior post = lda_e_step(doc, elog_beta, params);
    score += doc_elbo_terms(doc, post, elog_beta, params);
  }
  return score + global_elbo_term(state, params);
}

double lda_heldout_bound(const Document& doc,
                         const std::vector<std::vector<double>>& elog_beta,
                         const LdaParams& params) {
  DocPosterior post = lda_e_step(doc, elog_beta, params);
  return doc_elbo_terms(doc, post, elog_beta, params);
}

TopicWordMatrix lda_estimate_phi(const VariationalState& state) {
  TopicWordMatrix phi(state.lambda.size());
  for (size_t k = 0; k < state.lambda.size(); ++k) {
    double total = std::accumulate(state.lambda[k].begin(), state.lambda[k].end(), 0.0);
    phi[k].resize(state.lambda[k].size());
    for (size_t w = 0; w < state.lambda[k].size(); ++w)
      phi[k][w] = state.lambda[k][w] / total;
  }
  return phi;
}

LdaModel lda_train(const Corpus& corpus, const LdaParams& params,
                   std::vector<LdaTrainLogRow>* log) {
  params.validate();
  if (corpus.docs.empty()) throw DataError("lda: empty corpus");
  const int V = corpus.vocab.size();
  const int D = corpus.size();
  std::mt19937_64 rng(params.seed);
  VariationalState state = lda_init(V, params, rng);

  std::vector<int> order(corpus.docs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int pass = 0; pass < params.passes; ++pass) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < order.size(); start += params.batch_size) {
      size_t end = std::min(order.size(), start + params.batch_size);
      auto elog_beta = expectation_log_beta(state.lambda);
      std::vector<std::vector<double>> stats(params.K, std::vector<double>(V, 0.0));
      double batch_elbo = 0.0;
      for (size_t idx = start; idx < end; ++idx) {
        const Document& doc = corpus.docs[order[idx]];
        DocPosterior post = lda_e_step(doc, elog_beta, params);
        for (size_t i = 0; i < doc.ids.size(); ++i)
          for (int k = 0; k < params.K; ++k)
            stats[k][doc.ids[i]] += doc.counts[i] * post.phi_local[i][k];
        if (log) batch_elbo += doc_elbo_terms(doc, post, elog_beta, params);
      }
      const double scale = static_cast<double>(D) / static_cast<double>(end - start);
      for (auto& row : stats)
        for (auto& x : row) x *= scale;
      const double rho = lda_learning_rate(state.t, params.tau0, params.kappa);
      lda_m_step_online(state, stats, rho, params);
      if (log) log->push_back({state.t, rho, batch_elbo});
    }
  }
  LdaModel model;
  model.params = params;
  model.state = std::move(state);
  model.phi = lda_estimate_phi(model.state);
  return model;
}

void save_lda(const std::string& path, const LdaModel& model) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << "stm-model lda\n";
  f << "K " << model.params.K << '\n';
  f << "alpha " << fmt_double(model.params.alpha) << '\n';
  f << "eta " << fmt_double(model.params.eta) << '\n';
  f << "kappa " << fmt_double(model.params.kappa) << '\n';
  f << "tau0 " << fmt_double(model.params.tau0) << '\n';
  f << "batch_size " << model.params.batch_size << '\n';
  f << "passes " << model.params.passes << '\n';
  f << "seed " << model.params.seed << '\n';
  f << "t " << model.state.t << '\n';
  write_matrix(f, "phi", model.phi);
  write_matrix(f, "lambda", model.state.lambda);
}

LdaModel load_lda(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::string magic, kind, key;
  f >> magic >> kind;
  if (magic != "stm-model" || kind != "lda")
    throw DataError(path + " is not an lda model file");
  LdaModel model;
  f >> key >> model.params.K;
  f >> key >> model.params.alpha;
  f >> key >> model.params.eta;
  f >> key >> model.params.kappa;
  f >> key >> model.params.tau0;
  f >> key >> model.params.batch_size;
  f >> key >> model.params.passes;
  f >> key >> model.params.seed;
  f >> key >> model.state.t;
  model.phi = read_matrix(f, "phi");
  model.state.lambda = read_matrix(f, "lambda");
  model.params.validate();
  return model;
}

}  // namespace stm
