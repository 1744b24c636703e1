#ifndef STM_LDA_HPP
#define STM_LDA_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stm/corpus.hpp"
#include "stm/topics.hpp"

namespace stm {

struct LdaParams {
  int K = 20;
  double alpha = 0.05;   // document-topic prior, defaults to 1/K at train time if <= 0
  double eta = 0.05;     // topic-word prior
  double kappa = 0.75;
  double tau0 = 64.0;
  int batch_size = 256;
  int passes = 10;
  std::uint64_t seed = 0;
  double tol = 1e-3;
  int max_inner = 100;

  void validate() const;
};

struct VariationalState {
  std::vector<std::vector<double>> lambda;  // K x V, all entries > 0
  long long t = 0;
};

struct DocPosterior {
  std::vector<double> gamma;                        // K
  std::vector<std::vector<double>> phi_local;       // one simplex per unique word
  bool converged = true;
};

struct LdaModel {
  TopicWordMatrix phi;
  LdaParams params;
  VariationalState state;
};

struct LdaTrainLogRow {
  long long t;
  double rho;
  double batch_elbo;
};

// psi(x) to <= 1e-10 absolute error; throws NumericError for x <= 0.
double digamma(double x);

VariationalState lda_init(int V, const LdaParams& params, std::mt19937_64& rng);

// E_q[log beta_kw] = psi(lambda_kw) - psi(sum_w lambda_kw), per topic row.
std::vector<std::vector<double>> expectation_log_beta(
    const std::vector<std::vector<double>>& lambda);

DocPosterior lda_e_step(const Document& doc,
                        const std::vector<std::vector<double>>& elog_beta,
                        const LdaParams& params);

double lda_learning_rate(long long t, double tau0, double kappa);

// stats must already be scaled by corpus_size / batch_size.
void lda_m_step_online(VariationalState& state,
                       const std::vector<std::vector<double>>& scaled_stats,
                       double rho, const LdaParams& params);

// Full ELBO of the corpus under the current state, including the global
// topic factor. A lower bound on log p(corpus | alpha, eta).
double lda_elbo(const Corpus& corpus, const VariationalState& state,
                const LdaParams& params);

// Per-document bound with the topic matrix held fixed (no global factor);
// this is the held-out perplexity proxy.
double lda_heldout_bound(const Document& doc,
                         const std::vector<std::vector<double>>& elog_beta,
                         const LdaParams& params);

TopicWordMatrix lda_estimate_phi(const VariationalState& state);

LdaModel lda_train(const Corpus& corpus, const LdaParams& params,
                   std::vector<LdaTrainLogRow>* log = nullptr);

void save_lda(const std::string& path, const LdaModel& model);
LdaModel load_lda(const std::string& path);

}  // namespace stm

#endif
