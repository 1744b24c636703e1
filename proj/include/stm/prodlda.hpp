#ifndef STM_PRODLDA_HPP
#define STM_PRODLDA_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stm/corpus.hpp"
#include "stm/nn.hpp"
#include "stm/topics.hpp"

namespace stm {

// Diagonal logistic-normal approximation of a Dirichlet prior.
struct LaplacePrior {
  std::vector<double> mu;   // K
  std::vector<double> var;  // K, all > 0
};

LaplacePrior laplace_prior(const std::vector<double>& alpha_vec);

struct ProdLdaConfig {
  int K = 20;
  double alpha = 0.0;  // symmetric Dirichlet being approximated; 1/K when <= 0
  int hidden1 = 100;
  int hidden2 = 100;
  double dropout_p = 0.2;
  double lr = 0.001;
  int batch_size = 256;
  int max_epochs = 100;
  int patience = 10;
  double val_fraction = 0.3;
  bool count_weighted = false;
  bool decoder_batchnorm = false;
  std::uint64_t seed = 0;

  void validate() const;
  double effective_alpha() const { return alpha > 0 ? alpha : 1.0 / K; }
};

struct ProdLdaModel {
  ProdLdaConfig config;
  int V = 0;
  LinearLayer enc1, enc2;       // V -> hidden1 -> hidden2, softplus activations
  LinearLayer mu_head, lv_head; // hidden2 -> K
  BatchNormLayer bn_mu, bn_lv;
  BatchNormLayer bn_dec;        // output-path normalization, shift frozen at 0
  Tensor2 decoder_phi;          // K x V, unconstrained
  LaplacePrior prior;

  std::vector<std::vector<double>*> parameters();
};

// Gradients aligned with ProdLdaModel::parameters().
using ProdLdaGrads = std::vector<std::vector<double>>;

ProdLdaModel prodlda_build(int V, const ProdLdaConfig& config, std::mt19937_64& rng);

// Eval-mode encoder pass for a single document.
void prodlda_encode(const ProdLdaModel& model, const Document& doc,
                    std::vector<double>* mu, std::vector<double>* log_sigma);

// softmax(mu + sqrt(exp(log_sigma)) * eps)
std::vector<double> reparam_sample(const std::vector<double>& mu,
                                   const std::vector<double>& log_sigma,
                                   const std::vector<double>& eps);

// Product-of-experts order: mix expert rows in natural-parameter space, then
// normalize with a single softmax.
std::vector<double> prodlda_decode(const ProdLdaModel& model,
                                   const std::vector<double>& theta);

double kl_divergence(const std::vector<double>& mu,
                     const std::vector<double>& log_sigma,
                     const LaplacePrior& prior);

double reconstruction_loss(const Document& doc, const std::vector<double>& word_dist,
                           bool count_weighted);

// Mean over the batch of KL + reconstruction. eps is B x K. With train = true
// batch normalization uses batch statistics; dropout fires only when
// dropout_rng is given. Fills grads with d loss / d parameter when requested.
double prodlda_loss(ProdLdaModel& model, const std::vector<const Document*>& batch,
                    const Tensor2& eps, bool train, std::mt19937_64* dropout_rng,
                    ProdLdaGrads* grads);

// Convenience form matching the training step: samples one eps row per doc.
double prodlda_loss(ProdLdaModel& model, const std::vector<const Document*>& batch,
                    std::mt19937_64& rng, bool train, ProdLdaGrads* grads);

ProdLdaModel prodlda_train(const Corpus& corpus, const ProdLdaConfig& config);

TopicWordMatrix prodlda_topic_word_matrix(const ProdLdaModel& model);

// Negated per-document eval-mode loss, summed; eps drawn from `seed`.
double prodlda_heldout_loglik(ProdLdaModel& model, const std::vector<Document>& docs,
                              std::uint64_t seed);

void save_prodlda(const std::string& path, const ProdLdaModel& model);
ProdLdaModel load_prodlda(const std::string& path);

}  // namespace stm

#endif
