#ifndef STM_DMM_HPP
#define STM_DMM_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stm/corpus.hpp"
#include "stm/topics.hpp"

namespace stm {

struct DmmParams {
  int K = 20;
  double alpha = 0.1;
  double beta = 0.1;
  int iterations = 30;
  std::uint64_t seed = 0;

  void validate() const;
};

// Collapsed Gibbs chain state. Counters mirror a recount from z at all times:
// m[k] documents with label k, n_kw[k][w] occurrences of w in those documents,
// n_k[k] their total word count.
struct DmmState {
  std::vector<int> z;
  std::vector<long long> m;
  std::vector<std::vector<long long>> n_kw;
  std::vector<long long> n_k;
};

struct DmmModel {
  TopicWordMatrix phi_hat;
  std::vector<double> theta_hat;
  DmmParams params;
};

DmmState dmm_init(const Corpus& corpus, const DmmParams& params, std::mt19937_64& rng);

// Removes doc's contribution to the counters. Reapply with dmm_add.
void dmm_remove(DmmState& state, const Document& doc, int doc_index);
void dmm_add(DmmState& state, const Document& doc, int doc_index, int label);

// p(z_d = k | counters without d), normalized. V is the vocabulary size.
std::vector<double> dmm_conditional(const DmmState& state, const Document& doc,
                                    const DmmParams& params, int V);

void dmm_gibbs_sweep(DmmState& state, const Corpus& corpus, const DmmParams& params,
                     std::mt19937_64& rng);

TopicWordMatrix dmm_estimate_phi(const DmmState& state, const DmmParams& params, int V);
std::vector<double> dmm_estimate_theta(const DmmState& state, const DmmParams& params);

double dmm_log_likelihood(const DmmModel& model, const Document& doc);

DmmModel dmm_train(const Corpus& corpus, const DmmParams& params,
                   std::vector<int>* labels_out = nullptr);

// Most likely label under the trained model's plug-in estimates.
int dmm_map_label(const DmmModel& model, const Document& doc);

// True when the counters equal a full recount from the labels.
bool dmm_counters_consistent(const DmmState& state, const Corpus& corpus);

void save_dmm(const std::string& path, const DmmModel& model);
DmmModel load_dmm(const std::string& path);

}  // namespace stm

#endif
