#ifndef STM_TEST_HELPERS_HPP
#define STM_TEST_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "stm/corpus.hpp"
#include "stm/topics.hpp"

namespace stm_test {

inline stm::Vocabulary make_vocab(int V) {
  stm::Vocabulary vocab;
  for (int w = 0; w < V; ++w) {
    vocab.id_of["w" + std::to_string(w)] = w;
    vocab.token_of.push_back("w" + std::to_string(w));
  }
  return vocab;
}

// One topic per document; topic k emits only words [k*wpt, (k+1)*wpt).
inline stm::Corpus planted_dmm_corpus(int K, int wpt, int n_docs, int doc_len,
                                      bool dedupe, std::uint64_t seed,
                                      std::vector<int>* true_labels = nullptr,
                                      stm::TopicWordMatrix* true_phi = nullptr) {
  stm::Corpus corpus;
  const int V = K * wpt;
  corpus.vocab = make_vocab(V);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_topic(0, K - 1);
  std::uniform_int_distribution<int> pick_word(0, wpt - 1);
  if (true_labels) true_labels->clear();
  for (int d = 0; d < n_docs; ++d) {
    int k = pick_topic(rng);
    std::vector<std::string> toks;
    for (int i = 0; i < doc_len; ++i)
      toks.push_back("w" + std::to_string(k * wpt + pick_word(rng)));
    try {
      corpus.docs.push_back(stm::encode(toks, corpus.vocab, dedupe));
      if (true_labels) true_labels->push_back(k);
    } catch (const stm::EmptyDocument&) {
    }
  }
  if (true_phi) {
    true_phi->assign(K, std::vector<double>(V, 0.0));
    for (int k = 0; k < K; ++k)
      for (int w = 0; w < wpt; ++w) (*true_phi)[k][k * wpt + w] = 1.0 / wpt;
  }
  return corpus;
}

// Mixed-membership documents; topic k still owns a disjoint word block.
inline stm::Corpus planted_lda_corpus(int K, int wpt, int n_docs, int doc_len,
                                      double alpha, std::uint64_t seed,
                                      stm::TopicWordMatrix* true_phi = nullptr) {
  stm::Corpus corpus;
  const int V = K * wpt;
  corpus.vocab = make_vocab(V);
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gam(alpha, 1.0);
  std::uniform_int_distribution<int> pick_word(0, wpt - 1);
  for (int d = 0; d < n_docs; ++d) {
    std::vector<double> theta(K);
    double total = 0.0;
    for (auto& x : theta) {
      x = std::max(gam(rng), 1e-12);
      total += x;
    }
    for (auto& x : theta) x /= total;
    std::vector<std::string> toks;
    std::discrete_distribution<int> pick_topic(theta.begin(), theta.end());
    for (int i = 0; i < doc_len; ++i) {
      int k = pick_topic(rng);
      toks.push_back("w" + std::to_string(k * wpt + pick_word(rng)));
    }
    corpus.docs.push_back(stm::encode(toks, corpus.vocab, false));
  }
  if (true_phi) {
    true_phi->assign(K, std::vector<double>(V, 0.0));
    for (int k = 0; k < K; ++k)
      for (int w = 0; w < wpt; ++w) (*true_phi)[k][k * wpt + w] = 1.0 / wpt;
  }
  return corpus;
}

inline double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

// Minimum over topic permutations of the worst per-topic L1 distance.
inline double matched_max_l1(const stm::TopicWordMatrix& est,
                             const stm::TopicWordMatrix& truth) {
  const int K = static_cast<int>(truth.size());
  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double worst = 0.0;
    for (int k = 0; k < K; ++k) worst = std::max(worst, l1(est[perm[k]], truth[k]));
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Fraction of documents whose label matches the truth under the best
// label permutation.
inline double label_purity(const std::vector<int>& est, const std::vector<int>& truth,
                           int K) {
  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  int best = 0;
  do {
    int hits = 0;
    for (size_t i = 0; i < est.size(); ++i)
      if (perm[est[i]] == truth[i]) ++hits;
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / est.size();
}

}  // namespace stm_test

#endif
