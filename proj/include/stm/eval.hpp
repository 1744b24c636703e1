#ifndef STM_EVAL_HPP
#define STM_EVAL_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "stm/corpus.hpp"
#include "stm/dmm.hpp"
#include "stm/lda.hpp"
#include "stm/prodlda.hpp"
#include "stm/topics.hpp"

namespace stm {

// Document (binary) frequencies for candidate words and unordered pairs.
struct WordStats {
  std::unordered_map<int, long long> doc_freq;
  std::unordered_map<std::uint64_t, long long> pair_freq;
  long long D = 0;

  static std::uint64_t pair_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }
  double p(int w) const {
    auto it = doc_freq.find(w);
    return it == doc_freq.end() ? 0.0 : static_cast<double>(it->second) / D;
  }
  double p(int a, int b) const {
    if (a == b) return p(a);
    auto it = pair_freq.find(pair_key(a, b));
    return it == pair_freq.end() ? 0.0 : static_cast<double>(it->second) / D;
  }
};

struct CoherenceReport {
  std::string metric;
  std::vector<double> per_topic;
  double aggregate = 0.0;
  int N = 0;
  int omega = 0;
  double epsilon = 0.0;
};

double perplexity(double total_loglik, long long total_tokens);

// r_lambda(w,i) = lambda*log(phi_iw) + (1-lambda)*log(phi_iw / p_w)
std::vector<std::vector<double>> relevance(const TopicWordMatrix& phi,
                                           const std::vector<double>& word_probs,
                                           double lambda);

std::vector<int> top_words(const std::vector<double>& scores, int N);

// Contiguous windows of length omega at stride 1; docs shorter than omega
// contribute one window (the whole doc).
std::vector<std::vector<int>> sliding_windows(const Corpus& corpus, int omega);

// The original document set, as token sequences.
std::vector<std::vector<int>> corpus_token_docs(const Corpus& corpus);

WordStats word_stats(const std::vector<std::vector<int>>& docset,
                     const std::vector<int>& candidate_words);

CoherenceReport umass(const std::vector<std::vector<int>>& topics,
                      const WordStats& stats, double epsilon);
CoherenceReport uci(const std::vector<std::vector<int>>& topics,
                    const WordStats& window_stats, double epsilon);
CoherenceReport npmi(const std::vector<std::vector<int>>& topics,
                     const WordStats& window_stats, double epsilon);

// Empirical token probability of each word in the corpus.
std::vector<double> corpus_word_probs(const Corpus& corpus);

double heldout_loglik(const DmmModel& model, const std::vector<Document>& docs);
double heldout_loglik(const LdaModel& model, const std::vector<Document>& docs);
double heldout_loglik(ProdLdaModel& model, const std::vector<Document>& docs,
                      std::uint64_t seed);

}  // namespace stm

#endif
