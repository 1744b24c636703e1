#include "stm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace stm {

double perplexity(double total_loglik, long long total_tokens) {
  if (total_tokens < 1) throw ValidationError("perplexity: total_tokens must be >= 1");
  return std::exp(-total_loglik / static_cast<double>(total_tokens));
}

std::vector<std::vector<double>> relevance(const TopicWordMatrix& phi,
                                           const std::vector<double>& word_probs,
                                           double lambda) {
  if (lambda < 0 || lambda > 1) throw ValidationError("relevance: lambda in [0,1]");
  std::vector<std::vector<double>> r(phi.size());
  for (size_t i = 0; i < phi.size(); ++i) {
    r[i].resize(phi[i].size());
    for (size_t w = 0; w < phi[i].size(); ++w) {
      if (phi[i][w] <= 0 || word_probs[w] <= 0)
        throw NumericError("relevance: zero probability, log undefined");
      r[i][w] = lambda * std::log(phi[i][w]) +
                (1.0 - lambda) * std::log(phi[i][w] / word_probs[w]);
    }
  }
  return r;
}

std::vector<int> top_words(const std::vector<double>& scores, int N) {
  if (N > static_cast<int>(scores.size()))
    throw ValidationError("top_words: N exceeds vocabulary size");
  std::vector<int> ids(scores.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  ids.resize(N);
  return ids;
}

std::vector<std::vector<int>> corpus_token_docs(const Corpus& corpus) {
  std::vector<std::vector<int>> docs;
  docs.reserve(corpus.docs.size());
  for (const auto& d : corpus.docs) docs.push_back(d.expand());
  return docs;
}

std::vector<std::vector<int>> sliding_windows(const Corpus& corpus, int omega) {
  if (omega < 1) throw ValidationError("sliding_windows: omega must be >= 1");
  std::vector<std::vector<int>> windows;
  for (const auto& d : corpus.docs) {
    std::vector<int> seq = d.expand();
    if (static_cast<int>(seq.size()) <= omega) {
      windows.push_back(std::move(seq));
      continue;
    }
    for (size_t start = 0; start + omega <= seq.size(); ++start)
      windows.emplace_back(seq.begin() + start, seq.begin() + start + omega);
  }
  return windows;
}

WordStats word_stats(const std::vector<std::vector<int>>& docset,
                     const std::vector<int>& candidate_words) {
  WordStats stats;
  stats.D = static_cast<long long>(docset.size());
  std::unordered_set<int> candidates(candidate_words.begin(), candidate_words.end());
  for (const auto& doc : docset) {
    std::vector<int> present;
    {
      std::unordered_set<int> seen;
      for (int w : doc)
        if (candidates.count(w) && seen.insert(w).second) present.push_back(w);
    }
    std::sort(present.begin(), present.end());
    for (size_t i = 0; i < present.size(); ++i) {
      ++stats.doc_freq[present[i]];
      for (size_t j = i + 1; j < present.size(); ++j)
        ++stats.pair_freq[WordStats::pair_key(present[i], present[j])];
    }
  }
  return stats;
}

namespace {

CoherenceReport aggregate_report(std::string metric, std::vector<double> per_topic,
                                 int N, int omega, double epsilon) {
  CoherenceReport report;
  report.metric = std::move(metric);
  report.aggregate =
      per_topic.empty()
          ? 0.0
          : std::accumulate(per_topic.begin(), per_topic.end(), 0.0) / per_topic.size();
  report.per_topic = std::move(per_topic);
  report.N = N;
  report.omega = omega;
  report.epsilon = epsilon;
  return report;
}

double pmi(const WordStats& stats, int wm, int wn, double epsilon) {
  const double pm = stats.p(wm), pn = stats.p(wn);
  if (pm <= 0 || pn <= 0) throw NumericError("coherence: zero single-word probability");
  return std::log((stats.p(wm, wn) + epsilon) / (pm * pn));
}

}  // namespace

CoherenceReport umass(const std::vector<std::vector<int>>& topics,
                      const WordStats& stats, double epsilon) {
  std::vector<double> per_topic;
  for (const auto& words : topics) {
    const int N = static_cast<int>(words.size());
    if (N < 2) throw ValidationError("umass: need at least 2 top words");
    double total = 0.0;
    for (int m = 1; m < N; ++m)
      for (int n = 0; n < m; ++n) {
        const double pn = stats.p(words[n]);
        if (pn <= 0) throw NumericError("umass: zero probability of conditioning word");
        total += std::log((stats.p(words[m], words[n]) + epsilon) / pn);
      }
    per_topic.push_back(2.0 * total / (N * (double)(N - 1)));
  }
  const int N = topics.empty() ? 0 : static_cast<int>(topics[0].size());
  return aggregate_report("umass", std::move(per_topic), N, 0, epsilon);
}

CoherenceReport uci(const std::vector<std::vector<int>>& topics,
                    const WordStats& window_stats, double epsilon) {
  std::vector<double> per_topic;
  for (const auto& words : topics) {
    const int N = static_cast<int>(words.size());
    if (N < 2) throw ValidationError("uci: need at least 2 top words");
    double total = 0.0;
    for (int m = 0; m < N - 1; ++m)
      for (int n = m + 1; n < N; ++n)
        total += pmi(window_stats, words[m], words[n], epsilon);
    per_topic.push_back(2.0 * total / (N * (double)(N - 1)));
  }
  const int N = topics.empty() ? 0 : static_cast<int>(topics[0].size());
  return aggregate_report("uci", std::move(per_topic), N, 0, epsilon);
}

CoherenceReport npmi(const std::vector<std::vector<int>>& topics,
                     const WordStats& window_stats, double epsilon) {
  std::vector<double> per_topic;
  for (const auto& words : topics) {
    const int N = static_cast<int>(words.size());
    if (N < 2) throw ValidationError("npmi: need at least 2 top words");
    double total = 0.0;
    for (int m = 0; m < N - 1; ++m)
      for (int n = m + 1; n < N; ++n) {
        const double pair = window_stats.p(words[m], words[n]) + epsilon;
        if (pair >= 1.0) throw NumericError("npmi: zero denominator, -log(p+eps) <= 0");
        total += pmi(window_stats, words[m], words[n], epsilon) / (-std::log(pair));
      }
    per_topic.push_back(2.0 * total / (N * (double)(N - 1)));
  }
  const int N = topics.empty() ? 0 : static_cast<int>(topics[0].size());
  return aggregate_report("npmi", std::move(per_topic), N, 0, epsilon);
}

std::vector<double> corpus_word_probs(const Corpus& corpus) {
  std::vector<double> probs(corpus.vocab.size(), 0.0);
  double total = 0.0;
  for (const auto& d : corpus.docs)
    for (size_t i = 0; i < d.ids.size(); ++i) {
      probs[d.ids[i]] += d.counts[i];
      total += d.counts[i];
    }
  for (auto& p : probs) p /= total;
  return probs;
}

double heldout_loglik(const DmmModel& model, const std::vector<Document>& docs) {
  double total = 0.0;
  for (const auto& doc : docs) {
    for (int id : doc.ids)
      if (id >= static_cast<int>(model.phi_hat[0].size()))
        throw DataError("heldout_loglik: document id outside model vocabulary");
    total += dmm_log_likelihood(model, doc);
  }
  return total;
}

double heldout_loglik(const LdaModel& model, const std::vector<Document>& docs) {
  auto elog_beta = expectation_log_beta(model.state.lambda);
  double total = 0.0;
  for (const auto& doc : docs) {
    for (int id : doc.ids)
      if (id >= static_cast<int>(model.phi[0].size()))
        throw DataError("heldout_loglik: document id outside model vocabulary");
    total += lda_heldout_bound(doc, elog_beta, model.params);
  }
  return total;
}

double heldout_loglik(ProdLdaModel& model, const std::vector<Document>& docs,
                      std::uint64_t seed) {
  for (const auto& doc : docs)
    for (int id : doc.ids)
      if (id >= model.V)
        throw DataError("heldout_loglik: document id outside model vocabulary");
  return prodlda_heldout_loglik(model, docs, seed);
}

}  // namespace stm
