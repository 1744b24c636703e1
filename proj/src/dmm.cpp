#include "stm/dmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "stm/io.hpp"

namespace stm {

namespace {

// log-sum-exp that tolerates -inf entries.
double log_sum_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

int sample_discrete(const std::vector<double>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  double acc = 0.0;
  for (size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

void DmmParams::validate() const {
  if (K < 1) throw ValidationError("dmm: K must be >= 1");
  if (alpha <= 0) throw ValidationError("dmm: alpha must be > 0");
  if (beta <= 0) throw ValidationError("dmm: beta must be > 0");
  if (iterations < 0) throw ValidationError("dmm: iterations must be >= 0");
}

DmmState dmm_init(const Corpus& corpus, const DmmParams& params, std::mt19937_64& rng) {
  params.validate();
  if (corpus.docs.empty()) throw DataError("dmm: empty corpus");
  const int V = corpus.vocab.size();
  DmmState state;
  state.z.resize(corpus.docs.size());
  state.m.assign(params.K, 0);
  state.n_kw.assign(params.K, std::vector<long long>(V, 0));
  state.n_k.assign(params.K, 0);
  std::uniform_int_distribution<int> pick(0, params.K - 1);
  for (size_t d = 0; d < corpus.docs.size(); ++d) {
    int k = pick(rng);
    state.z[d] = -1;
    dmm_add(state, corpus.docs[d], static_cast<int>(d), k);
  }
  return state;
}

void dmm_remove(DmmState& state, const Document& doc, int doc_index) {
  int k = state.z[doc_index];
  --state.m[k];
  state.n_k[k] -= doc.length;
  for (size_t i = 0; i < doc.ids.size(); ++i)
    state.n_kw[k][doc.ids[i]] -= doc.counts[i];
  state.z[doc_index] = -1;
}

void dmm_add(DmmState& state, const Document& doc, int doc_index, int label) {
  state.z[doc_index] = label;
  ++state.m[label];
  state.n_k[label] += doc.length;
  for (size_t i = 0; i < doc.ids.size(); ++i)
    state.n_kw[label][doc.ids[i]] += doc.counts[i];
}

std::vector<double> dmm_conditional(const DmmState& state, const Document& doc,
                                    const DmmParams& params, int V) {
  const int K = params.K;
  std::vector<double> logp(K);
  const double vbeta = V * params.beta;
  for (int k = 0; k < K; ++k) {
    double lp = std::log(state.m[k] + params.alpha);
    for (size_t i = 0; i < doc.ids.size(); ++i) {
      const long long base = state.n_kw[k][doc.ids[i]];
      for (int j = 0; j < doc.counts[i]; ++j)
        lp += std::log(base + params.beta + j);
    }
    for (int i = 0; i < doc.length; ++i)
      lp -= std::log(state.n_k[k] + vbeta + i);
    logp[k] = lp;
  }
  const double lse = log_sum_exp(logp);
  std::vector<double> probs(K);
  for (int k = 0; k < K; ++k) probs[k] = std::exp(logp[k] - lse);
  return probs;
}

void dmm_gibbs_sweep(DmmState& state, const Corpus& corpus, const DmmParams& params,
                     std::mt19937_64& rng) {
  const int V = corpus.vocab.size();
  for (size_t d = 0; d < corpus.docs.size(); ++d) {
    const Document& doc = corpus.docs[d];
    dmm_remove(state, doc, static_cast<int>(d));
    auto probs = dmm_conditional(state, doc, params, V);
    int k = params.K == 1 ? 0 : sample_discrete(probs, rng);
    dmm_add(state, doc, static_cast<int>(d), k);
  }
}

TopicWordMatrix dmm_estimate_phi(const DmmState& state, const DmmParams& params, int V) {
  TopicWordMatrix phi(params.K, std::vector<double>(V));
  for (int k = 0; k < params.K; ++k) {
    const double denom = state.n_k[k] + V * params.beta;
    for (int w = 0; w < V; ++w)
      phi[k][w] = (params.beta + state.n_kw[k][w]) / denom;
  }
  return phi;
}

std::vector<double> dmm_estimate_theta(const DmmState& state, const DmmParams& params) {
  long long nd = 0;
  for (long long c : state.m) nd += c;
  std::vector<double> theta(params.K);
  const double denom = nd + params.K * params.alpha;
  for (int k = 0; k < params.K; ++k)
    theta[k] = (params.alpha + state.m[k]) / denom;
  return theta;
}

double dmm_log_likelihood(const DmmModel& model, const Document& doc) {
  const int K = model.params.K;
  std::vector<double> terms(K);
  for (int k = 0; k < K; ++k) {
    double lp = std::log(model.theta_hat[k]);
    for (size_t i = 0; i < doc.ids.size(); ++i)
      lp += doc.counts[i] * std::log(model.phi_hat[k][doc.ids[i]]);
    terms[k] = lp;
  }
  double mx = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

DmmModel dmm_train(const Corpus& corpus, const DmmParams& params,
                   std::vector<int>* labels_out) {
  std::mt19937_64 rng(params.seed);
  DmmState state = dmm_init(corpus, params, rng);
  for (int it = 0; it < params.iterations; ++it)
    dmm_gibbs_sweep(state, corpus, params, rng);
  DmmModel model;
  model.params = params;
  model.phi_hat = dmm_estimate_phi(state, params, corpus.vocab.size());
  model.theta_hat = dmm_estimate_theta(state, params);
  if (labels_out) *labels_out = state.z;
  return model;
}

int dmm_map_label(const DmmModel& model, const Document& doc) {
  int best = 0;
  double best_lp = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < model.params.K; ++k) {
    double lp = std::log(model.theta_hat[k]);
    for (size_t i = 0; i < doc.ids.size(); ++i)
      lp += doc.counts[i] * std::log(model.phi_hat[k][doc.ids[i]]);
    if (lp > best_lp) {
      best_lp = lp;
      best = k;
    }
  }
  return best;
}

bool dmm_counters_consistent(const DmmState& state, const Corpus& corpus) {
  const int K = static_cast<int>(state.m.size());
  const int V = corpus.vocab.size();
  std::vector<long long> m(K, 0), n_k(K, 0);
  std::vector<std::vector<long long>> n_kw(K, std::vector<long long>(V, 0));
  for (size_t d = 0; d < corpus.docs.size(); ++d) {
    int k = state.z[d];
    if (k < 0 || k >= K) return false;
    ++m[k];
    n_k[k] += corpus.docs[d].length;
    for (size_t i = 0; i < corpus.docs[d].ids.size(); ++i)
      n_kw[k][corpus.docs[d].ids[i]] += corpus.docs[d].counts[i];
  }
  return m == state.m && n_k == state.n_k && n_kw == state.n_kw;
}

void save_dmm(const std::string& path, const DmmModel& model) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << "stm-model dmm\n";
  f << "K " << model.params.K << '\n';
  f << "alpha " << fmt_double(model.params.alpha) << '\n';
  f << "beta " << fmt_double(model.params.beta) << '\n';
  f << "iterations " << model.params.iterations << '\n';
  f << "seed " << model.params.seed << '\n';
  write_vector(f, "theta", model.theta_hat);
  write_matrix(f, "phi", model.phi_hat);
}

DmmModel load_dmm(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::string magic, kind, key;
  f >> magic >> kind;
  if (magic != "stm-model" || kind != "dmm")
    throw DataError(path + " is not a dmm model file");
  DmmModel model;
  f >> key >> model.params.K;
  f >> key >> model.params.alpha;
  f >> key >> model.params.beta;
  f >> key >> model.params.iterations;
  f >> key >> model.params.seed;
  model.theta_hat = read_vector(f, "theta");
  model.phi_hat = read_matrix(f, "phi");
  model.params.validate();
  return model;
}

}  // namespace stm
