#include "stm/prodlda.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "stm/io.hpp"

namespace stm {

void ProdLdaConfig::validate() const {
  if (K < 2) throw ValidationError("prodlda: K must be >= 2");
  if (hidden1 < 1 || hidden2 < 1) throw ValidationError("prodlda: hidden sizes must be >= 1");
  if (dropout_p < 0 || dropout_p >= 1) throw ValidationError("prodlda: dropout_p in [0,1)");
  if (lr <= 0) throw ValidationError("prodlda: lr must be > 0");
  if (batch_size < 2) throw ValidationError("prodlda: batch_size must be >= 2");
  if (max_epochs < 1) throw ValidationError("prodlda: max_epochs must be >= 1");
  if (patience < 1) throw ValidationError("prodlda: patience must be >= 1");
  if (!(val_fraction > 0 && val_fraction < 1))
    throw ValidationError("prodlda: val_fraction must be in (0,1)");
}

LaplacePrior laplace_prior(const std::vector<double>& alpha_vec) {
  const int K = static_cast<int>(alpha_vec.size());
  if (K < 2) throw ValidationError("laplace_prior: K must be >= 2");
  double log_sum = 0.0, inv_sum = 0.0;
  for (double a : alpha_vec) {
    if (a <= 0) throw ValidationError("laplace_prior: alpha entries must be > 0");
    log_sum += std::log(a);
    inv_sum += 1.0 / a;
  }
  LaplacePrior prior;
  prior.mu.resize(K);
  prior.var.resize(K);
  for (int k = 0; k < K; ++k) {
    prior.mu[k] = std::log(alpha_vec[k]) - log_sum / K;
    prior.var[k] = (1.0 / alpha_vec[k]) * (1.0 - 2.0 / K) + inv_sum / (K * (double)K);
  }
  return prior;
}

namespace {

LinearLayer make_linear(int out, int in, bool has_bias, std::mt19937_64& rng) {
  LinearLayer layer;
  layer.weight = Tensor2(out, in);
  layer.has_bias = has_bias;
  if (has_bias) layer.bias.assign(out, 0.0);
  const double limit = std::sqrt(6.0 / (in + out));
  std::uniform_real_distribution<double> unif(-limit, limit);
  for (auto& w : layer.weight.v) w = unif(rng);
  return layer;
}

Tensor2 batch_to_bow(const std::vector<const Document*>& batch, int V) {
  Tensor2 x(static_cast<int>(batch.size()), V);
  for (size_t b = 0; b < batch.size(); ++b)
    for (size_t i = 0; i < batch[b]->ids.size(); ++i)
      x.at(static_cast<int>(b), batch[b]->ids[i]) = batch[b]->counts[i];
  return x;
}

}  // namespace

std::vector<std::vector<double>*> ProdLdaModel::parameters() {
  std::vector<std::vector<double>*> p = {
      &enc1.weight.v, &enc1.bias, &enc2.weight.v, &enc2.bias,
      &mu_head.weight.v, &mu_head.bias, &lv_head.weight.v, &lv_head.bias,
      &bn_mu.gain, &bn_mu.shift, &bn_lv.gain, &bn_lv.shift, &decoder_phi.v};
  if (config.decoder_batchnorm) p.push_back(&bn_dec.gain);
  return p;
}

ProdLdaModel prodlda_build(int V, const ProdLdaConfig& config, std::mt19937_64& rng) {
  config.validate();
  if (V < 1) throw DataError("prodlda: empty vocabulary");
  ProdLdaModel model;
  model.config = config;
  model.V = V;
  model.enc1 = make_linear(config.hidden1, V, true, rng);
  model.enc2 = make_linear(config.hidden2, config.hidden1, true, rng);
  model.mu_head = make_linear(config.K, config.hidden2, true, rng);
  model.lv_head = make_linear(config.K, config.hidden2, true, rng);
  model.bn_mu = BatchNormLayer(config.K);
  model.bn_lv = BatchNormLayer(config.K);
  model.bn_dec = BatchNormLayer(V);
  model.bn_dec.learn_shift = false;
  model.decoder_phi = Tensor2(config.K, V);
  const double limit = std::sqrt(6.0 / (config.K + V));
  std::uniform_real_distribution<double> unif(-limit, limit);
  for (auto& w : model.decoder_phi.v) w = unif(rng);
  model.prior = laplace_prior(std::vector<double>(config.K, config.effective_alpha()));
  return model;
}

void prodlda_encode(const ProdLdaModel& model, const Document& doc,
                    std::vector<double>* mu, std::vector<double>* log_sigma) {
  ProdLdaModel& m = const_cast<ProdLdaModel&>(model);  // eval mode leaves state untouched
  Tensor2 x = batch_to_bow({&doc}, model.V);
  Tensor2 h1 = softplus_forward(linear_forward(m.enc1, x));
  Tensor2 h2 = softplus_forward(linear_forward(m.enc2, h1));
  Tensor2 mu_t = batchnorm_forward(m.bn_mu, linear_forward(m.mu_head, h2), false, nullptr);
  Tensor2 lv_t = batchnorm_forward(m.bn_lv, linear_forward(m.lv_head, h2), false, nullptr);
  mu->assign(mu_t.v.begin(), mu_t.v.end());
  log_sigma->assign(lv_t.v.begin(), lv_t.v.end());
}

std::vector<double> reparam_sample(const std::vector<double>& mu,
                                   const std::vector<double>& log_sigma,
                                   const std::vector<double>& eps) {
  const int K = static_cast<int>(mu.size());
  Tensor2 a(1, K);
  for (int k = 0; k < K; ++k)
    a.at(0, k) = mu[k] + std::exp(0.5 * log_sigma[k]) * eps[k];
  Tensor2 theta = softmax_forward(a);
  return {theta.v.begin(), theta.v.end()};
}

std::vector<double> prodlda_decode(const ProdLdaModel& model,
                                   const std::vector<double>& theta) {
  Tensor2 logits(1, model.V);
  for (int w = 0; w < model.V; ++w) {
    double s = 0.0;
    for (int k = 0; k < model.config.K; ++k)
      s += theta[k] * model.decoder_phi.at(k, w);
    logits.at(0, w) = s;
  }
  if (model.config.decoder_batchnorm) {
    ProdLdaModel& m = const_cast<ProdLdaModel&>(model);
    logits = batchnorm_forward(m.bn_dec, logits, false, nullptr);
  }
  Tensor2 p = softmax_forward(logits);
  return {p.v.begin(), p.v.end()};
}

double kl_divergence(const std::vector<double>& mu,
                     const std::vector<double>& log_sigma,
                     const LaplacePrior& prior) {
  const int K = static_cast<int>(mu.size());
  double kl = 0.0;
  for (int k = 0; k < K; ++k) {
    const double var = std::exp(log_sigma[k]);
    const double dm = prior.mu[k] - mu[k];
    kl += var / prior.var[k] + dm * dm / prior.var[k] - 1.0 +
          std::log(prior.var[k]) - log_sigma[k];
  }
  return 0.5 * kl;
}

double reconstruction_loss(const Document& doc, const std::vector<double>& word_dist,
                           bool count_weighted) {
  double loss = 0.0;
  for (size_t i = 0; i < doc.ids.size(); ++i) {
    const double weight = count_weighted ? doc.counts[i] : 1.0;
    loss -= weight * std::log(word_dist[doc.ids[i]]);
  }
  return loss;
}

double prodlda_loss(ProdLdaModel& model, const std::vector<const Document*>& batch,
                    const Tensor2& eps, bool train, std::mt19937_64* dropout_rng,
                    ProdLdaGrads* grads) {
  if (batch.empty()) throw ValidationError("prodlda: empty batch");
  if (grads && !train)
    throw ValidationError("prodlda: gradients require train-mode normalization");
  const int B = static_cast<int>(batch.size());
  const int K = model.config.K;
  const int V = model.V;

  Tensor2 x = batch_to_bow(batch, V);
  Tensor2 z1 = linear_forward(model.enc1, x);
  Tensor2 h1 = softplus_forward(z1);
  Tensor2 z2 = linear_forward(model.enc2, h1);
  Tensor2 h2 = softplus_forward(z2);
  Tensor2 mask;
  const bool use_dropout = train && dropout_rng && model.config.dropout_p > 0;
  std::mt19937_64 dummy_rng(0);
  Tensor2 h2d = dropout_forward(h2, use_dropout ? model.config.dropout_p : 0.0,
                                use_dropout, use_dropout ? *dropout_rng : dummy_rng,
                                &mask);
  Tensor2 mu_pre = linear_forward(model.mu_head, h2d);
  Tensor2 lv_pre = linear_forward(model.lv_head, h2d);
  BatchNormCache mu_cache, lv_cache;
  Tensor2 mu = batchnorm_forward(model.bn_mu, mu_pre, train, &mu_cache);
  Tensor2 lv = batchnorm_forward(model.bn_lv, lv_pre, train, &lv_cache);

  Tensor2 a(B, K);
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < K; ++k)
      a.at(b, k) = mu.at(b, k) + std::exp(0.5 * lv.at(b, k)) * eps.at(b, k);
  Tensor2 theta = softmax_forward(a);

  Tensor2 logits(B, V);
  for (int b = 0; b < B; ++b)
    for (int w = 0; w < V; ++w) {
      double s = 0.0;
      for (int k = 0; k < K; ++k) s += theta.at(b, k) * model.decoder_phi.at(k, w);
      logits.at(b, w) = s;
    }
  BatchNormCache dec_cache;
  Tensor2 norm_logits = model.config.decoder_batchnorm
                            ? batchnorm_forward(model.bn_dec, logits, train, &dec_cache)
                            : logits;
  Tensor2 p = softmax_forward(norm_logits);

  double total = 0.0;
  std::vector<double> weight_sum(B, 0.0);
  for (int b = 0; b < B; ++b) {
    const Document& doc = *batch[b];
    for (size_t i = 0; i < doc.ids.size(); ++i) {
      const double u = model.config.count_weighted ? doc.counts[i] : 1.0;
      weight_sum[b] += u;
      total -= u * std::log(p.at(b, doc.ids[i]));
    }
    std::vector<double> mu_b(K), lv_b(K);
    for (int k = 0; k < K; ++k) {
      mu_b[k] = mu.at(b, k);
      lv_b[k] = lv.at(b, k);
    }
    total += kl_divergence(mu_b, lv_b, model.prior);
  }
  const double loss = total / B;
  if (!grads) return loss;

  // backward
  const double inv_b = 1.0 / B;
  Tensor2 g_norm_logits(B, V);
  for (int b = 0; b < B; ++b) {
    const Document& doc = *batch[b];
    for (int w = 0; w < V; ++w)
      g_norm_logits.at(b, w) = inv_b * weight_sum[b] * p.at(b, w);
    for (size_t i = 0; i < doc.ids.size(); ++i) {
      const double u = model.config.count_weighted ? doc.counts[i] : 1.0;
      g_norm_logits.at(b, doc.ids[i]) -= inv_b * u;
    }
  }
  BatchNormGrads dec_bn_grads;
  Tensor2* g_logits = &g_norm_logits;
  if (model.config.decoder_batchnorm) {
    dec_bn_grads = batchnorm_backward(model.bn_dec, dec_cache, g_norm_logits);
    g_logits = &dec_bn_grads.grad_x;
  }

  Tensor2 g_theta(B, K);
  Tensor2 g_phi(K, V);
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < K; ++k) {
      double s = 0.0;
      for (int w = 0; w < V; ++w) {
        s += g_logits->at(b, w) * model.decoder_phi.at(k, w);
        g_phi.at(k, w) += theta.at(b, k) * g_logits->at(b, w);
      }
      g_theta.at(b, k) = s;
    }

  Tensor2 g_a = softmax_backward(theta, g_theta);
  Tensor2 g_mu(B, K), g_lv(B, K);
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < K; ++k) {
      const double var = std::exp(lv.at(b, k));
      g_mu.at(b, k) = g_a.at(b, k) +
                      inv_b * (mu.at(b, k) - model.prior.mu[k]) / model.prior.var[k];
      g_lv.at(b, k) = g_a.at(b, k) * eps.at(b, k) * 0.5 * std::exp(0.5 * lv.at(b, k)) +
                      inv_b * 0.5 * (var / model.prior.var[k] - 1.0);
    }

  BatchNormGrads mu_bn = batchnorm_backward(model.bn_mu, mu_cache, g_mu);
  BatchNormGrads lv_bn = batchnorm_backward(model.bn_lv, lv_cache, g_lv);
  LinearGrads mu_lin = linear_backward(model.mu_head, h2d, mu_bn.grad_x);
  LinearGrads lv_lin = linear_backward(model.lv_head, h2d, lv_bn.grad_x);

  Tensor2 g_h2d(B, model.config.hidden2);
  for (size_t i = 0; i < g_h2d.v.size(); ++i)
    g_h2d.v[i] = mu_lin.grad_x.v[i] + lv_lin.grad_x.v[i];
  Tensor2 g_h2 = dropout_backward(mask, g_h2d);
  Tensor2 g_z2 = softplus_backward(z2, g_h2);
  LinearGrads enc2_g = linear_backward(model.enc2, h1, g_z2);
  Tensor2 g_z1 = softplus_backward(z1, enc2_g.grad_x);
  LinearGrads enc1_g = linear_backward(model.enc1, x, g_z1);

  grads->clear();
  grads->push_back(enc1_g.grad_w.v);
  grads->push_back(enc1_g.grad_b);
  grads->push_back(enc2_g.grad_w.v);
  grads->push_back(enc2_g.grad_b);
  grads->push_back(mu_lin.grad_w.v);
  grads->push_back(mu_lin.grad_b);
  grads->push_back(lv_lin.grad_w.v);
  grads->push_back(lv_lin.grad_b);
  grads->push_back(mu_bn.grad_gain);
  grads->push_back(mu_bn.grad_shift);
  grads->push_back(lv_bn.grad_gain);
  grads->push_back(lv_bn.grad_shift);
  grads->push_back(g_phi.v);
  if (model.config.decoder_batchnorm) grads->push_back(dec_bn_grads.grad_gain);
  return loss;
}

double prodlda_loss(ProdLdaModel& model, const std::vector<const Document*>& batch,
                    std::mt19937_64& rng, bool train, ProdLdaGrads* grads) {
  Tensor2 eps(static_cast<int>(batch.size()), model.config.K);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& e : eps.v) e = normal(rng);
  return prodlda_loss(model, batch, eps, train, train ? &rng : nullptr, grads);
}

ProdLdaModel prodlda_train(const Corpus& corpus, const ProdLdaConfig& config) {
  config.validate();
  if (corpus.docs.empty()) throw DataError("prodlda: empty corpus");
  std::mt19937_64 rng(config.seed);
  ProdLdaModel model = prodlda_build(corpus.vocab.size(), config, rng);

  std::vector<int> idx(corpus.docs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const int n_val = static_cast<int>(std::floor(config.val_fraction * idx.size()));
  std::vector<int> val_idx(idx.begin(), idx.begin() + n_val);
  std::vector<int> train_idx(idx.begin() + n_val, idx.end());
  if (train_idx.size() < 2) throw DataError("prodlda: need at least 2 training docs");

  // fixed validation noise: comparable losses across epochs
  Tensor2 val_eps(n_val, config.K);
  std::mt19937_64 val_rng(config.seed + 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& e : val_eps.v) e = normal(val_rng);

  AdamState adam;
  adam.lr = config.lr;
  auto params = model.parameters();
  adam.init(params);

  auto val_loss = [&]() {
    if (n_val == 0) return 0.0;
    std::vector<const Document*> batch;
    for (int i : val_idx) batch.push_back(&corpus.docs[i]);
    return prodlda_loss(model, batch, val_eps, false, nullptr, nullptr);
  };

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_params;
  std::vector<double> best_rm_mu, best_rv_mu, best_rm_lv, best_rv_lv, best_rm_dec, best_rv_dec;
  int since_best = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    for (size_t start = 0; start < train_idx.size();) {
      size_t end = std::min(train_idx.size(), start + config.batch_size);
      if (train_idx.size() - end == 1) end = train_idx.size();  // avoid a size-1 batch
      std::vector<const Document*> batch;
      for (size_t i = start; i < end; ++i) batch.push_back(&corpus.docs[train_idx[i]]);
      ProdLdaGrads grads;
      prodlda_loss(model, batch, rng, true, &grads);
      std::vector<const std::vector<double>*> grad_ptrs;
      for (const auto& g : grads) grad_ptrs.push_back(&g);
      adam.update(params, grad_ptrs);
      start = end;
    }
    if (n_val > 0) {
      const double vl = val_loss();
      if (vl < best_val - 1e-12) {
        best_val = vl;
        since_best = 0;
        best_params.clear();
        for (auto* p : params) best_params.push_back(*p);
        best_rm_mu = model.bn_mu.running_mean; best_rv_mu = model.bn_mu.running_var;
        best_rm_lv = model.bn_lv.running_mean; best_rv_lv = model.bn_lv.running_var;
        best_rm_dec = model.bn_dec.running_mean; best_rv_dec = model.bn_dec.running_var;
      } else if (++since_best >= config.patience) {
        break;
      }
    }
  }
  if (!best_params.empty()) {
    for (size_t i = 0; i < params.size(); ++i) *params[i] = best_params[i];
    model.bn_mu.running_mean = best_rm_mu; model.bn_mu.running_var = best_rv_mu;
    model.bn_lv.running_mean = best_rm_lv; model.bn_lv.running_var = best_rv_lv;
    model.bn_dec.running_mean = best_rm_dec; model.bn_dec.running_var = best_rv_dec;
  }
  return model;
}

TopicWordMatrix prodlda_topic_word_matrix(const ProdLdaModel& model) {
  TopicWordMatrix phi(model.config.K, std::vector<double>(model.V));
  for (int k = 0; k < model.config.K; ++k) {
    Tensor2 row(1, model.V);
    for (int w = 0; w < model.V; ++w) row.at(0, w) = model.decoder_phi.at(k, w);
    Tensor2 sm = softmax_forward(row);
    for (int w = 0; w < model.V; ++w) phi[k][w] = sm.at(0, w);
  }
  return phi;
}

double prodlda_heldout_loglik(ProdLdaModel& model, const std::vector<Document>& docs,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double total = 0.0;
  for (const auto& doc : docs) {
    Tensor2 eps(1, model.config.K);
    for (auto& e : eps.v) e = normal(rng);
    total -= prodlda_loss(model, {&doc}, eps, false, nullptr, nullptr);
  }
  return total;
}

namespace {

void write_linear(std::ostream& os, const std::string& name, const LinearLayer& l) {
  std::vector<std::vector<double>> w(l.weight.rows, std::vector<double>(l.weight.cols));
  for (int r = 0; r < l.weight.rows; ++r)
    for (int c = 0; c < l.weight.cols; ++c) w[r][c] = l.weight.at(r, c);
  write_matrix(os, name + "_w", w);
  write_vector(os, name + "_b", l.bias);
}

LinearLayer read_linear(std::istream& is, const std::string& name) {
  LinearLayer l;
  auto w = read_matrix(is, name + "_w");
  l.weight = Tensor2(static_cast<int>(w.size()), w.empty() ? 0 : static_cast<int>(w[0].size()));
  for (size_t r = 0; r < w.size(); ++r)
    for (size_t c = 0; c < w[r].size(); ++c) l.weight.at((int)r, (int)c) = w[r][c];
  l.bias = read_vector(is, name + "_b");
  l.has_bias = true;
  return l;
}

void write_bn(std::ostream& os, const std::string& name, const BatchNormLayer& bn) {
  write_vector(os, name + "_gain", bn.gain);
  write_vector(os, name + "_shift", bn.shift);
  write_vector(os, name + "_rmean", bn.running_mean);
  write_vector(os, name + "_rvar", bn.running_var);
}

void read_bn(std::istream& is, const std::string& name, BatchNormLayer& bn) {
  bn.gain = read_vector(is, name + "_gain");
  bn.shift = read_vector(is, name + "_shift");
  bn.running_mean = read_vector(is, name + "_rmean");
  bn.running_var = read_vector(is, name + "_rvar");
}

}  // namespace

void save_prodlda(const std::string& path, const ProdLdaModel& model) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  const auto& c = model.config;
  f << "stm-model prodlda\n";
  f << "K " << c.K << '\n';
  f << "V " << model.V << '\n';
  f << "alpha " << fmt_double(c.alpha) << '\n';
  f << "hidden1 " << c.hidden1 << '\n';
  f << "hidden2 " << c.hidden2 << '\n';
  f << "dropout_p " << fmt_double(c.dropout_p) << '\n';
  f << "lr " << fmt_double(c.lr) << '\n';
  f << "batch_size " << c.batch_size << '\n';
  f << "max_epochs " << c.max_epochs << '\n';
  f << "patience " << c.patience << '\n';
  f << "val_fraction " << fmt_double(c.val_fraction) << '\n';
  f << "count_weighted " << (c.count_weighted ? 1 : 0) << '\n';
  f << "decoder_batchnorm " << (c.decoder_batchnorm ? 1 : 0) << '\n';
  f << "seed " << c.seed << '\n';
  write_linear(f, "enc1", model.enc1);
  write_linear(f, "enc2", model.enc2);
  write_linear(f, "mu_head", model.mu_head);
  write_linear(f, "lv_head", model.lv_head);
  write_bn(f, "bn_mu", model.bn_mu);
  write_bn(f, "bn_lv", model.bn_lv);
  write_bn(f, "bn_dec", model.bn_dec);
  std::vector<std::vector<double>> phi(c.K, std::vector<double>(model.V));
  for (int k = 0; k < c.K; ++k)
    for (int w = 0; w < model.V; ++w) phi[k][w] = model.decoder_phi.at(k, w);
  write_matrix(f, "decoder_phi", phi);
  write_vector(f, "prior_mu", model.prior.mu);
  write_vector(f, "prior_var", model.prior.var);
}

ProdLdaModel load_prodlda(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::string magic, kind, key;
  f >> magic >> kind;
  if (magic != "stm-model" || kind != "prodlda")
    throw DataError(path + " is not a prodlda model file");
  ProdLdaModel model;
  auto& c = model.config;
  int cw = 0, dbn = 0;
  f >> key >> c.K >> key >> model.V >> key >> c.alpha >> key >> c.hidden1 >> key >>
      c.hidden2 >> key >> c.dropout_p >> key >> c.lr >> key >> c.batch_size >> key >>
      c.max_epochs >> key >> c.patience >> key >> c.val_fraction >> key >> cw >> key >>
      dbn >> key >> c.seed;
  c.count_weighted = cw != 0;
  c.decoder_batchnorm = dbn != 0;
  model.enc1 = read_linear(f, "enc1");
  model.enc2 = read_linear(f, "enc2");
  model.mu_head = read_linear(f, "mu_head");
  model.lv_head = read_linear(f, "lv_head");
  read_bn(f, "bn_mu", model.bn_mu);
  read_bn(f, "bn_lv", model.bn_lv);
  read_bn(f, "bn_dec", model.bn_dec);
  model.bn_dec.learn_shift = false;
  auto phi = read_matrix(f, "decoder_phi");
  model.decoder_phi = Tensor2(c.K, model.V);
  for (int k = 0; k < c.K; ++k)
    for (int w = 0; w < model.V; ++w) model.decoder_phi.at(k, w) = phi[k][w];
  model.prior.mu = read_vector(f, "prior_mu");
  model.prior.var = read_vector(f, "prior_var");
  c.validate();
  return model;
}

}  // namespace stm
