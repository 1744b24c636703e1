#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "helpers.hpp"
#include "stm/prodlda.hpp"

using namespace stm;
using namespace stm_test;

TEST_CASE("laplace_prior fixtures") {
  auto p2 = laplace_prior({1.0, 1.0});
  CHECK(p2.mu[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p2.mu[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p2.var[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p2.var[1] == doctest::Approx(0.5).epsilon(1e-12));

  auto p20 = laplace_prior(std::vector<double>(20, 1.0));
  for (int k = 0; k < 20; ++k) {
    CHECK(p20.mu[k] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p20.var[k] == doctest::Approx(0.95).epsilon(1e-12));
  }

  auto sym = laplace_prior(std::vector<double>(7, 0.02));
  for (double m : sym.mu) CHECK(m == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("prodlda_encode zero heads, purity, bag-of-words dependence") {
  ProdLdaConfig config;
  config.K = 3;
  config.hidden1 = 5;
  config.hidden2 = 4;
  std::mt19937_64 rng(1);
  auto model = prodlda_build(8, config, rng);
  for (auto& v : model.mu_head.weight.v) v = 0.0;
  for (auto& v : model.mu_head.bias) v = 0.0;
  for (auto& v : model.lv_head.weight.v) v = 0.0;
  for (auto& v : model.lv_head.bias) v = 0.0;

  Document d;
  d.ids = {0, 3};
  d.counts = {2, 1};
  d.length = 3;
  std::vector<double> mu, lv;
  prodlda_encode(model, d, &mu, &lv);
  for (double x : mu) CHECK(x == doctest::Approx(0.0).epsilon(1e-12));
  for (double x : lv) CHECK(x == doctest::Approx(0.0).epsilon(1e-12));

  auto model2 = prodlda_build(8, config, rng);
  std::vector<double> mu1, lv1, mu2, lv2;
  prodlda_encode(model2, d, &mu1, &lv1);
  prodlda_encode(model2, d, &mu2, &lv2);
  CHECK(mu1 == mu2);
  CHECK(lv1 == lv2);

  Document same_counts;  // different id order, same bag
  same_counts.ids = {3, 0};
  same_counts.counts = {1, 2};
  same_counts.length = 3;
  std::vector<double> mu3, lv3;
  prodlda_encode(model2, same_counts, &mu3, &lv3);
  for (size_t i = 0; i < mu1.size(); ++i)
    CHECK(mu3[i] == doctest::Approx(mu1[i]).epsilon(1e-12));
}

TEST_CASE("reparam_sample determinism and Monte Carlo symmetry") {
  auto theta = reparam_sample({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
  for (double x : theta) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-12));

  auto a = reparam_sample({0.5, -0.5}, {0.1, 0.2}, {1.0, -1.0});
  auto b = reparam_sample({0.5, -0.5}, {0.1, 0.2}, {1.0, -1.0});
  CHECK(a == b);

  std::mt19937_64 rng(12);
  std::normal_distribution<double> gauss;
  double mean1 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto t = reparam_sample({0.0, 0.0}, {0.0, 0.0}, {gauss(rng), gauss(rng)});
    mean1 += t[1];
  }
  mean1 /= n;
  CHECK(mean1 == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::fabs(mean1 - 0.5) < 0.01);
}

TEST_CASE("prodlda_decode: uniform, single expert, product-of-experts order") {
  ProdLdaConfig config;
  config.K = 2;
  std::mt19937_64 rng(2);
  auto model = prodlda_build(4, config, rng);
  for (auto& v : model.decoder_phi.v) v = 0.0;
  auto uni = prodlda_decode(model, {0.3, 0.7});
  for (double x : uni) CHECK(x == doctest::Approx(0.25).epsilon(1e-12));

  ProdLdaModel single;  // built by hand: a single expert row
  single.config.K = 1;
  single.V = 3;
  single.decoder_phi = Tensor2(1, 3);
  single.decoder_phi.at(0, 0) = 1.0;
  single.decoder_phi.at(0, 1) = 2.0;
  single.decoder_phi.at(0, 2) = 3.0;
  auto out = prodlda_decode(single, {1.0});
  double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(out[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));

  // mix-then-normalize vs normalize-then-mix
  ProdLdaConfig c2;
  c2.K = 2;
  auto poe = prodlda_build(2, c2, rng);
  poe.decoder_phi.at(0, 0) = 10.0;
  poe.decoder_phi.at(0, 1) = 0.0;
  poe.decoder_phi.at(1, 0) = 0.0;
  poe.decoder_phi.at(1, 1) = 10.0;
  auto dist = prodlda_decode(poe, {0.9, 0.1});
  CHECK(dist[0] == doctest::Approx(0.99966).epsilon(1e-3));
  double sig10 = 1.0 / (1.0 + std::exp(-10.0));
  double mixture = 0.9 * sig10 + 0.1 * (1.0 - sig10);
  CHECK(mixture == doctest::Approx(0.89996).epsilon(1e-4));
  CHECK(std::fabs(dist[0] - mixture) > 0.05);

  std::uniform_real_distribution<double> uni_d(0.0, 1.0);
  for (auto& v : poe.decoder_phi.v) v = uni_d(rng);
  auto simplex = prodlda_decode(poe, {0.4, 0.6});
  double s = 0.0;
  for (double x : simplex) {
    CHECK(x >= 0.0);
    s += x;
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kl_divergence fixture, identity, nonnegativity") {
  LaplacePrior prior;
  prior.mu = {0.0, 0.0};
  prior.var = {0.5, 0.5};
  CHECK(kl_divergence({0.0, 0.0}, {0.0, 0.0}, prior) ==
        doctest::Approx(0.5 * (4.0 - 2.0 + std::log(0.25))).epsilon(1e-10));
  CHECK(kl_divergence({0.0, 0.0}, {0.0, 0.0}, prior) ==
        doctest::Approx(0.30685).epsilon(1e-4));

  LaplacePrior same;
  same.mu = {0.3, -0.2};
  same.var = {0.7, 1.2};
  CHECK(kl_divergence(same.mu, {std::log(0.7), std::log(1.2)}, same) ==
        doctest::Approx(0.0).epsilon(1e-12));

  std::mt19937_64 rng(6);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> mu = {gauss(rng), gauss(rng)};
    std::vector<double> lv = {gauss(rng), gauss(rng)};
    LaplacePrior p;
    p.mu = {gauss(rng), gauss(rng)};
    p.var = {std::exp(gauss(rng)), std::exp(gauss(rng))};
    CHECK(kl_divergence(mu, lv, p) >= -1e-12);
  }
}

TEST_CASE("kl_divergence agrees with Monte Carlo") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss;
  std::vector<double> mu = {0.4, -0.3};
  std::vector<double> lv = {std::log(0.8), std::log(1.5)};
  LaplacePrior prior;
  prior.mu = {0.1, 0.2};
  prior.var = {0.6, 0.9};
  double closed = kl_divergence(mu, lv, prior);
  double mc = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 2; ++k) {
      double sigma2 = std::exp(lv[k]);
      double x = mu[k] + std::sqrt(sigma2) * gauss(rng);
      double logq = -0.5 * (std::log(2 * M_PI * sigma2) + (x - mu[k]) * (x - mu[k]) / sigma2);
      double logp = -0.5 * (std::log(2 * M_PI * prior.var[k]) +
                            (x - prior.mu[k]) * (x - prior.mu[k]) / prior.var[k]);
      mc += logq - logp;
    }
  }
  mc /= n;
  CHECK(mc == doctest::Approx(closed).epsilon(0.01));
}

TEST_CASE("reconstruction_loss fixtures") {
  Document d;
  d.ids = {0};
  d.counts = {1};
  d.length = 1;
  CHECK(reconstruction_loss(d, {0.5, 0.5}, false) ==
        doctest::Approx(0.693147).epsilon(1e-5));
  CHECK(reconstruction_loss(d, {1.0, 0.0}, false) == doctest::Approx(0.0).epsilon(1e-12));
  d.counts = {2};
  d.length = 2;
  CHECK(reconstruction_loss(d, {0.5, 0.5}, true) ==
        doctest::Approx(1.386294).epsilon(1e-5));
  CHECK(reconstruction_loss(d, {0.5, 0.5}, false) ==
        doctest::Approx(0.693147).epsilon(1e-5));
}

TEST_CASE("prodlda_loss zero-initialized composition case") {
  ProdLdaConfig config;
  config.K = 4;
  config.hidden1 = 3;
  config.hidden2 = 3;
  const int V = 6;
  std::mt19937_64 rng(3);
  auto model = prodlda_build(V, config, rng);
  for (auto* p : model.parameters())
    if (p != &model.bn_mu.gain && p != &model.bn_lv.gain && p != &model.bn_dec.gain)
      for (auto& x : *p) x = 0.0;
  model.prior.mu.assign(config.K, 0.0);
  model.prior.var.assign(config.K, 1.0);  // KL term vanishes exactly

  Document d1, d2;
  d1.ids = {0, 2, 4};
  d1.counts = {1, 1, 1};
  d1.length = 3;
  d2.ids = {1};
  d2.counts = {3};
  d2.length = 3;
  Tensor2 eps(2, config.K, 0.0);
  double loss = prodlda_loss(model, {&d1, &d2}, eps, false, nullptr, nullptr);
  double expected = (3.0 * std::log(V) + 1.0 * std::log(V)) / 2.0;
  CHECK(loss == doctest::Approx(expected).epsilon(1e-10));
  CHECK(loss >= 0.0);
}

TEST_CASE("prodlda_loss gradient matches finite differences") {
  ProdLdaConfig config;
  config.K = 3;
  config.hidden1 = 8;
  config.hidden2 = 8;
  config.decoder_batchnorm = true;  // exercise the optional path too
  const int V = 10;
  std::mt19937_64 rng(5);
  auto model = prodlda_build(V, config, rng);

  std::vector<const Document*> batch;
  std::vector<Document> docs(3);
  std::mt19937_64 drng(8);
  std::uniform_int_distribution<int> pick(0, V - 1);
  for (auto& d : docs) {
    for (int i = 0; i < 6; ++i) {
      int w = pick(drng);
      bool found = false;
      for (size_t j = 0; j < d.ids.size(); ++j)
        if (d.ids[j] == w) {
          ++d.counts[j];
          found = true;
        }
      if (!found) {
        d.ids.push_back(w);
        d.counts.push_back(1);
      }
    }
    for (int c : d.counts) d.length += c;
    batch.push_back(&d);
  }
  Tensor2 eps(3, config.K);
  std::normal_distribution<double> gauss;
  for (auto& x : eps.v) x = gauss(rng);

  ProdLdaGrads grads;
  prodlda_loss(model, batch, eps, true, nullptr, &grads);
  auto params = model.parameters();
  REQUIRE(grads.size() == params.size());

  const double h = 1e-5;
  int checked = 0;
  for (size_t p = 0; p < params.size(); ++p) {
    auto& vec = *params[p];
    REQUIRE(grads[p].size() == vec.size());
    const size_t stride = std::max<size_t>(1, vec.size() / 7);
    for (size_t i = 0; i < vec.size(); i += stride) {
      double orig = vec[i];
      vec[i] = orig + h;
      double up = prodlda_loss(model, batch, eps, true, nullptr, nullptr);
      vec[i] = orig - h;
      double down = prodlda_loss(model, batch, eps, true, nullptr, nullptr);
      vec[i] = orig;
      double numeric = (up - down) / (2 * h);
      double denom = std::max({1.0, std::fabs(numeric), std::fabs(grads[p][i])});
      CHECK(std::fabs(numeric - grads[p][i]) / denom < 1e-4);
      ++checked;
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("prodlda training: determinism, loss decrease, planted recovery") {
  auto corpus = planted_dmm_corpus(2, 8, 400, 12, false, 31);
  ProdLdaConfig config;
  config.K = 2;
  config.hidden1 = 32;
  config.hidden2 = 32;
  config.batch_size = 64;
  config.lr = 0.005;
  config.max_epochs = 100;
  config.seed = 4;

  auto m1 = prodlda_train(corpus, config);
  auto m2 = prodlda_train(corpus, config);
  CHECK(m1.decoder_phi.v == m2.decoder_phi.v);
  CHECK(m1.enc1.weight.v == m2.enc1.weight.v);

  // trained model reconstructs better than a fresh one
  std::mt19937_64 rng(9);
  auto fresh = prodlda_build(corpus.vocab.size(), config, rng);
  std::vector<const Document*> batch;
  for (int i = 0; i < 64; ++i) batch.push_back(&corpus.docs[i]);
  Tensor2 eps(64, config.K, 0.0);
  double trained_loss = prodlda_loss(m1, batch, eps, false, nullptr, nullptr);
  double fresh_loss = prodlda_loss(fresh, batch, eps, false, nullptr, nullptr);
  CHECK(trained_loss < fresh_loss);

  // topic rows concentrate on the planted vocabulary halves
  auto phi = prodlda_topic_word_matrix(m1);
  const int V = corpus.vocab.size();
  double best = 0.0;
  for (int assign = 0; assign < 2; ++assign) {
    double worst = 1.0;
    for (int k = 0; k < 2; ++k) {
      int half = (k + assign) % 2;
      double mass = 0.0;
      for (int w = half * V / 2; w < (half + 1) * V / 2; ++w) mass += phi[k][w];
      worst = std::min(worst, mass);
    }
    best = std::max(best, worst);
  }
  CHECK(best > 0.8);
}

TEST_CASE("adam steps on prodlda_loss reduce the loss") {
  auto corpus = planted_dmm_corpus(2, 6, 60, 8, false, 15);
  ProdLdaConfig config;
  config.K = 2;
  config.hidden1 = 16;
  config.hidden2 = 16;
  std::mt19937_64 rng(2);
  auto model = prodlda_build(corpus.vocab.size(), config, rng);
  std::vector<const Document*> batch;
  for (const auto& d : corpus.docs) batch.push_back(&d);
  Tensor2 eps(static_cast<int>(batch.size()), config.K, 0.0);

  auto params = model.parameters();
  AdamState adam;
  adam.init(params);
  double first = prodlda_loss(model, batch, eps, true, nullptr, nullptr);
  double last = first;
  for (int step = 0; step < 60; ++step) {
    ProdLdaGrads grads;
    last = prodlda_loss(model, batch, eps, true, nullptr, &grads);
    std::vector<const std::vector<double>*> gptrs;
    for (const auto& g : grads) gptrs.push_back(&g);
    adam.update(params, gptrs);
  }
  CHECK(last < first);
}

TEST_CASE("prodlda_topic_word_matrix softmax behavior") {
  ProdLdaConfig config;
  config.K = 2;
  std::mt19937_64 rng(1);
  auto model = prodlda_build(5, config, rng);
  for (auto& v : model.decoder_phi.v) v = 0.0;
  auto phi0 = prodlda_topic_word_matrix(model);
  for (const auto& row : phi0)
    for (double x : row) CHECK(x == doctest::Approx(0.2).epsilon(1e-12));

  std::normal_distribution<double> gauss;
  for (auto& v : model.decoder_phi.v) v = gauss(rng);
  auto phi1 = prodlda_topic_word_matrix(model);
  for (const auto& row : phi1) {
    double s = 0.0;
    for (double x : row) s += x;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (int w = 0; w < 5; ++w) model.decoder_phi.at(0, w) += 3.5;
  auto phi2 = prodlda_topic_word_matrix(model);
  for (int w = 0; w < 5; ++w)
    CHECK(phi2[0][w] == doctest::Approx(phi1[0][w]).epsilon(1e-12));
}

TEST_CASE("prodlda model file round-trip") {
  auto corpus = planted_dmm_corpus(2, 5, 80, 8, false, 23);
  ProdLdaConfig config;
  config.K = 2;
  config.hidden1 = 10;
  config.hidden2 = 10;
  config.max_epochs = 3;
  auto model = prodlda_train(corpus, config);
  auto path = (std::filesystem::temp_directory_path() / "stm_prodlda.txt").string();
  save_prodlda(path, model);
  auto loaded = load_prodlda(path);
  CHECK(loaded.decoder_phi.v == model.decoder_phi.v);
  CHECK(loaded.enc1.weight.v == model.enc1.weight.v);
  CHECK(loaded.bn_mu.running_mean == model.bn_mu.running_mean);
  CHECK(loaded.prior.var == model.prior.var);

  Document d = corpus.docs[0];
  std::vector<double> mu1, lv1, mu2, lv2;
  prodlda_encode(model, d, &mu1, &lv1);
  prodlda_encode(loaded, d, &mu2, &lv2);
  CHECK(mu1 == mu2);
  CHECK(lv1 == lv2);
}

TEST_CASE("prodlda config validation") {
  ProdLdaConfig config;
  config.K = 0;
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config.K = 2;
  config.dropout_p = 1.0;
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config.dropout_p = 0.2;
  config.val_fraction = 0.0;
  CHECK_THROWS_AS(config.validate(), ValidationError);
}
