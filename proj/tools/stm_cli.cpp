// Command-line pipeline: ingest -> train -> eval / topics / gridsearch / signal.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "stm/corpus.hpp"
#include "stm/dmm.hpp"
#include "stm/eval.hpp"
#include "stm/io.hpp"
#include "stm/lda.hpp"
#include "stm/prodlda.hpp"
#include "stm/select.hpp"
#include "stm/signal.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RawRecord {
  std::string text;
  std::string author;
  long long timestamp = 0;
  bool has_timestamp = false;
};

std::vector<RawRecord> read_jsonl(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw stm::DataError("cannot open " + path);
  std::vector<RawRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw stm::DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.contains("text"))
      throw stm::DataError(path + ":" + std::to_string(lineno) + ": missing 'text'");
    RawRecord rec;
    rec.text = j["text"].get<std::string>();
    if (j.contains("author")) rec.author = j["author"].get<std::string>();
    if (j.contains("timestamp_utc")) {
      rec.timestamp = j["timestamp_utc"].get<long long>();
      rec.has_timestamp = true;
    }
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw stm::DataError(path + ": no documents");
  return out;
}

struct PreprocessFlags {
  std::string stopwords_path, lemma_path;
  int min_count = 100;
  bool keep_nonlatin = false, keep_mentions = false, keep_urls = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--stopwords", stopwords_path, "stopword list, one per line");
    cmd->add_option("--lemma-map", lemma_path, "surface<TAB>lemma map file");
    cmd->add_option("--min-count", min_count, "drop words seen fewer times")
        ->capture_default_str();
    cmd->add_flag("--keep-nonlatin", keep_nonlatin, "keep non-Latin characters");
    cmd->add_flag("--keep-mentions", keep_mentions, "keep @user mentions");
    cmd->add_flag("--keep-urls", keep_urls, "keep URLs");
  }
  stm::PreprocessConfig build() const {
    stm::PreprocessConfig cfg;
    if (!stopwords_path.empty()) cfg.stopwords = stm::load_word_list(stopwords_path);
    if (!lemma_path.empty()) cfg.lemma_map = stm::load_lemma_map(lemma_path);
    cfg.min_count = min_count;
    cfg.strip_nonlatin = !keep_nonlatin;
    cfg.strip_mentions = !keep_mentions;
    cfg.strip_urls = !keep_urls;
    return cfg;
  }
};

stm::Corpus load_corpus_dir(const std::string& dir) {
  return stm::load_corpus(dir + "/corpus.tsv", dir + "/vocab.tsv");
}

std::string model_kind(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw stm::DataError("cannot open " + path);
  std::string magic, kind;
  f >> magic >> kind;
  if (magic != "stm-model") throw stm::DataError(path + " is not a model file");
  return kind;
}

void echo_config(const std::string& out_dir, const std::vector<std::string>& lines) {
  std::ofstream f(out_dir + "/run_config.txt", std::ios::binary);
  for (const auto& l : lines) f << l << '\n';
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& part : stm::split(s, ','))
    if (!part.empty()) out.push_back(std::stoi(part));
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& part : stm::split(s, ','))
    if (!part.empty()) out.push_back(std::stod(part));
  return out;
}

// Frequency-ranked top words per topic, restricted to words that occur in the
// evaluation corpus (excluded words are counted and reported).
std::vector<std::vector<int>> coherence_topics(const stm::TopicWordMatrix& phi,
                                               const stm::WordStats& doc_stats,
                                               int N, int* excluded) {
  std::vector<std::vector<int>> topics;
  *excluded = 0;
  for (const auto& row : phi) {
    auto ranked = stm::top_words(row, static_cast<int>(row.size()));
    std::vector<int> kept;
    for (int w : ranked) {
      if (static_cast<int>(kept.size()) == N) break;
      if (doc_stats.doc_freq.count(w))
        kept.push_back(w);
      else
        ++*excluded;
    }
    if (static_cast<int>(kept.size()) < 2)
      throw stm::DataError("fewer than 2 of a topic's top words occur in the corpus");
    topics.push_back(std::move(kept));
  }
  return topics;
}

int cmd_ingest(const std::string& input, const std::string& out_dir,
               const PreprocessFlags& flags, bool dedupe) {
  auto records = read_jsonl(input);
  stm::PreprocessConfig cfg = flags.build();
  std::vector<std::vector<std::string>> token_docs;
  for (const auto& rec : records) token_docs.push_back(stm::tokenize(rec.text, cfg));
  stm::Corpus corpus;
  corpus.vocab = stm::build_vocabulary(token_docs, cfg.min_count);
  int dropped = 0;
  for (size_t i = 0; i < token_docs.size(); ++i) {
    try {
      stm::Document doc = stm::encode(token_docs[i], corpus.vocab, dedupe);
      doc.author = records[i].author;
      doc.timestamp = records[i].timestamp;
      doc.has_timestamp = records[i].has_timestamp;
      corpus.docs.push_back(std::move(doc));
    } catch (const stm::EmptyDocument&) {
      ++dropped;
    }
  }
  fs::create_directories(out_dir);
  stm::save_vocabulary(out_dir + "/vocab.tsv", corpus.vocab);
  stm::save_corpus(out_dir + "/corpus.tsv", corpus);
  echo_config(out_dir, {"command ingest", "input " + input,
                        "min_count " + std::to_string(cfg.min_count),
                        "dedupe " + std::to_string(dedupe ? 1 : 0)});
  std::cout << "documents " << corpus.size() << "\nvocabulary " << corpus.vocab.size()
            << "\ndropped " << dropped << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Short-text topic models: DMM, LDA, ProdLDA"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "preprocess and encode raw documents");
  std::string in_path, out_dir;
  bool dedupe = false;
  PreprocessFlags pre;
  ingest->add_option("--input", in_path, "JSON-lines input, one document per line")
      ->required();
  ingest->add_option("--out-dir", out_dir, "output directory")->required();
  ingest->add_flag("--dedupe", dedupe, "keep each surviving word once per document");
  pre.attach(ingest);

  // train
  auto* train = app.add_subcommand("train", "train a topic model");
  std::string model_name, corpus_dir, model_out, labels_out, train_log;
  stm::DmmParams dmm_params;
  stm::LdaParams lda_params;
  stm::ProdLdaConfig pl_config;
  int k = 20;
  double alpha = -1.0;
  std::uint64_t seed = 0;
  train->add_option("--model", model_name, "dmm | lda | prodlda")
      ->required()
      ->check(CLI::IsMember({"dmm", "lda", "prodlda"}));
  train->add_option("--corpus", corpus_dir, "ingest output directory")->required();
  train->add_option("--out", model_out, "model file to write")->required();
  train->add_option("--k", k, "number of topics")->capture_default_str();
  train->add_option("--alpha", alpha, "document-topic prior (model default when unset)");
  train->add_option("--seed", seed, "random seed")->capture_default_str();
  train->add_option("--beta", dmm_params.beta, "dmm topic-word prior")
      ->capture_default_str();
  train->add_option("--iters", dmm_params.iterations, "dmm Gibbs sweeps")
      ->capture_default_str();
  train->add_option("--labels", labels_out, "dmm: write doc<TAB>topic assignments");
  train->add_option("--eta", lda_params.eta, "lda topic-word prior")
      ->capture_default_str();
  train->add_option("--kappa", lda_params.kappa, "lda decay")->capture_default_str();
  train->add_option("--tau0", lda_params.tau0, "lda offset")->capture_default_str();
  train->add_option("--passes", lda_params.passes, "lda corpus passes")
      ->capture_default_str();
  train->add_option("--batch-size", lda_params.batch_size, "minibatch size")
      ->capture_default_str();
  train->add_option("--log", train_log, "lda: write t,rho,batch_elbo CSV");
  train->add_option("--hidden1", pl_config.hidden1, "prodlda encoder width 1")
      ->capture_default_str();
  train->add_option("--hidden2", pl_config.hidden2, "prodlda encoder width 2")
      ->capture_default_str();
  train->add_option("--dropout", pl_config.dropout_p, "prodlda dropout probability")
      ->capture_default_str();
  train->add_option("--lr", pl_config.lr, "prodlda Adam learning rate")
      ->capture_default_str();
  train->add_option("--max-epochs", pl_config.max_epochs, "prodlda epoch cap")
      ->capture_default_str();
  train->add_option("--patience", pl_config.patience, "prodlda early-stop patience")
      ->capture_default_str();
  train->add_option("--val-fraction", pl_config.val_fraction, "prodlda validation share")
      ->capture_default_str();
  train->add_flag("--count-weighted", pl_config.count_weighted,
                  "prodlda: weight reconstruction by token counts");
  train->add_flag("--decoder-batchnorm", pl_config.decoder_batchnorm,
                  "prodlda: normalize decoder logits");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "perplexity and coherence reports");
  std::string model_path, metrics_csv = "umass,uci,npmi", eval_out_dir;
  int top_n = 20, omega = 20;
  double epsilon = 1e-12;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("--model", model_path, "trained model file")->required();
  eval_cmd->add_option("--corpus", corpus_dir, "evaluation corpus directory")->required();
  eval_cmd->add_option("--out-dir", eval_out_dir, "report directory")->required();
  eval_cmd->add_option("--metrics", metrics_csv, "comma list of umass,uci,npmi")
      ->capture_default_str();
  eval_cmd->add_option("--n", top_n, "top words per topic")->capture_default_str();
  eval_cmd->add_option("--omega", omega, "sliding window size")->capture_default_str();
  eval_cmd->add_option("--epsilon", epsilon, "coherence smoothing constant")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed, "noise seed for prodlda perplexity")
      ->capture_default_str();

  // topics
  auto* topics_cmd = app.add_subcommand("topics", "relevance-ranked top words");
  std::string topics_out;
  double rel_lambda = 0.3;
  int topics_n = 10;
  topics_cmd->add_option("--model", model_path, "trained model file")->required();
  topics_cmd->add_option("--corpus", corpus_dir, "corpus directory (word probabilities)")
      ->required();
  topics_cmd->add_option("--out", topics_out, "output file")->required();
  topics_cmd->add_option("--lambda", rel_lambda, "relevance tradeoff")
      ->capture_default_str();
  topics_cmd->add_option("--n", topics_n, "words per topic")->capture_default_str();

  // gridsearch
  auto* grid_cmd = app.add_subcommand("gridsearch", "cross-validated grid search");
  std::string grid_out, k_list = "5,10,15,20,25,30,35,40,45,50";
  std::string alpha_list = "0.01,0.025,0.05,0.1,0.2", beta_list = "0.06,0.1,0.24";
  std::string kappa_list = "0.6,0.75,0.9", tau0_list = "1,64,256";
  int folds = 5, grid_iters = 30, grid_passes = 5, grid_batch = 256;
  std::uint64_t grid_seed = 0;
  grid_cmd->add_option("--model", model_name, "dmm | lda")
      ->required()
      ->check(CLI::IsMember({"dmm", "lda"}));
  grid_cmd->add_option("--corpus", corpus_dir, "corpus directory")->required();
  grid_cmd->add_option("--out", grid_out, "result CSV")->required();
  grid_cmd->add_option("--k", k_list, "comma list of topic counts")
      ->capture_default_str();
  grid_cmd->add_option("--alpha-grid", alpha_list, "dmm alpha axis")
      ->capture_default_str();
  grid_cmd->add_option("--beta-grid", beta_list, "dmm beta axis")->capture_default_str();
  grid_cmd->add_option("--kappa-grid", kappa_list, "lda kappa axis")
      ->capture_default_str();
  grid_cmd->add_option("--tau0-grid", tau0_list, "lda tau0 axis")->capture_default_str();
  grid_cmd->add_option("--folds", folds, "cross-validation folds")->capture_default_str();
  grid_cmd->add_option("--iters", grid_iters, "dmm sweeps per fit")->capture_default_str();
  grid_cmd->add_option("--passes", grid_passes, "lda passes per fit")
      ->capture_default_str();
  grid_cmd->add_option("--batch-size", grid_batch, "lda minibatch size")
      ->capture_default_str();
  grid_cmd->add_option("--seed", grid_seed, "random seed")->capture_default_str();

  // signal
  auto* signal_cmd = app.add_subcommand("signal", "daily features and OLS regression");
  std::string tweets_path, prices_path, pos_path, neg_path, signal_out;
  PreprocessFlags signal_pre;
  signal_cmd->add_option("--model", model_path, "trained dmm model")->required();
  signal_cmd->add_option("--corpus", corpus_dir, "corpus directory (vocabulary)")
      ->required();
  signal_cmd->add_option("--tweets", tweets_path, "JSON-lines tweets with timestamps")
      ->required();
  signal_cmd->add_option("--prices", prices_path, "CSV date,close")->required();
  signal_cmd->add_option("--pos-lexicon", pos_path, "positive words, one per line")
      ->required();
  signal_cmd->add_option("--neg-lexicon", neg_path, "negative words, one per line")
      ->required();
  signal_cmd->add_option("--out", signal_out, "regression table CSV")->required();
  signal_pre.attach(signal_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), 2);
  }

  try {
    if (*ingest) return cmd_ingest(in_path, out_dir, pre, dedupe);

    if (*train) {
      stm::Corpus corpus = load_corpus_dir(corpus_dir);
      if (model_name == "dmm") {
        dmm_params.K = k;
        dmm_params.alpha = alpha > 0 ? alpha : dmm_params.alpha;
        dmm_params.seed = seed;
        dmm_params.validate();
        std::vector<int> labels;
        stm::DmmModel model = stm::dmm_train(corpus, dmm_params, &labels);
        stm::save_dmm(model_out, model);
        if (!labels_out.empty()) {
          std::ofstream f(labels_out, std::ios::binary);
          for (size_t i = 0; i < labels.size(); ++i)
            f << i << '\t' << labels[i] << '\n';
        }
      } else if (model_name == "lda") {
        lda_params.K = k;
        lda_params.alpha = alpha > 0 ? alpha : 1.0 / k;
        lda_params.seed = seed;
        lda_params.validate();
        std::vector<stm::LdaTrainLogRow> log;
        stm::LdaModel model = stm::lda_train(corpus, lda_params, &log);
        stm::save_lda(model_out, model);
        if (!train_log.empty()) {
          std::ofstream f(train_log, std::ios::binary);
          f << "t,rho,batch_elbo\n";
          for (const auto& row : log)
            f << row.t << ',' << stm::fmt_double(row.rho) << ','
              << stm::fmt_double(row.batch_elbo) << '\n';
        }
      } else {
        pl_config.K = k;
        pl_config.alpha = alpha;
        pl_config.seed = seed;
        pl_config.batch_size = lda_params.batch_size;
        pl_config.validate();
        stm::ProdLdaModel model = stm::prodlda_train(corpus, pl_config);
        stm::save_prodlda(model_out, model);
      }
      std::cout << "model written to " << model_out << "\n";
      return 0;
    }

    if (*eval_cmd) {
      stm::Corpus corpus = load_corpus_dir(corpus_dir);
      const std::string kind = model_kind(model_path);
      stm::TopicWordMatrix phi;
      double loglik = 0.0;
      if (kind == "dmm") {
        stm::DmmModel model = stm::load_dmm(model_path);
        phi = model.phi_hat;
        loglik = stm::heldout_loglik(model, corpus.docs);
      } else if (kind == "lda") {
        stm::LdaModel model = stm::load_lda(model_path);
        phi = model.phi;
        loglik = stm::heldout_loglik(model, corpus.docs);
      } else {
        stm::ProdLdaModel model = stm::load_prodlda(model_path);
        phi = stm::prodlda_topic_word_matrix(model);
        loglik = stm::heldout_loglik(model, corpus.docs, eval_seed);
      }
      if (!phi.empty() && static_cast<int>(phi[0].size()) != corpus.vocab.size())
        throw stm::DataError("vocabulary mismatch: model V=" +
                             std::to_string(phi[0].size()) + ", corpus V=" +
                             std::to_string(corpus.vocab.size()));
      fs::create_directories(eval_out_dir);

      auto docset = stm::corpus_token_docs(corpus);
      std::vector<int> all_words(corpus.vocab.size());
      for (int w = 0; w < corpus.vocab.size(); ++w) all_words[w] = w;
      stm::WordStats doc_stats = stm::word_stats(docset, all_words);
      int excluded = 0;
      auto topics = coherence_topics(phi, doc_stats, top_n, &excluded);
      if (excluded > 0)
        std::cerr << "excluded " << excluded
                  << " top words absent from the evaluation corpus\n";

      stm::WordStats window_stats;
      bool have_window_stats = false;
      for (const auto& metric : stm::split(metrics_csv, ',')) {
        if (metric.empty()) continue;
        stm::CoherenceReport report;
        if (metric == "umass") {
          report = stm::umass(topics, doc_stats, epsilon);
        } else if (metric == "uci" || metric == "npmi") {
          if (!have_window_stats) {
            window_stats = stm::word_stats(stm::sliding_windows(corpus, omega), all_words);
            have_window_stats = true;
          }
          report = metric == "uci" ? stm::uci(topics, window_stats, epsilon)
                                   : stm::npmi(topics, window_stats, epsilon);
          report.omega = omega;
        } else {
          throw stm::ValidationError("unknown metric: " + metric);
        }
        std::ofstream f(eval_out_dir + "/coherence_" + metric + ".csv",
                        std::ios::binary);
        f << "metric,K,topic,score\n";
        for (size_t t = 0; t < report.per_topic.size(); ++t)
          f << metric << ',' << report.per_topic.size() << ',' << t << ','
            << stm::fmt_double(report.per_topic[t]) << '\n';
        f << metric << ',' << report.per_topic.size() << ",aggregate,"
          << stm::fmt_double(report.aggregate) << '\n';
      }
      const double ppx = stm::perplexity(loglik, corpus.total_tokens());
      echo_config(eval_out_dir,
                  {"command eval", "metrics " + metrics_csv,
                   "n " + std::to_string(top_n), "omega " + std::to_string(omega),
                   "epsilon " + stm::fmt_double(epsilon)});
      std::cout << "perplexity " << stm::fmt_double(ppx) << "\n";
      return 0;
    }

    if (*topics_cmd) {
      stm::Corpus corpus = load_corpus_dir(corpus_dir);
      const std::string kind = model_kind(model_path);
      stm::TopicWordMatrix phi;
      if (kind == "dmm")
        phi = stm::load_dmm(model_path).phi_hat;
      else if (kind == "lda")
        phi = stm::load_lda(model_path).phi;
      else
        phi = stm::prodlda_topic_word_matrix(stm::load_prodlda(model_path));
      auto scores = stm::relevance(phi, stm::corpus_word_probs(corpus), rel_lambda);
      std::ofstream f(topics_out, std::ios::binary);
      if (!f) throw stm::DataError("cannot write " + topics_out);
      for (size_t t = 0; t < scores.size(); ++t) {
        f << t << '\t';
        auto ids = stm::top_words(scores[t], topics_n);
        for (size_t i = 0; i < ids.size(); ++i) {
          if (i) f << ',';
          f << corpus.vocab.token_of[ids[i]];
        }
        f << '\n';
      }
      return 0;
    }

    if (*grid_cmd) {
      stm::Corpus corpus = load_corpus_dir(corpus_dir);
      std::ofstream f(grid_out, std::ios::binary);
      if (!f) throw stm::DataError("cannot write " + grid_out);
      const bool is_dmm = model_name == "dmm";
      stm::Grid grid;
      if (is_dmm)
        grid.axes = {{"alpha", parse_double_list(alpha_list)},
                     {"beta", parse_double_list(beta_list)}};
      else
        grid.axes = {{"kappa", parse_double_list(kappa_list)},
                     {"tau0", parse_double_list(tau0_list)}};
      f << "model,K," << grid.axes[0].first << ',' << grid.axes[1].first
        << ",fold,score\n";
      for (int kk : parse_int_list(k_list)) {
        stm::Trainer trainer;
        stm::Scorer scorer;
        if (is_dmm) {
          trainer = [&, kk](const stm::Corpus& train_c, const std::vector<double>& cell) {
            stm::DmmParams params;
            params.K = kk;
            params.alpha = cell[0];
            params.beta = cell[1];
            params.iterations = grid_iters;
            params.seed = grid_seed;
            return std::any(stm::dmm_train(train_c, params));
          };
          scorer = [](const std::any& model, const std::vector<stm::Document>& test) {
            long long tokens = 0;
            for (const auto& d : test) tokens += d.length;
            return stm::perplexity(
                stm::heldout_loglik(std::any_cast<const stm::DmmModel&>(model), test),
                tokens);
          };
        } else {
          trainer = [&, kk](const stm::Corpus& train_c, const std::vector<double>& cell) {
            stm::LdaParams params;
            params.K = kk;
            params.alpha = 1.0 / kk;
            params.eta = 1.0 / kk;
            params.kappa = cell[0];
            params.tau0 = cell[1];
            params.passes = grid_passes;
            params.batch_size = grid_batch;
            params.seed = grid_seed;
            return std::any(stm::lda_train(train_c, params));
          };
          scorer = [](const std::any& model, const std::vector<stm::Document>& test) {
            long long tokens = 0;
            for (const auto& d : test) tokens += d.length;
            return stm::perplexity(
                stm::heldout_loglik(std::any_cast<const stm::LdaModel&>(model), test),
                tokens);
          };
        }
        stm::GridResult result =
            stm::grid_search(trainer, scorer, corpus, grid, folds, grid_seed);
        for (const auto& cell : result.cells) {
          for (size_t fold = 0; fold < cell.fold_scores.size(); ++fold)
            f << model_name << ',' << kk << ',' << stm::fmt_double(cell.values[0])
              << ',' << stm::fmt_double(cell.values[1]) << ',' << fold << ','
              << stm::fmt_double(cell.fold_scores[fold]) << '\n';
          f << model_name << ',' << kk << ',' << stm::fmt_double(cell.values[0]) << ','
            << stm::fmt_double(cell.values[1]) << ",mean,"
            << stm::fmt_double(cell.mean) << '\n';
          f << model_name << ',' << kk << ',' << stm::fmt_double(cell.values[0]) << ','
            << stm::fmt_double(cell.values[1]) << ",std,"
            << stm::fmt_double(cell.stddev) << '\n';
        }
        const auto& best = result.cells[result.best_index];
        std::cout << "K=" << kk << " best " << grid.axes[0].first << '='
                  << stm::fmt_double(best.values[0]) << ' ' << grid.axes[1].first << '='
                  << stm::fmt_double(best.values[1]) << " mean_perplexity="
                  << stm::fmt_double(best.mean) << "\n";
      }
      return 0;
    }

    if (*signal_cmd) {
      stm::Vocabulary vocab = stm::load_vocabulary(corpus_dir + "/vocab.tsv");
      stm::DmmModel model = stm::load_dmm(model_path);
      if (static_cast<int>(model.phi_hat[0].size()) != vocab.size())
        throw stm::DataError("vocabulary mismatch between model and corpus");
      stm::SentimentLexicon lexicon;
      lexicon.positive = stm::load_word_list(pos_path);
      lexicon.negative = stm::load_word_list(neg_path);
      lexicon.validate();
      stm::PreprocessConfig cfg = signal_pre.build();

      auto records = read_jsonl(tweets_path);
      std::vector<stm::TweetRecord> tweets;
      int skipped = 0;
      for (const auto& rec : records) {
        if (!rec.has_timestamp) {
          ++skipped;
          continue;
        }
        auto tokens = stm::tokenize(rec.text, cfg);
        if (tokens.empty()) {
          ++skipped;
          continue;
        }
        stm::TweetRecord tw;
        tw.timestamp = rec.timestamp;
        std::tie(tw.p, tw.n) = stm::sentiment(tokens, lexicon);
        try {
          stm::Document doc = stm::encode(tokens, vocab, true);
          tw.label = stm::dmm_map_label(model, doc);
        } catch (const stm::EmptyDocument&) {
          ++skipped;
          continue;
        }
        tweets.push_back(tw);
      }
      if (skipped > 0) std::cerr << "skipped " << skipped << " tweets\n";
      if (tweets.empty()) throw stm::DataError("no usable tweets");

      auto features = stm::daily_aggregate(tweets, model.params.K);

      std::ifstream pf(prices_path);
      if (!pf) throw stm::DataError("cannot open " + prices_path);
      std::vector<stm::PricePoint> prices;
      std::string line;
      bool first = true;
      while (std::getline(pf, line)) {
        if (line.empty()) continue;
        if (first && line.rfind("date", 0) == 0) {
          first = false;
          continue;
        }
        first = false;
        auto parts = stm::split(line, ',');
        if (parts.size() != 2) throw stm::DataError("bad price line: " + line);
        prices.push_back({stm::parse_date(parts[0]), std::stod(parts[1])});
      }

      std::vector<std::vector<double>> X;
      std::vector<double> y;
      stm::align_next_day_returns(features, prices, &X, &y);
      stm::RegressionResult fit = stm::ols_fit(X, y);

      std::ofstream out(signal_out, std::ios::binary);
      if (!out) throw stm::DataError("cannot write " + signal_out);
      out << "name,variable,coef,stderr,tstat,pvalue,stars\n";
      auto row = [&](const std::string& name, const std::string& var, int i) {
        out << name << ',' << var << ',' << stm::fmt_double(fit.coef[i]) << ','
            << stm::fmt_double(fit.stderr_[i]) << ',' << stm::fmt_double(fit.tstat[i])
            << ',' << stm::fmt_double(fit.pvalue[i]) << ','
            << (fit.degenerate ? "degenerate" : stm::significance_stars(fit.pvalue[i]))
            << '\n';
      };
      row("Positive sentiment", "p_d", 0);
      row("Negative sentiment", "n_d", 1);
      for (int t = 0; t < model.params.K; ++t)
        row("Topic " + std::to_string(t), "t_d_" + std::to_string(t), 2 + t);
      std::cout << "rows " << X.size() << " r2 " << stm::fmt_double(fit.r2) << "\n";
      return 0;
    }
  } catch (const stm::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const stm::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
