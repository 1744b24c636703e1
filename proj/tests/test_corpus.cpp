#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "stm/corpus.hpp"
#include "stm/io.hpp"

using namespace stm;

TEST_CASE("tokenize strips urls, mentions, punctuation and lowercases") {
  PreprocessConfig cfg;
  cfg.stopwords = {"to", "the"};
  auto toks = tokenize("Bitcoin to the MOON! @elon https://x.co", cfg);
  CHECK(toks == std::vector<std::string>{"bitcoin", "moon"});
}

TEST_CASE("tokenize of empty input is empty") {
  PreprocessConfig cfg;
  CHECK(tokenize("", cfg).empty());
  CHECK(tokenize("   \t\n ", cfg).empty());
}

TEST_CASE("tokenize applies the lemma map after stopwording") {
  PreprocessConfig cfg;
  cfg.lemma_map = {{"running", "run"}, {"runs", "run"}};
  CHECK(tokenize("running runs", cfg) == std::vector<std::string>{"run", "run"});

  // a token whose lemma is a stopword survives: stopwords act on surface forms
  cfg.stopwords = {"run"};
  CHECK(tokenize("running run", cfg) == std::vector<std::string>{"run"});
}

TEST_CASE("tokenize drops non-ASCII bytes and keeps flags off when asked") {
  PreprocessConfig cfg;
  CHECK(tokenize("caf\xc3\xa9", cfg) == std::vector<std::string>{"caf"});
  CHECK(tokenize("@user hi", cfg) == std::vector<std::string>{"hi"});
  cfg.strip_mentions = false;  // leading '@' still trimmed as punctuation
  auto toks = tokenize("@user hi", cfg);
  CHECK(toks == std::vector<std::string>{"user", "hi"});
}

TEST_CASE("build_vocabulary respects min_count and first-appearance order") {
  CHECK(build_vocabulary({{"a", "b"}, {"a"}}, 2).id_of ==
        std::unordered_map<std::string, int>{{"a", 0}});
  CHECK(build_vocabulary({{"a"}}, 1).id_of ==
        std::unordered_map<std::string, int>{{"a", 0}});
  CHECK_THROWS_AS(build_vocabulary({{"a"}, {"b"}}, 3), EmptyVocabulary);

  auto v = build_vocabulary({{"b", "a"}, {"a", "b", "c", "c"}}, 2);
  CHECK(v.token_of == std::vector<std::string>{"b", "a", "c"});
}

TEST_CASE("encode with and without dedupe") {
  auto vocab = build_vocabulary({{"a", "b"}}, 1);
  auto d1 = encode({"a", "a", "b"}, vocab, false);
  CHECK(d1.count_of(vocab.lookup("a")) == 2);
  CHECK(d1.count_of(vocab.lookup("b")) == 1);
  CHECK(d1.length == 3);

  auto d2 = encode({"a", "a", "b"}, vocab, true);
  CHECK(d2.count_of(vocab.lookup("a")) == 1);
  CHECK(d2.count_of(vocab.lookup("b")) == 1);
  CHECK(d2.length == 2);

  CHECK_THROWS_AS(encode({"zzz"}, vocab, false), EmptyDocument);
}

TEST_CASE("document expand reproduces multiplicities") {
  Document d;
  d.ids = {3, 1};
  d.counts = {2, 1};
  d.length = 3;
  CHECK(d.expand() == std::vector<int>{3, 3, 1});
}

TEST_CASE("build_corpus drops empty documents and counts them") {
  PreprocessConfig cfg;
  cfg.min_count = 2;
  int dropped = 0;
  auto corpus = build_corpus({"a a b", "a b", "zzz"}, cfg, false, &dropped);
  CHECK(corpus.size() == 2);
  CHECK(dropped == 1);
  CHECK(corpus.vocab.size() == 2);
  CHECK(corpus.total_tokens() == 5);
}

TEST_CASE("vocabulary and corpus round-trip through files") {
  PreprocessConfig cfg;
  cfg.min_count = 1;
  auto corpus = build_corpus({"x y y", "y z"}, cfg, false);
  corpus.docs[0].author = "alice";
  corpus.docs[1].timestamp = 1234567;
  corpus.docs[1].has_timestamp = true;

  auto dir = std::filesystem::temp_directory_path() / "stm_corpus_test";
  std::filesystem::create_directories(dir);
  const std::string vp = (dir / "vocab.tsv").string();
  const std::string cp = (dir / "corpus.tsv").string();
  save_vocabulary(vp, corpus.vocab);
  save_corpus(cp, corpus);

  auto loaded = load_corpus(cp, vp);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.vocab.token_of == corpus.vocab.token_of);
  CHECK(loaded.docs[0].ids == corpus.docs[0].ids);
  CHECK(loaded.docs[0].counts == corpus.docs[0].counts);
  CHECK(loaded.docs[0].author == "alice");
  CHECK_FALSE(loaded.docs[0].has_timestamp);
  CHECK(loaded.docs[1].has_timestamp);
  CHECK(loaded.docs[1].timestamp == 1234567);

  // second save is byte-identical
  save_vocabulary(vp + ".2", corpus.vocab);
  save_corpus(cp + ".2", corpus);
  CHECK(read_file(vp) == read_file(vp + ".2"));
  CHECK(read_file(cp) == read_file(cp + ".2"));
}

TEST_CASE("fmt_double round-trips exactly") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.123456789, 0.0}) {
    CHECK(std::stod(fmt_double(x)) == x);
  }
}
