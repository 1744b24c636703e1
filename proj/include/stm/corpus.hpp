#ifndef STM_CORPUS_HPP
#define STM_CORPUS_HPP

#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stm/errors.hpp"

namespace stm {

struct EmptyVocabulary : DataError {
  EmptyVocabulary() : DataError("no token survives the min_count filter") {}
};

struct EmptyDocument : DataError {
  EmptyDocument() : DataError("document is empty after encoding") {}
};

struct PreprocessConfig {
  std::unordered_set<std::string> stopwords;
  std::unordered_map<std::string, std::string> lemma_map;
  int min_count = 100;
  bool strip_nonlatin = true;
  bool strip_mentions = true;
  bool strip_urls = true;
};

struct Vocabulary {
  std::unordered_map<std::string, int> id_of;
  std::vector<std::string> token_of;

  int size() const { return static_cast<int>(token_of.size()); }
  // Returns -1 for out-of-vocabulary tokens.
  int lookup(const std::string& token) const {
    auto it = id_of.find(token);
    return it == id_of.end() ? -1 : it->second;
  }
};

// Bag of words. ids are unique and kept in first-appearance order; counts is
// aligned with ids; length is the total token count.
struct Document {
  std::vector<int> ids;
  std::vector<int> counts;
  int length = 0;
  std::string author;
  long long timestamp = 0;
  bool has_timestamp = false;

  int count_of(int id) const {
    for (size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return counts[i];
    return 0;
  }
  // Token sequence as stored: each id repeated by its multiplicity.
  std::vector<int> expand() const {
    std::vector<int> seq;
    seq.reserve(length);
    for (size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < counts[i]; ++j) seq.push_back(ids[i]);
    return seq;
  }
};

struct Corpus {
  std::vector<Document> docs;
  Vocabulary vocab;

  int size() const { return static_cast<int>(docs.size()); }
  long long total_tokens() const {
    long long n = 0;
    for (const auto& d : docs) n += d.length;
    return n;
  }
};

std::vector<std::string> tokenize(const std::string& raw, const PreprocessConfig& cfg);

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_docs,
                            int min_count);

Document encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                bool dedupe);

// Tokenizes, builds the vocabulary and encodes in one pass. Documents that end
// up empty are skipped; *dropped (when given) receives their count.
Corpus build_corpus(const std::vector<std::string>& raw_docs,
                    const PreprocessConfig& cfg, bool dedupe,
                    int* dropped = nullptr);

void save_vocabulary(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::string& path);
void save_corpus(const std::string& path, const Corpus& corpus);
Corpus load_corpus(const std::string& path, const std::string& vocab_path);

std::unordered_set<std::string> load_word_list(const std::string& path);
std::unordered_map<std::string, std::string> load_lemma_map(const std::string& path);

}  // namespace stm

#endif
