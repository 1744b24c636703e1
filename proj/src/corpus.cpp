#include "stm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "stm/io.hpp"

namespace stm {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

bool looks_like_url(const std::string& t) {
  return t.rfind("http://", 0) == 0 || t.rfind("https://", 0) == 0 ||
         t.rfind("www.", 0) == 0;
}

std::string lower(const std::string& s) {
  std::string out = s;
  for (auto& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& raw, const PreprocessConfig& cfg) {
  std::vector<std::string> out;
  size_t i = 0;
  const size_t n = raw.size();
  while (i < n) {
    while (i < n && is_space(static_cast<unsigned char>(raw[i]))) ++i;
    size_t start = i;
    while (i < n && !is_space(static_cast<unsigned char>(raw[i]))) ++i;
    if (i == start) break;
    std::string tok = raw.substr(start, i - start);

    std::string low = lower(tok);
    if (cfg.strip_urls && looks_like_url(low)) continue;
    if (cfg.strip_mentions && !tok.empty() && tok[0] == '@') continue;

    if (cfg.strip_nonlatin) {
      std::string kept;
      for (unsigned char c : low)
        if (c < 0x80) kept += static_cast<char>(c);
      low = kept;
    }
    // strip leading/trailing punctuation
    size_t b = 0, e = low.size();
    while (b < e && is_punct(static_cast<unsigned char>(low[b]))) ++b;
    while (e > b && is_punct(static_cast<unsigned char>(low[e - 1]))) --e;
    low = low.substr(b, e - b);
    if (low.empty()) continue;
    if (cfg.stopwords.count(low)) continue;
    if (!cfg.lemma_map.empty()) {
      auto it = cfg.lemma_map.find(low);
      if (it != cfg.lemma_map.end()) low = it->second;
    }
    out.push_back(low);
  }
  return out;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_docs,
                            int min_count) {
  if (min_count < 1) throw ValidationError("min_count must be >= 1");
  std::unordered_map<std::string, long long> freq;
  std::vector<std::string> order;
  for (const auto& doc : token_docs)
    for (const auto& tok : doc) {
      auto [it, inserted] = freq.try_emplace(tok, 0);
      if (inserted) order.push_back(tok);
      ++it->second;
    }
  Vocabulary vocab;
  for (const auto& tok : order)
    if (freq[tok] >= min_count) {
      vocab.id_of[tok] = static_cast<int>(vocab.token_of.size());
      vocab.token_of.push_back(tok);
    }
  if (vocab.token_of.empty()) throw EmptyVocabulary();
  return vocab;
}

Document encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                bool dedupe) {
  if (vocab.size() == 0) throw EmptyVocabulary();
  Document doc;
  std::unordered_map<int, size_t> pos;
  for (const auto& tok : tokens) {
    int id = vocab.lookup(tok);
    if (id < 0) continue;
    auto it = pos.find(id);
    if (it == pos.end()) {
      pos[id] = doc.ids.size();
      doc.ids.push_back(id);
      doc.counts.push_back(1);
    } else if (!dedupe) {
      ++doc.counts[it->second];
    }
  }
  for (int c : doc.counts) doc.length += c;
  if (doc.ids.empty()) throw EmptyDocument();
  return doc;
}

Corpus build_corpus(const std::vector<std::string>& raw_docs,
                    const PreprocessConfig& cfg, bool dedupe, int* dropped) {
  std::vector<std::vector<std::string>> token_docs;
  token_docs.reserve(raw_docs.size());
  for (const auto& raw : raw_docs) token_docs.push_back(tokenize(raw, cfg));
  Corpus corpus;
  corpus.vocab = build_vocabulary(token_docs, cfg.min_count);
  int skipped = 0;
  for (const auto& toks : token_docs) {
    try {
      corpus.docs.push_back(encode(toks, corpus.vocab, dedupe));
    } catch (const EmptyDocument&) {
      ++skipped;
    }
  }
  if (dropped) *dropped = skipped;
  return corpus;
}

void save_vocabulary(const std::string& path, const Vocabulary& vocab) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  for (int i = 0; i < vocab.size(); ++i)
    f << vocab.token_of[i] << '\t' << i << '\n';
}

Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  Vocabulary vocab;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto parts = split(line, '\t');
    if (parts.size() != 2) throw DataError("bad vocabulary line: " + line);
    int id = std::stoi(parts[1]);
    if (id != vocab.size()) throw DataError("vocabulary ids must be dense and ordered");
    vocab.id_of[parts[0]] = id;
    vocab.token_of.push_back(parts[0]);
  }
  if (vocab.size() == 0) throw EmptyVocabulary();
  return vocab;
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  for (const auto& d : corpus.docs) {
    f << d.author << '\t';
    if (d.has_timestamp) f << d.timestamp;
    f << '\t';
    for (size_t i = 0; i < d.ids.size(); ++i) {
      if (i) f << ' ';
      f << d.ids[i] << ':' << d.counts[i];
    }
    f << '\n';
  }
}

Corpus load_corpus(const std::string& path, const std::string& vocab_path) {
  Corpus corpus;
  corpus.vocab = load_vocabulary(vocab_path);
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto parts = split(line, '\t');
    if (parts.size() != 3) throw DataError("bad corpus line: " + line);
    Document d;
    d.author = parts[0];
    if (!parts[1].empty()) {
      d.timestamp = std::stoll(parts[1]);
      d.has_timestamp = true;
    }
    for (const auto& item : split(parts[2], ' ')) {
      if (item.empty()) continue;
      auto kv = split(item, ':');
      if (kv.size() != 2) throw DataError("bad corpus entry: " + item);
      int id = std::stoi(kv[0]);
      int c = std::stoi(kv[1]);
      if (id < 0 || id >= corpus.vocab.size())
        throw DataError("corpus id out of vocabulary range");
      d.ids.push_back(id);
      d.counts.push_back(c);
      d.length += c;
    }
    if (d.ids.empty()) throw DataError("empty document in corpus file");
    corpus.docs.push_back(std::move(d));
  }
  return corpus;
}

std::unordered_set<std::string> load_word_list(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) out.insert(line);
  return out;
}

std::unordered_map<std::string, std::string> load_lemma_map(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::unordered_map<std::string, std::string> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto parts = split(line, '\t');
    if (parts.size() != 2 || parts[1].empty())
      throw DataError("bad lemma-map line: " + line);
    out[parts[0]] = parts[1];
  }
  return out;
}

}  // namespace stm
