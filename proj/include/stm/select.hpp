#ifndef STM_SELECT_HPP
#define STM_SELECT_HPP

#include <any>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stm/corpus.hpp"

namespace stm {

struct Grid {
  // axis name -> list of values; cells enumerate with the first axis outermost
  std::vector<std::pair<std::string, std::vector<double>>> axes;
};

struct GridCellResult {
  std::vector<double> values;       // one per axis
  std::vector<double> fold_scores;  // k entries
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

struct GridResult {
  std::vector<std::string> axis_names;
  std::vector<GridCellResult> cells;
  int best_index = 0;
  int folds = 0;
  std::uint64_t seed = 0;
};

using Trainer = std::function<std::any(const Corpus& train, const std::vector<double>& cell)>;
using Scorer = std::function<double(const std::any& model, const std::vector<Document>& test)>;

// k disjoint test-index sets covering all documents, sizes differing by <= 1.
std::vector<std::vector<int>> kfold_split(int n_docs, int k, std::uint64_t seed);

GridResult grid_search(const Trainer& trainer, const Scorer& scorer,
                       const Corpus& corpus, const Grid& grid, int k,
                       std::uint64_t seed);

}  // namespace stm

#endif
