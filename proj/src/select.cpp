#include "stm/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace stm {

std::vector<std::vector<int>> kfold_split(int n_docs, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("kfold: k must be >= 2");
  if (n_docs < k) throw DataError("kfold: fewer documents than folds");
  std::vector<int> order(n_docs);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> folds(k);
  for (int i = 0; i < n_docs; ++i) folds[i % k].push_back(order[i]);
  return folds;
}

namespace {

void enumerate_cells(const Grid& grid, size_t axis, std::vector<double>& current,
                     std::vector<std::vector<double>>& out) {
  if (axis == grid.axes.size()) {
    out.push_back(current);
    return;
  }
  for (double v : grid.axes[axis].second) {
    current.push_back(v);
    enumerate_cells(grid, axis + 1, current, out);
    current.pop_back();
  }
}

std::string cell_to_string(const std::vector<std::string>& names,
                           const std::vector<double>& values) {
  std::string s;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) s += ",";
    s += names[i] + "=" + std::to_string(values[i]);
  }
  return s;
}

}  // namespace

GridResult grid_search(const Trainer& trainer, const Scorer& scorer,
                       const Corpus& corpus, const Grid& grid, int k,
                       std::uint64_t seed) {
  if (grid.axes.empty()) throw ValidationError("grid_search: empty grid");
  for (const auto& [name, values] : grid.axes)
    if (values.empty()) throw ValidationError("grid_search: empty axis " + name);

  GridResult result;
  result.folds = k;
  result.seed = seed;
  for (const auto& [name, values] : grid.axes) result.axis_names.push_back(name);

  std::vector<std::vector<double>> cells;
  std::vector<double> scratch;
  enumerate_cells(grid, 0, scratch, cells);

  const auto folds = kfold_split(corpus.size(), k, seed);

  // per-fold train corpora (full-corpus vocabulary, not refit per fold)
  std::vector<Corpus> train_corpora(k);
  std::vector<std::vector<Document>> test_sets(k);
  for (int f = 0; f < k; ++f) {
    std::vector<bool> in_test(corpus.size(), false);
    for (int i : folds[f]) in_test[i] = true;
    train_corpora[f].vocab = corpus.vocab;
    for (int i = 0; i < corpus.size(); ++i) {
      if (in_test[i])
        test_sets[f].push_back(corpus.docs[i]);
      else
        train_corpora[f].docs.push_back(corpus.docs[i]);
    }
  }

  for (const auto& cell : cells) {
    GridCellResult cr;
    cr.values = cell;
    for (int f = 0; f < k; ++f) {
      try {
        std::any model = trainer(train_corpora[f], cell);
        cr.fold_scores.push_back(scorer(model, test_sets[f]));
      } catch (const std::exception& e) {
        throw DataError("grid_search: cell {" +
                        cell_to_string(result.axis_names, cell) + "} fold " +
                        std::to_string(f) + ": " + e.what());
      }
    }
    cr.mean = std::accumulate(cr.fold_scores.begin(), cr.fold_scores.end(), 0.0) / k;
    double ss = 0.0;
    for (double s : cr.fold_scores) ss += (s - cr.mean) * (s - cr.mean);
    cr.stddev = k > 1 ? std::sqrt(ss / (k - 1)) : 0.0;
    result.cells.push_back(std::move(cr));
  }

  result.best_index = 0;
  for (size_t i = 1; i < result.cells.size(); ++i)
    if (result.cells[i].mean < result.cells[result.best_index].mean)
      result.best_index = static_cast<int>(i);
  return result;
}

}  // namespace stm
