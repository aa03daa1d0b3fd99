// Copyright 2026 The APS-Eval Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "aps/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace aps {

namespace {

// Maximum-weight perfect assignment on a square matrix (augmenting-path
// Kuhn-Munkres on the negated costs). Entries of value 0 stand for
// "leave unmatched", so the result equals the best partial matching value.
double assignment_optimum(const std::vector<std::vector<double>>& a) {
  int n = static_cast<int>(a.size());
  if (n == 0) return 0.0;
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = -a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) total += a[p[j] - 1][j - 1];
  }
  return total;
}

Matching finish_matching(int rows, int cols, std::vector<MatchPair> pairs) {
  Matching m;
  std::sort(pairs.begin(), pairs.end(), [](const MatchPair& a,
                                           const MatchPair& b) {
    return a.gt_index != b.gt_index ? a.gt_index < b.gt_index
                                    : a.pred_index < b.pred_index;
  });
  std::vector<char> gt_used(rows, 0), pred_used(cols, 0);
  for (const auto& p : pairs) {
    gt_used[p.gt_index] = 1;
    pred_used[p.pred_index] = 1;
  }
  m.pairs = std::move(pairs);
  for (int i = 0; i < rows; ++i)
    if (!gt_used[i]) m.unmatched_gt.push_back(i);
  for (int j = 0; j < cols; ++j)
    if (!pred_used[j]) m.unmatched_pred.push_back(j);
  return m;
}

}  // namespace

WeightMatrix::WeightMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) {
    throw std::invalid_argument("negative weight matrix dimensions");
  }
  weights_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

void WeightMatrix::set(int row, int col, double w) {
  if (w < 0.0 || w > 1.0 || std::isnan(w)) {
    throw std::invalid_argument("matching weight " + std::to_string(w) +
                                " outside [0, 1]");
  }
  weights_[row * cols_ + col] = w;
}

Matching max_weight_matching(const WeightMatrix& w, double min_weight) {
  if (min_weight < 0.0) {
    throw std::invalid_argument("min_weight must be non-negative");
  }
  int rows = w.rows(), cols = w.cols();
  if (rows == 0 || cols == 0) return finish_matching(rows, cols, {});

  // Edges at or below the threshold are worth nothing; the same slot later
  // doubles as the ban list for the lexicographic refinement.
  std::vector<std::vector<double>> eff(rows, std::vector<double>(cols, 0.0));
  bool any_edge = false;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (w.at(i, j) > min_weight) {
        eff[i][j] = w.at(i, j);
        any_edge = true;
      }
    }
  }
  if (!any_edge) return finish_matching(rows, cols, {});

  std::vector<char> row_used(rows, 0), col_used(cols, 0);

  // Optimum over the rows/cols not yet consumed by forced pairs.
  auto solve_free = [&](int skip_row, int skip_col) {
    std::vector<int> free_rows, free_cols;
    for (int i = 0; i < rows; ++i)
      if (!row_used[i] && i != skip_row) free_rows.push_back(i);
    for (int j = 0; j < cols; ++j)
      if (!col_used[j] && j != skip_col) free_cols.push_back(j);
    int n = static_cast<int>(std::max(free_rows.size(), free_cols.size()));
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < free_rows.size(); ++i)
      for (std::size_t j = 0; j < free_cols.size(); ++j)
        a[i][j] = eff[free_rows[i]][free_cols[j]];
    return assignment_optimum(a);
  };

  double optimum = solve_free(-1, -1);
  double eps = 1e-12 * std::max(1.0, optimum);

  // Lexicographic refinement: scan candidate pairs in (gt, pred) order and
  // keep a pair exactly when some maximum-weight matching extends the
  // decisions made so far with it.
  std::vector<MatchPair> forced;
  double forced_sum = 0.0;
  for (int g = 0; g < rows; ++g) {
    for (int q = 0; q < cols; ++q) {
      if (col_used[q] || eff[g][q] == 0.0) continue;
      double with_pair = forced_sum + eff[g][q] + solve_free(g, q);
      if (with_pair >= optimum - eps) {
        forced.push_back({g, q, w.at(g, q)});
        forced_sum += eff[g][q];
        row_used[g] = 1;
        col_used[q] = 1;
        break;
      }
      eff[g][q] = 0.0;  // banned from every later optimum
    }
  }
  return finish_matching(rows, cols, std::move(forced));
}

Matching brute_force_matching(const WeightMatrix& w, double min_weight) {
  if (min_weight < 0.0) {
    throw std::invalid_argument("min_weight must be non-negative");
  }
  int rows = w.rows(), cols = w.cols();
  if (rows > 8 || cols > 8) {
    throw std::invalid_argument(
        "brute_force_matching is an oracle guarded to dimensions <= 8, got " +
        std::to_string(rows) + "x" + std::to_string(cols));
  }

  std::vector<MatchPair> best_pairs;
  double best_total = -1.0;
  bool have_best = false;
  std::vector<MatchPair> current;
  std::vector<char> col_used(cols, 0);

  auto lex_less = [](const std::vector<MatchPair>& a,
                     const std::vector<MatchPair>& b) {
    std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i].gt_index != b[i].gt_index) return a[i].gt_index < b[i].gt_index;
      if (a[i].pred_index != b[i].pred_index)
        return a[i].pred_index < b[i].pred_index;
    }
    return a.size() < b.size();
  };

  auto consider = [&](double total) {
    if (!have_best || total > best_total ||
        (total == best_total && lex_less(current, best_pairs))) {
      have_best = true;
      best_total = total;
      best_pairs = current;
    }
  };

  // Enumerates every injective partial assignment of gt rows to pred cols.
  auto dfs = [&](auto&& self, int row, double total) -> void {
    if (row == rows) {
      consider(total);
      return;
    }
    for (int j = 0; j < cols; ++j) {
      if (col_used[j] || !(w.at(row, j) > min_weight)) continue;
      col_used[j] = 1;
      current.push_back({row, j, w.at(row, j)});
      self(self, row + 1, total + w.at(row, j));
      current.pop_back();
      col_used[j] = 0;
    }
    self(self, row + 1, total);  // leave this gt row unmatched
  };
  dfs(dfs, 0, 0.0);

  return finish_matching(rows, cols, std::move(best_pairs));
}

}  // namespace aps
