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
#ifndef APS_MATCHING_HPP_
#define APS_MATCHING_HPP_

#include <vector>

namespace aps {

// Dense groundtruth x prediction weight matrix; weights are IoU values.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double at(int row, int col) const { return weights_[row * cols_ + col]; }
  void set(int row, int col, double w);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> weights_;
};

struct MatchPair {
  int gt_index = 0;
  int pred_index = 0;
  double weight = 0.0;
};

struct Matching {
  std::vector<MatchPair> pairs;       // sorted by (gt_index, pred_index)
  std::vector<int> unmatched_gt;      // FN candidates
  std::vector<int> unmatched_pred;    // FP candidates

  double total_weight() const {
    double sum = 0.0;
    for (const auto& p : pairs) sum += p.weight;
    return sum;
  }
};

// Maximum-weight bipartite matching over edges with weight strictly greater
// than min_weight. Among all maximizers, returns the one whose pair list is
// lexicographically smallest by (gt_index, pred_index).
Matching max_weight_matching(const WeightMatrix& w, double min_weight = 0.0);

// Exhaustive-enumeration oracle with the identical contract. Guarded to
// dimensions of at most 8.
Matching brute_force_matching(const WeightMatrix& w, double min_weight = 0.0);

}  // namespace aps

#endif  // APS_MATCHING_HPP_
