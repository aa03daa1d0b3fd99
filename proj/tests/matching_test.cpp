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
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "aps/matching.hpp"

using namespace aps;

namespace {

WeightMatrix make(int rows, int cols, const std::vector<double>& w) {
  WeightMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m.set(r, c, w[r * cols + c]);
  }
  return m;
}

// Structural validity: pairs plus unmatched lists partition both sides,
// indices unique, weights above threshold and consistent with the matrix.
void check_valid(const Matching& m, const WeightMatrix& w, double min_weight) {
  std::set<int> gts, preds;
  for (const auto& p : m.pairs) {
    CHECK(gts.insert(p.gt_index).second);
    CHECK(preds.insert(p.pred_index).second);
    CHECK(p.weight == w.at(p.gt_index, p.pred_index));
    CHECK(p.weight > min_weight);
  }
  for (int g : m.unmatched_gt) CHECK(gts.insert(g).second);
  for (int p : m.unmatched_pred) CHECK(preds.insert(p).second);
  CHECK(static_cast<int>(gts.size()) == w.rows());
  CHECK(static_cast<int>(preds.size()) == w.cols());
}

}  // namespace

TEST_CASE("two-by-two example picks the diagonal") {
  auto w = make(2, 2, {0.9, 0.5, 0.6, 0.4});
  auto m = max_weight_matching(w, 0.0);
  REQUIRE(m.pairs.size() == 2);
  CHECK(m.pairs[0].gt_index == 0);
  CHECK(m.pairs[0].pred_index == 0);
  CHECK(m.pairs[0].weight == 0.9);
  CHECK(m.pairs[1].gt_index == 1);
  CHECK(m.pairs[1].pred_index == 1);
  CHECK(m.pairs[1].weight == 0.4);
  CHECK(m.total_weight() == doctest::Approx(1.3));
}

TEST_CASE("zero-weight edge is excluded") {
  auto w = make(1, 1, {0.0});
  auto m = max_weight_matching(w, 0.0);
  CHECK(m.pairs.empty());
  CHECK(m.unmatched_gt == std::vector<int>{0});
  CHECK(m.unmatched_pred == std::vector<int>{0});
}

TEST_CASE("threshold filters weak edges") {
  auto w = make(1, 2, {0.3, 0.8});
  auto m = max_weight_matching(w, 0.5);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].gt_index == 0);
  CHECK(m.pairs[0].pred_index == 1);
  CHECK(m.pairs[0].weight == 0.8);
}

TEST_CASE("brute force agrees on the worked examples") {
  for (auto& [w, thr] : std::vector<std::pair<WeightMatrix, double>>{
           {make(2, 2, {0.9, 0.5, 0.6, 0.4}), 0.0},
           {make(1, 1, {0.0}), 0.0},
           {make(1, 2, {0.3, 0.8}), 0.5}}) {
    auto a = max_weight_matching(w, thr);
    auto b = brute_force_matching(w, thr);
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      CHECK(a.pairs[i].gt_index == b.pairs[i].gt_index);
      CHECK(a.pairs[i].pred_index == b.pairs[i].pred_index);
    }
  }
}

TEST_CASE("degenerate shapes") {
  auto m = max_weight_matching(WeightMatrix(0, 3), 0.0);
  CHECK(m.pairs.empty());
  CHECK(m.unmatched_pred.size() == 3);
  auto b = brute_force_matching(WeightMatrix(0, 3), 0.0);
  CHECK(b.unmatched_pred.size() == 3);
  CHECK(max_weight_matching(WeightMatrix(0, 0), 0.0).pairs.empty());
  CHECK_THROWS(brute_force_matching(WeightMatrix(9, 1), 0.0));
}

TEST_CASE("weight setter rejects out-of-range values") {
  WeightMatrix w(1, 1);
  CHECK_THROWS(w.set(0, 0, -0.1));
  CHECK_THROWS(w.set(0, 0, 1.1));
}

TEST_CASE("oracle agreement on 1000 random matrices") {
  std::mt19937_64 rng(21);
  auto unit = [&] { return (rng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 1000; ++trial) {
    int rows = static_cast<int>(rng() % 7);
    int cols = static_cast<int>(rng() % 7);
    WeightMatrix w(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) w.set(r, c, unit());
    }
    double thr = trial % 3 == 0 ? unit() * 0.5 : 0.0;
    auto fast = max_weight_matching(w, thr);
    auto slow = brute_force_matching(w, thr);
    check_valid(fast, w, thr);
    check_valid(slow, w, thr);
    CHECK(std::abs(fast.total_weight() - slow.total_weight()) < 1e-9);
    // Both sides break ties the same way, so the pair lists agree too.
    REQUIRE(fast.pairs.size() == slow.pairs.size());
    for (std::size_t i = 0; i < fast.pairs.size(); ++i) {
      CHECK(fast.pairs[i].gt_index == slow.pairs[i].gt_index);
      CHECK(fast.pairs[i].pred_index == slow.pairs[i].pred_index);
    }
  }
}

TEST_CASE("positive scaling preserves the selected pairs") {
  std::mt19937_64 rng(22);
  auto unit = [&] { return (rng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 100; ++trial) {
    int rows = 1 + static_cast<int>(rng() % 5);
    int cols = 1 + static_cast<int>(rng() % 5);
    double scale = 0.25;
    WeightMatrix w(rows, cols), ws(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        double v = unit();
        w.set(r, c, v);
        ws.set(r, c, v * scale);
      }
    }
    auto a = max_weight_matching(w, 0.1);
    auto b = max_weight_matching(ws, 0.1 * scale);
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      CHECK(a.pairs[i].gt_index == b.pairs[i].gt_index);
      CHECK(a.pairs[i].pred_index == b.pairs[i].pred_index);
    }
  }
}

TEST_CASE("an all-zero extra row changes nothing") {
  std::mt19937_64 rng(23);
  auto unit = [&] { return (rng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 100; ++trial) {
    int rows = 1 + static_cast<int>(rng() % 4);
    int cols = 1 + static_cast<int>(rng() % 4);
    WeightMatrix w(rows, cols), wz(rows + 1, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        double v = unit();
        w.set(r, c, v);
        wz.set(r, c, v);
      }
    }
    auto a = max_weight_matching(w, 0.0);
    auto b = max_weight_matching(wz, 0.0);
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      CHECK(a.pairs[i].gt_index == b.pairs[i].gt_index);
      CHECK(a.pairs[i].pred_index == b.pairs[i].pred_index);
    }
  }
}
