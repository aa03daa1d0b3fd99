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

// Test-only helpers. The dense_* functions are an independent straight-line
// pixel-set oracle: they never touch the RLE code paths under test.

#ifndef APS_TESTS_SUPPORT_HPP_
#define APS_TESTS_SUPPORT_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "aps/core.hpp"

namespace testutil {

using Dense = std::vector<std::uint8_t>;

Dense dense_rect(int h, int w, int x0, int y0, int x1, int y1);
Dense dense_and(const Dense& a, const Dense& b);
Dense dense_or(const Dense& a, const Dense& b);
Dense dense_minus(const Dense& a, const Dense& b);
std::uint64_t dense_count(const Dense& a);
std::uint64_t dense_inter_count(const Dense& a, const Dense& b);
double dense_iou(const Dense& a, const Dense& b);

aps::BinaryMask mask_of(int h, int w, const Dense& d);
aps::BinaryMask random_mask(std::mt19937_64& rng, int h, int w,
                            double density);

// Scalar reference for the fused-logit formula, written out longhand.
double ref_fused_logit(double a, double b);

// Assembles a consistent annotation: stuff regions first, thing visible
// masks painted on top (caller keeps them pairwise disjoint).
class AnnBuilder {
 public:
  AnnBuilder(int h, int w);

  AnnBuilder& stuff(std::uint16_t cls, const aps::BinaryMask& mask);
  AnnBuilder& thing(std::uint16_t cls, std::uint16_t inst,
                    const aps::BinaryMask& visible,
                    const aps::BinaryMask& amodal);
  aps::AmodalImageAnnotation build() const { return ann_; }

 private:
  aps::AmodalImageAnnotation ann_;
};

}  // namespace testutil

#endif  // APS_TESTS_SUPPORT_HPP_
