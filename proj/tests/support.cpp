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
#include "support.hpp"

#include <cmath>
#include <stdexcept>

namespace testutil {

Dense dense_rect(int h, int w, int x0, int y0, int x1, int y1) {
  Dense d(static_cast<std::size_t>(h) * w, 0);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      d[static_cast<std::size_t>(y) * w + x] = 1;
    }
  }
  return d;
}

Dense dense_and(const Dense& a, const Dense& b) {
  Dense out(a.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && b[i];
  return out;
}

Dense dense_or(const Dense& a, const Dense& b) {
  Dense out(a.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] || b[i];
  return out;
}

Dense dense_minus(const Dense& a, const Dense& b) {
  Dense out(a.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && !b[i];
  return out;
}

std::uint64_t dense_count(const Dense& a) {
  std::uint64_t n = 0;
  for (auto v : a) n += v ? 1 : 0;
  return n;
}

std::uint64_t dense_inter_count(const Dense& a, const Dense& b) {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] && b[i]) ? 1 : 0;
  return n;
}

double dense_iou(const Dense& a, const Dense& b) {
  std::uint64_t inter = dense_inter_count(a, b);
  std::uint64_t uni = dense_count(a) + dense_count(b) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

aps::BinaryMask mask_of(int h, int w, const Dense& d) {
  return aps::BinaryMask::from_dense(h, w, d);
}

aps::BinaryMask random_mask(std::mt19937_64& rng, int h, int w,
                            double density) {
  Dense d(static_cast<std::size_t>(h) * w, 0);
  for (auto& p : d) {
    p = ((rng() >> 11) * 0x1.0p-53 < density) ? 1 : 0;
  }
  return mask_of(h, w, d);
}

double ref_fused_logit(double a, double b) {
  double sa = 1.0 / (1.0 + std::exp(-a));
  double sb = 1.0 / (1.0 + std::exp(-b));
  return (sa + sb) * (a + b);
}

AnnBuilder::AnnBuilder(int h, int w) {
  ann_.height = h;
  ann_.width = w;
  ann_.visible_map.assign(static_cast<std::size_t>(h) * w, 0);
}

namespace {

void paint(std::vector<std::uint32_t>& map, const aps::BinaryMask& mask,
           std::uint32_t label) {
  auto d = mask.to_dense();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i]) map[i] = label;
  }
}

}  // namespace

AnnBuilder& AnnBuilder::stuff(std::uint16_t cls, const aps::BinaryMask& mask) {
  paint(ann_.visible_map, mask,
        aps::AmodalImageAnnotation::encode_label(cls, 0));
  return *this;
}

AnnBuilder& AnnBuilder::thing(std::uint16_t cls, std::uint16_t inst,
                              const aps::BinaryMask& visible,
                              const aps::BinaryMask& amodal) {
  paint(ann_.visible_map, visible,
        aps::AmodalImageAnnotation::encode_label(cls, inst));
  aps::AmodalSegment seg;
  seg.class_id = cls;
  seg.instance_index = inst;
  seg.visible = visible;
  seg.amodal = amodal;
  ann_.segments.push_back(std::move(seg));
  return *this;
}

}  // namespace testutil
