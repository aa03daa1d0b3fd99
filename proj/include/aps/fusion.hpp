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
#ifndef APS_FUSION_HPP_
#define APS_FUSION_HPP_

#include <cstdint>
#include <vector>

#include "aps/core.hpp"

namespace aps {

// Row-major float tensor; dims may be empty for a scalar.
struct TensorF32 {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  static TensorF32 zeros(std::vector<std::uint32_t> dims);
  std::uint64_t element_count() const;
  void check() const;  // throws unless data matches dims

  // Rank-3 (channel, y, x) access.
  float at3(std::uint32_t c, std::uint32_t y, std::uint32_t x) const {
    return data[(static_cast<std::uint64_t>(c) * dims[1] + y) * dims[2] + x];
  }
  // Rank-2 (y, x) access.
  float at2(std::uint32_t y, std::uint32_t x) const {
    return data[static_cast<std::uint64_t>(y) * dims[1] + x];
  }
};

// Half-open pixel box [x0, x1) x [y0, y1).
struct BBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool contains(int x, int y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  bool operator==(const BBox&) const = default;
};

struct InstancePrediction {
  std::uint16_t class_id = 0;  // thing class
  double confidence = 0.0;
  BBox amodal_bbox;
  TensorF32 inmodal_logits;  // 28x28 grid
  TensorF32 amodal_logits;   // 28x28 grid
};

struct FusionConfig {
  double confidence_threshold = 0.5;
  double overlap_threshold = 0.5;
  double mask_threshold = 0.5;  // sigmoid cut for binary masks
  float fill_logit = -10000.0f;  // value outside the amodal bbox
};

// (sigma(a) + sigma(b)) * (a + b): the fused logit for one pixel.
double fused_logit(double ml_a, double ml_b);

// Bilinear resampling of a logit grid onto the bbox region of an HxW map
// (align-corners-false, clamped); pixels outside the bbox get `fill`.
TensorF32 resample_mask_logits(const TensorF32& logits, const BBox& bbox,
                               int height, int width, float fill);

// Tight half-open box around the set pixels. Throws on empty masks.
BBox derive_inmodal_bbox(const BinaryMask& inmodal_mask);

// Full inference-time fusion of semantic logits with amodal instance
// predictions. Semantic channels are ordered stuff classes then thing
// classes, each in taxonomy order.
AmodalImageAnnotation fuse(const TensorF32& semantic_logits,
                           const std::vector<InstancePrediction>& instances,
                           const ClassTaxonomy& tax, const FusionConfig& cfg);

}  // namespace aps

#endif  // APS_FUSION_HPP_
