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
#include "aps/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace aps {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Sigmoid cut expressed in logit space, so mask thresholding is exact.
double logit_of(double p) { return std::log(p / (1.0 - p)); }

void check_rank2(const TensorF32& t, const char* what) {
  t.check();
  if (t.dims.size() != 2) {
    throw std::invalid_argument(std::string(what) +
                                " must be a rank-2 logit grid");
  }
}

}  // namespace

TensorF32 TensorF32::zeros(std::vector<std::uint32_t> dims) {
  TensorF32 t;
  t.dims = std::move(dims);
  t.data.assign(t.element_count(), 0.0f);
  return t;
}

std::uint64_t TensorF32::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void TensorF32::check() const {
  if (data.size() != element_count()) {
    throw std::invalid_argument("tensor data length " +
                                std::to_string(data.size()) +
                                " does not match its dims product " +
                                std::to_string(element_count()));
  }
}

double fused_logit(double ml_a, double ml_b) {
  return (sigmoid(ml_a) + sigmoid(ml_b)) * (ml_a + ml_b);
}

TensorF32 resample_mask_logits(const TensorF32& logits, const BBox& bbox,
                               int height, int width, float fill) {
  check_rank2(logits, "mask logits");
  if (bbox.x0 < 0 || bbox.y0 < 0 || bbox.x1 > width || bbox.y1 > height ||
      bbox.width() <= 0 || bbox.height() <= 0) {
    throw std::invalid_argument("degenerate or out-of-bounds bbox [" +
                                std::to_string(bbox.x0) + ", " +
                                std::to_string(bbox.y0) + ", " +
                                std::to_string(bbox.x1) + ", " +
                                std::to_string(bbox.y1) + ")");
  }
  int gh = static_cast<int>(logits.dims[0]);
  int gw = static_cast<int>(logits.dims[1]);
  TensorF32 out;
  out.dims = {static_cast<std::uint32_t>(height),
              static_cast<std::uint32_t>(width)};
  out.data.assign(out.element_count(), fill);

  double scale_y = static_cast<double>(gh) / bbox.height();
  double scale_x = static_cast<double>(gw) / bbox.width();
  for (int y = bbox.y0; y < bbox.y1; ++y) {
    double sy = (y - bbox.y0 + 0.5) * scale_y - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(gh - 1));
    int y0 = static_cast<int>(sy);
    int y1 = std::min(y0 + 1, gh - 1);
    double fy = sy - y0;
    for (int x = bbox.x0; x < bbox.x1; ++x) {
      double sx = (x - bbox.x0 + 0.5) * scale_x - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(gw - 1));
      int x0 = static_cast<int>(sx);
      int x1 = std::min(x0 + 1, gw - 1);
      double fx = sx - x0;
      double top = logits.at2(y0, x0) * (1.0 - fx) + logits.at2(y0, x1) * fx;
      double bottom =
          logits.at2(y1, x0) * (1.0 - fx) + logits.at2(y1, x1) * fx;
      out.data[static_cast<std::uint64_t>(y) * width + x] =
          static_cast<float>(top * (1.0 - fy) + bottom * fy);
    }
  }
  return out;
}

BBox derive_inmodal_bbox(const BinaryMask& inmodal_mask) {
  if (inmodal_mask.empty()) {
    throw std::invalid_argument("cannot derive a bbox from an empty mask");
  }
  int w = inmodal_mask.width();
  std::int64_t min_x = w, max_x = -1, min_y = inmodal_mask.height(),
               max_y = -1;
  std::uint64_t pos = 0;
  const auto& runs = inmodal_mask.runs();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i & 1) {
      std::uint64_t start = pos, end = pos + runs[i];
      std::int64_t y_first = static_cast<std::int64_t>(start / w);
      std::int64_t y_last = static_cast<std::int64_t>((end - 1) / w);
      min_y = std::min(min_y, y_first);
      max_y = std::max(max_y, y_last);
      if (y_first == y_last) {
        min_x = std::min<std::int64_t>(min_x, start % w);
        max_x = std::max<std::int64_t>(max_x, (end - 1) % w);
      } else {
        min_x = 0;
        max_x = w - 1;
      }
    }
    pos += runs[i];
  }
  return BBox{static_cast<int>(min_x), static_cast<int>(min_y),
              static_cast<int>(max_x + 1), static_cast<int>(max_y + 1)};
}

AmodalImageAnnotation fuse(const TensorF32& semantic_logits,
                           const std::vector<InstancePrediction>& instances,
                           const ClassTaxonomy& tax, const FusionConfig& cfg) {
  semantic_logits.check();
  if (semantic_logits.dims.size() != 3) {
    throw std::invalid_argument("semantic logits must be a rank-3 tensor");
  }
  int channels = static_cast<int>(semantic_logits.dims[0]);
  int height = static_cast<int>(semantic_logits.dims[1]);
  int width = static_cast<int>(semantic_logits.dims[2]);
  if (channels != tax.num_channels()) {
    throw std::invalid_argument(
        "semantic tensor has " + std::to_string(channels) +
        " channels but the taxonomy defines " +
        std::to_string(tax.num_channels()));
  }
  int stuff_count = static_cast<int>(tax.stuff_classes().size());
  if (stuff_count == 0) {
    throw std::invalid_argument("fusion requires at least one stuff class");
  }
  double logit_cut = logit_of(cfg.mask_threshold);

  struct Candidate {
    const InstancePrediction* src = nullptr;
    int input_order = 0;
    TensorF32 inmodal_map;
    TensorF32 amodal_map;
    BinaryMask inmodal_mask;
    BBox inmodal_bbox;
    int semantic_channel = 0;
  };

  // Steps 1-2: confidence gate, ROI resampling, inmodal mask and bbox.
  std::vector<Candidate> kept;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const InstancePrediction& inst = instances[i];
    if (inst.confidence < cfg.confidence_threshold) continue;
    if (!tax.is_thing(inst.class_id)) {
      throw std::invalid_argument("instance class " +
                                  std::to_string(inst.class_id) +
                                  " is not a thing class");
    }
    BBox box = inst.amodal_bbox;
    box.x0 = std::max(box.x0, 0);
    box.y0 = std::max(box.y0, 0);
    box.x1 = std::min(box.x1, width);
    box.y1 = std::min(box.y1, height);

    Candidate c;
    c.src = &inst;
    c.input_order = static_cast<int>(i);
    c.inmodal_map = resample_mask_logits(inst.inmodal_logits, box, height,
                                         width, cfg.fill_logit);
    c.amodal_map = resample_mask_logits(inst.amodal_logits, box, height,
                                        width, cfg.fill_logit);
    std::vector<std::uint8_t> dense(
        static_cast<std::uint64_t>(height) * width, 0);
    for (int y = box.y0; y < box.y1; ++y) {
      for (int x = box.x0; x < box.x1; ++x) {
        if (c.inmodal_map.at2(y, x) > logit_cut) {
          dense[static_cast<std::uint64_t>(y) * width + x] = 1;
        }
      }
    }
    c.inmodal_mask = BinaryMask::from_dense(height, width, dense);
    if (c.inmodal_mask.empty()) continue;
    c.inmodal_bbox = derive_inmodal_bbox(c.inmodal_mask);
    c.semantic_channel = tax.channel_index(inst.class_id);
    kept.push_back(std::move(c));
  }

  // Step 3: confidence-descending order, input order breaking ties.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.src->confidence > b.src->confidence;
                   });

  // Step 4: overlap suppression with first-come pixel ownership.
  std::vector<Candidate> survivors;
  BinaryMask claimed(height, width);
  for (auto& c : kept) {
    std::uint64_t overlap = mask_intersection_area(c.inmodal_mask, claimed);
    if (static_cast<double>(overlap) >
        cfg.overlap_threshold * static_cast<double>(c.inmodal_mask.area())) {
      continue;
    }
    c.inmodal_mask = c.inmodal_mask.set_minus(claimed);
    claimed = claimed.set_or(c.inmodal_mask);
    survivors.push_back(std::move(c));
  }

  // Steps 5-8: per-pixel argmax over [stuff semantic channels | fused
  // instance channels]. Softmax is monotone, so raw values decide. Pixels
  // won by a stuff channel take the stuff-restricted semantic argmax, which
  // coincides with the winning channel.
  std::vector<std::int32_t> owner(
      static_cast<std::uint64_t>(height) * width, -1);
  AmodalImageAnnotation out;
  out.height = height;
  out.width = width;
  out.visible_map.assign(static_cast<std::uint64_t>(height) * width, 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      std::uint64_t idx = static_cast<std::uint64_t>(y) * width + x;
      double best_stuff = -std::numeric_limits<double>::infinity();
      int best_stuff_channel = 0;
      for (int c = 0; c < stuff_count; ++c) {
        double v = semantic_logits.at3(c, y, x);
        if (v > best_stuff) {
          best_stuff = v;
          best_stuff_channel = c;
        }
      }
      double best_inst = -std::numeric_limits<double>::infinity();
      int winner = -1;
      for (std::size_t k = 0; k < survivors.size(); ++k) {
        const Candidate& c = survivors[k];
        double a = c.inmodal_map.at2(y, x);
        double b = c.inmodal_bbox.contains(x, y)
                       ? semantic_logits.at3(c.semantic_channel, y, x)
                       : 0.0;
        double f = fused_logit(a, b);
        if (f > best_inst) {
          best_inst = f;
          winner = static_cast<int>(k);
        }
      }
      if (winner >= 0 && best_inst > best_stuff) {
        owner[idx] = winner;
      } else {
        out.visible_map[idx] = AmodalImageAnnotation::encode_label(
            tax.stuff_classes()[best_stuff_channel].id, 0);
      }
    }
  }

  // Step 9: amodal masks, occlusion as amodal \ visible, instance emission.
  std::vector<std::vector<std::uint8_t>> visible_dense(
      survivors.size(),
      std::vector<std::uint8_t>(static_cast<std::uint64_t>(height) * width,
                                0));
  for (std::uint64_t idx = 0; idx < owner.size(); ++idx) {
    if (owner[idx] >= 0) visible_dense[owner[idx]][idx] = 1;
  }
  std::map<std::uint16_t, std::uint16_t> next_index;
  for (std::size_t k = 0; k < survivors.size(); ++k) {
    const Candidate& c = survivors[k];
    BinaryMask visible =
        BinaryMask::from_dense(height, width, visible_dense[k]);
    // An instance that won no argmax pixel has an empty visible region and
    // is not a detection.
    if (visible.empty()) continue;
    std::vector<std::uint8_t> amodal_dense(
        static_cast<std::uint64_t>(height) * width, 0);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (c.amodal_map.at2(y, x) > logit_cut) {
          amodal_dense[static_cast<std::uint64_t>(y) * width + x] = 1;
        }
      }
    }
    BinaryMask amodal =
        BinaryMask::from_dense(height, width, amodal_dense).set_or(visible);

    AmodalSegment seg;
    seg.class_id = c.src->class_id;
    seg.instance_index = ++next_index[seg.class_id];
    seg.visible = visible;
    seg.amodal = std::move(amodal);
    seg.confidence = c.src->confidence;

    std::uint32_t label =
        AmodalImageAnnotation::encode_label(seg.class_id, seg.instance_index);
    for (std::uint64_t idx = 0; idx < owner.size(); ++idx) {
      if (owner[idx] == static_cast<std::int32_t>(k)) {
        out.visible_map[idx] = label;
      }
    }
    out.segments.push_back(std::move(seg));
  }
  return out;
}

}  // namespace aps
