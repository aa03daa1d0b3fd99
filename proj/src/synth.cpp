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
#include "aps/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

namespace aps {

namespace {

// All randomness flows through mt19937_64 (fully specified by the standard)
// with modulo reduction, so fixtures reproduce bit-exactly on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  int range(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
  double unit() { return (engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

constexpr std::uint16_t kSky = 1, kTerrain = 2, kRoad = 3;
constexpr std::uint16_t kBox = 10, kDisc = 11;

BinaryMask ellipse_mask(int height, int width, int x0, int y0, int w, int h) {
  double cx = x0 + w / 2.0, cy = y0 + h / 2.0;
  double rx = w / 2.0, ry = h / 2.0;
  std::vector<std::uint8_t> dense(static_cast<std::uint64_t>(height) * width,
                                  0);
  for (int y = std::max(y0, 0); y < std::min(y0 + h, height); ++y) {
    double dy = (y + 0.5 - cy) / ry;
    if (dy * dy >= 1.0) continue;
    double half = rx * std::sqrt(1.0 - dy * dy);
    int xs = static_cast<int>(std::ceil(cx - half - 0.5));
    int xe = static_cast<int>(std::floor(cx + half - 0.5));
    xs = std::max(xs, 0);
    xe = std::min(xe, width - 1);
    for (int x = xs; x <= xe; ++x) {
      dense[static_cast<std::uint64_t>(y) * width + x] = 1;
    }
  }
  return BinaryMask::from_dense(height, width, dense);
}

struct Shape {
  std::uint16_t class_id;
  BinaryMask mask;
};

Shape random_shape(Rng& rng, int height, int width, int min_size,
                   int max_size) {
  bool is_box = rng.below(2) == 0;
  int w = rng.range(min_size, max_size);
  int h = rng.range(min_size, max_size);
  int x0 = rng.range(0, width - w);
  int y0 = rng.range(0, height - h);
  Shape s;
  s.class_id = is_box ? kBox : kDisc;
  s.mask = is_box ? BinaryMask::filled_rect(height, width, x0, y0, x0 + w,
                                            y0 + h)
                  : ellipse_mask(height, width, x0, y0, w, h);
  // Tiny ellipses can miss every pixel center; fall back to one pixel.
  if (s.mask.empty()) {
    s.mask = BinaryMask::filled_rect(height, width, x0, y0, x0 + 1, y0 + 1);
  }
  return s;
}

void paint_label(std::vector<std::uint32_t>& map, const BinaryMask& mask,
                 std::uint32_t label) {
  std::uint64_t pos = 0;
  const auto& runs = mask.runs();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i & 1) std::fill_n(map.begin() + pos, runs[i], label);
    pos += runs[i];
  }
}

BinaryMask translate_mask(const BinaryMask& mask, int dx, int dy) {
  int h = mask.height(), w = mask.width();
  std::vector<std::uint8_t> dense(static_cast<std::uint64_t>(h) * w, 0);
  std::uint64_t pos = 0;
  const auto& runs = mask.runs();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i & 1) {
      for (std::uint64_t p = pos; p < pos + runs[i]; ++p) {
        int x = static_cast<int>(p % w) + dx;
        int y = static_cast<int>(p / w) + dy;
        if (x >= 0 && x < w && y >= 0 && y < h) {
          dense[static_cast<std::uint64_t>(y) * w + x] = 1;
        }
      }
    }
    pos += runs[i];
  }
  return BinaryMask::from_dense(h, w, dense);
}

// Separable square morphology on a dense buffer. Pixels outside the image
// count as unset.
std::vector<std::uint8_t> window_filter(const std::vector<std::uint8_t>& in,
                                        int h, int w, int r, bool require_all) {
  auto pass = [&](const std::vector<std::uint8_t>& src, int outer, int inner,
                  auto index) {
    std::vector<std::uint8_t> dst(src.size(), 0);
    std::vector<int> prefix(inner + 1, 0);
    for (int o = 0; o < outer; ++o) {
      for (int i = 0; i < inner; ++i) {
        prefix[i + 1] = prefix[i] + (src[index(o, i)] ? 1 : 0);
      }
      for (int i = 0; i < inner; ++i) {
        int lo = std::max(i - r, 0), hi = std::min(i + r, inner - 1);
        int count = prefix[hi + 1] - prefix[lo];
        bool full_window_inside = (i - r >= 0) && (i + r <= inner - 1);
        bool value = require_all ? (full_window_inside && count == 2 * r + 1)
                                 : (count > 0);
        dst[index(o, i)] = value ? 1 : 0;
      }
    }
    return dst;
  };
  auto row_index = [w](int y, int x) {
    return static_cast<std::uint64_t>(y) * w + x;
  };
  auto col_index = [w](int x, int y) {
    return static_cast<std::uint64_t>(y) * w + x;
  };
  auto tmp = pass(in, h, w, row_index);
  return pass(tmp, w, h, col_index);
}

BinaryMask morph(const BinaryMask& mask, int r, bool erode) {
  if (r <= 0) return mask;
  auto dense = window_filter(mask.to_dense(), mask.height(), mask.width(), r,
                             erode);
  return BinaryMask::from_dense(mask.height(), mask.width(), dense);
}

std::vector<BinaryMask> stuff_layers(const SceneSpec& spec,
                                     std::vector<std::uint16_t>& classes) {
  std::vector<BinaryMask> layers;
  if (spec.stuff_layout == StuffLayout::kSingleBackground) {
    classes = {kRoad};
    layers.push_back(BinaryMask::filled_rect(spec.height, spec.width, 0, 0,
                                             spec.width, spec.height));
    return layers;
  }
  classes = {kSky, kTerrain, kRoad};
  int band = spec.height / 3;
  int y = 0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    int y1 = i + 1 == classes.size() ? spec.height : y + band;
    layers.push_back(
        BinaryMask::filled_rect(spec.height, spec.width, 0, y, spec.width, y1));
    y = y1;
  }
  return layers;
}

// Rebuilds a valid annotation from depth-ordered thing shapes over a stuff
// background: visibility by painter's order, amodal masks untouched except
// for the visible-superset repair.
AmodalImageAnnotation assemble(int height, int width,
                               const std::vector<std::uint32_t>& stuff_map,
                               std::vector<AmodalSegment> depth_ordered) {
  AmodalImageAnnotation ann;
  ann.height = height;
  ann.width = width;
  ann.visible_map = stuff_map;

  BinaryMask claimed(height, width);
  std::vector<AmodalSegment> kept;
  for (auto it = depth_ordered.rbegin(); it != depth_ordered.rend(); ++it) {
    AmodalSegment seg = std::move(*it);
    seg.visible = seg.visible.set_minus(claimed);
    if (seg.visible.empty()) continue;
    claimed = claimed.set_or(seg.visible);
    seg.amodal = seg.amodal.set_or(seg.visible);
    kept.push_back(std::move(seg));
  }
  std::reverse(kept.begin(), kept.end());  // back to bottom-to-top order

  // Existing instance indices survive (drops may leave gaps); fresh or
  // colliding segments get the next free index of their class.
  std::map<std::uint16_t, std::set<std::uint16_t>> used;
  for (auto& seg : kept) {
    auto& taken = used[seg.class_id];
    if (seg.instance_index < 1 || seg.instance_index > 999 ||
        taken.count(seg.instance_index)) {
      std::uint16_t next = taken.empty() ? 1 : *taken.rbegin() + 1;
      seg.instance_index = next;
    }
    taken.insert(seg.instance_index);
    paint_label(ann.visible_map, seg.visible,
                AmodalImageAnnotation::encode_label(seg.class_id,
                                                    seg.instance_index));
    ann.segments.push_back(std::move(seg));
  }
  return ann;
}

}  // namespace

const ClassTaxonomy& synth_taxonomy() {
  static const ClassTaxonomy tax(
      {{kSky, "sky"}, {kTerrain, "terrain"}, {kRoad, "road"}},
      {{kBox, "box"}, {kDisc, "disc"}});
  return tax;
}

AmodalImageAnnotation generate_scene(const SceneSpec& spec) {
  if (spec.height < 1 || spec.width < 1) {
    throw std::invalid_argument("scene dimensions must be positive");
  }
  if (spec.min_things < 0 || spec.max_things < spec.min_things) {
    throw std::invalid_argument("invalid thing count range");
  }
  if (spec.min_size < 1 || spec.max_size < spec.min_size) {
    throw std::invalid_argument("invalid shape size range");
  }
  if (spec.max_size > spec.width || spec.max_size > spec.height) {
    throw std::invalid_argument("shapes of size " +
                                std::to_string(spec.max_size) +
                                " cannot be placed in a " +
                                std::to_string(spec.width) + "x" +
                                std::to_string(spec.height) + " image");
  }
  Rng rng(spec.seed);

  std::vector<std::uint16_t> stuff_classes;
  auto layers = stuff_layers(spec, stuff_classes);
  std::vector<std::uint32_t> stuff_map(
      static_cast<std::uint64_t>(spec.height) * spec.width, 0);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    paint_label(stuff_map, layers[i],
                AmodalImageAnnotation::encode_label(stuff_classes[i], 0));
  }

  int count = spec.min_things +
              static_cast<int>(rng.below(spec.max_things - spec.min_things + 1));
  std::vector<AmodalSegment> shapes;
  for (int i = 0; i < count; ++i) {
    Shape s = random_shape(rng, spec.height, spec.width, spec.min_size,
                           spec.max_size);
    AmodalSegment seg;
    seg.class_id = s.class_id;
    seg.visible = s.mask;  // clipped to true visibility in assemble()
    seg.amodal = std::move(s.mask);
    shapes.push_back(std::move(seg));
  }
  return assemble(spec.height, spec.width, stuff_map, std::move(shapes));
}

AmodalImageAnnotation perturb(const AmodalImageAnnotation& gt,
                              const PerturbationSpec& spec) {
  if (spec.drop_probability < 0 || spec.drop_probability > 1 ||
      spec.spawn_probability < 0 || spec.spawn_probability > 1) {
    throw std::invalid_argument("probabilities must lie in [0, 1]");
  }
  Rng rng(spec.seed);

  // Stuff background survives untouched; thing labels are repainted below.
  std::vector<std::uint32_t> stuff_map = gt.visible_map;
  for (auto& label : stuff_map) {
    if (AmodalImageAnnotation::label_instance(label) != 0) label = 0;
  }

  std::vector<AmodalSegment> shapes;
  for (const auto& seg : gt.segments) {
    if (spec.drop_probability > 0 && rng.unit() < spec.drop_probability) {
      continue;
    }
    AmodalSegment s = seg;
    if (spec.translate_range > 0) {
      int dx = rng.range(-spec.translate_range, spec.translate_range);
      int dy = rng.range(-spec.translate_range, spec.translate_range);
      s.visible = translate_mask(s.visible, dx, dy);
      s.amodal = translate_mask(s.amodal, dx, dy);
    }
    if (spec.dilate_radius > 0) {
      s.visible = morph(s.visible, spec.dilate_radius, false);
      s.amodal = morph(s.amodal, spec.dilate_radius, false);
    }
    if (spec.erode_radius > 0) {
      s.visible = morph(s.visible, spec.erode_radius, true);
      s.amodal = morph(s.amodal, spec.erode_radius, true);
    }
    if (s.visible.empty()) continue;
    shapes.push_back(std::move(s));
  }

  if (spec.spawn_probability > 0 && rng.unit() < spec.spawn_probability) {
    int max_size = std::max(8, std::min(gt.height, gt.width) / 4);
    int min_size = std::min(8, max_size);
    Shape s = random_shape(rng, gt.height, gt.width, min_size, max_size);
    AmodalSegment seg;
    seg.class_id = s.class_id;
    seg.visible = s.mask;
    seg.amodal = std::move(s.mask);
    shapes.push_back(std::move(seg));
  }

  return assemble(gt.height, gt.width, stuff_map, std::move(shapes));
}

}  // namespace aps
