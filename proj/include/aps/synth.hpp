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
#ifndef APS_SYNTH_HPP_
#define APS_SYNTH_HPP_

#include <cstdint>

#include "aps/core.hpp"

namespace aps {

enum class StuffLayout { kHorizontalBands, kSingleBackground };

struct SceneSpec {
  int height = 376;
  int width = 1408;
  StuffLayout stuff_layout = StuffLayout::kHorizontalBands;
  int min_things = 0;
  int max_things = 8;
  int min_size = 8;   // shape extent per axis, pixels
  int max_size = 96;
  std::uint64_t seed = 0;
};

struct PerturbationSpec {
  double drop_probability = 0.0;
  double spawn_probability = 0.0;
  int dilate_radius = 0;
  int erode_radius = 0;
  int translate_range = 0;  // per-axis shift drawn from [-range, range]
  std::uint64_t seed = 0;
};

// Fixed taxonomy used by generated scenes: stuff {1 sky, 2 terrain, 3 road},
// things {10 box, 11 disc}.
const ClassTaxonomy& synth_taxonomy();

// Layered scene with exactly known amodal structure: shapes are painted
// back-to-front, every amodal mask is the full shape, visibility follows
// depth order. Identical spec (including seed) gives identical output.
AmodalImageAnnotation generate_scene(const SceneSpec& spec);

// Seeded degradation of a groundtruth annotation into a plausible
// prediction; the result is always repaired back to a valid annotation.
AmodalImageAnnotation perturb(const AmodalImageAnnotation& gt,
                              const PerturbationSpec& spec);

}  // namespace aps

#endif  // APS_SYNTH_HPP_
