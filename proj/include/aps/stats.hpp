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
#ifndef APS_STATS_HPP_
#define APS_STATS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aps/core.hpp"

namespace aps {

// |mask| / area(convex hull of the corner points of every set pixel).
// 1.0 for any filled axis-aligned rectangle. Throws on empty masks.
double convexity(const BinaryMask& mask);

// sqrt(4*pi*|mask|) / perimeter, where the perimeter counts unit pixel edges
// adjacent to an unset pixel or the image border. A square of any size
// scores sqrt(pi)/2. Throws on empty masks.
double simplicity(const BinaryMask& mask);

// Exposed unit-edge count (4-connectivity boundary length).
std::uint64_t mask_perimeter(const BinaryMask& mask);

// |amodal \ visible| / |amodal|. Throws when the amodal mask is empty.
double occlusion_level(const AmodalSegment& seg);

struct ShapeMoments {
  double convexity_sum = 0.0;
  double simplicity_sum = 0.0;
  std::uint64_t count = 0;

  void add(const ShapeMoments& o) {
    convexity_sum += o.convexity_sum;
    simplicity_sum += o.simplicity_sum;
    count += o.count;
  }
};

// Mergeable tally behind dataset_stats; counts can also be fed directly
// (e.g. from published tables) before finalizing.
struct StatsAccumulator {
  std::map<std::uint16_t, std::uint64_t> instance_counts;
  std::vector<std::uint64_t> occlusion_histogram;  // sized to `bins`
  ShapeMoments inmodal, amodal;
  std::map<std::uint16_t, ShapeMoments> inmodal_per_class, amodal_per_class;
  std::uint64_t images = 0;

  explicit StatsAccumulator(int bins = 20);

  int bins() const { return static_cast<int>(occlusion_histogram.size()); }
  void add_annotation(const AmodalImageAnnotation& ann,
                      const ClassTaxonomy& tax);
  void add(const StatsAccumulator& o);
};

struct ClassShapeStats {
  std::uint64_t instances = 0;
  double ratio = 0.0;
  double mean_inmodal_convexity = 0.0;
  double mean_amodal_convexity = 0.0;
  double mean_inmodal_simplicity = 0.0;
  double mean_amodal_simplicity = 0.0;
};

struct StatsReport {
  std::uint64_t images = 0;
  std::uint64_t total_instances = 0;
  std::map<std::uint16_t, ClassShapeStats> per_class;
  std::map<std::uint16_t, std::string> class_names;
  std::vector<double> histogram_edges;  // bins + 1 edges over [0, 1]
  std::vector<std::uint64_t> histogram_counts;
  double mean_inmodal_convexity = 0.0;
  double mean_amodal_convexity = 0.0;
  double mean_inmodal_simplicity = 0.0;
  double mean_amodal_simplicity = 0.0;
};

StatsReport finalize_stats(const StatsAccumulator& acc,
                           const ClassTaxonomy& tax);

StatsReport dataset_stats(const std::vector<AmodalImageAnnotation>& anns,
                          const ClassTaxonomy& tax, int bins = 20);

}  // namespace aps

#endif  // APS_STATS_HPP_
