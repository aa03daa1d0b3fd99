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
#ifndef APS_METRICS_HPP_
#define APS_METRICS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aps/core.hpp"
#include "aps/matching.hpp"

namespace aps {

enum class MatchingWeight { kVisibleIou, kAmodalIou };

struct EvalConfig {
  MatchingWeight matching_weight = MatchingWeight::kVisibleIou;
  double min_match_iou = 0.0;  // edges need IoU strictly greater than this
  bool include_miou = true;
};

// IoU sums are accumulated in 2^-60 fixed point so that merging is integer
// addition: associative, commutative, and bit-exact under any sharding.
using Fixed = __int128;
inline constexpr int kFixedShift = 60;

// floor((num << 60) / den); 0 when den == 0.
Fixed fixed_ratio(std::uint64_t num, std::uint64_t den);
double fixed_to_double(Fixed f);

struct StuffTally {
  Fixed iou_sum = 0;          // sum of matched-segment IoU
  std::uint64_t gt_count = 0;  // |S_c|
  Fixed cov_weighted = 0;      // sum of |X| * max IoU
  std::uint64_t cov_pixels = 0;  // N_c

  void add(const StuffTally& o);
};

struct ThingTally {
  std::uint64_t tp = 0, fp = 0, fn = 0;
  Fixed amodal_iou_sum = 0;
  Fixed visible_iou_sum = 0;
  std::uint64_t tp_occ = 0, fp_occ = 0, fn_occ = 0;
  Fixed occluded_iou_sum = 0;
  Fixed cov_visible_weighted = 0;
  std::uint64_t cov_visible_pixels = 0;  // N_vc
  Fixed cov_occluded_weighted = 0;
  std::uint64_t cov_occluded_pixels = 0;  // N_oc

  void add(const ThingTally& o);
};

struct SemanticTally {
  std::uint64_t intersection = 0;
  std::uint64_t set_union = 0;
};

class MetricAccumulator {
 public:
  MetricAccumulator() = default;
  explicit MetricAccumulator(const ClassTaxonomy& tax);

  std::map<std::uint16_t, StuffTally> stuff;
  std::map<std::uint16_t, ThingTally> things;
  std::map<std::uint16_t, SemanticTally> semantic;
  std::uint64_t images = 0;

  const std::optional<ClassTaxonomy>& taxonomy() const { return taxonomy_; }

 private:
  std::optional<ClassTaxonomy> taxonomy_;
};

// Field-wise sum; throws on taxonomy mismatch. A default-constructed
// accumulator is the identity.
MetricAccumulator merge(const MetricAccumulator& a, const MetricAccumulator& b);

struct ClassReport {
  std::uint16_t class_id = 0;
  std::string name;
  bool is_thing = false;
  std::optional<double> apq;  // percentages throughout
  std::optional<double> apq_visible;
  std::optional<double> apq_occluded;
  std::optional<double> coverage;
  std::optional<double> cov_visible;
  std::optional<double> cov_occluded;
  std::optional<double> iou;
};

struct MetricReport {
  std::optional<double> apq, apq_stuff, apq_things;
  std::optional<double> apq_things_visible, apq_things_occluded;
  std::optional<double> apc, apc_stuff, apc_things;
  std::optional<double> apc_things_visible, apc_things_occluded;
  std::optional<double> miou;
  std::vector<ClassReport> per_class;
  std::vector<std::uint16_t> classes_evaluated;  // contribute to the APQ mean
  std::vector<std::uint16_t> classes_skipped;    // zero APQ denominator
  std::uint64_t images = 0;
  std::vector<std::string> missing_predictions;  // stems scored as all-FN
  std::vector<std::string> invalid_pairs;        // stems that failed to load
};

// Bipartite matching of one thing class between groundtruth and prediction
// segment sets; pairs form the TP set. Weights per cfg.matching_weight.
Matching match_thing_segments(const SegmentSets& gt, const SegmentSets& pred,
                              std::uint16_t class_id, const ClassTaxonomy& tax,
                              const EvalConfig& cfg);

// Per-image tallies for every class in the taxonomy. Both annotations must
// validate cleanly and share dimensions.
MetricAccumulator evaluate_image(const AmodalImageAnnotation& gt,
                                 const AmodalImageAnnotation& pred,
                                 const ClassTaxonomy& tax,
                                 const EvalConfig& cfg);

MetricReport finalize(const MetricAccumulator& acc, const ClassTaxonomy& tax);

}  // namespace aps

#endif  // APS_METRICS_HPP_
