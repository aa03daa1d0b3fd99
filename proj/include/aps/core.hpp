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
#ifndef APS_CORE_HPP_
#define APS_CORE_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aps {

// Run-length encoded binary pixel set. Runs are row-major and alternate
// zero-count / one-count, starting with the count of zeros (which may be 0).
// Canonical form: no zero-length run after the first, no trailing runs past
// height*width, total always equals height*width.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width);  // all-zero mask

  static BinaryMask from_dense(int height, int width,
                               const std::vector<std::uint8_t>& pixels);
  static BinaryMask from_runs(int height, int width,
                              std::vector<std::uint64_t> runs);
  // Filled axis-aligned rectangle, half-open box [x0,x1) x [y0,y1).
  static BinaryMask filled_rect(int height, int width, int x0, int y0, int x1,
                                int y1);

  int height() const { return height_; }
  int width() const { return width_; }
  std::uint64_t area() const { return area_; }
  bool empty() const { return area_ == 0; }
  const std::vector<std::uint64_t>& runs() const { return runs_; }

  std::vector<std::uint8_t> to_dense() const;
  bool get(int x, int y) const;

  BinaryMask set_and(const BinaryMask& other) const;
  BinaryMask set_or(const BinaryMask& other) const;
  BinaryMask set_minus(const BinaryMask& other) const;

  // True iff other is a subset of this mask.
  bool contains(const BinaryMask& other) const;
  bool intersects(const BinaryMask& other) const;

  bool operator==(const BinaryMask& other) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::uint64_t area_ = 0;
  std::vector<std::uint64_t> runs_;
};

std::uint64_t mask_intersection_area(const BinaryMask& a, const BinaryMask& b);
// (intersection, union) pixel counts.
std::pair<std::uint64_t, std::uint64_t> mask_iou_counts(const BinaryMask& a,
                                                        const BinaryMask& b);
// |a∩b| / |a∪b|; 0 when both masks are empty. Throws std::invalid_argument
// on dimension mismatch.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

struct ClassInfo {
  std::uint16_t id = 0;
  std::string name;

  bool operator==(const ClassInfo& other) const = default;
};

// The stuff/thing class split. Void is always class id 0 and never listed.
class ClassTaxonomy {
 public:
  static constexpr std::uint16_t kVoidId = 0;
  static constexpr std::uint16_t kMaxClassId = 65;

  ClassTaxonomy(std::vector<ClassInfo> stuff_classes,
                std::vector<ClassInfo> thing_classes);

  const std::vector<ClassInfo>& stuff_classes() const { return stuff_; }
  const std::vector<ClassInfo>& thing_classes() const { return things_; }

  bool is_stuff(std::uint16_t class_id) const;
  bool is_thing(std::uint16_t class_id) const;
  bool contains(std::uint16_t class_id) const;
  const std::string& name_of(std::uint16_t class_id) const;

  // Channel index for fusion tensors: stuff classes first, then thing
  // classes, each in taxonomy order.
  int channel_index(std::uint16_t class_id) const;
  int num_channels() const {
    return static_cast<int>(stuff_.size() + things_.size());
  }

  bool operator==(const ClassTaxonomy& other) const = default;

 private:
  std::vector<ClassInfo> stuff_;
  std::vector<ClassInfo> things_;
};

// One thing instance: the visible pixels plus the full amodal extent.
// The occluded region is always derived as amodal \ visible.
struct AmodalSegment {
  std::uint16_t class_id = 0;
  std::uint16_t instance_index = 0;  // in [1, 999]
  BinaryMask visible;
  BinaryMask amodal;
  std::optional<double> confidence;  // predictions only

  BinaryMask occluded() const { return amodal.set_minus(visible); }

  bool operator==(const AmodalSegment& other) const = default;
};

// Per-image groundtruth or prediction. visible_map holds one encoded
// (class_id, instance_index) label per pixel, row-major; 0 is void.
struct AmodalImageAnnotation {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> visible_map;
  std::vector<AmodalSegment> segments;

  static std::uint32_t encode_label(std::uint16_t class_id,
                                    std::uint16_t instance_index) {
    return static_cast<std::uint32_t>(class_id) * 1000u + instance_index;
  }
  static std::uint16_t label_class(std::uint32_t label) {
    return static_cast<std::uint16_t>(label / 1000u);
  }
  static std::uint16_t label_instance(std::uint32_t label) {
    return static_cast<std::uint16_t>(label % 1000u);
  }

  std::uint32_t label_at(int x, int y) const {
    return visible_map[static_cast<std::size_t>(y) * width + x];
  }

  bool operator==(const AmodalImageAnnotation& other) const = default;
};

struct ThingEntry {
  BinaryMask visible;
  BinaryMask occluded;
  std::uint16_t instance_index = 0;
  std::optional<double> confidence;

  BinaryMask amodal() const { return visible.set_or(occluded); }
};

// Segments of one image grouped for metric computation: at most one stuff
// mask per class, and per thing class the list of (visible, occluded) pairs.
struct SegmentSets {
  int height = 0;
  int width = 0;
  std::map<std::uint16_t, BinaryMask> stuff_masks;
  std::map<std::uint16_t, std::vector<ThingEntry>> things;
};

struct Violation {
  std::string rule;
  std::string detail;
};

// Splits an annotation into stuff masks and thing (visible, occluded)
// entries. Throws on class ids unknown to the taxonomy.
SegmentSets extract_segments(const AmodalImageAnnotation& ann,
                             const ClassTaxonomy& tax);

// Checks every structural invariant; returns all violations found.
std::vector<Violation> validate_annotation(const AmodalImageAnnotation& ann,
                                           const ClassTaxonomy& tax);

}  // namespace aps

#endif  // APS_CORE_HPP_
