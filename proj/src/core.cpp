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
#include "aps/core.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace aps {

namespace {

// Appends `count` pixels of value `bit` to a canonical run vector.
class RunBuilder {
 public:
  void append(bool bit, std::uint64_t count) {
    if (count == 0) return;
    pos_ += count;
    if (runs_.empty()) {
      if (bit) runs_.push_back(0);
      runs_.push_back(count);
      last_bit_ = bit;
      return;
    }
    if (bit == last_bit_) {
      runs_.back() += count;
    } else {
      runs_.push_back(count);
      last_bit_ = bit;
    }
  }

  // Interval [start, start+len) of ones, given in absolute pixel offsets.
  // Intervals must arrive in increasing, non-overlapping order.
  void add_ones(std::uint64_t start, std::uint64_t len) {
    append(false, start - pos_);
    append(true, len);
    pos_ = start + len;
  }

  std::vector<std::uint64_t> finish(std::uint64_t total) {
    append(false, total - pos_);
    pos_ = total;
    return std::move(runs_);
  }

  std::vector<std::uint64_t> take() { return std::move(runs_); }

 private:
  std::vector<std::uint64_t> runs_;
  std::uint64_t pos_ = 0;
  bool last_bit_ = false;
};

// Cursor over a run vector yielding (bit, count) pieces.
struct RunCursor {
  const std::vector<std::uint64_t>* runs;
  std::size_t index = 0;
  std::uint64_t remaining = 0;

  explicit RunCursor(const std::vector<std::uint64_t>& r) : runs(&r) {
    if (!r.empty()) remaining = r[0];
    skip_empty();
  }
  bool bit() const { return (index & 1) != 0; }
  bool done() const { return index >= runs->size(); }
  void advance(std::uint64_t n) {
    remaining -= n;
    skip_empty();
  }
  void skip_empty() {
    while (remaining == 0 && index + 1 < runs->size()) {
      ++index;
      remaining = (*runs)[index];
    }
    if (remaining == 0 && index + 1 >= runs->size()) index = runs->size();
  }
};

void require_same_dims(const BinaryMask& a, const BinaryMask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    std::ostringstream os;
    os << "mask dimension mismatch: " << a.height() << "x" << a.width()
       << " vs " << b.height() << "x" << b.width();
    throw std::invalid_argument(os.str());
  }
}

template <typename Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, Op op) {
  require_same_dims(a, b);
  RunBuilder out;
  RunCursor ca(a.runs()), cb(b.runs());
  while (!ca.done() && !cb.done()) {
    std::uint64_t step = std::min(ca.remaining, cb.remaining);
    out.append(op(ca.bit(), cb.bit()), step);
    ca.advance(step);
    cb.advance(step);
  }
  std::uint64_t total = static_cast<std::uint64_t>(a.height()) * a.width();
  return BinaryMask::from_runs(a.height(), a.width(), out.finish(total));
}

std::string pixel_str(int width, std::uint64_t offset) {
  std::ostringstream os;
  os << "(" << (width > 0 ? offset % width : 0) << ", "
     << (width > 0 ? offset / width : 0) << ")";
  return os.str();
}

// First pixel offset where the two masks differ, or nullopt if equal.
std::optional<std::uint64_t> first_difference(const BinaryMask& a,
                                              const BinaryMask& b) {
  RunCursor ca(a.runs()), cb(b.runs());
  std::uint64_t pos = 0;
  while (!ca.done() && !cb.done()) {
    std::uint64_t step = std::min(ca.remaining, cb.remaining);
    if (ca.bit() != cb.bit()) return pos;
    pos += step;
    ca.advance(step);
    cb.advance(step);
  }
  return std::nullopt;
}

}  // namespace

BinaryMask::BinaryMask(int height, int width)
    : height_(height), width_(width) {
  if (height < 0 || width < 0) {
    throw std::invalid_argument("negative mask dimensions");
  }
  std::uint64_t total = static_cast<std::uint64_t>(height) * width;
  if (total > 0) runs_.push_back(total);
}

BinaryMask BinaryMask::from_runs(int height, int width,
                                 std::vector<std::uint64_t> runs) {
  if (height < 0 || width < 0) {
    throw std::invalid_argument("negative mask dimensions");
  }
  std::uint64_t total = static_cast<std::uint64_t>(height) * width;
  std::uint64_t sum = 0;
  std::uint64_t ones = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i] == 0 && i != 0) {
      throw std::invalid_argument("zero-length run at index " +
                                  std::to_string(i));
    }
    sum += runs[i];
    if (i & 1) ones += runs[i];
  }
  if (sum != total) {
    throw std::invalid_argument("run sum " + std::to_string(sum) +
                                " does not cover " + std::to_string(total) +
                                " pixels");
  }
  BinaryMask m;
  m.height_ = height;
  m.width_ = width;
  m.area_ = ones;
  m.runs_ = std::move(runs);
  return m;
}

BinaryMask BinaryMask::from_dense(int height, int width,
                                  const std::vector<std::uint8_t>& pixels) {
  std::uint64_t total = static_cast<std::uint64_t>(height) * width;
  if (pixels.size() != total) {
    throw std::invalid_argument("dense pixel buffer size mismatch");
  }
  RunBuilder out;
  for (std::uint64_t i = 0; i < total;) {
    std::uint64_t j = i;
    bool bit = pixels[i] != 0;
    while (j < total && (pixels[j] != 0) == bit) ++j;
    out.append(bit, j - i);
    i = j;
  }
  return from_runs(height, width, out.finish(total));
}

BinaryMask BinaryMask::filled_rect(int height, int width, int x0, int y0,
                                   int x1, int y1) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, width);
  y1 = std::min(y1, height);
  RunBuilder out;
  if (x1 > x0) {
    for (int y = y0; y < y1; ++y) {
      out.add_ones(static_cast<std::uint64_t>(y) * width + x0,
                   static_cast<std::uint64_t>(x1 - x0));
    }
  }
  std::uint64_t total = static_cast<std::uint64_t>(height) * width;
  return from_runs(height, width, out.finish(total));
}

std::vector<std::uint8_t> BinaryMask::to_dense() const {
  std::vector<std::uint8_t> out(static_cast<std::uint64_t>(height_) * width_,
                                0);
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < runs_.size(); ++i) {
    if (i & 1) std::fill_n(out.begin() + pos, runs_[i], std::uint8_t{1});
    pos += runs_[i];
  }
  return out;
}

bool BinaryMask::get(int x, int y) const {
  std::uint64_t offset = static_cast<std::uint64_t>(y) * width_ + x;
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < runs_.size(); ++i) {
    pos += runs_[i];
    if (offset < pos) return (i & 1) != 0;
  }
  return false;
}

BinaryMask BinaryMask::set_and(const BinaryMask& other) const {
  return combine(*this, other, [](bool a, bool b) { return a && b; });
}

BinaryMask BinaryMask::set_or(const BinaryMask& other) const {
  return combine(*this, other, [](bool a, bool b) { return a || b; });
}

BinaryMask BinaryMask::set_minus(const BinaryMask& other) const {
  return combine(*this, other, [](bool a, bool b) { return a && !b; });
}

bool BinaryMask::contains(const BinaryMask& other) const {
  return mask_intersection_area(*this, other) == other.area();
}

bool BinaryMask::intersects(const BinaryMask& other) const {
  require_same_dims(*this, other);
  RunCursor ca(runs_), cb(other.runs());
  while (!ca.done() && !cb.done()) {
    if (ca.bit() && cb.bit()) return true;
    std::uint64_t step = std::min(ca.remaining, cb.remaining);
    ca.advance(step);
    cb.advance(step);
  }
  return false;
}

std::uint64_t mask_intersection_area(const BinaryMask& a,
                                     const BinaryMask& b) {
  require_same_dims(a, b);
  RunCursor ca(a.runs()), cb(b.runs());
  std::uint64_t inter = 0;
  while (!ca.done() && !cb.done()) {
    std::uint64_t step = std::min(ca.remaining, cb.remaining);
    if (ca.bit() && cb.bit()) inter += step;
    ca.advance(step);
    cb.advance(step);
  }
  return inter;
}

std::pair<std::uint64_t, std::uint64_t> mask_iou_counts(const BinaryMask& a,
                                                        const BinaryMask& b) {
  std::uint64_t inter = mask_intersection_area(a, b);
  std::uint64_t uni = a.area() + b.area() - inter;
  return {inter, uni};
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  auto [inter, uni] = mask_iou_counts(a, b);
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

ClassTaxonomy::ClassTaxonomy(std::vector<ClassInfo> stuff_classes,
                             std::vector<ClassInfo> thing_classes)
    : stuff_(std::move(stuff_classes)), things_(std::move(thing_classes)) {
  std::set<std::uint16_t> seen;
  auto check = [&](const ClassInfo& c) {
    if (c.id == kVoidId) {
      throw std::invalid_argument("class id 0 is reserved for void");
    }
    if (c.id > kMaxClassId) {
      throw std::invalid_argument("class id " + std::to_string(c.id) +
                                  " exceeds the encoding bound of " +
                                  std::to_string(kMaxClassId));
    }
    if (!seen.insert(c.id).second) {
      throw std::invalid_argument("duplicate class id " +
                                  std::to_string(c.id));
    }
  };
  for (const auto& c : stuff_) check(c);
  for (const auto& c : things_) check(c);
}

bool ClassTaxonomy::is_stuff(std::uint16_t class_id) const {
  return std::any_of(stuff_.begin(), stuff_.end(),
                     [&](const ClassInfo& c) { return c.id == class_id; });
}

bool ClassTaxonomy::is_thing(std::uint16_t class_id) const {
  return std::any_of(things_.begin(), things_.end(),
                     [&](const ClassInfo& c) { return c.id == class_id; });
}

bool ClassTaxonomy::contains(std::uint16_t class_id) const {
  return is_stuff(class_id) || is_thing(class_id);
}

const std::string& ClassTaxonomy::name_of(std::uint16_t class_id) const {
  for (const auto& c : stuff_)
    if (c.id == class_id) return c.name;
  for (const auto& c : things_)
    if (c.id == class_id) return c.name;
  throw std::invalid_argument("unknown class id " + std::to_string(class_id));
}

int ClassTaxonomy::channel_index(std::uint16_t class_id) const {
  for (std::size_t i = 0; i < stuff_.size(); ++i)
    if (stuff_[i].id == class_id) return static_cast<int>(i);
  for (std::size_t i = 0; i < things_.size(); ++i)
    if (things_[i].id == class_id)
      return static_cast<int>(stuff_.size() + i);
  throw std::invalid_argument("unknown class id " + std::to_string(class_id));
}

SegmentSets extract_segments(const AmodalImageAnnotation& ann,
                             const ClassTaxonomy& tax) {
  SegmentSets out;
  out.height = ann.height;
  out.width = ann.width;
  std::uint64_t total = static_cast<std::uint64_t>(ann.height) * ann.width;

  // Stuff masks come from the visible map in one pass.
  std::unordered_map<std::uint16_t, RunBuilder> stuff_builders;
  for (std::uint64_t i = 0; i < total;) {
    std::uint32_t label = ann.visible_map[i];
    std::uint64_t j = i;
    while (j < total && ann.visible_map[j] == label) ++j;
    std::uint16_t cls = AmodalImageAnnotation::label_class(label);
    if (cls != ClassTaxonomy::kVoidId) {
      if (!tax.contains(cls)) {
        throw std::invalid_argument("annotation references class id " +
                                    std::to_string(cls) +
                                    " not present in the taxonomy");
      }
      if (tax.is_stuff(cls)) stuff_builders[cls].add_ones(i, j - i);
    }
    i = j;
  }
  for (auto& [cls, builder] : stuff_builders) {
    out.stuff_masks.emplace(
        cls, BinaryMask::from_runs(ann.height, ann.width,
                                   builder.finish(total)));
  }

  for (const auto& seg : ann.segments) {
    if (!tax.is_thing(seg.class_id)) {
      throw std::invalid_argument("segment references class id " +
                                  std::to_string(seg.class_id) +
                                  " that is not a thing class");
    }
    ThingEntry entry;
    entry.visible = seg.visible;
    entry.occluded = seg.amodal.set_minus(seg.visible);
    entry.instance_index = seg.instance_index;
    entry.confidence = seg.confidence;
    out.things[seg.class_id].push_back(std::move(entry));
  }
  for (auto& [cls, entries] : out.things) {
    std::sort(entries.begin(), entries.end(),
              [](const ThingEntry& a, const ThingEntry& b) {
                return a.instance_index < b.instance_index;
              });
  }
  return out;
}

std::vector<Violation> validate_annotation(const AmodalImageAnnotation& ann,
                                           const ClassTaxonomy& tax) {
  std::vector<Violation> out;
  std::uint64_t total = static_cast<std::uint64_t>(ann.height) * ann.width;
  if (ann.visible_map.size() != total) {
    out.push_back({"bad_dimensions",
                   "visible_map has " + std::to_string(ann.visible_map.size()) +
                       " entries, expected " + std::to_string(total)});
    return out;
  }

  // Visible masks implied by the map, keyed by encoded thing label.
  std::unordered_map<std::uint32_t, RunBuilder> map_builders;
  std::set<std::uint32_t> bad_map_labels;
  for (std::uint64_t i = 0; i < total;) {
    std::uint32_t label = ann.visible_map[i];
    std::uint64_t j = i;
    while (j < total && ann.visible_map[j] == label) ++j;
    std::uint16_t cls = AmodalImageAnnotation::label_class(label);
    std::uint16_t inst = AmodalImageAnnotation::label_instance(label);
    if (label != 0 && bad_map_labels.insert(label).second) {
      if (!tax.contains(cls)) {
        out.push_back({"unknown_class",
                       "visible_map label " + std::to_string(label) +
                           " references unknown class " + std::to_string(cls) +
                           " at pixel " + pixel_str(ann.width, i)});
      } else if (tax.is_stuff(cls) && inst != 0) {
        out.push_back({"stuff_instance_nonzero",
                       "stuff class " + std::to_string(cls) +
                           " carries instance index " + std::to_string(inst) +
                           " at pixel " + pixel_str(ann.width, i)});
      } else if (tax.is_thing(cls) && inst == 0) {
        out.push_back({"thing_instance_zero",
                       "thing class " + std::to_string(cls) +
                           " carries instance index 0 at pixel " +
                           pixel_str(ann.width, i)});
      }
    }
    if (label != 0 && tax.is_thing(cls) && inst != 0) {
      map_builders[label].add_ones(i, j - i);
    }
    i = j;
  }
  std::map<std::uint32_t, BinaryMask> map_masks;
  for (auto& [label, builder] : map_builders) {
    map_masks.emplace(label, BinaryMask::from_runs(ann.height, ann.width,
                                                   builder.finish(total)));
  }

  std::set<std::uint32_t> seen_keys;
  for (std::size_t si = 0; si < ann.segments.size(); ++si) {
    const auto& seg = ann.segments[si];
    std::string seg_name = "segment " + std::to_string(si) + " (class " +
                           std::to_string(seg.class_id) + ", instance " +
                           std::to_string(seg.instance_index) + ")";
    if (!tax.is_thing(seg.class_id)) {
      out.push_back({"unknown_class", seg_name + ": not a thing class"});
      continue;
    }
    if (seg.instance_index < 1 || seg.instance_index > 999) {
      out.push_back({"instance_index_range",
                     seg_name + ": instance index outside [1, 999]"});
      continue;
    }
    std::uint32_t key =
        AmodalImageAnnotation::encode_label(seg.class_id, seg.instance_index);
    if (!seen_keys.insert(key).second) {
      out.push_back({"duplicate_key",
                     seg_name + ": duplicate (class, instance) key"});
      continue;
    }
    if (seg.visible.height() != ann.height ||
        seg.visible.width() != ann.width ||
        seg.amodal.height() != ann.height ||
        seg.amodal.width() != ann.width) {
      out.push_back({"bad_dimensions", seg_name + ": mask dimensions differ "
                                                  "from the image"});
      continue;
    }
    if (seg.visible.empty()) {
      out.push_back({"empty_visible", seg_name + ": visible mask is empty"});
    }
    if (!seg.amodal.contains(seg.visible)) {
      BinaryMask outside = seg.visible.set_minus(seg.amodal);
      auto diff = first_difference(outside, BinaryMask(ann.height, ann.width));
      out.push_back({"visible_not_subset_amodal",
                     seg_name + ": visible pixel outside amodal mask at " +
                         pixel_str(ann.width, diff.value_or(0))});
    }
    if (seg.confidence && (*seg.confidence < 0.0 || *seg.confidence > 1.0)) {
      out.push_back({"confidence_range",
                     seg_name + ": confidence outside [0, 1]"});
    }
    auto it = map_masks.find(key);
    const BinaryMask empty(ann.height, ann.width);
    const BinaryMask& from_map = it == map_masks.end() ? empty : it->second;
    if (from_map != seg.visible) {
      auto diff = first_difference(from_map, seg.visible);
      out.push_back({"visible_map_mismatch",
                     seg_name + ": visible mask disagrees with visible_map "
                                "at pixel " +
                         pixel_str(ann.width, diff.value_or(0))});
    }
  }
  for (const auto& [label, mask] : map_masks) {
    if (!seen_keys.count(label)) {
      out.push_back({"missing_segment",
                     "visible_map label " + std::to_string(label) +
                         " has no matching segment entry"});
    }
  }
  return out;
}

}  // namespace aps
