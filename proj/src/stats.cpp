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
#include "aps/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aps {

namespace {

using Interval = std::pair<std::int64_t, std::int64_t>;  // [start, end) in x

// One-run intervals per pixel row.
std::vector<std::vector<Interval>> row_intervals(const BinaryMask& m) {
  std::vector<std::vector<Interval>> rows(m.height());
  std::uint64_t pos = 0;
  const auto& runs = m.runs();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i & 1) {
      std::uint64_t start = pos, end = pos + runs[i];
      while (start < end) {
        std::int64_t y = static_cast<std::int64_t>(start / m.width());
        std::uint64_t row_end =
            std::min<std::uint64_t>(end, (y + 1) * static_cast<std::uint64_t>(
                                                       m.width()));
        rows[y].push_back({static_cast<std::int64_t>(start % m.width()),
                           static_cast<std::int64_t>(row_end - 1) %
                                   m.width() +
                               1});
        start = row_end;
      }
    }
    pos += runs[i];
  }
  return rows;
}

struct Point {
  std::int64_t x, y;
};

std::int64_t cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Monotone-chain convex hull; returns twice the enclosed area.
std::int64_t hull_area2(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Point& a, const Point& b) {
                          return a.x == b.x && a.y == b.y;
                        }),
            pts.end());
  if (pts.size() < 3) return 0;
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : 0);
  std::int64_t area2 = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point& a = hull[i];
    const Point& b = hull[(i + 1) % hull.size()];
    area2 += a.x * b.y - b.x * a.y;
  }
  return std::abs(area2);
}

std::uint64_t interval_overlap(const std::vector<Interval>& a,
                               const std::vector<Interval>& b) {
  std::uint64_t overlap = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    std::int64_t lo = std::max(a[i].first, b[j].first);
    std::int64_t hi = std::min(a[i].second, b[j].second);
    if (hi > lo) overlap += static_cast<std::uint64_t>(hi - lo);
    if (a[i].second < b[j].second) {
      ++i;
    } else {
      ++j;
    }
  }
  return overlap;
}

std::uint64_t interval_length(const std::vector<Interval>& a) {
  std::uint64_t len = 0;
  for (const auto& iv : a) len += static_cast<std::uint64_t>(iv.second - iv.first);
  return len;
}

}  // namespace

double convexity(const BinaryMask& mask) {
  if (mask.empty()) {
    throw std::invalid_argument("convexity is undefined for an empty mask");
  }
  auto rows = row_intervals(mask);
  std::vector<Point> corners;
  for (std::int64_t y = 0; y < static_cast<std::int64_t>(rows.size()); ++y) {
    if (rows[y].empty()) continue;
    std::int64_t minx = rows[y].front().first;
    std::int64_t maxx = rows[y].back().second;
    corners.push_back({minx, y});
    corners.push_back({maxx, y});
    corners.push_back({minx, y + 1});
    corners.push_back({maxx, y + 1});
  }
  std::int64_t area2 = hull_area2(std::move(corners));
  if (area2 == 0) return 1.0;  // degenerate hull cannot happen for pixels
  return 2.0 * static_cast<double>(mask.area()) / static_cast<double>(area2);
}

std::uint64_t mask_perimeter(const BinaryMask& mask) {
  auto rows = row_intervals(mask);
  std::uint64_t perimeter = 0;
  std::vector<Interval> empty;
  for (std::size_t y = 0; y < rows.size(); ++y) {
    perimeter += 2 * rows[y].size();  // left and right edges of each run
    const auto& above = y == 0 ? empty : rows[y - 1];
    std::uint64_t len = interval_length(rows[y]);
    std::uint64_t above_len = interval_length(above);
    perimeter += len + above_len - 2 * interval_overlap(rows[y], above);
  }
  if (!rows.empty()) perimeter += interval_length(rows.back());
  return perimeter;
}

double simplicity(const BinaryMask& mask) {
  if (mask.empty()) {
    throw std::invalid_argument("simplicity is undefined for an empty mask");
  }
  double perimeter = static_cast<double>(mask_perimeter(mask));
  return std::sqrt(4.0 * std::numbers::pi * static_cast<double>(mask.area())) /
         perimeter;
}

double occlusion_level(const AmodalSegment& seg) {
  if (seg.amodal.empty()) {
    throw std::invalid_argument(
        "occlusion level is undefined for an empty amodal mask");
  }
  std::uint64_t occluded = seg.amodal.set_minus(seg.visible).area();
  return static_cast<double>(occluded) / static_cast<double>(seg.amodal.area());
}

StatsAccumulator::StatsAccumulator(int bins) {
  if (bins < 1) throw std::invalid_argument("histogram needs at least 1 bin");
  occlusion_histogram.assign(bins, 0);
}

void StatsAccumulator::add_annotation(const AmodalImageAnnotation& ann,
                                      const ClassTaxonomy& tax) {
  images += 1;
  int nbins = bins();
  for (const auto& seg : ann.segments) {
    if (!tax.is_thing(seg.class_id)) {
      throw std::invalid_argument("segment class " +
                                  std::to_string(seg.class_id) +
                                  " is not a thing class in the taxonomy");
    }
    instance_counts[seg.class_id] += 1;
    double level = occlusion_level(seg);
    int bin = std::min(static_cast<int>(level * nbins), nbins - 1);
    occlusion_histogram[bin] += 1;

    ShapeMoments in{convexity(seg.visible), simplicity(seg.visible), 1};
    ShapeMoments am{convexity(seg.amodal), simplicity(seg.amodal), 1};
    inmodal.add(in);
    amodal.add(am);
    inmodal_per_class[seg.class_id].add(in);
    amodal_per_class[seg.class_id].add(am);
  }
}

void StatsAccumulator::add(const StatsAccumulator& o) {
  if (o.bins() != bins()) {
    throw std::invalid_argument("cannot merge histograms with different bins");
  }
  images += o.images;
  for (const auto& [cls, n] : o.instance_counts) instance_counts[cls] += n;
  for (int i = 0; i < bins(); ++i)
    occlusion_histogram[i] += o.occlusion_histogram[i];
  inmodal.add(o.inmodal);
  amodal.add(o.amodal);
  for (const auto& [cls, m] : o.inmodal_per_class) inmodal_per_class[cls].add(m);
  for (const auto& [cls, m] : o.amodal_per_class) amodal_per_class[cls].add(m);
}

StatsReport finalize_stats(const StatsAccumulator& acc,
                           const ClassTaxonomy& tax) {
  StatsReport report;
  report.images = acc.images;
  for (const auto& [cls, n] : acc.instance_counts) report.total_instances += n;

  for (const auto& cls : tax.thing_classes()) {
    ClassShapeStats s;
    auto it = acc.instance_counts.find(cls.id);
    s.instances = it == acc.instance_counts.end() ? 0 : it->second;
    if (report.total_instances > 0) {
      s.ratio = static_cast<double>(s.instances) /
                static_cast<double>(report.total_instances);
    }
    auto in_it = acc.inmodal_per_class.find(cls.id);
    if (in_it != acc.inmodal_per_class.end() && in_it->second.count > 0) {
      s.mean_inmodal_convexity =
          in_it->second.convexity_sum / in_it->second.count;
      s.mean_inmodal_simplicity =
          in_it->second.simplicity_sum / in_it->second.count;
    }
    auto am_it = acc.amodal_per_class.find(cls.id);
    if (am_it != acc.amodal_per_class.end() && am_it->second.count > 0) {
      s.mean_amodal_convexity =
          am_it->second.convexity_sum / am_it->second.count;
      s.mean_amodal_simplicity =
          am_it->second.simplicity_sum / am_it->second.count;
    }
    report.per_class[cls.id] = s;
    report.class_names[cls.id] = cls.name;
  }

  int nbins = acc.bins();
  for (int i = 0; i <= nbins; ++i) {
    report.histogram_edges.push_back(static_cast<double>(i) / nbins);
  }
  report.histogram_counts = acc.occlusion_histogram;

  if (acc.inmodal.count > 0) {
    report.mean_inmodal_convexity = acc.inmodal.convexity_sum / acc.inmodal.count;
    report.mean_inmodal_simplicity =
        acc.inmodal.simplicity_sum / acc.inmodal.count;
  }
  if (acc.amodal.count > 0) {
    report.mean_amodal_convexity = acc.amodal.convexity_sum / acc.amodal.count;
    report.mean_amodal_simplicity = acc.amodal.simplicity_sum / acc.amodal.count;
  }
  return report;
}

StatsReport dataset_stats(const std::vector<AmodalImageAnnotation>& anns,
                          const ClassTaxonomy& tax, int bins) {
  StatsAccumulator acc(bins);
  for (const auto& ann : anns) acc.add_annotation(ann, tax);
  return finalize_stats(acc, tax);
}

}  // namespace aps
