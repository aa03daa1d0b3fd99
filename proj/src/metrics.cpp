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
#include "aps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aps {

namespace {

// Visible-plane view of one image's segments with the prediction masks
// clipped to groundtruth-labeled pixels (void carries no supervision).
struct ThingView {
  const ThingEntry* entry;
  BinaryMask visible_eff;  // clipped for predictions, as-is for groundtruth
  BinaryMask amodal;
};

std::vector<ThingView> make_views(const std::vector<ThingEntry>& entries,
                                  const BinaryMask* clip) {
  std::vector<ThingView> views;
  views.reserve(entries.size());
  for (const auto& e : entries) {
    ThingView v;
    v.entry = &e;
    v.visible_eff = clip ? e.visible.set_and(*clip) : e.visible;
    v.amodal = e.amodal();
    views.push_back(std::move(v));
  }
  return views;
}

WeightMatrix build_weights(const std::vector<ThingView>& gt,
                           const std::vector<ThingView>& pred,
                           MatchingWeight mode) {
  WeightMatrix wm(static_cast<int>(gt.size()), static_cast<int>(pred.size()));
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      double w = mode == MatchingWeight::kVisibleIou
                     ? mask_iou(gt[i].visible_eff, pred[j].visible_eff)
                     : mask_iou(gt[i].amodal, pred[j].amodal);
      wm.set(static_cast<int>(i), static_cast<int>(j), w);
    }
  }
  return wm;
}

Fixed fixed_iou(const BinaryMask& a, const BinaryMask& b) {
  auto [inter, uni] = mask_iou_counts(a, b);
  return fixed_ratio(inter, uni);
}

// Groundtruth pixels carrying any non-void label.
BinaryMask labeled_mask(const AmodalImageAnnotation& ann) {
  std::vector<std::uint64_t> runs;
  std::uint64_t total = static_cast<std::uint64_t>(ann.height) * ann.width;
  std::uint64_t pos = 0;
  bool last_bit = false;
  bool first = true;
  for (std::uint64_t i = 0; i < total;) {
    std::uint64_t j = i;
    bool bit = ann.visible_map[i] != 0;
    while (j < total && (ann.visible_map[j] != 0) == bit) ++j;
    if (first) {
      if (bit) runs.push_back(0);
      runs.push_back(j - i);
      first = false;
      last_bit = bit;
    } else if (bit == last_bit) {
      runs.back() += j - i;
    } else {
      runs.push_back(j - i);
      last_bit = bit;
    }
    pos = j;
    i = j;
  }
  (void)pos;
  if (first && total > 0) runs.push_back(total);
  return BinaryMask::from_runs(ann.height, ann.width, std::move(runs));
}

// Union of all visible masks of one class (stuff mask or thing visibles).
BinaryMask class_visible_mask(const SegmentSets& sets, std::uint16_t class_id,
                              bool is_thing, int height, int width) {
  BinaryMask out(height, width);
  if (is_thing) {
    auto it = sets.things.find(class_id);
    if (it != sets.things.end()) {
      for (const auto& e : it->second) out = out.set_or(e.visible);
    }
  } else {
    auto it = sets.stuff_masks.find(class_id);
    if (it != sets.stuff_masks.end()) out = it->second;
  }
  return out;
}

void require_taxonomy_match(const MetricAccumulator& a,
                            const MetricAccumulator& b) {
  if (a.taxonomy() && b.taxonomy() && !(*a.taxonomy() == *b.taxonomy())) {
    throw std::invalid_argument(
        "cannot merge accumulators built from different taxonomies");
  }
}

std::optional<double> percent_ratio(Fixed num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return 100.0 * fixed_to_double(num) / static_cast<double>(den);
}

}  // namespace

Fixed fixed_ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return 0;
  return (static_cast<Fixed>(num) << kFixedShift) / static_cast<Fixed>(den);
}

double fixed_to_double(Fixed f) {
  return std::ldexp(static_cast<double>(f), -kFixedShift);
}

void StuffTally::add(const StuffTally& o) {
  iou_sum += o.iou_sum;
  gt_count += o.gt_count;
  cov_weighted += o.cov_weighted;
  cov_pixels += o.cov_pixels;
}

void ThingTally::add(const ThingTally& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  amodal_iou_sum += o.amodal_iou_sum;
  visible_iou_sum += o.visible_iou_sum;
  tp_occ += o.tp_occ;
  fp_occ += o.fp_occ;
  fn_occ += o.fn_occ;
  occluded_iou_sum += o.occluded_iou_sum;
  cov_visible_weighted += o.cov_visible_weighted;
  cov_visible_pixels += o.cov_visible_pixels;
  cov_occluded_weighted += o.cov_occluded_weighted;
  cov_occluded_pixels += o.cov_occluded_pixels;
}

MetricAccumulator::MetricAccumulator(const ClassTaxonomy& tax)
    : taxonomy_(tax) {}

MetricAccumulator merge(const MetricAccumulator& a,
                        const MetricAccumulator& b) {
  require_taxonomy_match(a, b);
  MetricAccumulator out =
      a.taxonomy() ? MetricAccumulator(*a.taxonomy())
                   : (b.taxonomy() ? MetricAccumulator(*b.taxonomy())
                                   : MetricAccumulator());
  out.stuff = a.stuff;
  out.things = a.things;
  out.semantic = a.semantic;
  out.images = a.images + b.images;
  for (const auto& [cls, tally] : b.stuff) out.stuff[cls].add(tally);
  for (const auto& [cls, tally] : b.things) out.things[cls].add(tally);
  for (const auto& [cls, tally] : b.semantic) {
    auto& t = out.semantic[cls];
    t.intersection += tally.intersection;
    t.set_union += tally.set_union;
  }
  return out;
}

Matching match_thing_segments(const SegmentSets& gt, const SegmentSets& pred,
                              std::uint16_t class_id, const ClassTaxonomy& tax,
                              const EvalConfig& cfg) {
  if (!tax.is_thing(class_id)) {
    throw std::invalid_argument("class id " + std::to_string(class_id) +
                                " is not a thing class");
  }
  auto gt_it = gt.things.find(class_id);
  auto pred_it = pred.things.find(class_id);
  static const std::vector<ThingEntry> kEmpty;
  auto gt_views =
      make_views(gt_it == gt.things.end() ? kEmpty : gt_it->second, nullptr);
  auto pred_views = make_views(
      pred_it == pred.things.end() ? kEmpty : pred_it->second, nullptr);
  return max_weight_matching(build_weights(gt_views, pred_views,
                                           cfg.matching_weight),
                             cfg.min_match_iou);
}

MetricAccumulator evaluate_image(const AmodalImageAnnotation& gt,
                                 const AmodalImageAnnotation& pred,
                                 const ClassTaxonomy& tax,
                                 const EvalConfig& cfg) {
  if (gt.height != pred.height || gt.width != pred.width) {
    throw std::invalid_argument("groundtruth and prediction dimensions differ");
  }
  if (cfg.min_match_iou < 0.0 || cfg.min_match_iou >= 1.0) {
    throw std::invalid_argument("min_match_iou must lie in [0, 1)");
  }
  if (auto v = validate_annotation(gt, tax); !v.empty()) {
    throw std::invalid_argument("invalid groundtruth annotation: " +
                                v.front().rule + ": " + v.front().detail);
  }
  if (auto v = validate_annotation(pred, tax); !v.empty()) {
    throw std::invalid_argument("invalid prediction annotation: " +
                                v.front().rule + ": " + v.front().detail);
  }

  SegmentSets gt_sets = extract_segments(gt, tax);
  SegmentSets pred_sets = extract_segments(pred, tax);
  BinaryMask gt_labeled = labeled_mask(gt);

  MetricAccumulator acc(tax);
  acc.images = 1;

  for (const auto& cls : tax.stuff_classes()) {
    auto& tally = acc.stuff[cls.id];
    auto gt_it = gt_sets.stuff_masks.find(cls.id);
    if (gt_it != gt_sets.stuff_masks.end() && !gt_it->second.empty()) {
      const BinaryMask& x = gt_it->second;
      tally.gt_count += 1;
      tally.cov_pixels += x.area();
      auto pred_it = pred_sets.stuff_masks.find(cls.id);
      if (pred_it != pred_sets.stuff_masks.end()) {
        BinaryMask pred_eff = pred_it->second.set_and(gt_labeled);
        // One stuff segment per class per image, so the coverage max over
        // predictions is this single IoU.
        Fixed iou = fixed_iou(x, pred_eff);
        tally.iou_sum += iou;
        tally.cov_weighted += static_cast<Fixed>(x.area()) * iou;
      }
    }
  }

  static const std::vector<ThingEntry> kEmpty;
  for (const auto& cls : tax.thing_classes()) {
    auto& tally = acc.things[cls.id];
    auto gt_it = gt_sets.things.find(cls.id);
    auto pred_it = pred_sets.things.find(cls.id);
    const auto& gt_entries =
        gt_it == gt_sets.things.end() ? kEmpty : gt_it->second;
    const auto& pred_entries =
        pred_it == pred_sets.things.end() ? kEmpty : pred_it->second;
    auto gt_views = make_views(gt_entries, nullptr);
    auto pred_views = make_views(pred_entries, &gt_labeled);

    Matching m = max_weight_matching(
        build_weights(gt_views, pred_views, cfg.matching_weight),
        cfg.min_match_iou);

    tally.tp += m.pairs.size();
    tally.fp += m.unmatched_pred.size();
    tally.fn += m.unmatched_gt.size();

    for (const auto& pair : m.pairs) {
      const ThingView& g = gt_views[pair.gt_index];
      const ThingView& p = pred_views[pair.pred_index];
      tally.amodal_iou_sum += fixed_iou(g.amodal, p.amodal);
      tally.visible_iou_sum += fixed_iou(g.visible_eff, p.visible_eff);
      bool gt_occ = !g.entry->occluded.empty();
      bool pred_occ = !p.entry->occluded.empty();
      if (gt_occ && pred_occ) {
        tally.tp_occ += 1;
        tally.occluded_iou_sum += fixed_iou(g.entry->occluded,
                                            p.entry->occluded);
      } else if (gt_occ) {
        tally.fn_occ += 1;
      } else if (pred_occ) {
        tally.fp_occ += 1;
      }
    }
    for (int idx : m.unmatched_gt) {
      if (!gt_views[idx].entry->occluded.empty()) tally.fn_occ += 1;
    }
    for (int idx : m.unmatched_pred) {
      if (!pred_views[idx].entry->occluded.empty()) tally.fp_occ += 1;
    }

    // Coverage (no FP penalty): every groundtruth region weighs in with its
    // best IoU against any prediction of the class.
    for (const auto& g : gt_views) {
      Fixed best = 0;
      for (const auto& p : pred_views) {
        auto [inter, uni] = mask_iou_counts(g.visible_eff, p.visible_eff);
        best = std::max(best, fixed_ratio(inter, uni));
      }
      tally.cov_visible_pixels += g.visible_eff.area();
      tally.cov_visible_weighted +=
          static_cast<Fixed>(g.visible_eff.area()) * best;
    }
    for (const auto& g : gt_views) {
      const BinaryMask& occ = g.entry->occluded;
      if (occ.empty()) continue;
      Fixed best = 0;
      for (const auto& p : pred_views) {
        auto [inter, uni] = mask_iou_counts(occ, p.entry->occluded);
        best = std::max(best, fixed_ratio(inter, uni));
      }
      tally.cov_occluded_pixels += occ.area();
      tally.cov_occluded_weighted += static_cast<Fixed>(occ.area()) * best;
    }
  }

  if (cfg.include_miou) {
    auto tally_class = [&](std::uint16_t id, bool is_thing) {
      BinaryMask gt_mask =
          class_visible_mask(gt_sets, id, is_thing, gt.height, gt.width);
      BinaryMask pred_mask =
          class_visible_mask(pred_sets, id, is_thing, gt.height, gt.width)
              .set_and(gt_labeled);
      auto [inter, uni] = mask_iou_counts(gt_mask, pred_mask);
      auto& t = acc.semantic[id];
      t.intersection += inter;
      t.set_union += uni;
    };
    for (const auto& cls : tax.stuff_classes()) tally_class(cls.id, false);
    for (const auto& cls : tax.thing_classes()) tally_class(cls.id, true);
  }

  return acc;
}

MetricReport finalize(const MetricAccumulator& acc, const ClassTaxonomy& tax) {
  MetricReport report;
  report.images = acc.images;

  double apq_sum = 0.0, apq_stuff_sum = 0.0, apq_thing_sum = 0.0;
  int apq_count = 0, apq_stuff_count = 0, apq_thing_count = 0;
  double apc_sum = 0.0, apc_stuff_sum = 0.0, apc_thing_sum = 0.0;
  int apc_count = 0, apc_stuff_count = 0, apc_thing_count = 0;
  double apq_vis_sum = 0.0, apq_occ_sum = 0.0;
  int apq_vis_count = 0, apq_occ_count = 0;
  double apc_vis_sum = 0.0, apc_occ_sum = 0.0;
  int apc_vis_count = 0, apc_occ_count = 0;
  double miou_sum = 0.0;
  int miou_count = 0;

  auto semantic_iou = [&](std::uint16_t id) -> std::optional<double> {
    auto it = acc.semantic.find(id);
    if (it == acc.semantic.end() || it->second.set_union == 0)
      return std::nullopt;
    return 100.0 * static_cast<double>(it->second.intersection) /
           static_cast<double>(it->second.set_union);
  };

  for (const auto& cls : tax.stuff_classes()) {
    ClassReport cr;
    cr.class_id = cls.id;
    cr.name = cls.name;
    cr.is_thing = false;
    auto it = acc.stuff.find(cls.id);
    if (it != acc.stuff.end()) {
      const StuffTally& t = it->second;
      cr.apq = percent_ratio(t.iou_sum, t.gt_count);
      cr.coverage = percent_ratio(t.cov_weighted, t.cov_pixels);
    }
    cr.iou = semantic_iou(cls.id);
    if (cr.apq) {
      apq_sum += *cr.apq;
      apq_stuff_sum += *cr.apq;
      ++apq_count;
      ++apq_stuff_count;
      report.classes_evaluated.push_back(cls.id);
    } else {
      report.classes_skipped.push_back(cls.id);
    }
    if (cr.coverage) {
      apc_sum += *cr.coverage;
      apc_stuff_sum += *cr.coverage;
      ++apc_count;
      ++apc_stuff_count;
    }
    if (cr.iou) {
      miou_sum += *cr.iou;
      ++miou_count;
    }
    report.per_class.push_back(std::move(cr));
  }

  for (const auto& cls : tax.thing_classes()) {
    ClassReport cr;
    cr.class_id = cls.id;
    cr.name = cls.name;
    cr.is_thing = true;
    auto it = acc.things.find(cls.id);
    if (it != acc.things.end()) {
      const ThingTally& t = it->second;
      std::uint64_t den = t.tp + t.fp + t.fn;
      cr.apq = percent_ratio(t.amodal_iou_sum, den);
      cr.apq_visible = percent_ratio(t.visible_iou_sum, den);
      cr.apq_occluded =
          percent_ratio(t.occluded_iou_sum, t.tp_occ + t.fp_occ + t.fn_occ);
      cr.cov_visible =
          percent_ratio(t.cov_visible_weighted, t.cov_visible_pixels);
      cr.cov_occluded =
          percent_ratio(t.cov_occluded_weighted, t.cov_occluded_pixels);
      std::uint64_t cov_den = t.cov_visible_pixels + t.cov_occluded_pixels;
      cr.coverage = percent_ratio(
          t.cov_visible_weighted + t.cov_occluded_weighted, cov_den);
    }
    cr.iou = semantic_iou(cls.id);
    if (cr.apq) {
      apq_sum += *cr.apq;
      apq_thing_sum += *cr.apq;
      ++apq_count;
      ++apq_thing_count;
      report.classes_evaluated.push_back(cls.id);
    } else {
      report.classes_skipped.push_back(cls.id);
    }
    if (cr.apq_visible) {
      apq_vis_sum += *cr.apq_visible;
      ++apq_vis_count;
    }
    if (cr.apq_occluded) {
      apq_occ_sum += *cr.apq_occluded;
      ++apq_occ_count;
    }
    if (cr.coverage) {
      apc_sum += *cr.coverage;
      apc_thing_sum += *cr.coverage;
      ++apc_count;
      ++apc_thing_count;
    }
    if (cr.cov_visible) {
      apc_vis_sum += *cr.cov_visible;
      ++apc_vis_count;
    }
    if (cr.cov_occluded) {
      apc_occ_sum += *cr.cov_occluded;
      ++apc_occ_count;
    }
    if (cr.iou) {
      miou_sum += *cr.iou;
      ++miou_count;
    }
    report.per_class.push_back(std::move(cr));
  }

  auto mean = [](double sum, int count) -> std::optional<double> {
    if (count == 0) return std::nullopt;
    return sum / count;
  };
  report.apq = mean(apq_sum, apq_count);
  report.apq_stuff = mean(apq_stuff_sum, apq_stuff_count);
  report.apq_things = mean(apq_thing_sum, apq_thing_count);
  report.apq_things_visible = mean(apq_vis_sum, apq_vis_count);
  report.apq_things_occluded = mean(apq_occ_sum, apq_occ_count);
  report.apc = mean(apc_sum, apc_count);
  report.apc_stuff = mean(apc_stuff_sum, apc_stuff_count);
  report.apc_things = mean(apc_thing_sum, apc_thing_count);
  report.apc_things_visible = mean(apc_vis_sum, apc_vis_count);
  report.apc_things_occluded = mean(apc_occ_sum, apc_occ_count);
  report.miou = mean(miou_sum, miou_count);
  return report;
}

}  // namespace aps
