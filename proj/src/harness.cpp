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
#include "aps/harness.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <thread>

#include "aps/io.hpp"

namespace aps {

namespace fs = std::filesystem;

std::vector<std::string> list_annotation_stems(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error(dir + ": not a directory");
  }
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() == ".png") stems.push_back(p.stem().string());
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

namespace {

int clamp_threads(int threads) {
  if (threads < 1) threads = 1;
  return std::min(threads, 256);
}

// Runs fn(i) for i in [0, count) on `threads` workers, claiming indices from
// a shared counter. fn must only touch slot i of its output.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  threads = clamp_threads(threads);
  if (threads == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

AmodalImageAnnotation empty_prediction(int height, int width) {
  AmodalImageAnnotation ann;
  ann.height = height;
  ann.width = width;
  ann.visible_map.assign(static_cast<std::size_t>(height) * width, 0);
  return ann;
}

}  // namespace

MetricReport evaluate_directories(const std::string& gt_dir,
                                  const std::string& pred_dir,
                                  const ClassTaxonomy& tax,
                                  const EvalConfig& cfg, int threads) {
  const std::vector<std::string> stems = list_annotation_stems(gt_dir);

  struct Slot {
    std::optional<MetricAccumulator> acc;
    bool missing_pred = false;
    std::string error;
  };
  std::vector<Slot> slots(stems.size());

  parallel_for(stems.size(), threads, [&](std::size_t i) {
    Slot& slot = slots[i];
    const std::string gt_stem = (fs::path(gt_dir) / stems[i]).string();
    const std::string pred_stem = (fs::path(pred_dir) / stems[i]).string();
    try {
      AmodalImageAnnotation gt = io::read_annotation(gt_stem, tax);
      AmodalImageAnnotation pred;
      if (fs::exists(pred_stem + ".png")) {
        pred = io::read_annotation(pred_stem, tax);
      } else {
        slot.missing_pred = true;
        pred = empty_prediction(gt.height, gt.width);
      }
      slot.acc = evaluate_image(gt, pred, tax, cfg);
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  });

  // Stem order fixes the merge order; thread count cannot change the result.
  MetricAccumulator total(tax);
  std::vector<std::string> missing, invalid;
  for (std::size_t i = 0; i < stems.size(); ++i) {
    if (!slots[i].error.empty()) {
      invalid.push_back(stems[i] + ": " + slots[i].error);
      continue;
    }
    if (slots[i].missing_pred) missing.push_back(stems[i]);
    total = merge(total, *slots[i].acc);
  }

  MetricReport report = finalize(total, tax);
  report.missing_predictions = std::move(missing);
  report.invalid_pairs = std::move(invalid);
  return report;
}

StatsReport stats_directory(const std::string& ann_dir,
                            const ClassTaxonomy& tax, int bins, int threads) {
  const std::vector<std::string> stems = list_annotation_stems(ann_dir);
  std::vector<StatsAccumulator> slots(stems.size(), StatsAccumulator(bins));
  parallel_for(stems.size(), threads, [&](std::size_t i) {
    AmodalImageAnnotation ann =
        io::read_annotation((fs::path(ann_dir) / stems[i]).string(), tax);
    slots[i].add_annotation(ann, tax);
  });
  StatsAccumulator total(bins);
  for (const auto& s : slots) total.add(s);
  return finalize_stats(total, tax);
}

std::vector<ValidationFinding> validate_directory(const std::string& ann_dir,
                                                  const ClassTaxonomy& tax) {
  std::vector<ValidationFinding> findings;
  for (const std::string& stem : list_annotation_stems(ann_dir)) {
    const std::string path_stem = (fs::path(ann_dir) / stem).string();
    try {
      // read_annotation throws on the first violation; re-check to list all.
      AmodalImageAnnotation ann = io::read_annotation(path_stem, tax);
      for (const auto& v : validate_annotation(ann, tax)) {
        findings.push_back({stem, v.rule, v.detail});
      }
    } catch (const std::exception& e) {
      findings.push_back({stem, "unreadable", e.what()});
    }
  }
  return findings;
}

}  // namespace aps
