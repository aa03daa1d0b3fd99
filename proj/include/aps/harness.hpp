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
#ifndef APS_HARNESS_HPP_
#define APS_HARNESS_HPP_

#include <string>
#include <vector>

#include "aps/core.hpp"
#include "aps/metrics.hpp"
#include "aps/stats.hpp"

namespace aps {

// Sorted stems of <stem>.png annotation files directly inside dir.
std::vector<std::string> list_annotation_stems(const std::string& dir);

// Directory evaluation. Images are paired by stem; a stem present in gt_dir
// but absent from pred_dir is scored as an all-false-negative image. Pairs
// that fail to load or validate are recorded in invalid_pairs and excluded.
// Per-image results are merged in sorted-stem order, so the report is
// byte-identical for every thread count.
MetricReport evaluate_directories(const std::string& gt_dir,
                                  const std::string& pred_dir,
                                  const ClassTaxonomy& tax,
                                  const EvalConfig& cfg, int threads);

// Directory statistics over every readable annotation; unreadable stems
// throw.
StatsReport stats_directory(const std::string& ann_dir,
                            const ClassTaxonomy& tax, int bins, int threads);

struct ValidationFinding {
  std::string stem;
  std::string rule;
  std::string detail;
};

// Runs every structural check on every annotation in the directory; load
// failures are reported as rule "unreadable".
std::vector<ValidationFinding> validate_directory(const std::string& ann_dir,
                                                  const ClassTaxonomy& tax);

}  // namespace aps

#endif  // APS_HARNESS_HPP_
