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
#ifndef APS_IO_HPP_
#define APS_IO_HPP_

#include <string>
#include <vector>

#include "aps/core.hpp"
#include "aps/fusion.hpp"
#include "aps/metrics.hpp"
#include "aps/stats.hpp"

namespace aps::io {

// Annotation file set: <stem>.png holds the 16-bit visible label map
// (value = class_id * 1000 + instance_index, 0 = void); <stem>.json is the
// sidecar listing every thing segment's amodal RLE and optional confidence.
void write_annotation(const AmodalImageAnnotation& ann,
                      const ClassTaxonomy& tax, const std::string& path_stem);
AmodalImageAnnotation read_annotation(const std::string& path_stem,
                                      const ClassTaxonomy& tax);

// APST raw tensor file: "APST" magic, u32 LE version (1), u32 LE rank,
// rank x u32 LE dims, row-major IEEE-754 LE f32 payload.
void write_tensor(const TensorF32& t, const std::string& path);
TensorF32 read_tensor(const std::string& path);

ClassTaxonomy read_taxonomy(const std::string& path);
void write_taxonomy(const ClassTaxonomy& tax, const std::string& path);

// Fusion instance manifest: JSON with per-instance class/confidence/bbox and
// mask logits given either inline as nested arrays or as APST file paths
// relative to the manifest.
std::vector<InstancePrediction> read_instances(const std::string& path,
                                               const ClassTaxonomy& tax);

// Canonical report serialization: stable key order, human-facing fields
// rounded to 4 decimals, full-precision values under "raw".
std::string metric_report_to_json(const MetricReport& report);
std::string stats_report_to_json(const StatsReport& report);
void write_text_file(const std::string& path, const std::string& content);
std::string occlusion_histogram_csv(const StatsReport& report);

}  // namespace aps::io

#endif  // APS_IO_HPP_
