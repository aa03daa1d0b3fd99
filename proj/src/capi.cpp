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
#include "aps/aps_eval.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

#include "aps/core.hpp"
#include "aps/fusion.hpp"
#include "aps/harness.hpp"
#include "aps/io.hpp"
#include "aps/metrics.hpp"
#include "aps/stats.hpp"
#include "aps/synth.hpp"

struct aps_taxonomy {
  aps::ClassTaxonomy tax;
};

struct aps_report {
  std::string json;
  std::string summary;
  int invalid_pairs = 0;
  int missing_predictions = 0;
};

namespace {

thread_local std::string g_last_error;

aps_status set_error(aps_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

aps_status run(const char* what, auto&& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    return set_error(APS_ERR_INVALID_ARGUMENT,
                     std::string(what) + ": " + e.what());
  } catch (const std::exception& e) {
    return set_error(APS_ERR_INVALID_DATA, std::string(what) + ": " + e.what());
  } catch (...) {
    return set_error(APS_ERR_INTERNAL, std::string(what) + ": unknown error");
  }
}

bool null_arg(const void* p, const char* name) {
  if (p) return false;
  set_error(APS_ERR_INVALID_ARGUMENT, std::string(name) + " must not be null");
  return true;
}

std::string score_field(const char* name, const std::optional<double>& v) {
  char buf[64];
  if (v) {
    std::snprintf(buf, sizeof(buf), "%s=%.4f", name, *v);
  } else {
    std::snprintf(buf, sizeof(buf), "%s=n/a", name);
  }
  return buf;
}

std::string summary_line(const aps::MetricReport& r) {
  std::ostringstream os;
  os << score_field("APQ", r.apq) << " " << score_field("APC", r.apc) << " "
     << score_field("APQ_S", r.apq_stuff) << " "
     << score_field("APQ_T", r.apq_things) << " "
     << score_field("APC_S", r.apc_stuff) << " "
     << score_field("APC_T", r.apc_things) << " "
     << score_field("mIoU", r.miou);
  return os.str();
}

}  // namespace

extern "C" {

const char* aps_last_error(void) { return g_last_error.c_str(); }

aps_status aps_taxonomy_read(const char* path, aps_taxonomy** out) {
  if (null_arg(path, "path") || null_arg(out, "out")) {
    return APS_ERR_INVALID_ARGUMENT;
  }
  return run("aps_taxonomy_read", [&] {
    *out = new aps_taxonomy{aps::io::read_taxonomy(path)};
    return APS_OK;
  });
}

void aps_taxonomy_free(aps_taxonomy* tax) { delete tax; }

aps_status aps_evaluate_dirs(const aps_taxonomy* tax, const char* gt_dir,
                             const char* pred_dir, int matching_mode,
                             double min_iou, int threads, aps_report** out) {
  if (null_arg(tax, "tax") || null_arg(gt_dir, "gt_dir") ||
      null_arg(pred_dir, "pred_dir") || null_arg(out, "out")) {
    return APS_ERR_INVALID_ARGUMENT;
  }
  if (matching_mode != 0 && matching_mode != 1) {
    return set_error(APS_ERR_INVALID_ARGUMENT, "matching_mode must be 0 or 1");
  }
  if (!(min_iou >= 0.0 && min_iou < 1.0)) {
    return set_error(APS_ERR_INVALID_ARGUMENT, "min_iou must be in [0, 1)");
  }
  return run("aps_evaluate_dirs", [&] {
    aps::EvalConfig cfg;
    cfg.matching_weight = matching_mode == 1
                              ? aps::MatchingWeight::kAmodalIou
                              : aps::MatchingWeight::kVisibleIou;
    cfg.min_match_iou = min_iou;
    aps::MetricReport report =
        aps::evaluate_directories(gt_dir, pred_dir, tax->tax, cfg, threads);
    auto* r = new aps_report;
    r->json = aps::io::metric_report_to_json(report);
    r->summary = summary_line(report);
    r->invalid_pairs = static_cast<int>(report.invalid_pairs.size());
    r->missing_predictions =
        static_cast<int>(report.missing_predictions.size());
    *out = r;
    return APS_OK;
  });
}

aps_status aps_stats_dir(const aps_taxonomy* tax, const char* ann_dir,
                         int bins, int threads, aps_report** out) {
  if (null_arg(tax, "tax") || null_arg(ann_dir, "ann_dir") ||
      null_arg(out, "out")) {
    return APS_ERR_INVALID_ARGUMENT;
  }
  if (bins < 1 || bins > 10000) {
    return set_error(APS_ERR_INVALID_ARGUMENT, "bins must be in [1, 10000]");
  }
  return run("aps_stats_dir", [&] {
    aps::StatsReport report =
        aps::stats_directory(ann_dir, tax->tax, bins, threads);
    auto* r = new aps_report;
    r->json = aps::io::stats_report_to_json(report);
    *out = r;
    return APS_OK;
  });
}

aps_status aps_fuse_files(const aps_taxonomy* tax, const char* semantic_path,
                          const char* instances_path, const char* out_stem,
                          double confidence_threshold,
                          double overlap_threshold) {
  if (null_arg(tax, "tax") || null_arg(semantic_path, "semantic_path") ||
      null_arg(instances_path, "instances_path") ||
      null_arg(out_stem, "out_stem")) {
    return APS_ERR_INVALID_ARGUMENT;
  }
  return run("aps_fuse_files", [&] {
    aps::FusionConfig cfg;
    cfg.confidence_threshold = confidence_threshold;
    cfg.overlap_threshold = overlap_threshold;
    aps::TensorF32 semantic = aps::io::read_tensor(semantic_path);
    auto instances = aps::io::read_instances(instances_path, tax->tax);
    aps::AmodalImageAnnotation fused =
        aps::fuse(semantic, instances, tax->tax, cfg);
    aps::io::write_annotation(fused, tax->tax, out_stem);
    return APS_OK;
  });
}

aps_status aps_validate_dir(const aps_taxonomy* tax, const char* ann_dir,
                            char** out_text, int* finding_count) {
  if (null_arg(tax, "tax") || null_arg(ann_dir, "ann_dir") ||
      null_arg(out_text, "out_text") || null_arg(finding_count, "count")) {
    return APS_ERR_INVALID_ARGUMENT;
  }
  return run("aps_validate_dir", [&] {
    auto findings = aps::validate_directory(ann_dir, tax->tax);
    std::ostringstream os;
    for (const auto& f : findings) {
      os << f.stem << ": " << f.rule << ": " << f.detail << "\n";
    }
    std::string text = os.str();
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_text = buf;
    *finding_count = static_cast<int>(findings.size());
    return APS_OK;
  });
}

aps_status aps_synth_generate(const char* out_dir, int count,
                              unsigned long long seed, int height, int width,
                              int min_things, int max_things) {
  if (null_arg(out_dir, "out_dir")) return APS_ERR_INVALID_ARGUMENT;
  if (count < 0) {
    return set_error(APS_ERR_INVALID_ARGUMENT, "count must be >= 0");
  }
  return run("aps_synth_generate", [&] {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const aps::ClassTaxonomy& tax = aps::synth_taxonomy();
    aps::io::write_taxonomy(tax, (fs::path(out_dir) / "taxonomy.json").string());
    for (int i = 0; i < count; ++i) {
      aps::SceneSpec spec;
      spec.height = height;
      spec.width = width;
      spec.min_things = min_things;
      spec.max_things = max_things;
      // Shape sizes must fit the requested frame.
      spec.max_size = std::min({spec.max_size, height, width});
      spec.min_size = std::min(spec.min_size, spec.max_size);
      spec.seed = seed + static_cast<std::uint64_t>(i);
      aps::AmodalImageAnnotation ann = aps::generate_scene(spec);
      char name[32];
      std::snprintf(name, sizeof(name), "scene_%05d", i);
      aps::io::write_annotation(ann, tax, (fs::path(out_dir) / name).string());
    }
    return APS_OK;
  });
}

const char* aps_report_json(const aps_report* report) {
  return report ? report->json.c_str() : "";
}

const char* aps_report_summary(const aps_report* report) {
  return report ? report->summary.c_str() : "";
}

int aps_report_invalid_pair_count(const aps_report* report) {
  return report ? report->invalid_pairs : 0;
}

int aps_report_missing_prediction_count(const aps_report* report) {
  return report ? report->missing_predictions : 0;
}

void aps_report_free(aps_report* report) { delete report; }

void aps_string_free(char* s) { delete[] s; }

}  // extern "C"
