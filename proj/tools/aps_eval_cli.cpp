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

// Command-line front end. Talks to the library only through the C interface
// in aps/aps_eval.h.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "aps/aps_eval.h"

namespace {

int log_level() {
  const char* v = std::getenv("APS_EVAL_LOG");
  if (!v || !*v) return 1;
  return std::atoi(v);
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << msg << "\n";
}

int fail(const char* what) {
  std::cerr << what << ": " << aps_last_error() << "\n";
  return 1;
}

struct TaxonomyHandle {
  aps_taxonomy* tax = nullptr;
  ~TaxonomyHandle() { aps_taxonomy_free(tax); }
};

struct ReportHandle {
  aps_report* report = nullptr;
  ~ReportHandle() { aps_report_free(report); }
};

bool write_file(const std::string& path, const char* content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) {
    std::cerr << path << ": write failed\n";
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Amodal panoptic segmentation evaluation toolkit"};
  app.require_subcommand(1);

  // evaluate
  std::string gt_dir, pred_dir, taxonomy_path, output_path;
  std::string matching = "visible";
  double min_iou = 0.0;
  int threads = 1;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Score a prediction directory against groundtruth");
  evaluate->add_option("--gt-dir", gt_dir)->required();
  evaluate->add_option("--pred-dir", pred_dir)->required();
  evaluate->add_option("--taxonomy", taxonomy_path)->required();
  evaluate->add_option("--output", output_path)->required();
  evaluate->add_option("--matching", matching)
      ->check(CLI::IsMember({"visible", "amodal"}));
  evaluate->add_option("--min-iou", min_iou);
  evaluate->add_option("--threads", threads);

  // stats
  std::string ann_dir;
  int bins = 20;
  auto* stats = app.add_subcommand("stats", "Dataset shape and class statistics");
  stats->add_option("--ann-dir", ann_dir)->required();
  stats->add_option("--taxonomy", taxonomy_path)->required();
  stats->add_option("--output", output_path)->required();
  stats->add_option("--bins", bins);

  // fuse
  std::string semantic_path, instances_path, out_stem;
  double confidence_threshold = 0.5, overlap_threshold = 0.5;
  auto* fuse = app.add_subcommand(
      "fuse", "Fuse semantic logits with instance predictions");
  fuse->add_option("--semantic", semantic_path)->required();
  fuse->add_option("--instances", instances_path)->required();
  fuse->add_option("--taxonomy", taxonomy_path)->required();
  fuse->add_option("--out-stem", out_stem)->required();
  fuse->add_option("--confidence-threshold", confidence_threshold);
  fuse->add_option("--overlap-threshold", overlap_threshold);

  // validate
  auto* validate =
      app.add_subcommand("validate", "Structural checks on an annotation set");
  validate->add_option("--ann-dir", ann_dir)->required();
  validate->add_option("--taxonomy", taxonomy_path)->required();

  // synth
  std::string out_dir;
  int count = 1, height = 376, width = 1408, min_things = 0, max_things = 8;
  unsigned long long seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate synthetic scenes");
  synth->add_option("--out-dir", out_dir)->required();
  synth->add_option("--count", count);
  synth->add_option("--seed", seed);
  synth->add_option("--height", height);
  synth->add_option("--width", width);
  synth->add_option("--min-things", min_things);
  synth->add_option("--max-things", max_things);

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    log_debug("generating " + std::to_string(count) + " scenes");
    if (aps_synth_generate(out_dir.c_str(), count, seed, height, width,
                           min_things, max_things) != APS_OK) {
      return fail("synth");
    }
    log_info("wrote " + std::to_string(count) + " scenes to " + out_dir);
    return 0;
  }

  TaxonomyHandle tax;
  if (aps_taxonomy_read(taxonomy_path.c_str(), &tax.tax) != APS_OK) {
    return fail("taxonomy");
  }

  if (evaluate->parsed()) {
    log_debug("evaluating " + pred_dir + " against " + gt_dir + " with " +
              std::to_string(threads) + " threads");
    ReportHandle report;
    if (aps_evaluate_dirs(tax.tax, gt_dir.c_str(), pred_dir.c_str(),
                          matching == "amodal" ? 1 : 0, min_iou, threads,
                          &report.report) != APS_OK) {
      return fail("evaluate");
    }
    if (!write_file(output_path, aps_report_json(report.report))) return 1;
    std::cout << aps_report_summary(report.report) << "\n";
    int missing = aps_report_missing_prediction_count(report.report);
    if (missing > 0) {
      log_info(std::to_string(missing) +
               " stems had no prediction and were scored as all-FN");
    }
    int invalid = aps_report_invalid_pair_count(report.report);
    if (invalid > 0) {
      std::cerr << invalid << " pairs were unreadable or invalid; see "
                << output_path << "\n";
      return 2;
    }
    return 0;
  }

  if (stats->parsed()) {
    ReportHandle report;
    if (aps_stats_dir(tax.tax, ann_dir.c_str(), bins, threads,
                      &report.report) != APS_OK) {
      return fail("stats");
    }
    if (!write_file(output_path, aps_report_json(report.report))) return 1;
    log_info("wrote " + output_path);
    return 0;
  }

  if (fuse->parsed()) {
    if (aps_fuse_files(tax.tax, semantic_path.c_str(), instances_path.c_str(),
                       out_stem.c_str(), confidence_threshold,
                       overlap_threshold) != APS_OK) {
      return fail("fuse");
    }
    log_info("wrote " + out_stem + ".png and " + out_stem + ".json");
    return 0;
  }

  if (validate->parsed()) {
    char* text = nullptr;
    int findings = 0;
    if (aps_validate_dir(tax.tax, ann_dir.c_str(), &text, &findings) !=
        APS_OK) {
      return fail("validate");
    }
    std::cout << text;
    aps_string_free(text);
    if (findings > 0) {
      std::cerr << findings << " violations found\n";
      return 1;
    }
    log_info("all annotations valid");
    return 0;
  }

  return 0;
}
