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
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "aps/io.hpp"
#include "aps/synth.hpp"
#include "support.hpp"

using namespace aps;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static fs::path dir = [] {
    auto p = fs::temp_directory_path() / "aps_io_test";
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("annotation files round-trip generated scenes") {
  SceneSpec spec;
  spec.height = 48;
  spec.width = 64;
  spec.min_things = 2;
  spec.max_things = 5;
  spec.min_size = 6;
  spec.max_size = 20;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    spec.seed = seed;
    auto ann = generate_scene(spec);
    auto stem = (temp_dir() / ("scene_" + std::to_string(seed))).string();
    io::write_annotation(ann, synth_taxonomy(), stem);
    CHECK(io::read_annotation(stem, synth_taxonomy()) == ann);
  }
}

TEST_CASE("label encoding stores class 3 instance 42 as 3042") {
  CHECK(AmodalImageAnnotation::encode_label(3, 42) == 3042);
  CHECK(AmodalImageAnnotation::label_class(3042) == 3);
  CHECK(AmodalImageAnnotation::label_instance(3042) == 42);

  ClassTaxonomy tax({{1, "bg"}}, {{3, "obj"}});
  BinaryMask m = BinaryMask::filled_rect(6, 6, 1, 1, 4, 4);
  auto ann = AnnBuilder(6, 6)
                 .stuff(1, BinaryMask::filled_rect(6, 6, 0, 0, 6, 6))
                 .thing(3, 42, m, m)
                 .build();
  auto stem = (temp_dir() / "label3042").string();
  io::write_annotation(ann, tax, stem);
  auto back = io::read_annotation(stem, tax);
  CHECK(back == ann);
  CHECK(back.visible_map[1 * 6 + 1] == 3042);
}

TEST_CASE("confidence survives the sidecar") {
  ClassTaxonomy tax({{1, "bg"}}, {{3, "obj"}});
  BinaryMask m = BinaryMask::filled_rect(6, 6, 0, 0, 3, 3);
  auto ann = AnnBuilder(6, 6)
                 .stuff(1, BinaryMask::filled_rect(6, 6, 0, 0, 6, 6))
                 .thing(3, 1, m, m)
                 .build();
  ann.segments[0].confidence = 0.625;
  auto stem = (temp_dir() / "conf").string();
  io::write_annotation(ann, tax, stem);
  auto back = io::read_annotation(stem, tax);
  REQUIRE(back.segments.size() == 1);
  CHECK(back.segments[0].confidence == 0.625);
}

TEST_CASE("sidecar entry without map pixels is rejected") {
  ClassTaxonomy tax({{1, "bg"}}, {{3, "obj"}});
  BinaryMask m = BinaryMask::filled_rect(6, 6, 0, 0, 3, 3);
  auto ann = AnnBuilder(6, 6)
                 .stuff(1, BinaryMask::filled_rect(6, 6, 0, 0, 6, 6))
                 .thing(3, 1, m, m)
                 .build();
  auto stem = (temp_dir() / "orphan").string();
  io::write_annotation(ann, tax, stem);
  auto sidecar = nlohmann::json::parse(slurp(stem + ".json"));
  auto extra = sidecar["segments"][0];
  extra["instance_index"] = 9;
  sidecar["segments"].push_back(extra);
  io::write_text_file(stem + ".json", sidecar.dump());
  CHECK_THROWS(io::read_annotation(stem, tax));
}

TEST_CASE("map pixels without a sidecar entry are rejected") {
  ClassTaxonomy tax({{1, "bg"}}, {{3, "obj"}});
  BinaryMask m = BinaryMask::filled_rect(6, 6, 0, 0, 3, 3);
  auto ann = AnnBuilder(6, 6)
                 .stuff(1, BinaryMask::filled_rect(6, 6, 0, 0, 6, 6))
                 .thing(3, 1, m, m)
                 .build();
  auto stem = (temp_dir() / "missing_entry").string();
  io::write_annotation(ann, tax, stem);
  auto sidecar = nlohmann::json::parse(slurp(stem + ".json"));
  sidecar["segments"].clear();
  io::write_text_file(stem + ".json", sidecar.dump());
  CHECK_THROWS(io::read_annotation(stem, tax));
}

TEST_CASE("tensor files round-trip bit-exactly") {
  TensorF32 t = TensorF32::zeros({3, 4, 5});
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    t.data[i] = static_cast<float>(i) * 0.3125f - 7.0f;
  }
  auto path = (temp_dir() / "t345.apst").string();
  io::write_tensor(t, path);
  auto back = io::read_tensor(path);
  CHECK(back.dims == t.dims);
  CHECK(back.data == t.data);
}

TEST_CASE("rank-0 tensor is a single scalar") {
  TensorF32 t;
  t.data = {2.5f};
  auto path = (temp_dir() / "scalar.apst").string();
  io::write_tensor(t, path);
  auto back = io::read_tensor(path);
  CHECK(back.dims.empty());
  CHECK(back.data == std::vector<float>{2.5f});
}

TEST_CASE("corrupt tensor files are rejected") {
  auto path = (temp_dir() / "bad.apst").string();
  io::write_text_file(path, "XXXX junk");
  CHECK_THROWS(io::read_tensor(path));

  TensorF32 t = TensorF32::zeros({2, 2});
  auto path2 = (temp_dir() / "trunc.apst").string();
  io::write_tensor(t, path2);
  auto bytes = slurp(path2);
  io::write_text_file(path2, bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS(io::read_tensor(path2));
}

TEST_CASE("taxonomy files round-trip") {
  auto path = (temp_dir() / "tax.json").string();
  io::write_taxonomy(synth_taxonomy(), path);
  CHECK(io::read_taxonomy(path) == synth_taxonomy());
}

TEST_CASE("instance manifests load inline and file-backed logits") {
  TensorF32 grid = TensorF32::zeros({28, 28});
  for (std::size_t i = 0; i < grid.data.size(); ++i) {
    grid.data[i] = static_cast<float>(i % 13) - 6.0f;
  }
  io::write_tensor(grid, (temp_dir() / "inmodal0.apst").string());
  io::write_tensor(grid, (temp_dir() / "amodal0.apst").string());

  nlohmann::json inst;
  inst["class_id"] = 10;
  inst["confidence"] = 0.75;
  inst["amodal_bbox"] = {2, 3, 20, 21};
  inst["inmodal_logits"] = "inmodal0.apst";
  auto nested = nlohmann::json::array();
  for (int y = 0; y < 28; ++y) {
    auto row = nlohmann::json::array();
    for (int x = 0; x < 28; ++x) row.push_back(grid.at2(y, x));
    nested.push_back(row);
  }
  inst["amodal_logits"] = nested;
  nlohmann::json manifest;
  manifest["instances"] = {inst};
  auto path = (temp_dir() / "instances.json").string();
  io::write_text_file(path, manifest.dump());

  auto loaded = io::read_instances(path, synth_taxonomy());
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].class_id == 10);
  CHECK(loaded[0].confidence == 0.75);
  CHECK(loaded[0].amodal_bbox == BBox{2, 3, 20, 21});
  CHECK(loaded[0].inmodal_logits.data == grid.data);
  CHECK(loaded[0].amodal_logits.data == grid.data);
}

TEST_CASE("metric report serialization") {
  SceneSpec spec;
  spec.height = 48;
  spec.width = 64;
  spec.min_things = 2;
  spec.max_things = 4;
  spec.min_size = 6;
  spec.max_size = 20;
  spec.seed = 9;
  auto gt = generate_scene(spec);
  auto acc = evaluate_image(gt, gt, synth_taxonomy(), EvalConfig{});
  auto report = finalize(acc, synth_taxonomy());
  auto text = io::metric_report_to_json(report);

  auto j = nlohmann::ordered_json::parse(text);
  CHECK(j["type"] == "metric_report");
  CHECK(j["APQ"] == 100.0);
  CHECK(j["APC"] == 100.0);
  CHECK(j["mIoU"] == 100.0);
  CHECK(j.contains("classes_skipped"));
  CHECK(j.contains("raw"));
  // Canonical form: parsing and re-dumping reproduces the exact bytes.
  CHECK(j.dump(2) + "\n" == text);
}

TEST_CASE("stats report serialization and histogram csv") {
  SceneSpec spec;
  spec.height = 48;
  spec.width = 64;
  spec.min_things = 2;
  spec.max_things = 4;
  spec.min_size = 6;
  spec.max_size = 20;
  spec.seed = 2;
  auto ann = generate_scene(spec);
  auto report = dataset_stats({ann}, synth_taxonomy(), 4);
  auto text = io::stats_report_to_json(report);
  auto j = nlohmann::ordered_json::parse(text);
  CHECK(j["type"] == "stats_report");
  CHECK(j["total_instances"] == report.total_instances);
  CHECK(j.dump(2) + "\n" == text);

  auto csv = io::occlusion_histogram_csv(report);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "bin_start,bin_end,count");
  int rows = 0;
  while (std::getline(lines, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 4);
}
