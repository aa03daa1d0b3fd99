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
#include "aps/io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace aps::io {

namespace {

using nlohmann::ordered_json;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

void write_png16(const std::string& path, int height, int width,
                 const std::vector<std::uint16_t>& pixels) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(path, "cannot open for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng write error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 2);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      std::uint16_t v = pixels[static_cast<std::size_t>(y) * width + x];
      row[2 * x] = static_cast<std::uint8_t>(v >> 8);  // PNG is big-endian
      row[2 * x + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void read_png16(const std::string& path, int& height, int& width,
                std::vector<std::uint16_t>& pixels) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, "cannot open for reading");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "malformed PNG");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(png, info) != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "label map must be a 16-bit single-channel PNG");
  }
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  pixels.assign(static_cast<std::size_t>(height) * width, 0);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 2);
  for (int y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < width; ++x) {
      pixels[static_cast<std::size_t>(y) * width + x] =
          static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
}

ordered_json rle_to_json(const BinaryMask& mask) {
  ordered_json j;
  j["size"] = {mask.height(), mask.width()};
  j["counts"] = mask.runs();
  return j;
}

BinaryMask rle_from_json(const ordered_json& j, const std::string& path,
                         const std::string& where) {
  if (!j.contains("size") || !j.contains("counts")) {
    fail(path, where + ": RLE needs \"size\" and \"counts\"");
  }
  auto size = j.at("size");
  if (!size.is_array() || size.size() != 2) {
    fail(path, where + ": RLE \"size\" must be [height, width]");
  }
  try {
    return BinaryMask::from_runs(size[0].get<int>(), size[1].get<int>(),
                                 j.at("counts").get<std::vector<std::uint64_t>>());
  } catch (const std::exception& e) {
    fail(path, where + ": " + e.what());
  }
}

ordered_json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(path, e.what());
  }
}

double round4(double v) { return std::round(v * 10000.0) / 10000.0; }

ordered_json human(const std::optional<double>& v) {
  if (!v) return nullptr;
  return round4(*v);
}

ordered_json raw(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

constexpr char kMagic[4] = {'A', 'P', 'S', 'T'};
constexpr std::uint32_t kTensorVersion = 1;
constexpr std::uint64_t kMaxTensorElements = 1ull << 31;

}  // namespace

void write_annotation(const AmodalImageAnnotation& ann,
                      const ClassTaxonomy& tax, const std::string& path_stem) {
  if (auto v = validate_annotation(ann, tax); !v.empty()) {
    fail(path_stem, "refusing to write invalid annotation: " + v.front().rule +
                        ": " + v.front().detail);
  }
  std::vector<std::uint16_t> pixels(ann.visible_map.size());
  for (std::size_t i = 0; i < ann.visible_map.size(); ++i) {
    if (ann.visible_map[i] > 65535) {
      fail(path_stem + ".png", "label " + std::to_string(ann.visible_map[i]) +
                                   " exceeds the 16-bit encoding bound");
    }
    pixels[i] = static_cast<std::uint16_t>(ann.visible_map[i]);
  }
  write_png16(path_stem + ".png", ann.height, ann.width, pixels);

  ordered_json j;
  j["schema_version"] = 1;
  j["height"] = ann.height;
  j["width"] = ann.width;
  j["segments"] = ordered_json::array();
  for (const auto& seg : ann.segments) {
    ordered_json s;
    s["class_id"] = seg.class_id;
    s["instance_index"] = seg.instance_index;
    s["amodal"] = rle_to_json(seg.amodal);
    if (seg.confidence) s["confidence"] = *seg.confidence;
    j["segments"].push_back(std::move(s));
  }
  write_text_file(path_stem + ".json", j.dump(2) + "\n");
}

AmodalImageAnnotation read_annotation(const std::string& path_stem,
                                      const ClassTaxonomy& tax) {
  AmodalImageAnnotation ann;
  std::vector<std::uint16_t> pixels;
  read_png16(path_stem + ".png", ann.height, ann.width, pixels);
  ann.visible_map.assign(pixels.begin(), pixels.end());

  const std::string sidecar = path_stem + ".json";
  ordered_json j = load_json(sidecar);
  if (!j.contains("segments") || !j["segments"].is_array()) {
    fail(sidecar, "sidecar needs a \"segments\" array");
  }
  if (j.value("height", ann.height) != ann.height ||
      j.value("width", ann.width) != ann.width) {
    fail(sidecar, "sidecar dimensions disagree with the PNG");
  }

  // Visible masks implied by the label map, keyed by encoded label.
  std::map<std::uint32_t, std::vector<std::uint8_t>> dense;
  for (std::size_t i = 0; i < ann.visible_map.size(); ++i) {
    std::uint32_t label = ann.visible_map[i];
    if (label == 0) continue;
    std::uint16_t cls = AmodalImageAnnotation::label_class(label);
    std::uint16_t inst = AmodalImageAnnotation::label_instance(label);
    if (!tax.contains(cls)) {
      fail(path_stem + ".png",
           "pixel value " + std::to_string(label) + " references class " +
               std::to_string(cls) + " unknown to the taxonomy");
    }
    if (tax.is_thing(cls) && inst != 0) {
      auto& d = dense[label];
      if (d.empty()) d.assign(ann.visible_map.size(), 0);
      d[i] = 1;
    }
  }

  std::set<std::uint32_t> covered;
  for (const auto& s : j["segments"]) {
    AmodalSegment seg;
    seg.class_id = s.at("class_id").get<std::uint16_t>();
    seg.instance_index = s.at("instance_index").get<std::uint16_t>();
    std::uint32_t key =
        AmodalImageAnnotation::encode_label(seg.class_id, seg.instance_index);
    std::string where = "segment (" + std::to_string(seg.class_id) + ", " +
                        std::to_string(seg.instance_index) + ")";
    if (!covered.insert(key).second) {
      fail(sidecar, where + " listed twice");
    }
    auto it = dense.find(key);
    if (it == dense.end()) {
      fail(sidecar, "orphan segment: " + where + " does not appear in the PNG");
    }
    seg.visible = BinaryMask::from_dense(ann.height, ann.width, it->second);
    seg.amodal = rle_from_json(s.at("amodal"), sidecar, where);
    if (s.contains("confidence")) seg.confidence = s["confidence"].get<double>();
    ann.segments.push_back(std::move(seg));
  }
  for (const auto& [label, d] : dense) {
    if (!covered.count(label)) {
      fail(sidecar, "missing sidecar entry for PNG label " +
                        std::to_string(label));
    }
  }

  if (auto v = validate_annotation(ann, tax); !v.empty()) {
    fail(path_stem, "annotation fails validation: " + v.front().rule + ": " +
                        v.front().detail);
  }
  return ann;
}

void write_tensor(const TensorF32& t, const std::string& path) {
  t.check();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out.write(kMagic, 4);
  auto put_u32 = [&](std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff),
                 static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
  };
  put_u32(kTensorVersion);
  put_u32(static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(d);
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!out) fail(path, "write failed");
}

TensorF32 read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    fail(path, "bad magic at byte offset 0 (expected \"APST\")");
  }
  auto get_u32 = [&](const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) fail(path, std::string("truncated header while reading ") + what);
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  };
  std::uint32_t version = get_u32("version");
  if (version != kTensorVersion) {
    fail(path, "unsupported version " + std::to_string(version));
  }
  std::uint32_t rank = get_u32("rank");
  if (rank > 8) fail(path, "rank " + std::to_string(rank) + " is implausible");
  TensorF32 t;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims.push_back(get_u32("dims"));
    count *= t.dims.back();
    if (count > kMaxTensorElements) fail(path, "dim overflow");
  }
  t.data.resize(count);
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::uint64_t>(in.gcount()) != count * sizeof(float)) {
    fail(path, "truncated payload: expected " +
                   std::to_string(count * sizeof(float)) + " bytes");
  }
  return t;
}

ClassTaxonomy read_taxonomy(const std::string& path) {
  ordered_json j = load_json(path);
  auto parse_list = [&](const char* key) {
    std::vector<ClassInfo> out;
    if (!j.contains(key) || !j[key].is_array()) {
      fail(path, std::string("taxonomy needs a \"") + key + "\" array");
    }
    for (const auto& c : j[key]) {
      out.push_back({c.at("id").get<std::uint16_t>(),
                     c.at("name").get<std::string>()});
    }
    return out;
  };
  try {
    return ClassTaxonomy(parse_list("stuff"), parse_list("things"));
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

void write_taxonomy(const ClassTaxonomy& tax, const std::string& path) {
  ordered_json j;
  j["schema_version"] = 1;
  auto dump_list = [](const std::vector<ClassInfo>& classes) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : classes) {
      arr.push_back({{"id", c.id}, {"name", c.name}});
    }
    return arr;
  };
  j["stuff"] = dump_list(tax.stuff_classes());
  j["things"] = dump_list(tax.thing_classes());
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<InstancePrediction> read_instances(const std::string& path,
                                               const ClassTaxonomy& tax) {
  ordered_json j = load_json(path);
  if (!j.contains("instances") || !j["instances"].is_array()) {
    fail(path, "manifest needs an \"instances\" array");
  }
  std::filesystem::path dir = std::filesystem::path(path).parent_path();

  auto load_logits = [&](const ordered_json& v,
                         const std::string& where) -> TensorF32 {
    if (v.is_string()) {
      return read_tensor((dir / v.get<std::string>()).string());
    }
    if (v.is_array()) {
      TensorF32 t;
      std::uint32_t rows = static_cast<std::uint32_t>(v.size());
      std::uint32_t cols = rows ? static_cast<std::uint32_t>(v[0].size()) : 0;
      t.dims = {rows, cols};
      for (const auto& row : v) {
        if (row.size() != cols) fail(path, where + ": ragged logit rows");
        for (const auto& x : row) t.data.push_back(x.get<float>());
      }
      return t;
    }
    fail(path, where + ": logits must be an APST path or a nested array");
  };

  std::vector<InstancePrediction> out;
  for (std::size_t i = 0; i < j["instances"].size(); ++i) {
    const auto& s = j["instances"][i];
    std::string where = "instance " + std::to_string(i);
    InstancePrediction inst;
    inst.class_id = s.at("class_id").get<std::uint16_t>();
    if (!tax.is_thing(inst.class_id)) {
      fail(path, where + ": class " + std::to_string(inst.class_id) +
                     " is not a thing class");
    }
    inst.confidence = s.at("confidence").get<double>();
    auto box = s.at("amodal_bbox");
    if (!box.is_array() || box.size() != 4) {
      fail(path, where + ": amodal_bbox must be [x0, y0, x1, y1]");
    }
    inst.amodal_bbox = {box[0].get<int>(), box[1].get<int>(),
                        box[2].get<int>(), box[3].get<int>()};
    inst.inmodal_logits = load_logits(s.at("inmodal_logits"),
                                      where + " inmodal_logits");
    inst.amodal_logits = load_logits(s.at("amodal_logits"),
                                     where + " amodal_logits");
    out.push_back(std::move(inst));
  }
  return out;
}

std::string metric_report_to_json(const MetricReport& report) {
  ordered_json j;
  j["schema_version"] = 1;
  j["type"] = "metric_report";
  j["images"] = report.images;
  j["APQ"] = human(report.apq);
  j["APQ_S"] = human(report.apq_stuff);
  j["APQ_T"] = human(report.apq_things);
  j["APQ_T_visible"] = human(report.apq_things_visible);
  j["APQ_T_occluded"] = human(report.apq_things_occluded);
  j["APC"] = human(report.apc);
  j["APC_S"] = human(report.apc_stuff);
  j["APC_T"] = human(report.apc_things);
  j["APC_T_visible"] = human(report.apc_things_visible);
  j["APC_T_occluded"] = human(report.apc_things_occluded);
  j["mIoU"] = human(report.miou);

  auto class_entry = [](const ClassReport& c, bool full_precision) {
    ordered_json e;
    e["class_id"] = c.class_id;
    e["name"] = c.name;
    e["kind"] = c.is_thing ? "thing" : "stuff";
    auto num = [&](const std::optional<double>& v) {
      return full_precision ? raw(v) : human(v);
    };
    e["APQ"] = num(c.apq);
    e["APC"] = num(c.coverage);
    e["IoU"] = num(c.iou);
    if (c.is_thing) {
      e["APQ_visible"] = num(c.apq_visible);
      e["APQ_occluded"] = num(c.apq_occluded);
      e["APC_visible"] = num(c.cov_visible);
      e["APC_occluded"] = num(c.cov_occluded);
    }
    return e;
  };
  j["per_class"] = ordered_json::array();
  for (const auto& c : report.per_class) {
    j["per_class"].push_back(class_entry(c, false));
  }
  j["classes_evaluated"] = report.classes_evaluated;
  j["classes_skipped"] = report.classes_skipped;
  j["missing_predictions"] = report.missing_predictions;
  j["invalid_pairs"] = report.invalid_pairs;

  ordered_json r;
  r["APQ"] = raw(report.apq);
  r["APQ_S"] = raw(report.apq_stuff);
  r["APQ_T"] = raw(report.apq_things);
  r["APQ_T_visible"] = raw(report.apq_things_visible);
  r["APQ_T_occluded"] = raw(report.apq_things_occluded);
  r["APC"] = raw(report.apc);
  r["APC_S"] = raw(report.apc_stuff);
  r["APC_T"] = raw(report.apc_things);
  r["APC_T_visible"] = raw(report.apc_things_visible);
  r["APC_T_occluded"] = raw(report.apc_things_occluded);
  r["mIoU"] = raw(report.miou);
  r["per_class"] = ordered_json::array();
  for (const auto& c : report.per_class) {
    r["per_class"].push_back(class_entry(c, true));
  }
  j["raw"] = std::move(r);
  return j.dump(2) + "\n";
}

std::string stats_report_to_json(const StatsReport& report) {
  ordered_json j;
  j["schema_version"] = 1;
  j["type"] = "stats_report";
  j["images"] = report.images;
  j["total_instances"] = report.total_instances;
  j["per_class"] = ordered_json::array();
  for (const auto& [cls, s] : report.per_class) {
    ordered_json e;
    e["class_id"] = cls;
    auto it = report.class_names.find(cls);
    e["name"] = it == report.class_names.end() ? "" : it->second;
    e["instances"] = s.instances;
    e["ratio_percent"] = round4(100.0 * s.ratio);
    e["mean_inmodal_convexity"] = round4(s.mean_inmodal_convexity);
    e["mean_amodal_convexity"] = round4(s.mean_amodal_convexity);
    e["mean_inmodal_simplicity"] = round4(s.mean_inmodal_simplicity);
    e["mean_amodal_simplicity"] = round4(s.mean_amodal_simplicity);
    j["per_class"].push_back(std::move(e));
  }
  j["occlusion_histogram"] = {{"edges", report.histogram_edges},
                              {"counts", report.histogram_counts}};
  j["mean_inmodal_convexity"] = round4(report.mean_inmodal_convexity);
  j["mean_amodal_convexity"] = round4(report.mean_amodal_convexity);
  j["mean_inmodal_simplicity"] = round4(report.mean_inmodal_simplicity);
  j["mean_amodal_simplicity"] = round4(report.mean_amodal_simplicity);
  ordered_json r;
  r["per_class_ratio"] = ordered_json::object();
  for (const auto& [cls, s] : report.per_class) {
    r["per_class_ratio"][std::to_string(cls)] = s.ratio;
  }
  r["mean_inmodal_convexity"] = report.mean_inmodal_convexity;
  r["mean_amodal_convexity"] = report.mean_amodal_convexity;
  r["mean_inmodal_simplicity"] = report.mean_inmodal_simplicity;
  r["mean_amodal_simplicity"] = report.mean_amodal_simplicity;
  j["raw"] = std::move(r);
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(path, "write failed");
}

std::string occlusion_histogram_csv(const StatsReport& report) {
  std::ostringstream os;
  os << "bin_start,bin_end,count\n";
  for (std::size_t i = 0; i < report.histogram_counts.size(); ++i) {
    os << report.histogram_edges[i] << "," << report.histogram_edges[i + 1]
       << "," << report.histogram_counts[i] << "\n";
  }
  return os.str();
}

}  // namespace aps::io
