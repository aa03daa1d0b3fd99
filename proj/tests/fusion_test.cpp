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

#include <cmath>

#include "aps/fusion.hpp"
#include "aps/synth.hpp"
#include "support.hpp"

using namespace aps;
using namespace testutil;

namespace {

TensorF32 grid28(float value) {
  TensorF32 t = TensorF32::zeros({28, 28});
  for (auto& v : t.data) v = value;
  return t;
}

// Semantic tensor for the synth taxonomy (channels: sky, terrain, road,
// box, disc), constant per channel.
TensorF32 semantic_const(int h, int w, const std::vector<float>& per_channel) {
  TensorF32 t = TensorF32::zeros({static_cast<std::uint32_t>(per_channel.size()),
                                  static_cast<std::uint32_t>(h),
                                  static_cast<std::uint32_t>(w)});
  for (std::size_t c = 0; c < per_channel.size(); ++c) {
    for (int i = 0; i < h * w; ++i) {
      t.data[c * h * w + i] = per_channel[c];
    }
  }
  return t;
}

void set_channel_box(TensorF32& t, int channel, int x0, int y0, int x1, int y1,
                     float value) {
  int h = static_cast<int>(t.dims[1]);
  int w = static_cast<int>(t.dims[2]);
  (void)h;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      t.data[(static_cast<std::uint64_t>(channel) * t.dims[1] + y) * w + x] =
          value;
    }
  }
}

}  // namespace

TEST_CASE("fused_logit matches the scalar reference on a 41x41 grid") {
  for (int i = 0; i <= 40; ++i) {
    for (int j = 0; j <= 40; ++j) {
      double a = -20.0 + i;
      double b = -20.0 + j;
      CHECK(std::abs(fused_logit(a, b) - ref_fused_logit(a, b)) < 1e-6);
    }
  }
  CHECK(fused_logit(0.0, 0.0) == 0.0);
}

TEST_CASE("resample_mask_logits") {
  SUBCASE("constant grids stay constant inside the bbox") {
    TensorF32 g = grid28(3.5f);
    BBox box{2, 3, 12, 19};
    auto out = resample_mask_logits(g, box, 24, 24, -1.0f);
    for (int y = 0; y < 24; ++y) {
      for (int x = 0; x < 24; ++x) {
        if (box.contains(x, y)) {
          CHECK(std::abs(out.at2(y, x) - 3.5f) < 1e-6);
        } else {
          CHECK(out.at2(y, x) == -1.0f);
        }
      }
    }
  }
  SUBCASE("a 28x28 bbox is identity sampling") {
    TensorF32 g = TensorF32::zeros({28, 28});
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      g.data[i] = static_cast<float>(i % 97);
    }
    auto out = resample_mask_logits(g, BBox{4, 6, 32, 34}, 40, 40, 0.0f);
    for (int y = 0; y < 28; ++y) {
      for (int x = 0; x < 28; ++x) {
        CHECK(out.at2(y + 6, x + 4) == g.at2(y, x));
      }
    }
  }
  SUBCASE("2x2 grid onto a 4-wide bbox interpolates to [0, .25, .75, 1]") {
    TensorF32 g = TensorF32::zeros({2, 2});
    g.data = {0.0f, 1.0f, 0.0f, 1.0f};
    auto out = resample_mask_logits(g, BBox{0, 0, 4, 2}, 2, 4, -9.0f);
    const float expected[4] = {0.0f, 0.25f, 0.75f, 1.0f};
    for (int y = 0; y < 2; ++y) {
      for (int x = 0; x < 4; ++x) {
        CHECK(std::abs(out.at2(y, x) - expected[x]) < 1e-6);
      }
    }
  }
  SUBCASE("degenerate bbox raises") {
    CHECK_THROWS(resample_mask_logits(grid28(0.0f), BBox{5, 5, 5, 9}, 20, 20,
                                      0.0f));
    CHECK_THROWS(resample_mask_logits(grid28(0.0f), BBox{0, 0, 30, 10}, 20, 20,
                                      0.0f));
  }
}

TEST_CASE("derive_inmodal_bbox") {
  SUBCASE("single pixel") {
    auto box = derive_inmodal_bbox(BinaryMask::filled_rect(8, 8, 5, 3, 6, 4));
    CHECK(box == BBox{5, 3, 6, 4});
  }
  SUBCASE("full frame") {
    auto box = derive_inmodal_bbox(BinaryMask::filled_rect(7, 9, 0, 0, 9, 7));
    CHECK(box == BBox{0, 0, 9, 7});
  }
  SUBCASE("two pixels span the box") {
    Dense d(static_cast<std::size_t>(10) * 5, 0);
    d[0] = 1;                // (x 0, y 0)
    d[9 * 5 + 4] = 1;        // (x 4, y 9)
    auto box = derive_inmodal_bbox(mask_of(10, 5, d));
    CHECK(box == BBox{0, 0, 5, 10});
  }
  SUBCASE("empty mask raises") {
    CHECK_THROWS(derive_inmodal_bbox(BinaryMask(4, 4)));
  }
}

TEST_CASE("fuse with no instances keeps the stuff argmax") {
  const int H = 6, W = 8;
  auto semantic = semantic_const(H, W, {1.0f, 2.0f, -1.0f, 0.0f, 0.0f});
  auto out = fuse(semantic, {}, synth_taxonomy(), FusionConfig{});
  CHECK(out.segments.empty());
  for (auto label : out.visible_map) {
    CHECK(label == AmodalImageAnnotation::encode_label(2, 0));  // terrain
  }
  CHECK(validate_annotation(out, synth_taxonomy()).empty());
}

TEST_CASE("saturated single-instance trace") {
  // Instance bbox is exactly 28x28 at (5,5), so sampling is identity.
  // Inmodal logits +10 on the top-left 10x10 of the grid, amodal +10 on the
  // top-left 10x15; stuff logits favor road everywhere except inside the
  // visible box.
  const int H = 40, W = 40;
  auto semantic = semantic_const(H, W, {-10.0f, -10.0f, 10.0f, 10.0f, -10.0f});
  set_channel_box(semantic, 2, 5, 5, 15, 15, -10.0f);  // road loses the box

  InstancePrediction inst;
  inst.class_id = 10;  // box
  inst.confidence = 0.9;
  inst.amodal_bbox = {5, 5, 33, 33};
  inst.inmodal_logits = grid28(-10.0f);
  inst.amodal_logits = grid28(-10.0f);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) inst.inmodal_logits.data[y * 28 + x] = 10.0f;
    for (int x = 0; x < 15; ++x) inst.amodal_logits.data[y * 28 + x] = 10.0f;
  }

  auto out = fuse(semantic, {inst}, synth_taxonomy(), FusionConfig{});
  REQUIRE(out.segments.size() == 1);
  const auto& seg = out.segments[0];
  CHECK(seg.class_id == 10);
  CHECK(seg.visible == BinaryMask::filled_rect(H, W, 5, 5, 15, 15));
  CHECK(seg.amodal == BinaryMask::filled_rect(H, W, 5, 5, 20, 15));
  CHECK(seg.occluded() == BinaryMask::filled_rect(H, W, 15, 5, 20, 15));
  // Background pixels carry the road label.
  CHECK(out.label_at(0, 0) == AmodalImageAnnotation::encode_label(3, 0));
  CHECK(out.label_at(6, 6) == AmodalImageAnnotation::encode_label(10, 1));
  CHECK(validate_annotation(out, synth_taxonomy()).empty());
}

TEST_CASE("confidence gate and threshold monotonicity") {
  const int H = 30, W = 30;
  auto semantic = semantic_const(H, W, {1.0f, -10.0f, -10.0f, 0.0f, 0.0f});

  auto make_inst = [&](double conf, int x0, int y0) {
    InstancePrediction inst;
    inst.class_id = 10;
    inst.confidence = conf;
    inst.amodal_bbox = {x0, y0, x0 + 8, y0 + 8};
    inst.inmodal_logits = grid28(10.0f);
    inst.amodal_logits = grid28(10.0f);
    return inst;
  };
  std::vector<InstancePrediction> instances = {make_inst(0.9, 0, 0),
                                               make_inst(0.6, 10, 10),
                                               make_inst(0.3, 20, 20)};
  std::size_t prev = 100;
  for (double thr : {0.1, 0.5, 0.7, 0.95}) {
    FusionConfig cfg;
    cfg.confidence_threshold = thr;
    auto out = fuse(semantic, instances, synth_taxonomy(), cfg);
    CHECK(out.segments.size() <= prev);
    prev = out.segments.size();
    CHECK(validate_annotation(out, synth_taxonomy()).empty());
  }
}

TEST_CASE("overlap suppression keeps the higher-confidence instance") {
  const int H = 30, W = 30;
  auto semantic = semantic_const(H, W, {1.0f, -10.0f, -10.0f, 0.0f, 0.0f});
  InstancePrediction a, b;
  for (auto* p : {&a, &b}) {
    p->class_id = 10;
    p->inmodal_logits = grid28(10.0f);
    p->amodal_logits = grid28(10.0f);
  }
  a.confidence = 0.9;
  a.amodal_bbox = {0, 0, 10, 10};
  b.confidence = 0.8;
  b.amodal_bbox = {1, 1, 11, 11};  // 81% covered by a's inmodal mask

  auto out = fuse(semantic, {a, b}, synth_taxonomy(), FusionConfig{});
  REQUIRE(out.segments.size() == 1);
  CHECK(out.segments[0].confidence == 0.9);

  // Pixel ownership: visible masks never overlap even without suppression.
  b.amodal_bbox = {4, 0, 14, 10};  // 60% overlap, below the 0.5 own-area cut?
  FusionConfig loose;
  loose.overlap_threshold = 0.7;
  auto out2 = fuse(semantic, {a, b}, synth_taxonomy(), loose);
  BinaryMask seen(H, W);
  for (const auto& seg : out2.segments) {
    CHECK_FALSE(seen.intersects(seg.visible));
    seen = seen.set_or(seg.visible);
  }
  CHECK(validate_annotation(out2, synth_taxonomy()).empty());
}

TEST_CASE("channel-count mismatch raises") {
  auto semantic = semantic_const(4, 4, {0.0f, 0.0f});
  CHECK_THROWS(fuse(semantic, {}, synth_taxonomy(), FusionConfig{}));
}
