/* Copyright 2026 The LWA Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include "lwa/error.hpp"
#include "lwa/metrics.hpp"
#include "lwa/raster_io.hpp"
#include "lwa/sim2real.hpp"
#include "lwa/synthetic.hpp"
#include "test_util.hpp"

namespace lwa {
namespace {

using testing::TempDir;
using nlohmann::json;

const LayerSpec& spec() {
  static const LayerSpec s = LayerSpec::default_spec();
  return s;
}

/// Random depth in [0.5, d_max] (always valid) and table labels.
std::pair<ConditionMap, ConditionMap> random_panels(PixelDomain d, std::uint64_t seed) {
  Rng rng(seed);
  PixelArray depth(d.pixels(), 1), sem(d.pixels(), 1);
  for (Eigen::Index p = 0; p < d.pixels(); ++p) {
    depth(p) = 0.5 + 79.5 * uniform_unit(rng);
    sem(p) = spec().classes()[uniform_below(rng, spec().classes().size())].index;
  }
  return {ConditionMap(Modality::kDepth, d, depth), ConditionMap(Modality::kSemantic, d, sem)};
}

BackendHandle mock(MockMode mode) {
  MockBackendConfig cfg;
  cfg.mode = mode;
  return BackendHandle::in_process(
      [cfg](const std::string& line) { return mock_backend_reply(line, cfg); });
}

/// Backend that rewrites the request image with `edit` before replying.
BackendHandle editing_backend(std::function<void(PackedImage&)> edit) {
  return BackendHandle::in_process([edit](const std::string& line) {
    const EditRequest req = EditRequest::from_json(json::parse(line));
    PackedImage img = load_packed(req.packed);
    edit(img);
    std::filesystem::path out = req.packed;
    out += ".edited.lwa1";
    save_packed(out, img);
    EditResponse resp;
    resp.id = req.id;
    resp.ok = true;
    resp.packed_out = out;
    return resp.to_json().dump();
  });
}

TEST(DepthCode, QuantizeEndpoints) {
  EXPECT_EQ(quantize_depth(80.0, true, 80.0), 255);
  EXPECT_EQ(quantize_depth(500.0, true, 80.0), 255);
  EXPECT_EQ(quantize_depth(40.0, true, 80.0), 128);
  EXPECT_EQ(quantize_depth(12.0, false, 80.0), 0);
  EXPECT_DOUBLE_EQ(dequantize_depth(255, 80.0), 80.0);
}

TEST(Pack, DefaultPanelGivesStackedImage) {
  const auto [depth, sem] = random_panels(kDefaultPanel, 1);
  const PackedImage img = pack_for_editor(depth, sem, kDefaultPanel, spec());
  EXPECT_EQ(img.domain.width, 512u);
  EXPECT_EQ(img.domain.height, 576u);
  // Depth panel is gray, semantic panel uses class colors.
  EXPECT_EQ(img.rgb(0, 0), img.rgb(0, 1));
  const ClassInfo* c = spec().find(static_cast<std::uint32_t>(sem.values()(0)));
  EXPECT_EQ(img.rgb(kDefaultPanel.pixels(), 0), c->color[0]);
}

TEST(Pack, RoundTripWithinOneCode) {
  const auto [depth, sem] = random_panels(kDefaultPanel, 2);
  const PackedImage img = pack_for_editor(depth, sem, kDefaultPanel, spec());
  const UnpackedPanels back = unpack_from_editor(img, kDefaultPanel, spec());
  EXPECT_EQ(back.semantic, sem);
  EXPECT_EQ(back.off_palette_fraction, 0.0);
  const double err = (back.depth.values() - depth.values()).abs().maxCoeff();
  EXPECT_LE(err, kDefaultDepthMax / 255.0);
}

TEST(Pack, InvalidDepthAndVoidSurvive) {
  const PixelDomain d{9, 16};
  PixelArray depth = PixelArray::Constant(d.pixels(), 1, 10.0);
  PixelFlags valid = PixelFlags::Constant(d.pixels(), true);
  depth(3) = 0.0;
  valid(3) = false;
  PixelArray sem = PixelArray::Constant(d.pixels(), 1, spec().index_of("ROAD"));
  sem(4) = kVoidClass;
  const PackedImage img = pack_for_editor(ConditionMap(Modality::kDepth, d, depth, valid),
                                          ConditionMap(Modality::kSemantic, d, sem), d, spec());
  const UnpackedPanels back = unpack_from_editor(img, d, spec());
  EXPECT_FALSE(back.depth.valid_at(3));
  EXPECT_EQ(back.semantic.values()(4), kVoidClass);
}

TEST(Pack, AspectMismatchIsRejected) {
  const auto [depth, sem] = random_panels(PixelDomain{100, 100}, 3);
  EXPECT_THROW(pack_for_editor(depth, sem, kDefaultPanel, spec()), Error);
}

TEST(Pack, ResamplesMatchingAspect) {
  const auto [depth, sem] = random_panels(PixelDomain{144, 256}, 4);
  const PackedImage img = pack_for_editor(depth, sem, kDefaultPanel, spec());
  EXPECT_EQ(img.domain.height, 576u);
}

TEST(Unpack, OffPaletteSnapsOrFails) {
  const PixelDomain d{10, 10};
  const auto [depth, sem] = random_panels(d, 5);
  PackedImage img = pack_for_editor(depth, sem, d, spec());
  const Rgb8 road = spec().find(spec().index_of("ROAD"))->color;
  img.rgb.row(d.pixels() + 0) << road[0] + 3, road[1] - 2, road[2];
  UnpackedPanels back = unpack_from_editor(img, d, spec());
  EXPECT_EQ(back.semantic.values()(0), spec().index_of("ROAD"));
  EXPECT_DOUBLE_EQ(back.off_palette_fraction, 0.01);
  for (int p = 1; p < 10; ++p) img.rgb.row(d.pixels() + p) << 1, 254, 3;
  try {
    unpack_from_editor(img, d, spec());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOffPalette);
  }
  EXPECT_THROW(unpack_from_editor(img, PixelDomain{5, 10}, spec()), Error);
}

TEST(Resample, NearestPreservesLabels) {
  const auto [depth, sem] = random_panels(PixelDomain{4, 4}, 6);
  const ConditionMap up = resample_nearest(sem, PixelDomain{8, 8});
  EXPECT_EQ(up.at(0, 0), sem.at(0, 0));
  EXPECT_EQ(up.at(7, 7), sem.at(3, 3));
  EXPECT_EQ(resample_nearest(up, PixelDomain{4, 4}), sem);
}

TEST(Resample, BilinearSkipsHoles) {
  const PixelDomain d{1, 2};
  PixelArray v(2, 1);
  v << 10.0, 0.0;
  PixelFlags ok(2);
  ok << true, false;
  const ConditionMap up =
      resample_depth_bilinear(ConditionMap(Modality::kDepth, d, v, ok), PixelDomain{1, 4});
  for (Eigen::Index p = 0; p < 4; ++p) {
    if (up.valid_at(p)) EXPECT_DOUBLE_EQ(up.values()(p), 10.0);
  }
  EXPECT_TRUE(up.valid_at(0));
}

TEST(EditMask, ComplementOfPreserved) {
  const SyntheticScene scene = make_scene(PixelDomain{72, 128}, 8, spec());
  const Lwa lwa = decompose(scene.frame, spec());
  const VisibilityMask edit = derive_edit_mask(lwa);
  EXPECT_EQ(edit, lwa.at(Role::kBackground).mask);
  EXPECT_EQ(assemble_preserved(lwa).region(), !edit);
  Lwa partial(lwa.domain(), {lwa.at(Role::kMapLayout), lwa.at(Role::kBackground)});
  EXPECT_THROW(assemble_preserved(partial), Error);
}

class RefineTest : public ::testing::Test {
 protected:
  TempDir tmp;
  RefineOptions options(PixelDomain panel = kDefaultPanel) {
    RefineOptions o;
    o.panel = panel;
    o.work_dir = tmp.path();
    return o;
  }
};

TEST_F(RefineTest, IdentityWithContextReproducesInput) {
  const SyntheticScene scene = make_scene(kDefaultPanel, 21, spec());
  const Lwa lwa = decompose(scene.frame, spec());
  BackendHandle backend = mock(MockMode::kIdentity);
  RefineOptions o = options();
  o.background_context = &lwa.at(Role::kBackground);
  const Lwa out = refine(assemble_preserved(lwa), derive_edit_mask(lwa), "noop", backend,
                         spec(), o);
  EXPECT_EQ(out, lwa);
  EXPECT_TRUE(std::filesystem::exists(tmp / "edit-0.packed.lwa1"));
  EXPECT_EQ(load_mask(tmp / "edit-0.mask.lwa1"), derive_edit_mask(lwa));
}

TEST_F(RefineTest, IdentityWithoutContextLeavesBlankBackground) {
  const SyntheticScene scene = make_scene(kDefaultPanel, 22, spec());
  const Lwa lwa = decompose(scene.frame, spec());
  BackendHandle backend = mock(MockMode::kIdentity);
  const Lwa out =
      refine(assemble_preserved(lwa), derive_edit_mask(lwa), "noop", backend, spec(), options());
  const auto& bg = out.at(Role::kBackground);
  EXPECT_EQ(bg.mask, lwa.at(Role::kBackground).mask);
  const auto& sem = bg.layer.conditions().at(Modality::kSemantic);
  EXPECT_TRUE((sem.values() == kVoidClass).all());
  EXPECT_FALSE(bg.layer.conditions().at(Modality::kDepth).valid().any());
}

TEST_F(RefineTest, ConstantFillPaintsOnlyTheEditRegion) {
  const SyntheticScene scene = make_scene(PixelDomain{144, 256}, 23, spec());
  const Lwa lwa = decompose(scene.frame, spec());
  BackendHandle backend = mock(MockMode::kConstantFill);
  const Lwa out = refine(assemble_preserved(lwa), derive_edit_mask(lwa), "fill", backend,
                         spec(), options());
  EXPECT_EQ(out.at(Role::kTrafficParticipants), lwa.at(Role::kTrafficParticipants));
  EXPECT_EQ(out.at(Role::kMapLayout), lwa.at(Role::kMapLayout));
  EXPECT_TRUE(out.is_partition());
  const ConditionStack composite = compose(out);
  const std::uint32_t building = spec().index_of("BUILDING");
  const VisibilityMask edit = derive_edit_mask(lwa);
  Eigen::Index painted = 0;
  for (Eigen::Index p = 0; p < lwa.domain().pixels(); ++p) {
    if (edit.at_pixel(p) && composite.at(Modality::kSemantic).values()(p) == building) ++painted;
  }
  // Nearest resampling of the panel mask can miss pixels along the boundary
  // only; the bulk of the region must be painted.
  EXPECT_GT(painted, edit.count() * 9 / 10);

  const std::vector<std::uint32_t> classes = {spec().index_of("CAR"), spec().index_of("ROAD")};
  const auto report =
      controllability_report(composite, lwa, RegionRestriction::kPreserved, classes);
  EXPECT_EQ(report.si_rmse, 0.0);
  EXPECT_EQ(report.miou.miou, 1.0);
}

TEST_F(RefineTest, SoftSpliceTakesPreservedValuesFromEditor) {
  const SyntheticScene scene = make_scene(kDefaultPanel, 24, spec());
  const Lwa lwa = decompose(scene.frame, spec());
  const Rgb8 road = spec().find(spec().index_of("ROAD"))->color;
  auto paint_road = [road](PackedImage& img) {
    const Eigen::Index n = img.domain.pixels() / 2;
    for (Eigen::Index p = n; p < 2 * n; ++p) img.rgb.row(p) << road[0], road[1], road[2];
  };
  RefineOptions o = options();
  BackendHandle hard_backend = editing_backend(paint_road);
  const Lwa hard =
      refine(assemble_preserved(lwa), derive_edit_mask(lwa), "x", hard_backend, spec(), o);
  EXPECT_EQ(hard.at(Role::kTrafficParticipants), lwa.at(Role::kTrafficParticipants));

  o.hard_splice = false;
  BackendHandle soft_backend = editing_backend(paint_road);
  const Lwa soft =
      refine(assemble_preserved(lwa), derive_edit_mask(lwa), "x", soft_backend, spec(), o);
  const auto& traffic = soft.at(Role::kTrafficParticipants);
  ASSERT_FALSE(traffic.mask.empty());
  for (Eigen::Index p = 0; p < lwa.domain().pixels(); ++p) {
    if (traffic.mask.at_pixel(p)) {
      EXPECT_EQ(traffic.layer.conditions().at(Modality::kSemantic).values()(p),
                spec().index_of("ROAD"));
    }
  }
  EXPECT_EQ(traffic.mask, lwa.at(Role::kTrafficParticipants).mask);
}

TEST_F(RefineTest, ProtocolViolationsAreReported) {
  const SyntheticScene scene = make_scene(PixelDomain{72, 128}, 25, spec());
  const Lwa lwa = decompose(scene.frame, spec());
  const auto preserved = assemble_preserved(lwa);
  const auto edit = derive_edit_mask(lwa);
  auto expect_protocol = [&](BackendHandle backend) {
    try {
      refine(preserved, edit, "x", backend, spec(), options());
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kProtocol) << e.what();
    }
  };
  expect_protocol(BackendHandle::in_process([](const std::string&) {
    return json{{"id", "someone-else"}, {"status", "ok"}, {"packed_out", "/x"}}.dump();
  }));
  expect_protocol(BackendHandle::in_process([](const std::string& line) {
    return json{{"id", json::parse(line)["id"]}, {"status", "error"}, {"message", "busy"}}.dump();
  }));
  expect_protocol(BackendHandle::in_process([](const std::string&) { return "not json"; }));
  expect_protocol(editing_backend([](PackedImage& img) { img = PackedImage(PixelDomain{2, 2}); }));
}

TEST(Sim2RealLoss, MeanOverRegionAndChannels) {
  const PixelDomain d{1, 2};
  PixelArray a(2, 3), b(2, 3);
  a << 0, 0, 0, 1, 1, 1;
  b << 1, 1, 1, 1, 1, 1;
  const WorldLayer pa(Role::kBackground, ConditionStack({ConditionMap(Modality::kRgb, d, a)}));
  const WorldLayer pb(Role::kBackground, ConditionStack({ConditionMap(Modality::kRgb, d, b)}));
  VisibilityMask all(d, true);
  EXPECT_DOUBLE_EQ(sim2real_loss(pa, pb, all), 0.5);
  VisibilityMask second(d);
  second.set_pixel(1, true);
  EXPECT_DOUBLE_EQ(sim2real_loss(pa, pb, second), 0.0);
  EXPECT_THROW(sim2real_loss(pa, pb, VisibilityMask(d)), Error);
}

}  // namespace
}  // namespace lwa
