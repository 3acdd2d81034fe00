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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "lwa/error.hpp"
#include "lwa/layer_spec.hpp"
#include "lwa/raster.hpp"
#include "lwa/raster_io.hpp"
#include "test_util.hpp"

namespace lwa {
namespace {

using testing::TempDir;

TEST(PixelDomain, RejectsEmptyExtents) {
  EXPECT_THROW(PixelDomain::make(0, 4), Error);
  EXPECT_THROW(PixelDomain::make(4, -1), Error);
  const PixelDomain d = PixelDomain::make(3, 5);
  EXPECT_EQ(d.pixels(), 15);
  EXPECT_EQ(d.index(2, 1), 11);
}

TEST(ConditionMap, NegativeAndNanDepthBecomeHoles) {
  const PixelDomain d{1, 3};
  PixelArray v(3, 1);
  v << 2.0, -1.0, std::numeric_limits<double>::quiet_NaN();
  const ConditionMap m(Modality::kDepth, d, v);
  EXPECT_TRUE(m.valid_at(0));
  EXPECT_FALSE(m.valid_at(1));
  EXPECT_FALSE(m.valid_at(2));
  EXPECT_EQ(m.values()(1), 0.0);
  EXPECT_EQ(m.values()(2), 0.0);
}

TEST(ConditionMap, InvalidDepthMustHoldZero) {
  const PixelDomain d{1, 2};
  PixelArray v(2, 1);
  v << 1.0, 3.0;
  PixelFlags ok(2);
  ok << true, false;
  EXPECT_THROW(ConditionMap(Modality::kDepth, d, v, ok), Error);
}

TEST(ConditionMap, OnlyDepthHasHoles) {
  const PixelDomain d{1, 2};
  PixelFlags ok(2);
  ok << true, false;
  EXPECT_THROW(ConditionMap(Modality::kSemantic, d, PixelArray::Zero(2, 1), ok), Error);
}

TEST(ConditionMap, FilledUsesModalityFill) {
  const PixelDomain d{2, 2};
  const auto depth = ConditionMap::filled(Modality::kDepth, d);
  EXPECT_FALSE(depth.valid().any());
  const auto sem = ConditionMap::filled(Modality::kSemantic, d);
  EXPECT_TRUE((sem.values() == kVoidClass).all());
  const auto rgb = ConditionMap::filled(Modality::kRgb, d);
  EXPECT_EQ(rgb.channels(), 3);
  EXPECT_TRUE((rgb.values() == 0.0).all());
}

TEST(VisibilityMask, Algebra) {
  const PixelDomain d{2, 2};
  VisibilityMask a(d), b(d);
  a.set_pixel(0, true);
  a.set_pixel(1, true);
  b.set_pixel(1, true);
  EXPECT_EQ((a | b).count(), 2);
  EXPECT_EQ((a & b).count(), 1);
  EXPECT_EQ((!a).count(), 2);
  EXPECT_TRUE(is_subset(b, a));
  EXPECT_FALSE(is_subset(a, b));
  EXPECT_THROW(a | VisibilityMask(PixelDomain{1, 4}), Error);
}

TEST(RasterContainer, HeaderLayout) {
  Raster r;
  r.height = 2;
  r.width = 3;
  r.channels = 1;
  r.dtype = DType::kU16;
  r.modality = 1;
  r.values = PixelArray::Constant(6, 1, 513);
  const auto bytes = encode_raster(r);
  ASSERT_EQ(bytes.size(), kRasterHeaderBytes + 6 * 2);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "LWA1");
  EXPECT_EQ(bytes[4], 2);   // height, little endian
  EXPECT_EQ(bytes[8], 3);   // width
  EXPECT_EQ(bytes[12], 1);  // channels
  EXPECT_EQ(bytes[16], 2);  // dtype u16
  EXPECT_EQ(bytes[17], 1);  // modality
  EXPECT_EQ(bytes[kRasterHeaderBytes], 1);
  EXPECT_EQ(bytes[kRasterHeaderBytes + 1], 2);
  const Raster back = decode_raster(bytes);
  EXPECT_EQ(back.height, 2u);
  EXPECT_TRUE((back.values == r.values).all());
}

TEST(RasterContainer, RejectsCorruptInput) {
  std::vector<std::uint8_t> junk(30, 0);
  EXPECT_THROW(decode_raster(junk), Error);
  Raster r;
  r.height = r.width = r.channels = 1;
  r.values = PixelArray::Zero(1, 1);
  auto bytes = encode_raster(r);
  bytes.pop_back();
  EXPECT_THROW(decode_raster(bytes), Error);
  bytes = encode_raster(r);
  bytes[16] = 9;
  EXPECT_THROW(decode_raster(bytes), Error);
}

TEST(RasterIo, ConditionRoundTripAllModalities) {
  TempDir tmp;
  const LayerSpec spec = LayerSpec::default_spec();
  ConditionStack frame = testing::random_frame(PixelDomain{5, 7}, 11, spec);
  for (auto& m : frame.maps()) {
    // f32 storage: keep values exactly representable.
    PixelArray v = m.values().cast<float>().cast<double>();
    m = ConditionMap(m.modality(), m.domain(), v, m.valid());
    const auto path = tmp / (std::string(to_string(m.modality())) + ".lwa1");
    save_condition(path, m);
    EXPECT_EQ(load_condition(path), m) << to_string(m.modality());
    EXPECT_EQ(load_condition(path, m.modality()), m);
  }
  EXPECT_TRUE(std::filesystem::exists(tmp / "depth.lwa1.meta.json"));
  EXPECT_THROW(load_condition(tmp / "depth.lwa1", Modality::kSemantic), Error);
}

TEST(RasterIo, SemanticUsesNarrowestType) {
  TempDir tmp;
  const PixelDomain d{1, 2};
  PixelArray v(2, 1);
  v << 3, 255;
  save_condition(tmp / "s.lwa1", ConditionMap(Modality::kSemantic, d, v));
  EXPECT_EQ(read_raster(tmp / "s.lwa1").dtype, DType::kU8);
  v << 3, 300;
  save_condition(tmp / "s.lwa1", ConditionMap(Modality::kSemantic, d, v));
  EXPECT_EQ(read_raster(tmp / "s.lwa1").dtype, DType::kU16);
}

TEST(RasterIo, DepthSidecarScalesAndMarksHoles) {
  TempDir tmp;
  const PixelDomain d{1, 3};
  std::vector<std::uint16_t> mm = {1500, 0, 65535};
  write_png(tmp / "d.png", d, mm, 16);
  write_sidecar(tmp / "d.png", DepthSidecar{0.001, 65535});
  const ConditionMap depth = load_condition(tmp / "d.png", Modality::kDepth);
  EXPECT_DOUBLE_EQ(depth.values()(0), 1.5);
  EXPECT_TRUE(depth.valid_at(0));
  EXPECT_TRUE(depth.valid_at(1));  // zero is a legal reading under this sidecar
  EXPECT_FALSE(depth.valid_at(2));
}

TEST(RasterIo, PngNeedsModality) {
  TempDir tmp;
  const PixelDomain d{2, 2};
  std::vector<std::uint16_t> labels = {0, 6, 12, 255};
  write_png(tmp / "s.png", d, labels, 8, true);
  EXPECT_THROW(load_condition(tmp / "s.png"), Error);
  const ConditionMap sem = load_condition(tmp / "s.png", Modality::kSemantic);
  EXPECT_EQ(sem.values()(1), 6);
  EXPECT_EQ(sem.values()(3), 255);
  write_png(tmp / "g.png", d, labels, 8);
  EXPECT_EQ(load_condition(tmp / "g.png", Modality::kSemantic), sem);
}

TEST(RasterIo, MaskPackedTensorRoundTrip) {
  TempDir tmp;
  const PixelDomain d{3, 4};
  VisibilityMask mask(d);
  mask.set_pixel(5, true);
  save_mask(tmp / "m.lwa1", mask);
  EXPECT_EQ(load_mask(tmp / "m.lwa1"), mask);
  EXPECT_THROW(load_condition(tmp / "m.lwa1"), Error);

  PackedImage img(d);
  img.rgb(7, 2) = 200;
  save_packed(tmp / "p.lwa1", img);
  EXPECT_EQ(load_packed(tmp / "p.lwa1"), img);

  Eigen::MatrixXd t(3, 2);
  t << 1, 2, 3, 4, 5.5, -6;
  save_tensor(tmp / "t.lwa1", t);
  EXPECT_EQ(load_tensor(tmp / "t.lwa1"), t);
}

TEST(RasterIo, MissingFileIsIoError) {
  try {
    load_condition("/nonexistent/depth.lwa1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(LayerSpec, DefaultTableRoles) {
  const LayerSpec spec = LayerSpec::default_spec();
  EXPECT_EQ(spec.classes().size(), 19u);
  EXPECT_EQ(spec.role_of(spec.index_of("CAR")), Role::kTrafficParticipants);
  EXPECT_EQ(spec.role_of(spec.index_of("CROSSWALK")), Role::kMapLayout);
  EXPECT_EQ(spec.role_of(spec.index_of("SKY")), Role::kBackground);
  EXPECT_EQ(spec.role_of(spec.index_of("UNKNOWN")), Role::kBackground);
  EXPECT_EQ(spec.role_of(kVoidClass), Role::kBackground);
  EXPECT_EQ(spec.palette().size(), 20u);
  EXPECT_THROW(spec.index_of("DRAGON"), Error);
}

TEST(LayerSpec, JsonRoundTrip) {
  const LayerSpec spec = LayerSpec::default_spec();
  const LayerSpec back = LayerSpec::from_json(spec.to_json());
  EXPECT_EQ(back.to_json(), spec.to_json());
}

TEST(LayerSpec, Validation) {
  auto base = [] {
    return nlohmann::json{
        {"classes",
         {{{"name", "CAR"}, {"index", 0}, {"color", {1, 2, 3}}},
          {{"name", "ROAD"}, {"index", 1}, {"color", {4, 5, 6}}},
          {{"name", "SKY"}, {"index", 2}, {"color", {7, 8, 9}}}}},
        {"layers",
         {{"traffic_participants", {"CAR"}}, {"map_layout", {"ROAD"}}, {"background", {"SKY"}}}}};
  };
  EXPECT_NO_THROW(LayerSpec::from_json(base()));
  auto dup = base();
  dup["classes"][1]["index"] = 0;
  EXPECT_THROW(LayerSpec::from_json(dup), Error);
  auto two_roles = base();
  two_roles["layers"]["background"].push_back("CAR");
  EXPECT_THROW(LayerSpec::from_json(two_roles), Error);
  auto reserved = base();
  reserved["classes"][2]["index"] = 255;
  EXPECT_THROW(LayerSpec::from_json(reserved), Error);
  auto empty_role = base();
  empty_role["layers"]["map_layout"] = nlohmann::json::array();
  EXPECT_THROW(LayerSpec::from_json(empty_role), Error);
  auto same_color = base();
  same_color["classes"][1]["color"] = {1, 2, 3};
  EXPECT_THROW(LayerSpec::from_json(same_color), Error);
}

}  // namespace
}  // namespace lwa
