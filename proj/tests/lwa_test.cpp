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
#include "lwa/lwa.hpp"
#include "lwa/raster_io.hpp"
#include "test_util.hpp"

namespace lwa {
namespace {

using testing::random_frame;
using testing::TempDir;

const LayerSpec& spec() {
  static const LayerSpec s = LayerSpec::default_spec();
  return s;
}

ConditionStack tiny_frame() {
  // CAR | ROAD
  // SKY | void
  const PixelDomain d{2, 2};
  PixelArray sem(4, 1), depth(4, 1), inst(4, 1);
  sem << spec().index_of("CAR"), spec().index_of("ROAD"), spec().index_of("SKY"), kVoidClass;
  depth << 5.0, 7.0, -1.0, 9.0;
  inst << 3, 0, 0, 0;
  return ConditionStack({ConditionMap(Modality::kDepth, d, depth),
                         ConditionMap(Modality::kSemantic, d, sem),
                         ConditionMap(Modality::kInstance, d, inst)});
}

TEST(ConditionStack, CanonicalOrderAndUniqueness) {
  const PixelDomain d{1, 1};
  ConditionStack s;
  s.insert(ConditionMap::filled(Modality::kRgb, d));
  s.insert(ConditionMap::filled(Modality::kDepth, d));
  ASSERT_EQ(s.maps().size(), 2u);
  EXPECT_EQ(s.maps()[0].modality(), Modality::kDepth);
  EXPECT_THROW(s.insert(ConditionMap::filled(Modality::kDepth, d)), Error);
  EXPECT_THROW(s.insert(ConditionMap::filled(Modality::kSemantic, PixelDomain{2, 1})), Error);
  EXPECT_THROW(s.at(Modality::kInstance), Error);
}

TEST(Decompose, TinyFrameRoutesByClass) {
  const Lwa lwa = decompose(tiny_frame(), spec());
  EXPECT_TRUE(lwa.has_canonical_roles());
  EXPECT_TRUE(lwa.is_partition());
  EXPECT_TRUE(lwa.at(Role::kTrafficParticipants).mask.at_pixel(0));
  EXPECT_TRUE(lwa.at(Role::kMapLayout).mask.at_pixel(1));
  EXPECT_TRUE(lwa.at(Role::kBackground).mask.at_pixel(2));
  EXPECT_TRUE(lwa.at(Role::kBackground).mask.at_pixel(3));
  // Outside its mask a layer holds fill values.
  const auto& traffic = lwa.at(Role::kTrafficParticipants).layer.conditions();
  EXPECT_EQ(traffic.at(Modality::kSemantic).values()(1), kVoidClass);
  EXPECT_FALSE(traffic.at(Modality::kDepth).valid_at(1));
  EXPECT_EQ(traffic.at(Modality::kInstance).values()(0), 3);
}

TEST(Decompose, RequiresDepthAndSemantic) {
  ConditionStack only_sem;
  only_sem.insert(tiny_frame().at(Modality::kSemantic));
  EXPECT_THROW(decompose(only_sem, spec()), Error);
}

TEST(Decompose, StrictRejectsUnknownLabels) {
  ConditionStack frame = tiny_frame();
  PixelArray sem = frame.at(Modality::kSemantic).values();
  sem(3) = 77;
  ConditionStack odd({frame.at(Modality::kDepth),
                      ConditionMap(Modality::kSemantic, PixelDomain{2, 2}, sem)});
  EXPECT_NO_THROW(decompose(odd, spec()));
  EXPECT_TRUE(decompose(odd, spec()).at(Role::kBackground).mask.at_pixel(3));
  EXPECT_THROW(decompose(odd, spec(), {true}), Error);
  EXPECT_NO_THROW(decompose(tiny_frame(), spec(), {true}));
}

TEST(Compose, InvertsDecomposeOnRandomFrames) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ConditionStack frame = random_frame(PixelDomain{9, 13}, seed, spec(), true, true);
    const Lwa lwa = decompose(frame, spec());
    EXPECT_TRUE(lwa.is_partition());
    EXPECT_EQ(compose(lwa), frame) << "seed " << seed;
  }
}

TEST(Compose, PriorityResolvesOverlap) {
  Lwa lwa = decompose(tiny_frame(), spec());
  // Give the layout mask the traffic pixel too; traffic must still win.
  lwa.at(Role::kMapLayout).mask.set_pixel(0, true);
  EXPECT_FALSE(lwa.is_partition());
  EXPECT_EQ(compose(lwa).at(Modality::kSemantic).values()(0), spec().index_of("CAR"));
}

TEST(Compose, UncoveredPixelsGetFill) {
  Lwa lwa = decompose(tiny_frame(), spec());
  lwa.at(Role::kBackground).mask.set_pixel(2, false);
  const ConditionStack out = compose(lwa);
  EXPECT_EQ(out.at(Modality::kSemantic).values()(2), kVoidClass);
  EXPECT_FALSE(out.at(Modality::kDepth).valid_at(2));
}

TEST(ExtractModality, MatchesComposite) {
  const ConditionStack frame = random_frame(PixelDomain{6, 6}, 3, spec());
  const Lwa lwa = decompose(frame, spec());
  EXPECT_EQ(extract_modality(lwa, Modality::kDepth), frame.at(Modality::kDepth));
  EXPECT_EQ(extract_modality(lwa, Modality::kRgb), frame.at(Modality::kRgb));
}

TEST(ExtractModality, MissingEverywhereIsError) {
  ConditionStack frame = tiny_frame();  // no RGB
  const Lwa lwa = decompose(frame, spec());
  try {
    extract_modality(lwa, Modality::kRgb);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingModality);
  }
}

TEST(Lwa, RejectsDuplicateRolesAndMixedDomains) {
  const Lwa lwa = decompose(tiny_frame(), spec());
  std::vector<LayerEntry> entries = lwa.entries();
  entries.push_back(entries.front());
  EXPECT_THROW(Lwa(lwa.domain(), entries), Error);
  EXPECT_THROW(Lwa(PixelDomain{3, 3}, lwa.entries()), Error);
}

TEST(Lwa, EqualityIgnoresEntryOrder) {
  const Lwa lwa = decompose(tiny_frame(), spec());
  std::vector<LayerEntry> reversed(lwa.entries().rbegin(), lwa.entries().rend());
  EXPECT_EQ(Lwa(lwa.domain(), reversed), lwa);
}

TEST(ReassignMask, MoveAndBackIsIdentity) {
  const ConditionStack frame = random_frame(PixelDomain{8, 8}, 9, spec());
  const Lwa lwa = decompose(frame, spec());
  const VisibilityMask& traffic = lwa.at(Role::kTrafficParticipants).mask;
  VisibilityMask some(traffic.domain());
  for (Eigen::Index p = 0; p < traffic.domain().pixels(); p += 2) {
    if (traffic.at_pixel(p)) some.set_pixel(p, true);
  }
  ASSERT_FALSE(some.empty());
  const Lwa moved = reassign_mask(lwa, some, Role::kTrafficParticipants, Role::kBackground);
  EXPECT_TRUE(moved.is_partition());
  EXPECT_EQ(compose(moved), frame);
  EXPECT_EQ(reassign_mask(moved, some, Role::kBackground, Role::kTrafficParticipants), lwa);
}

TEST(ReassignMask, RejectsNonSubset) {
  const Lwa lwa = decompose(tiny_frame(), spec());
  try {
    reassign_mask(lwa, lwa.at(Role::kBackground).mask, Role::kTrafficParticipants,
                  Role::kMapLayout);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotSubset);
  }
}

TEST(LwaFiles, SaveLoadRoundTrip) {
  TempDir tmp;
  ConditionStack frame = random_frame(PixelDomain{5, 6}, 4, spec());
  for (auto& m : frame.maps()) {
    m = ConditionMap(m.modality(), m.domain(), m.values().cast<float>().cast<double>(),
                     m.valid());
  }
  const Lwa lwa = decompose(frame, spec());
  save_lwa(tmp.path() / "lwa", lwa);
  EXPECT_EQ(load_lwa(tmp.path() / "lwa"), lwa);
  save_stack(tmp.path() / "stack", frame);
  EXPECT_EQ(load_stack(tmp.path() / "stack"), frame);
  EXPECT_THROW(load_lwa(tmp.path() / "missing"), Error);
}

}  // namespace
}  // namespace lwa
