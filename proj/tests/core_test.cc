// Copyright 2026 The Sewerdet Authors. All Rights Reserved.
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

#include "sewerdet/core.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "test_util.h"

namespace sewerdet {
namespace {

using testing::RandomBox;

// Counts shared unit cells of two boxes by enumeration.
double PixelSetIou(const PixelBox& a, const PixelBox& b) {
  std::set<std::pair<int, int>> cells;
  for (int x = a.x; x < a.right(); ++x) {
    for (int y = a.y; y < a.bottom(); ++y) cells.insert({x, y});
  }
  std::int64_t shared = 0;
  for (int x = b.x; x < b.right(); ++x) {
    for (int y = b.y; y < b.bottom(); ++y) shared += cells.count({x, y});
  }
  if (shared == 0) return 0.0;
  const std::int64_t uni =
      static_cast<std::int64_t>(cells.size()) + b.area() - shared;
  return static_cast<double>(shared) / static_cast<double>(uni);
}

TEST(DefectClassTest, TenDistinctCodesRoundTrip) {
  std::set<std::string_view> codes;
  for (DefectClass c : kAllClasses) {
    codes.insert(ClassCode(c));
    ASSERT_EQ(ParseClassCode(ClassCode(c)), c);
  }
  EXPECT_EQ(codes.size(), 10u);
  EXPECT_FALSE(ParseClassCode("XYZ").has_value());
  EXPECT_FALSE(ParseClassCode("bab").has_value());
}

TEST(DefectClassTest, ConnectionIsTheOnlyStructuralClass) {
  int structural = 0;
  for (DefectClass c : kAllClasses) structural += IsStructural(c) ? 1 : 0;
  EXPECT_EQ(structural, 1);
  EXPECT_TRUE(IsStructural(DefectClass::kConnection));
  EXPECT_EQ(ClassCode(DefectClass::kConnection), "BCA");
  EXPECT_EQ(ClassCode(DefectClass::kAngularDisplacedJoint), "BAJ-C");
  EXPECT_EQ(ClassCode(DefectClass::kHorizontalDisplacedJoint), "BAJ-B");
}

TEST(SeverityTest, FixedLabels) {
  EXPECT_EQ(SeverityLabel(MakeSeverity(0)), "very severe");
  EXPECT_EQ(SeverityLabel(MakeSeverity(1)), "severe");
  EXPECT_EQ(SeverityLabel(MakeSeverity(2)), "medium");
  EXPECT_EQ(SeverityLabel(MakeSeverity(3)), "slight");
  EXPECT_EQ(SeverityLabel(MakeSeverity(4)), "minor");
  EXPECT_THROW(MakeSeverity(5), UsageError);
  EXPECT_THROW(MakeSeverity(-1), UsageError);
}

TEST(IouTest, Examples) {
  EXPECT_EQ(Iou({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
  EXPECT_EQ(Iou({0, 0, 10, 10}, {20, 0, 10, 10}), 0.0);
  // 50 shared cells over 150 covered cells.
  EXPECT_DOUBLE_EQ(Iou({0, 0, 10, 10}, {5, 0, 10, 10}), 50.0 / 150.0);
}

TEST(IouTest, TouchingEdgesDoNotOverlap) {
  EXPECT_EQ(Iou({0, 0, 10, 10}, {10, 0, 10, 10}), 0.0);
  EXPECT_EQ(IntersectionArea({0, 0, 10, 10}, {0, 10, 10, 10}), 0);
}

TEST(IouTest, MatchesPixelSetOracleOnRandomPairs) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10000; ++i) {
    const PixelBox a = RandomBox(rng, 30, 20);
    const PixelBox b = RandomBox(rng, 30, 20);
    ASSERT_EQ(Iou(a, b), PixelSetIou(a, b)) << i;
  }
}

TEST(IouTest, SymmetryIdentityAndContainment) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 2000; ++i) {
    const PixelBox a = RandomBox(rng, 500, 200);
    const PixelBox b = RandomBox(rng, 500, 200);
    ASSERT_EQ(Iou(a, b), Iou(b, a));
    ASSERT_EQ(Iou(a, a), 1.0);
    const double v = Iou(a, b);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    if (Contains(a, b)) {
      ASSERT_DOUBLE_EQ(v, static_cast<double>(b.area()) / a.area());
    }
  }
  const PixelBox outer{0, 0, 20, 10};
  const PixelBox inner{5, 2, 4, 5};
  EXPECT_DOUBLE_EQ(Iou(outer, inner), 20.0 / 200.0);
}

TEST(IouTest, LargeCoordinatesUseWideArithmetic) {
  const PixelBox a{0, 0, 150000, 1200};
  const PixelBox b{75000, 0, 150000, 1200};
  EXPECT_DOUBLE_EQ(Iou(a, b), 1.0 / 3.0);
}

TEST(EnclosingBoxTest, Examples) {
  const std::vector<PixelBox> single = {{0, 0, 10, 10}};
  EXPECT_EQ(EnclosingBox(single), (PixelBox{0, 0, 10, 10}));
  const std::vector<PixelBox> two = {{0, 0, 10, 10}, {20, 20, 10, 10}};
  EXPECT_EQ(EnclosingBox(two), (PixelBox{0, 0, 30, 30}));
  const std::vector<PixelBox> nested = {{5, 5, 1, 1}, {0, 0, 10, 10}};
  EXPECT_EQ(EnclosingBox(nested), (PixelBox{0, 0, 10, 10}));
}

TEST(EnclosingBoxTest, EmptyListIsAUsageError) {
  EXPECT_THROW(EnclosingBox(std::vector<PixelBox>{}), UsageError);
}

TEST(EnclosingBoxTest, OrderInvariantIdempotentAndContaining) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 500; ++i) {
    std::vector<PixelBox> boxes;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < n; ++k) boxes.push_back(RandomBox(rng, 1000, 300));
    const PixelBox e = EnclosingBox(boxes);
    for (const PixelBox& b : boxes) ASSERT_TRUE(Contains(e, b));
    std::shuffle(boxes.begin(), boxes.end(), rng);
    ASSERT_EQ(EnclosingBox(boxes), e);
    const std::vector<PixelBox> again = {e};
    ASSERT_EQ(EnclosingBox(again), e);
  }
}

TEST(AxialOverlapTest, Examples) {
  EXPECT_EQ(AxialOverlapRatio({0, 0, 10, 5}, {0, 100, 10, 7}), 1.0);
  EXPECT_EQ(AxialOverlapRatio({0, 0, 10, 5}, {20, 0, 10, 5}), 0.0);
  EXPECT_DOUBLE_EQ(AxialOverlapRatio({0, 0, 10, 5}, {5, 0, 10, 5}), 5.0 / 15.0);
}

TEST(GeometryTest, Validation) {
  MosaicGeometry g = testing::MakeGeometry(2000, 500.0, {500, 1000});
  EXPECT_NO_THROW(Validate(g));
  EXPECT_DOUBLE_EQ(g.length_m(), 4.0);
  g.joint_positions_px = {1000, 500};
  EXPECT_THROW(Validate(g), UsageError);
  g.joint_positions_px = {500, 500};
  EXPECT_THROW(Validate(g), UsageError);
  g.joint_positions_px = {2001};
  EXPECT_THROW(Validate(g), UsageError);
  g.joint_positions_px = {0, 2000};
  EXPECT_NO_THROW(Validate(g));
  g.width_px = 0;
  EXPECT_THROW(Validate(g), UsageError);
  g = testing::MakeGeometry(100, 0.0);
  EXPECT_THROW(Validate(g), UsageError);
}

TEST(GeometryTest, InBounds) {
  const MosaicGeometry g = testing::MakeGeometry(1000);
  EXPECT_TRUE(g.InBounds({0, 0, 1000, 1200}));
  EXPECT_FALSE(g.InBounds({1, 0, 1000, 1200}));
  EXPECT_FALSE(g.InBounds({0, -1, 10, 10}));
  EXPECT_FALSE(g.InBounds({0, 0, 0, 10}));
}

TEST(MaterialTest, NamesRoundTrip) {
  for (Material m : {Material::kConcrete, Material::kVitrifiedClay,
                     Material::kStone, Material::kOther}) {
    EXPECT_EQ(ParseMaterial(MaterialName(m)), m);
  }
  EXPECT_FALSE(ParseMaterial("steel").has_value());
}

TEST(DetectionTest, Validation) {
  Detection d =
      testing::MakeDetection("d1", {0, 0, 5, 5}, DefectClass::kFissure, 0.5);
  EXPECT_NO_THROW(Validate(d));
  d.confidence = 1.5;
  EXPECT_THROW(Validate(d), UsageError);
  d.confidence = 0.5;
  d.merged_from = {"a", "b"};
  EXPECT_NO_THROW(Validate(d));
  d.merged_from = {"a", "a"};
  EXPECT_THROW(Validate(d), UsageError);
  d.merged_from = {"d1"};
  EXPECT_THROW(Validate(d), UsageError);
}

TEST(DetectionTest, RankOrder) {
  const Detection hi =
      testing::MakeDetection("z", {50, 0, 1, 1}, DefectClass::kRoot, 0.9);
  const Detection lo_left =
      testing::MakeDetection("y", {10, 5, 1, 1}, DefectClass::kRoot, 0.8);
  const Detection lo_right =
      testing::MakeDetection("a", {20, 0, 1, 1}, DefectClass::kRoot, 0.8);
  EXPECT_TRUE(RanksBefore(hi, lo_left));
  EXPECT_TRUE(RanksBefore(lo_left, lo_right));
  EXPECT_FALSE(RanksBefore(lo_right, lo_left));
}

TEST(SpanTest, FlattenKeepsBothParts) {
  CylindricalSpan s{{10, 0, 20, 30},
                    {12, 1180, 20, 20},
                    DefectClass::kFissure,
                    0.7,
                    "t",
                    "b"};
  const std::vector<Detection> parts = Flatten(s);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].id, "t");
  EXPECT_EQ(parts[0].box, s.top_part);
  EXPECT_EQ(parts[1].box, s.bottom_part);
  EXPECT_EQ(parts[1].confidence, 0.7);
}

}  // namespace
}  // namespace sewerdet
