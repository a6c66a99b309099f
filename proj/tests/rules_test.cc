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

#include "sewerdet/rules.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "test_util.h"

namespace sewerdet {
namespace {

using testing::MakeDetection;
using testing::MakeGeometry;

constexpr DefectClass kFissure = DefectClass::kFissure;
constexpr DefectClass kRoot = DefectClass::kRoot;
constexpr DefectClass kConnection = DefectClass::kConnection;

Rule RootsAway(double meters, double factor) {
  return {"roots_away",
          {atom::ClassIs{kRoot},
           atom::MinDistanceToJointOrConnectionExceeds{meters}},
          action::ScaleConfidence{factor}};
}

Rule CircumferentialSuppress() {
  return {"circumferential",
          {atom::ClassIs{kFissure}, atom::VerticalExtentFractionAtLeast{0.8},
           atom::WithinDistanceOfJoint{0.3}},
          action::Suppress{}};
}

TEST(ApplyRulesTest, EmptyRuleListIsIdentity) {
  const PipeContext ctx{MakeGeometry(5000), {}};
  const std::vector<Detection> dets = {
      MakeDetection("a", {0, 0, 10, 10}, kRoot, 0.5)};
  const RuleResult r = ApplyRules(dets, ctx, {});
  EXPECT_EQ(r.detections, dets);
  EXPECT_TRUE(r.audit.empty());
}

TEST(ApplyRulesTest, RootFiveMetersFromConnectionIsScaled) {
  const MosaicGeometry g = MakeGeometry(10000, 500.0);
  // Connection ends at x=100; the root starts 5 m (2500 px) later.
  const std::vector<Detection> dets = {
      MakeDetection("c", {0, 0, 100, 300}, kConnection, 0.9),
      MakeDetection("r", {2600, 500, 80, 80}, kRoot, 0.8)};
  const PipeContext ctx = MakePipeContext(g, dets);
  EXPECT_DOUBLE_EQ(AxialDistanceToJointOrConnectionPx(dets[1].box, ctx) /
                       g.px_per_meter_axial,
                   5.0);
  const std::vector<Rule> rules = {RootsAway(1.0, 0.5)};
  const RuleResult r = ApplyRules(dets, ctx, rules);
  ASSERT_EQ(r.detections.size(), 2u);
  EXPECT_EQ(r.detections[0].confidence, 0.9);
  EXPECT_DOUBLE_EQ(r.detections[1].confidence, 0.4);
  ASSERT_EQ(r.audit.size(), 1u);
  EXPECT_EQ(r.audit[0].detection_id, "r");
  EXPECT_EQ(r.audit[0].kind, RuleEventKind::kScaled);
}

TEST(ApplyRulesTest, RootNearJointIsUntouched) {
  const MosaicGeometry g = MakeGeometry(10000, 500.0, {3000});
  const std::vector<Detection> dets = {
      MakeDetection("r", {3100, 500, 80, 80}, kRoot, 0.8)};
  const std::vector<Rule> rules = {RootsAway(1.0, 0.5)};
  const RuleResult r = ApplyRules(dets, MakePipeContext(g, dets), rules);
  EXPECT_EQ(r.detections, dets);
}

TEST(ApplyRulesTest, TallFissureAtJointIsSuppressed) {
  const MosaicGeometry g = MakeGeometry(10000, 500.0, {4000});
  // Vertical extent 0.9 * 1200; axial gap 100 px = 0.2 m.
  const std::vector<Detection> dets = {
      MakeDetection("f", {3850, 60, 50, 1080}, kFissure, 0.7),
      MakeDetection("far", {6000, 60, 50, 1080}, kFissure, 0.7)};
  const std::vector<Rule> rules = {CircumferentialSuppress()};
  const RuleResult r = ApplyRules(dets, MakePipeContext(g, dets), rules);
  ASSERT_EQ(r.detections.size(), 1u);
  EXPECT_EQ(r.detections[0].id, "far");
  ASSERT_EQ(r.audit.size(), 1u);
  EXPECT_EQ(r.audit[0].kind, RuleEventKind::kSuppressed);
  EXPECT_EQ(r.audit[0].detection_id, "f");
}

TEST(ApplyRulesTest, JointRulesAreSkippedWithoutAnchors) {
  const MosaicGeometry g = MakeGeometry(10000);
  const std::vector<Detection> dets = {
      MakeDetection("r", {2600, 500, 80, 80}, kRoot, 0.8),
      MakeDetection("r2", {5600, 500, 80, 80}, kRoot, 0.8)};
  const std::vector<Rule> rules = {
      RootsAway(1.0, 0.5),
      {"tag_roots", {atom::ClassIs{kRoot}}, action::Tag{"root"}}};
  const RuleResult r = ApplyRules(dets, MakePipeContext(g, dets), rules);
  ASSERT_EQ(r.detections.size(), 2u);
  EXPECT_EQ(r.detections[0].confidence, 0.8);
  EXPECT_EQ(r.detections[0].tags, std::vector<std::string>{"root"});
  const auto skipped = std::count_if(
      r.audit.begin(), r.audit.end(),
      [](const RuleEvent& e) { return e.kind == RuleEventKind::kSkipped; });
  EXPECT_EQ(skipped, 1);
  EXPECT_EQ(r.audit[0].rule, "roots_away");
  EXPECT_TRUE(r.audit[0].detection_id.empty());
}

TEST(ApplyRulesTest, OrderMatters) {
  const MosaicGeometry g = MakeGeometry(10000, 500.0, {4000});
  const std::vector<Detection> dets = {
      MakeDetection("f", {3850, 60, 50, 1080}, kFissure, 0.7)};
  const Rule tag{"tag", {atom::ClassIs{kFissure}}, action::Tag{"seen"}};
  const std::vector<Rule> suppress_first = {CircumferentialSuppress(), tag};
  const std::vector<Rule> tag_first = {tag, CircumferentialSuppress()};
  const PipeContext ctx = MakePipeContext(g, dets);
  EXPECT_EQ(ApplyRules(dets, ctx, suppress_first).audit.size(), 1u);
  EXPECT_EQ(ApplyRules(dets, ctx, tag_first).audit.size(), 2u);
}

TEST(ApplyRulesTest, ScaleOnlyKeepsIdsAndSuppressOnlyShrinks) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  const MosaicGeometry g = MakeGeometry(20000, 500.0, {2000, 8000, 15000});
  const std::vector<Rule> scale_only = {
      RootsAway(0.5, 0.5),
      {"fissures", {atom::ClassIs{kFissure}}, action::ScaleConfidence{0.9}}};
  const std::vector<Rule> suppress_only = {
      CircumferentialSuppress(),
      {"roots",
       {atom::ClassIs{kRoot}, atom::WithinDistanceOfJoint{1.0}},
       action::Suppress{}}};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Detection> dets;
    for (int i = 0; i < 30; ++i) {
      PixelBox b = testing::RandomBox(rng, 19000, 1000);
      b.y = std::min(b.y, 1200 - b.h);
      dets.push_back(MakeDetection("d" + std::to_string(i), b,
                                   (rng() % 2) ? kRoot : kFissure, conf(rng)));
    }
    const PipeContext ctx = MakePipeContext(g, dets);
    const RuleResult scaled = ApplyRules(dets, ctx, scale_only);
    ASSERT_EQ(scaled.detections.size(), dets.size());
    for (size_t i = 0; i < dets.size(); ++i) {
      ASSERT_EQ(scaled.detections[i].id, dets[i].id);
      ASSERT_LE(scaled.detections[i].confidence, dets[i].confidence);
      ASSERT_GE(scaled.detections[i].confidence, 0.0);
    }
    const RuleResult suppressed = ApplyRules(dets, ctx, suppress_only);
    std::set<std::string> ids;
    for (const Detection& d : dets) ids.insert(d.id);
    for (const Detection& d : suppressed.detections) {
      ASSERT_TRUE(ids.count(d.id));
      ASSERT_EQ(d.confidence,
                std::find_if(dets.begin(), dets.end(), [&](const Detection& x) {
                  return x.id == d.id;
                })->confidence);
    }
  }
}

// Smallest distance from a joint to any boundary position of the box.
double BruteJointGap(const PixelBox& box, const std::vector<int>& joints) {
  double best = std::numeric_limits<double>::infinity();
  for (int j : joints) {
    for (int p = box.x; p <= box.right(); ++p) {
      best = std::min(best, static_cast<double>(std::abs(p - j)));
    }
  }
  return best;
}

TEST(DistanceTest, MatchesBruteForce) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> joints;
    for (int k = 0; k < 3; ++k)
      joints.push_back(static_cast<int>(rng() % 2000));
    std::sort(joints.begin(), joints.end());
    const PipeContext ctx{MakeGeometry(2000, 500.0, joints), {}};
    const PixelBox b = testing::RandomBox(rng, 1900, 100);
    ASSERT_EQ(AxialDistanceToJointPx(b, ctx), BruteJointGap(b, joints));
  }
  const PipeContext none{MakeGeometry(2000), {}};
  EXPECT_TRUE(std::isinf(AxialDistanceToJointPx({0, 0, 5, 5}, none)));
}

TEST(RuleValidationTest, RejectsBadParameters) {
  EXPECT_THROW(Validate(Rule{"x", {}, action::Suppress{}}), UsageError);
  EXPECT_THROW(Validate(RootsAway(1.0, 0.0)), UsageError);
  EXPECT_THROW(Validate(RootsAway(1.0, 1.5)), UsageError);
  EXPECT_THROW(Validate(RootsAway(-1.0, 0.5)), UsageError);
  EXPECT_NO_THROW(Validate(RootsAway(1.0, 1.0)));
}

TEST(DefaultRulesTest, ShipOnlyDownWeightingOrTags) {
  for (const Rule& rule : DefaultExpertRules()) {
    EXPECT_NO_THROW(Validate(rule));
    EXPECT_FALSE(std::holds_alternative<action::Suppress>(rule.action))
        << rule.name;
  }
}

TEST(RuleParserTest, ParsesExample) {
  const std::string text =
      "# comment line\n"
      "\n"
      "roots: class_is(BBA) && min_distance_to_joint_or_connection_exceeds(1.0)"
      " => scale_confidence(0.5)\n"
      "clay: class_is(BAB) && material_is(vitrified_clay) => tag(\"glaze\")  # "
      "ok\n"
      "tall: vertical_extent_fraction_at_least(0.9) => suppress\n";
  const std::vector<Rule> rules = ParseRuleSet(text);
  ASSERT_EQ(rules.size(), 3u);
  EXPECT_EQ(rules[0].name, "roots");
  EXPECT_EQ(
      rules[0].atoms,
      (std::vector<Atom>{atom::ClassIs{kRoot},
                         atom::MinDistanceToJointOrConnectionExceeds{1.0}}));
  EXPECT_EQ(rules[0].action, Action(action::ScaleConfidence{0.5}));
  EXPECT_EQ(rules[1].action, Action(action::Tag{"glaze"}));
  EXPECT_EQ(rules[2].action, Action(action::Suppress{}));
}

void ExpectParseError(const std::string& text, int line, int column) {
  try {
    ParseRuleSet(text);
    ADD_FAILURE() << "no error for: " << text;
  } catch (const RuleParseError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_EQ(e.column(), column) << e.what();
  }
}

TEST(RuleParserTest, LinePreciseDiagnostics) {
  ExpectParseError(
      "ok: class_is(BBA) => suppress\nbad: clas_is(BBA) => suppress", 2, 6);
  ExpectParseError("x: class_is(BBA) => explode", 1, 21);
  ExpectParseError("x: class_is(XYZ) => suppress", 1, 13);
  ExpectParseError("x: material_is(steel) => suppress", 1, 16);
  ExpectParseError("x: class_is(BBA) suppress", 1, 18);
  ExpectParseError("x: class_is(BBA) => scale_confidence(2)", 1, 21);
  ExpectParseError("x: class_is(BBA) => suppress extra", 1, 30);
  ExpectParseError("x: class_is(BBA) => suppress\nx: class_is(BAB) => suppress",
                   2, 1);
  ExpectParseError("\n\n  x: within_distance_of_joint(abc) => suppress", 3, 31);
}

TEST(RuleParserTest, FormatRoundTrip) {
  const std::vector<Rule> defaults = DefaultExpertRules();
  EXPECT_EQ(ParseRuleSet(FormatRuleSet(defaults)), defaults);
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Rule> rules;
    for (int i = 0; i < 4; ++i) {
      Rule rule;
      rule.name = "rule_" + std::to_string(i);
      rule.atoms = {atom::ClassIs{kAllClasses[rng() % kAllClasses.size()]},
                    atom::WithinDistanceOfJoint{unit(rng) * 3},
                    atom::VerticalExtentFractionAtLeast{unit(rng)},
                    atom::AspectRatioAtLeast{unit(rng) * 10}};
      rule.action =
          (i % 2) ? Action(action::ScaleConfidence{0.01 + 0.99 * unit(rng)})
                  : Action(action::Tag{"note " + std::to_string(i)});
      rules.push_back(rule);
    }
    ASSERT_EQ(ParseRuleSet(FormatRuleSet(rules)), rules);
  }
}

}  // namespace
}  // namespace sewerdet
