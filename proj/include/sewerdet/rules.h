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

// Declarative expert rules evaluated against detections in pipe context.
//
// A rule is a conjunction of atoms and a single action. Rules run in list
// order for every detection; a suppressed detection is not seen by later
// rules. Distances are axial and expressed in meters, converted through the
// mosaic's px_per_meter_axial.
//
// Rule file format, one rule per line:
//
//   # comment
//   clay_glaze: class_is(BAB) && material_is(vitrified_clay) => tag("glaze")
//
// Atoms:   class_is(CODE)  min_distance_to_joint_or_connection_exceeds(M)
//          within_distance_of_joint(M)  vertical_extent_fraction_at_least(F)
//          aspect_ratio_h_over_w_at_least(R)  material_is(MATERIAL)
// Actions: suppress  scale_confidence(FACTOR)  tag("note")

#ifndef SEWERDET_RULES_H_
#define SEWERDET_RULES_H_

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sewerdet/core.h"

namespace sewerdet {

namespace atom {
struct ClassIs {
  DefectClass cls;
  friend bool operator==(const ClassIs&, const ClassIs&) = default;
};
struct MinDistanceToJointOrConnectionExceeds {
  double meters;
  friend bool operator==(const MinDistanceToJointOrConnectionExceeds&,
                         const MinDistanceToJointOrConnectionExceeds&) =
      default;
};
struct WithinDistanceOfJoint {
  double meters;
  friend bool operator==(const WithinDistanceOfJoint&,
                         const WithinDistanceOfJoint&) = default;
};
struct VerticalExtentFractionAtLeast {
  double fraction;
  friend bool operator==(const VerticalExtentFractionAtLeast&,
                         const VerticalExtentFractionAtLeast&) = default;
};
struct AspectRatioAtLeast {
  double h_over_w;
  friend bool operator==(const AspectRatioAtLeast&,
                         const AspectRatioAtLeast&) = default;
};
struct MaterialIs {
  Material material;
  friend bool operator==(const MaterialIs&, const MaterialIs&) = default;
};
}  // namespace atom

using Atom =
    std::variant<atom::ClassIs, atom::MinDistanceToJointOrConnectionExceeds,
                 atom::WithinDistanceOfJoint,
                 atom::VerticalExtentFractionAtLeast, atom::AspectRatioAtLeast,
                 atom::MaterialIs>;

namespace action {
struct Suppress {
  friend bool operator==(const Suppress&, const Suppress&) = default;
};
struct ScaleConfidence {
  double factor;
  friend bool operator==(const ScaleConfidence&,
                         const ScaleConfidence&) = default;
};
struct Tag {
  std::string note;
  friend bool operator==(const Tag&, const Tag&) = default;
};
}  // namespace action

using Action =
    std::variant<action::Suppress, action::ScaleConfidence, action::Tag>;

struct Rule {
  std::string name;
  std::vector<Atom> atoms;
  Action action;

  friend bool operator==(const Rule&, const Rule&) = default;
};

// Throws UsageError when a rule has no atoms, a scale factor outside (0, 1]
// or a negative distance/fraction parameter.
void Validate(const Rule& rule);

struct PipeContext {
  MosaicGeometry geometry;
  // Boxes of connections (class BCA) in the mosaic frame.
  std::vector<PixelBox> connection_boxes;
};

// Context whose connection boxes are the BCA entries of `detections`.
PipeContext MakePipeContext(const MosaicGeometry& geometry,
                            std::span<const Detection> detections);

// Axial gap in pixels between the box's x interval and the nearest joint
// (0 when a joint falls inside the interval). Infinity without joints.
double AxialDistanceToJointPx(const PixelBox& box, const PipeContext& ctx);
// Same, over joints and connection boxes.
double AxialDistanceToJointOrConnectionPx(const PixelBox& box,
                                          const PipeContext& ctx);

enum class RuleEventKind { kSuppressed, kScaled, kTagged, kSkipped };

std::string_view RuleEventKindName(RuleEventKind kind);

struct RuleEvent {
  std::string detection_id;  // empty for kSkipped
  std::string rule;
  RuleEventKind kind = RuleEventKind::kTagged;
  std::string detail;

  friend bool operator==(const RuleEvent&, const RuleEvent&) = default;
};

struct RuleResult {
  std::vector<Detection> detections;
  std::vector<RuleEvent> audit;
};

// Rules whose atoms need joints are skipped (one kSkipped event each) when
// the context has neither joints nor connections.
RuleResult ApplyRules(std::span<const Detection> detections,
                      const PipeContext& ctx, std::span<const Rule> rules);

// The shipped expert heuristics, all down-weighting or tagging:
// roots away from joints/connections, circumferential fissures next to
// joints, glaze fissures at clay-pipe joints, corrosion on concrete.
std::vector<Rule> DefaultExpertRules();

class RuleParseError : public std::runtime_error {
 public:
  RuleParseError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Parses the rule file format above; throws RuleParseError with 1-based
// line and column on the first problem.
std::vector<Rule> ParseRuleSet(std::string_view text);
std::string FormatRuleSet(std::span<const Rule> rules);

}  // namespace sewerdet

#endif  // SEWERDET_RULES_H_
