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

// Domain vocabulary shared by every stage: defect classes, severity grades,
// integer pixel boxes on the unrolled pipe mosaic, detections and
// annotations.

#ifndef SEWERDET_CORE_H_
#define SEWERDET_CORE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sewerdet {

// Thrown when a caller violates an operation's preconditions.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The nine defect classes plus the single structural class (connection).
// Letter codes follow the Euronorm catalogue.
enum class DefectClass : std::uint8_t {
  kSettledDeposit,            // BBC
  kBreakCollapse,             // BAC
  kDeformation,               // BAA
  kObstacle,                  // BBE
  kAngularDisplacedJoint,     // BAJ-C
  kSurfaceDamage,             // BAF
  kHorizontalDisplacedJoint,  // BAJ-B
  kFissure,                   // BAB
  kRoot,                      // BBA
  kConnection,                // BCA
};

inline constexpr int kNumClasses = 10;

inline constexpr std::array<DefectClass, kNumClasses> kAllClasses = {
    DefectClass::kSettledDeposit,
    DefectClass::kBreakCollapse,
    DefectClass::kDeformation,
    DefectClass::kObstacle,
    DefectClass::kAngularDisplacedJoint,
    DefectClass::kSurfaceDamage,
    DefectClass::kHorizontalDisplacedJoint,
    DefectClass::kFissure,
    DefectClass::kRoot,
    DefectClass::kConnection,
};

constexpr int ClassIndex(DefectClass c) { return static_cast<int>(c); }
constexpr bool IsStructural(DefectClass c) {
  return c == DefectClass::kConnection;
}

// "BAB", "BAJ-C", ...
std::string_view ClassCode(DefectClass c);
// Human-readable row label as used in evaluation tables ("Fissure").
std::string_view ClassDisplayName(DefectClass c);
// Inverse of ClassCode. Returns nullopt for unknown codes.
std::optional<DefectClass> ParseClassCode(std::string_view code);

// Condition class 0 (very severe) .. 4 (minor).
struct SeverityClass {
  int condition = 4;

  friend bool operator==(SeverityClass, SeverityClass) = default;
};

inline constexpr int kNumSeverities = 5;
// Connections are structural and carry this fixed grade.
inline constexpr SeverityClass kBenignSeverity{4};

std::string_view SeverityLabel(SeverityClass s);
// Throws UsageError outside 0..4.
SeverityClass MakeSeverity(int condition);

// Half-open integer rectangle [x, x+w) x [y, y+h) in mosaic pixels.
struct PixelBox {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  std::int64_t area() const { return std::int64_t{w} * h; }

  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

bool IsValid(const PixelBox& b);
bool Contains(const PixelBox& outer, const PixelBox& inner);
std::int64_t IntersectionArea(const PixelBox& a, const PixelBox& b);

// Intersection over union with exact integer areas.
double Iou(const PixelBox& a, const PixelBox& b);

// Smallest box containing every input. Throws UsageError on empty input.
PixelBox EnclosingBox(std::span<const PixelBox> boxes);

// Overlap of the axial (x) intervals divided by the length of their union.
double AxialOverlapRatio(const PixelBox& a, const PixelBox& b);

enum class Material : std::uint8_t {
  kConcrete,
  kVitrifiedClay,
  kStone,
  kOther,
};

std::string_view MaterialName(Material m);
std::optional<Material> ParseMaterial(std::string_view name);

// One unrolled pipe: the x axis runs along the pipe, the y axis around the
// circumference with the cut (seam) at the ceiling.
struct MosaicGeometry {
  std::string pipe_id;
  int width_px = 0;
  int height_px = 1200;
  double px_per_meter_axial = 0.0;
  Material material = Material::kOther;
  std::vector<int> joint_positions_px;

  double length_m() const { return width_px / px_per_meter_axial; }
  bool InBounds(const PixelBox& b) const;

  friend bool operator==(const MosaicGeometry&,
                         const MosaicGeometry&) = default;
};

// Throws UsageError describing the first violated invariant.
void Validate(const MosaicGeometry& g);

struct Detection {
  std::string id;
  PixelBox box;
  DefectClass cls = DefectClass::kFissure;
  double confidence = 0.0;
  // Source detection ids for merged outputs; empty for raw detections.
  std::vector<std::string> merged_from;
  // Notes attached by the rule engine.
  std::vector<std::string> tags;

  friend bool operator==(const Detection&, const Detection&) = default;
};

void Validate(const Detection& d);

// Deterministic detection ranking: confidence desc, then x, y and id asc.
bool RanksBefore(const Detection& a, const Detection& b);

struct Annotation {
  std::string id;
  PixelBox box;
  DefectClass cls = DefectClass::kFissure;
  SeverityClass severity = kBenignSeverity;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

// One ceiling defect split by the seam into a part touching y = 0 and a part
// touching y = height.
struct CylindricalSpan {
  PixelBox top_part;
  PixelBox bottom_part;
  DefectClass cls = DefectClass::kFissure;
  double confidence = 0.0;
  std::string top_id;
  std::string bottom_id;

  friend bool operator==(const CylindricalSpan&,
                         const CylindricalSpan&) = default;
};

// Both parts as flat detections, e.g. for evaluation.
std::vector<Detection> Flatten(const CylindricalSpan& span);

}  // namespace sewerdet

#endif  // SEWERDET_CORE_H_
