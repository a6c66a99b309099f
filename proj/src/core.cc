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

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace sewerdet {

namespace {

struct ClassInfo {
  std::string_view code;
  std::string_view display;
};

constexpr std::array<ClassInfo, kNumClasses> kClassInfo = {{
    {"BBC", "Settled deposit"},
    {"BAC", "Break/collapse"},
    {"BAA", "Deformation"},
    {"BBE", "Obstacle"},
    {"BAJ-C", "Ang. dis. joint"},
    {"BAF", "Surface damage"},
    {"BAJ-B", "Hor. dis. joint"},
    {"BAB", "Fissure"},
    {"BBA", "Root"},
    {"BCA", "Connection"},
}};

constexpr std::array<std::string_view, kNumSeverities> kSeverityLabels = {
    "very severe", "severe", "medium", "slight", "minor"};

constexpr std::array<std::string_view, 4> kMaterialNames = {
    "concrete", "vitrified_clay", "stone", "other"};

}  // namespace

std::string_view ClassCode(DefectClass c) {
  return kClassInfo[ClassIndex(c)].code;
}

std::string_view ClassDisplayName(DefectClass c) {
  return kClassInfo[ClassIndex(c)].display;
}

std::optional<DefectClass> ParseClassCode(std::string_view code) {
  for (DefectClass c : kAllClasses) {
    if (ClassCode(c) == code) return c;
  }
  return std::nullopt;
}

std::string_view SeverityLabel(SeverityClass s) {
  return kSeverityLabels.at(s.condition);
}

SeverityClass MakeSeverity(int condition) {
  if (condition < 0 || condition >= kNumSeverities) {
    throw UsageError("condition class must be in 0..4, got " +
                     std::to_string(condition));
  }
  return SeverityClass{condition};
}

bool IsValid(const PixelBox& b) { return b.w > 0 && b.h > 0; }

bool Contains(const PixelBox& outer, const PixelBox& inner) {
  return inner.x >= outer.x && inner.y >= outer.y &&
         inner.right() <= outer.right() && inner.bottom() <= outer.bottom();
}

std::int64_t IntersectionArea(const PixelBox& a, const PixelBox& b) {
  const std::int64_t iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const std::int64_t ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0) return 0;
  return iw * ih;
}

double Iou(const PixelBox& a, const PixelBox& b) {
  const std::int64_t inter = IntersectionArea(a, b);
  if (inter == 0) return 0.0;
  const std::int64_t uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

PixelBox EnclosingBox(std::span<const PixelBox> boxes) {
  if (boxes.empty()) throw UsageError("EnclosingBox: empty box list");
  int x0 = boxes.front().x, y0 = boxes.front().y;
  int x1 = boxes.front().right(), y1 = boxes.front().bottom();
  for (const PixelBox& b : boxes.subspan(1)) {
    x0 = std::min(x0, b.x);
    y0 = std::min(y0, b.y);
    x1 = std::max(x1, b.right());
    y1 = std::max(y1, b.bottom());
  }
  return PixelBox{x0, y0, x1 - x0, y1 - y0};
}

double AxialOverlapRatio(const PixelBox& a, const PixelBox& b) {
  const int inter = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  if (inter <= 0) return 0.0;
  const int uni = std::max(a.right(), b.right()) - std::min(a.x, b.x);
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string_view MaterialName(Material m) {
  return kMaterialNames[static_cast<int>(m)];
}

std::optional<Material> ParseMaterial(std::string_view name) {
  for (int i = 0; i < static_cast<int>(kMaterialNames.size()); ++i) {
    if (kMaterialNames[i] == name) return static_cast<Material>(i);
  }
  return std::nullopt;
}

bool MosaicGeometry::InBounds(const PixelBox& b) const {
  return IsValid(b) && b.x >= 0 && b.y >= 0 && b.right() <= width_px &&
         b.bottom() <= height_px;
}

void Validate(const MosaicGeometry& g) {
  if (g.width_px <= 0) throw UsageError("mosaic width must be positive");
  if (g.height_px <= 0) throw UsageError("mosaic height must be positive");
  if (!(g.px_per_meter_axial > 0.0) || !std::isfinite(g.px_per_meter_axial)) {
    throw UsageError("px_per_meter_axial must be a positive finite number");
  }
  for (size_t i = 0; i < g.joint_positions_px.size(); ++i) {
    const int j = g.joint_positions_px[i];
    if (j < 0 || j > g.width_px) {
      throw UsageError("joint position " + std::to_string(j) +
                       " outside [0, width]");
    }
    if (i > 0 && g.joint_positions_px[i - 1] >= j) {
      throw UsageError("joint positions must be strictly ascending");
    }
  }
}

void Validate(const Detection& d) {
  if (!IsValid(d.box)) throw UsageError("detection " + d.id + ": empty box");
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
    throw UsageError("detection " + d.id + ": confidence outside [0, 1]");
  }
  std::unordered_set<std::string> seen;
  for (const std::string& src : d.merged_from) {
    if (src == d.id || !seen.insert(src).second) {
      throw UsageError("detection " + d.id +
                       ": merged_from has duplicates or its own id");
    }
  }
}

bool RanksBefore(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.box.x != b.box.x) return a.box.x < b.box.x;
  if (a.box.y != b.box.y) return a.box.y < b.box.y;
  return a.id < b.id;
}

std::vector<Detection> Flatten(const CylindricalSpan& span) {
  Detection top{span.top_id, span.top_part, span.cls, span.confidence, {}, {}};
  Detection bottom{
      span.bottom_id, span.bottom_part, span.cls, span.confidence, {}, {}};
  return {std::move(top), std::move(bottom)};
}

}  // namespace sewerdet
