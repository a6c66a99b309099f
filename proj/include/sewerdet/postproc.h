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

// Post-processing of raw detections on one mosaic: confidence floors,
// duplicate suppression/merging, seam stitching and expert rules.

#ifndef SEWERDET_POSTPROC_H_
#define SEWERDET_POSTPROC_H_

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sewerdet/core.h"
#include "sewerdet/rules.h"

namespace sewerdet {

inline constexpr double kDefaultConfidenceFloor = 0.10;
inline constexpr double kDefaultMergeIou = 0.2;
inline constexpr double kDefaultNmsIou = 0.5;
inline constexpr double kDefaultMinAxialOverlap = 0.1;

struct ThresholdPolicy {
  double global_floor = kDefaultConfidenceFloor;
  std::array<std::optional<double>, kNumClasses> per_class{};

  double Effective(DefectClass c) const;
};

void Validate(const ThresholdPolicy& policy);

// Keeps detections whose confidence is strictly above the effective
// threshold of their class, in input order.
std::vector<Detection> FilterConfidence(std::span<const Detection> dets,
                                        const ThresholdPolicy& policy);

// Fuses same-class detections connected through IoU >= threshold into one
// detection each (enclosing box, max confidence, merged_from = raw source
// ids). Repeats until no two outputs link, so the result is a fixed point.
// A merged detection takes the position and id of its first member with a
// "+m" suffix.
std::vector<Detection> MergeConnected(
    std::span<const Detection> dets,
    double iou_link_threshold = kDefaultMergeIou);

// Greedy per-class non-maximum suppression. Candidates are visited by
// (confidence desc, x asc, y asc, id asc); survivors keep input order.
std::vector<Detection> Nms(std::span<const Detection> dets,
                           double iou_suppress_threshold = kDefaultNmsIou);

struct StitchResult {
  std::vector<Detection> detections;
  std::vector<CylindricalSpan> spans;
};

// Pairs same-class detections touching the top edge with ones touching the
// bottom edge by optimal assignment on 1 - axial overlap ratio; pairs below
// `min_axial_overlap` are forbidden. Boxes touching both edges are not
// candidates. Each matched pair leaves the flat list and becomes a span.
StitchResult StitchSeam(std::span<const Detection> dets,
                        const MosaicGeometry& geometry,
                        double min_axial_overlap = kDefaultMinAxialOverlap);

enum class Stage { kFilter, kMerge, kNms, kStitch, kRules };

std::string_view StageName(Stage s);
std::optional<Stage> ParseStage(std::string_view name);

struct PostprocConfig {
  ThresholdPolicy policy;
  double merge_iou = kDefaultMergeIou;
  double nms_iou = kDefaultNmsIou;
  double min_axial_overlap = kDefaultMinAxialOverlap;
  std::vector<Rule> rules = DefaultExpertRules();
  // The trailing filter drops detections that rules scaled to the floor.
  std::vector<Stage> stages = {Stage::kFilter, Stage::kMerge, Stage::kStitch,
                               Stage::kRules, Stage::kFilter};
};

void Validate(const PostprocConfig& config);

struct PostprocResult {
  std::vector<Detection> detections;
  std::vector<CylindricalSpan> spans;
  std::vector<RuleEvent> audit;
};

// Runs the configured stages in order. The rule stage builds its context
// from the geometry and the BCA detections present at that point.
PostprocResult RunPostproc(std::span<const Detection> dets,
                           const MosaicGeometry& geometry,
                           const PostprocConfig& config);

}  // namespace sewerdet

#endif  // SEWERDET_POSTPROC_H_
