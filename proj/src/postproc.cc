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

#include "sewerdet/postproc.h"

#include <algorithm>
#include <numeric>
#include <tuple>
#include <unordered_set>

namespace sewerdet {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), size_t{0});
  }
  size_t Find(size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  // Returns true when two different sets were joined.
  bool Union(size_t a, size_t b) {
    a = Find(a);
    b = Find(b);
    if (a == b) return false;
    parent_[std::max(a, b)] = std::min(a, b);
    return true;
  }

 private:
  std::vector<size_t> parent_;
};

// Indices sorted by (class, x) for an axial sweep.
std::vector<size_t> SweepOrder(std::span<const Detection> dets) {
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::tuple(dets[a].cls, dets[a].box.x, a) <
           std::tuple(dets[b].cls, dets[b].box.x, b);
  });
  return order;
}

void AppendUnique(std::vector<std::string>& out,
                  std::unordered_set<std::string>& seen,
                  const std::string& value) {
  if (seen.insert(value).second) out.push_back(value);
}

// One round of connected-component merging. Returns nullopt when no edge
// joined two detections.
std::optional<std::vector<Detection>> MergeOnce(std::span<const Detection> dets,
                                                double threshold) {
  DisjointSets sets(dets.size());
  bool joined = false;
  const std::vector<size_t> order = SweepOrder(dets);
  for (size_t a = 0; a < order.size(); ++a) {
    const Detection& da = dets[order[a]];
    for (size_t b = a + 1; b < order.size(); ++b) {
      const Detection& db = dets[order[b]];
      if (db.cls != da.cls || db.box.x >= da.box.right()) break;
      if (Iou(da.box, db.box) >= threshold) {
        joined |= sets.Union(order[a], order[b]);
      }
    }
  }
  if (!joined) return std::nullopt;

  std::vector<std::vector<size_t>> members(dets.size());
  for (size_t i = 0; i < dets.size(); ++i) members[sets.Find(i)].push_back(i);

  std::vector<Detection> out;
  for (size_t root = 0; root < dets.size(); ++root) {
    const std::vector<size_t>& group = members[root];
    if (group.empty()) continue;
    const Detection& first = dets[group.front()];
    if (group.size() == 1) {
      out.push_back(first);
      continue;
    }
    Detection merged;
    merged.id = first.merged_from.empty() ? first.id + "+m" : first.id;
    merged.cls = first.cls;
    std::vector<PixelBox> boxes;
    std::unordered_set<std::string> seen_src, seen_tag;
    for (size_t i : group) {
      const Detection& d = dets[i];
      boxes.push_back(d.box);
      merged.confidence = std::max(merged.confidence, d.confidence);
      if (d.merged_from.empty()) {
        AppendUnique(merged.merged_from, seen_src, d.id);
      } else {
        for (const std::string& s : d.merged_from) {
          AppendUnique(merged.merged_from, seen_src, s);
        }
      }
      for (const std::string& t : d.tags)
        AppendUnique(merged.tags, seen_tag, t);
    }
    merged.box = EnclosingBox(boxes);
    out.push_back(std::move(merged));
  }
  return out;
}

}  // namespace

double ThresholdPolicy::Effective(DefectClass c) const {
  const std::optional<double>& specific = per_class[ClassIndex(c)];
  return specific ? std::max(global_floor, *specific) : global_floor;
}

void Validate(const ThresholdPolicy& policy) {
  auto in_unit = [](double t) { return t >= 0.0 && t <= 1.0; };
  if (!in_unit(policy.global_floor)) {
    throw UsageError("global confidence floor must be in [0, 1]");
  }
  for (DefectClass c : kAllClasses) {
    const auto& t = policy.per_class[ClassIndex(c)];
    if (t && !in_unit(*t)) {
      throw UsageError("threshold for " + std::string(ClassCode(c)) +
                       " must be in [0, 1]");
    }
  }
}

std::vector<Detection> FilterConfidence(std::span<const Detection> dets,
                                        const ThresholdPolicy& policy) {
  std::vector<Detection> out;
  for (const Detection& d : dets) {
    if (d.confidence > policy.Effective(d.cls)) out.push_back(d);
  }
  return out;
}

std::vector<Detection> MergeConnected(std::span<const Detection> dets,
                                      double iou_link_threshold) {
  if (!(iou_link_threshold > 0.0 && iou_link_threshold <= 1.0)) {
    throw UsageError("merge IoU threshold must be in (0, 1]");
  }
  std::vector<Detection> current(dets.begin(), dets.end());
  while (auto next = MergeOnce(current, iou_link_threshold)) {
    current = std::move(*next);
  }
  return current;
}

std::vector<Detection> Nms(std::span<const Detection> dets,
                           double iou_suppress_threshold) {
  if (!(iou_suppress_threshold > 0.0 && iou_suppress_threshold <= 1.0)) {
    throw UsageError("NMS IoU threshold must be in (0, 1]");
  }
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return RanksBefore(dets[a], dets[b]); });
  std::vector<char> suppressed(dets.size(), 0);
  for (size_t a = 0; a < order.size(); ++a) {
    if (suppressed[order[a]]) continue;
    const Detection& keep = dets[order[a]];
    for (size_t b = a + 1; b < order.size(); ++b) {
      const Detection& other = dets[order[b]];
      if (suppressed[order[b]] || other.cls != keep.cls) continue;
      if (Iou(keep.box, other.box) >= iou_suppress_threshold) {
        suppressed[order[b]] = 1;
      }
    }
  }
  std::vector<Detection> out;
  for (size_t i = 0; i < dets.size(); ++i) {
    if (!suppressed[i]) out.push_back(dets[i]);
  }
  return out;
}

std::string_view StageName(Stage s) {
  switch (s) {
    case Stage::kFilter:
      return "filter";
    case Stage::kMerge:
      return "merge";
    case Stage::kNms:
      return "nms";
    case Stage::kStitch:
      return "stitch";
    case Stage::kRules:
      return "rules";
  }
  return "?";
}

std::optional<Stage> ParseStage(std::string_view name) {
  for (Stage s : {Stage::kFilter, Stage::kMerge, Stage::kNms, Stage::kStitch,
                  Stage::kRules}) {
    if (StageName(s) == name) return s;
  }
  return std::nullopt;
}

void Validate(const PostprocConfig& config) {
  Validate(config.policy);
  if (!(config.merge_iou > 0.0 && config.merge_iou <= 1.0)) {
    throw UsageError("merge IoU threshold must be in (0, 1]");
  }
  if (!(config.nms_iou > 0.0 && config.nms_iou <= 1.0)) {
    throw UsageError("NMS IoU threshold must be in (0, 1]");
  }
  if (!(config.min_axial_overlap >= 0.0 && config.min_axial_overlap <= 1.0)) {
    throw UsageError("minimum axial overlap must be in [0, 1]");
  }
  for (const Rule& r : config.rules) Validate(r);
}

PostprocResult RunPostproc(std::span<const Detection> dets,
                           const MosaicGeometry& geometry,
                           const PostprocConfig& config) {
  Validate(config);
  PostprocResult result;
  result.detections.assign(dets.begin(), dets.end());
  for (Stage stage : config.stages) {
    switch (stage) {
      case Stage::kFilter:
        result.detections = FilterConfidence(result.detections, config.policy);
        break;
      case Stage::kMerge:
        result.detections = MergeConnected(result.detections, config.merge_iou);
        break;
      case Stage::kNms:
        result.detections = Nms(result.detections, config.nms_iou);
        break;
      case Stage::kStitch: {
        StitchResult stitched =
            StitchSeam(result.detections, geometry, config.min_axial_overlap);
        result.detections = std::move(stitched.detections);
        for (CylindricalSpan& s : stitched.spans) {
          result.spans.push_back(std::move(s));
        }
        break;
      }
      case Stage::kRules: {
        const PipeContext ctx = MakePipeContext(geometry, result.detections);
        RuleResult ruled = ApplyRules(result.detections, ctx, config.rules);
        result.detections = std::move(ruled.detections);
        for (RuleEvent& e : ruled.audit) result.audit.push_back(std::move(e));
        break;
      }
    }
  }
  return result;
}

}  // namespace sewerdet
