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

#include <algorithm>

#include "sewerdet/metrics.h"

namespace sewerdet {

namespace {

constexpr int kRecallPoints = 101;

struct RankedEntry {
  const Detection* det = nullptr;
  size_t pipe = 0;
  bool tp = false;
};

}  // namespace

std::vector<PrPoint> PrecisionRecallCurve(
    std::span<const ScoredDetection> ranked, std::int64_t num_positives) {
  std::vector<PrPoint> curve;
  curve.reserve(ranked.size());
  std::int64_t tp = 0;
  for (size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].true_positive) ++tp;
    curve.push_back(
        {static_cast<double>(tp) / static_cast<double>(i + 1),
         num_positives > 0 ? static_cast<double>(tp) / num_positives : 0.0});
  }
  return curve;
}

std::vector<double> InterpolatedPrecision(std::span<const PrPoint> curve) {
  std::vector<double> out(curve.size());
  double running = 0.0;
  for (size_t i = curve.size(); i-- > 0;) {
    running = std::max(running, curve[i].precision);
    out[i] = running;
  }
  return out;
}

std::optional<double> AveragePrecisionFromRanked(
    std::span<const ScoredDetection> ranked, std::int64_t num_positives) {
  if (num_positives <= 0) return std::nullopt;
  const std::vector<PrPoint> curve =
      PrecisionRecallCurve(ranked, num_positives);
  const std::vector<double> interp = InterpolatedPrecision(curve);

  // Recall threshold k/100 is reached at the first rank where
  // 100 * tp >= k * num_positives; integer comparison avoids rounding.
  std::vector<std::int64_t> cum_tp(ranked.size());
  std::int64_t tp = 0;
  for (size_t i = 0; i < ranked.size(); ++i) {
    tp += ranked[i].true_positive ? 1 : 0;
    cum_tp[i] = tp;
  }
  double sum = 0.0;
  size_t rank = 0;
  for (std::int64_t k = 0; k < kRecallPoints; ++k) {
    while (rank < cum_tp.size() && 100 * cum_tp[rank] < k * num_positives) {
      ++rank;
    }
    if (rank == cum_tp.size()) break;
    sum += interp[rank];
  }
  return sum / kRecallPoints;
}

std::optional<double> AveragePrecision(std::span<const Annotation> annotations,
                                       std::span<const Detection> detections,
                                       DefectClass cls, double iou_threshold) {
  std::vector<Annotation> anns;
  std::vector<Detection> dets;
  for (const Annotation& a : annotations) {
    if (a.cls == cls) anns.push_back(a);
  }
  for (const Detection& d : detections) {
    if (d.cls == cls) dets.push_back(d);
  }
  const MatchResult match = MatchObjects(anns, dets, iou_threshold);
  std::vector<size_t> order(dets.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return RanksBefore(dets[a], dets[b]); });
  std::vector<ScoredDetection> ranked;
  for (size_t i : order) {
    ranked.push_back({dets[i].confidence, match.detection_matched[i] != 0});
  }
  return AveragePrecisionFromRanked(ranked,
                                    static_cast<std::int64_t>(anns.size()));
}

MapSuite ComputeMapSuite(std::span<const PipeEvalInput> pipes) {
  MapSuite suite;
  std::array<std::int64_t, kNumClasses> positives{};
  for (const PipeEvalInput& p : pipes) {
    for (const Annotation& a : p.annotations) ++positives[ClassIndex(a.cls)];
  }

  double sum_over_thresholds = 0.0;
  for (int t = 0; t < kNumIouThresholds; ++t) {
    const double threshold = IouThreshold(t);
    std::array<std::vector<RankedEntry>, kNumClasses> entries;
    for (size_t p = 0; p < pipes.size(); ++p) {
      const MatchResult match =
          MatchObjects(pipes[p].annotations, pipes[p].detections, threshold);
      for (size_t i = 0; i < pipes[p].detections.size(); ++i) {
        const Detection& d = pipes[p].detections[i];
        entries[ClassIndex(d.cls)].push_back(
            {&d, p, match.detection_matched[i] != 0});
      }
    }

    double sum_over_classes = 0.0;
    int classes = 0;
    for (DefectClass c : kAllClasses) {
      const int ci = ClassIndex(c);
      if (positives[ci] == 0) continue;
      std::vector<RankedEntry>& list = entries[ci];
      std::sort(list.begin(), list.end(),
                [](const RankedEntry& a, const RankedEntry& b) {
                  if (a.det->confidence != b.det->confidence) {
                    return a.det->confidence > b.det->confidence;
                  }
                  if (a.pipe != b.pipe) return a.pipe < b.pipe;
                  return RanksBefore(*a.det, *b.det);
                });
      std::vector<ScoredDetection> ranked;
      ranked.reserve(list.size());
      for (const RankedEntry& e : list) {
        ranked.push_back({e.det->confidence, e.tp});
      }
      const double ap = *AveragePrecisionFromRanked(ranked, positives[ci]);
      suite.ap[ci][t] = ap;
      sum_over_classes += ap;
      ++classes;
    }
    const double map_t = classes > 0 ? sum_over_classes / classes : 0.0;
    if (t == 0) suite.map50 = map_t;
    if (t == 5) suite.map75 = map_t;
    sum_over_thresholds += map_t;
  }
  suite.map5095 = sum_over_thresholds / kNumIouThresholds;
  return suite;
}

MapSuite ComputeMapSuite(std::span<const Annotation> annotations,
                         std::span<const Detection> detections) {
  PipeEvalInput single;
  single.annotations.assign(annotations.begin(), annotations.end());
  single.detections.assign(detections.begin(), detections.end());
  return ComputeMapSuite(std::span<const PipeEvalInput>(&single, 1));
}

}  // namespace sewerdet
