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

// Evaluation: the running-meters chunk metric, object-level precision and
// recall, 101-point interpolated AP / mAP and the severity histogram of
// missed ground truth.
//
// Chunk metric decision table (per full-height chunk):
//   ground truth present, a detection class matches a ground-truth class -> TP
//   ground truth present, otherwise (nothing, or wrong classes only)    -> FN
//   no ground truth, any detection intersects the chunk                 -> FP
//   no ground truth, no detection                                       -> TN
// A box belongs to every chunk it intersects with positive area.

#ifndef SEWERDET_METRICS_H_
#define SEWERDET_METRICS_H_

#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sewerdet/core.h"

namespace sewerdet {

inline constexpr int kDefaultChunkWidthPx = 600;
inline constexpr double kDefaultMatchIou = 0.5;
inline constexpr int kNumIouThresholds = 10;

// 0.50, 0.55, ..., 0.95
double IouThreshold(int index);

struct Chunk {
  int index = 0;
  int x_begin = 0;
  int x_end = 0;  // exclusive

  int width() const { return x_end - x_begin; }
  friend bool operator==(const Chunk&, const Chunk&) = default;
};

std::vector<Chunk> ChunkGrid(const MosaicGeometry& geometry,
                             int chunk_width_px = kDefaultChunkWidthPx);

enum class Verdict : std::uint8_t { kTP, kFP, kTN, kFN };
std::string_view VerdictName(Verdict v);

using ClassSet = std::bitset<kNumClasses>;

struct ChunkVerdict {
  Chunk chunk;
  Verdict verdict = Verdict::kTN;
  ClassSet gt_classes;
  ClassSet predicted_classes;
};

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  friend bool operator==(const ConfusionCounts&,
                         const ConfusionCounts&) = default;
};

// One row of the decision table above.
Verdict DecideChunk(const ClassSet& gt, const ClassSet& predicted,
                    bool any_detection);

struct ChunkConfusion {
  std::vector<ChunkVerdict> verdicts;
  ConfusionCounts counts;
};

ChunkConfusion EvaluateChunks(std::span<const Annotation> annotations,
                              std::span<const Detection> detections,
                              std::span<const Chunk> chunks);

struct SummaryStats {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// accuracy = (tp + tn) / chunks, where chunks defaults to the count total;
// an explicit chunk total covers reference counts whose buckets do not add
// up to the number of evaluated sections. Precision and recall are 1 at a
// zero denominator, f1 is 0 when both are 0. Throws UsageError for zero
// chunks or a chunk total smaller than tp + tn.
SummaryStats ComputeSummaryStats(const ConfusionCounts& counts,
                                 std::optional<std::int64_t> chunks = {});

struct ObjectMatch {
  size_t annotation = 0;  // index into the annotation list
  size_t detection = 0;   // index into the detection list
  double iou = 0.0;
};

struct MatchResult {
  std::vector<ObjectMatch> matches;
  std::vector<size_t> unmatched_annotations;  // ascending
  std::vector<size_t> unmatched_detections;   // ascending
  // Per detection: whether it was matched. Same length as the input.
  std::vector<char> detection_matched;
};

// Greedy one-to-one matching per class: detections in rank order each take
// the unmatched same-class annotation of highest IoU (ties: lower index)
// provided IoU >= threshold.
MatchResult MatchObjects(std::span<const Annotation> annotations,
                         std::span<const Detection> detections,
                         double iou_threshold = kDefaultMatchIou);

struct ClassPr {
  double precision = 1.0;
  double recall = 1.0;
  std::int64_t n_objects = 0;
  std::int64_t n_detections = 0;
  std::int64_t matched = 0;
};

struct PrTable {
  // Classes with no annotations and no detections are absent.
  std::map<DefectClass, ClassPr> per_class;
  ClassPr macro;  // unweighted mean over rows; counts are sums
  ClassPr micro;  // pooled counts
};

struct ClassCounts {
  std::array<std::int64_t, kNumClasses> objects{};
  std::array<std::int64_t, kNumClasses> detections{};
  std::array<std::int64_t, kNumClasses> matched{};

  ClassCounts& operator+=(const ClassCounts& o);
};

ClassCounts CountMatches(std::span<const Annotation> annotations,
                         std::span<const Detection> detections,
                         const MatchResult& match);
PrTable PerClassPr(const ClassCounts& counts);
PrTable PerClassPr(std::span<const Annotation> annotations,
                   std::span<const Detection> detections,
                   const MatchResult& match);

// One ranked detection for AP: its score and whether it matched.
struct ScoredDetection {
  double confidence = 0.0;
  bool true_positive = false;
};

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
};

// Raw precision/recall after each ranked detection (input already ranked).
std::vector<PrPoint> PrecisionRecallCurve(
    std::span<const ScoredDetection> ranked, std::int64_t num_positives);
// Running maximum from the right: non-increasing in rank order.
std::vector<double> InterpolatedPrecision(std::span<const PrPoint> curve);

// Mean of interpolated precision at recall 0, 0.01, ..., 1. `ranked` must be
// in rank order. Returns nullopt when there are no positives.
std::optional<double> AveragePrecisionFromRanked(
    std::span<const ScoredDetection> ranked, std::int64_t num_positives);

std::optional<double> AveragePrecision(std::span<const Annotation> annotations,
                                       std::span<const Detection> detections,
                                       DefectClass cls, double iou_threshold);

struct MapSuite {
  // ap[class][threshold index]; nullopt for classes without annotations.
  std::array<std::array<std::optional<double>, kNumIouThresholds>, kNumClasses>
      ap{};
  double map50 = 0.0;
  double map75 = 0.0;
  double map5095 = 0.0;
};

// One pipe's input for multi-pipe evaluation.
struct PipeEvalInput {
  MosaicGeometry geometry;
  std::vector<Annotation> annotations;
  std::vector<Detection> detections;
};

// Detections are ranked across pipes (pipe order breaks confidence ties
// before x, y, id); matching stays within a pipe.
MapSuite ComputeMapSuite(std::span<const PipeEvalInput> pipes);
MapSuite ComputeMapSuite(std::span<const Annotation> annotations,
                         std::span<const Detection> detections);

struct SeverityReport {
  std::array<std::int64_t, kNumSeverities> by_condition{};
  std::int64_t medium_and_slight = 0;  // conditions 2 and 3 together
  std::int64_t total_missed = 0;
  std::int64_t severe_missed = 0;  // conditions 0 and 1
  std::int64_t total_objects = 0;  // ground truth evaluated, if known

  SeverityReport& operator+=(const SeverityReport& o);
};

SeverityReport FnSeverityReport(std::span<const Annotation> missed,
                                std::int64_t total_objects = 0);

// Rows "Object count | Condition class | Severity" with 2 and 3 combined.
std::string FormatSeverityTable(const SeverityReport& report);

struct EvalConfig {
  int chunk_width_px = kDefaultChunkWidthPx;
  double match_iou = kDefaultMatchIou;
};

void Validate(const EvalConfig& config);

struct PipeEvalResult {
  std::string pipe_id;
  ChunkConfusion chunks;
  ClassCounts class_counts;
  SeverityReport fn_severity;
  double meters = 0.0;
};

struct EvalReport {
  ConfusionCounts counts;
  // Evaluated sections when they differ from counts.total().
  std::optional<std::int64_t> chunk_total;
  SummaryStats stats;
  PrTable pr;
  MapSuite map;
  SeverityReport fn_severity;
  double meters_evaluated = 0.0;
  std::vector<PipeEvalResult> pipes;
};

PipeEvalResult EvaluatePipe(const PipeEvalInput& pipe,
                            const EvalConfig& config);
// Folds per-pipe results in input order.
EvalReport Evaluate(std::span<const PipeEvalInput> pipes,
                    const EvalConfig& config);

// Table of per-class precision/recall in the expert-evaluation layout,
// followed by the chunk metric summary and mAP line.
std::string FormatEvalTables(const EvalReport& report);

}  // namespace sewerdet

#endif  // SEWERDET_METRICS_H_
