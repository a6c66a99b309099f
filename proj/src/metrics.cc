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

#include "sewerdet/metrics.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace sewerdet {

namespace {

template <typename... Args>
std::string StrFormat(const char* fmt, Args... args) {
  const int n = std::snprintf(nullptr, 0, fmt, args...);
  std::string out(static_cast<size_t>(n), '\0');
  std::snprintf(out.data(), out.size() + 1, fmt, args...);
  return out;
}

double Ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

double Percent(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / den;
}

// Row order of the expert evaluation table.
constexpr std::array<DefectClass, kNumClasses> kTableOrder = {
    DefectClass::kFissure,
    DefectClass::kRoot,
    DefectClass::kConnection,
    DefectClass::kAngularDisplacedJoint,
    DefectClass::kBreakCollapse,
    DefectClass::kDeformation,
    DefectClass::kHorizontalDisplacedJoint,
    DefectClass::kSettledDeposit,
    DefectClass::kSurfaceDamage,
    DefectClass::kObstacle,
};

// Index of the first chunk whose end lies beyond x. Chunks are ascending and
// non-overlapping.
size_t FirstChunkEndingAfter(std::span<const Chunk> chunks, int x) {
  return static_cast<size_t>(
      std::partition_point(chunks.begin(), chunks.end(),
                           [x](const Chunk& c) { return c.x_end <= x; }) -
      chunks.begin());
}

}  // namespace

double IouThreshold(int index) { return (50 + 5 * index) / 100.0; }

std::vector<Chunk> ChunkGrid(const MosaicGeometry& geometry,
                             int chunk_width_px) {
  if (chunk_width_px <= 0) throw UsageError("chunk width must be positive");
  if (geometry.width_px <= 0) throw UsageError("mosaic width must be positive");
  std::vector<Chunk> chunks;
  for (int i = 0, x = 0; x < geometry.width_px; ++i, x += chunk_width_px) {
    chunks.push_back({i, x, std::min(x + chunk_width_px, geometry.width_px)});
  }
  return chunks;
}

std::string_view VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kTP:
      return "TP";
    case Verdict::kFP:
      return "FP";
    case Verdict::kTN:
      return "TN";
    case Verdict::kFN:
      return "FN";
  }
  return "?";
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

Verdict DecideChunk(const ClassSet& gt, const ClassSet& predicted,
                    bool any_detection) {
  if (gt.any()) return (gt & predicted).any() ? Verdict::kTP : Verdict::kFN;
  return any_detection ? Verdict::kFP : Verdict::kTN;
}

ChunkConfusion EvaluateChunks(std::span<const Annotation> annotations,
                              std::span<const Detection> detections,
                              std::span<const Chunk> chunks) {
  ChunkConfusion result;
  result.verdicts.reserve(chunks.size());
  for (const Chunk& c : chunks) result.verdicts.push_back({c, {}, {}, {}});
  std::vector<char> any_detection(chunks.size(), 0);

  auto visit = [&](const PixelBox& box, auto&& fn) {
    if (!IsValid(box)) return;
    for (size_t i = FirstChunkEndingAfter(chunks, box.x);
         i < chunks.size() && chunks[i].x_begin < box.right(); ++i) {
      if (chunks[i].x_end > box.x) fn(i);
    }
  };
  for (const Annotation& a : annotations) {
    visit(a.box, [&](size_t i) {
      result.verdicts[i].gt_classes.set(ClassIndex(a.cls));
    });
  }
  for (const Detection& d : detections) {
    visit(d.box, [&](size_t i) {
      result.verdicts[i].predicted_classes.set(ClassIndex(d.cls));
      any_detection[i] = 1;
    });
  }
  for (size_t i = 0; i < chunks.size(); ++i) {
    ChunkVerdict& v = result.verdicts[i];
    v.verdict =
        DecideChunk(v.gt_classes, v.predicted_classes, any_detection[i]);
    switch (v.verdict) {
      case Verdict::kTP:
        ++result.counts.tp;
        break;
      case Verdict::kFP:
        ++result.counts.fp;
        break;
      case Verdict::kTN:
        ++result.counts.tn;
        break;
      case Verdict::kFN:
        ++result.counts.fn;
        break;
    }
  }
  return result;
}

SummaryStats ComputeSummaryStats(const ConfusionCounts& counts,
                                 std::optional<std::int64_t> chunks) {
  const std::int64_t total = chunks.value_or(counts.total());
  if (total <= 0)
    throw UsageError("summary statistics need at least one chunk");
  if (total < counts.tp + counts.tn) {
    throw UsageError("chunk total smaller than TP + TN");
  }
  SummaryStats s;
  s.accuracy = static_cast<double>(counts.tp + counts.tn) / total;
  s.precision = Ratio(counts.tp, counts.tp + counts.fp);
  s.recall = Ratio(counts.tp, counts.tp + counts.fn);
  const double denom = s.precision + s.recall;
  s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
  return s;
}

MatchResult MatchObjects(std::span<const Annotation> annotations,
                         std::span<const Detection> detections,
                         double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw UsageError("match IoU threshold must be in (0, 1]");
  }
  MatchResult result;
  result.detection_matched.assign(detections.size(), 0);
  std::vector<char> ann_matched(annotations.size(), 0);

  std::array<std::vector<size_t>, kNumClasses> ann_by_class;
  for (size_t i = 0; i < annotations.size(); ++i) {
    ann_by_class[ClassIndex(annotations[i].cls)].push_back(i);
  }
  std::vector<size_t> order(detections.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return RanksBefore(detections[a], detections[b]);
  });

  for (size_t di : order) {
    const Detection& d = detections[di];
    double best = 0.0;
    std::optional<size_t> best_ann;
    for (size_t ai : ann_by_class[ClassIndex(d.cls)]) {
      if (ann_matched[ai]) continue;
      const double iou = Iou(d.box, annotations[ai].box);
      if (iou > best) {
        best = iou;
        best_ann = ai;
      }
    }
    if (best_ann && best >= iou_threshold) {
      ann_matched[*best_ann] = 1;
      result.detection_matched[di] = 1;
      result.matches.push_back({*best_ann, di, best});
    }
  }
  for (size_t i = 0; i < annotations.size(); ++i) {
    if (!ann_matched[i]) result.unmatched_annotations.push_back(i);
  }
  for (size_t i = 0; i < detections.size(); ++i) {
    if (!result.detection_matched[i]) result.unmatched_detections.push_back(i);
  }
  return result;
}

ClassCounts& ClassCounts::operator+=(const ClassCounts& o) {
  for (int i = 0; i < kNumClasses; ++i) {
    objects[i] += o.objects[i];
    detections[i] += o.detections[i];
    matched[i] += o.matched[i];
  }
  return *this;
}

ClassCounts CountMatches(std::span<const Annotation> annotations,
                         std::span<const Detection> detections,
                         const MatchResult& match) {
  ClassCounts counts;
  for (const Annotation& a : annotations) ++counts.objects[ClassIndex(a.cls)];
  for (const Detection& d : detections) ++counts.detections[ClassIndex(d.cls)];
  for (const ObjectMatch& m : match.matches) {
    ++counts.matched[ClassIndex(annotations[m.annotation].cls)];
  }
  return counts;
}

PrTable PerClassPr(const ClassCounts& counts) {
  PrTable table;
  std::int64_t objects = 0, dets = 0, matched = 0;
  double sum_p = 0.0, sum_r = 0.0;
  for (DefectClass c : kAllClasses) {
    const int i = ClassIndex(c);
    if (counts.objects[i] == 0 && counts.detections[i] == 0) continue;
    ClassPr row;
    row.n_objects = counts.objects[i];
    row.n_detections = counts.detections[i];
    row.matched = counts.matched[i];
    row.precision = Ratio(row.matched, row.n_detections);
    row.recall = Ratio(row.matched, row.n_objects);
    table.per_class[c] = row;
    objects += row.n_objects;
    dets += row.n_detections;
    matched += row.matched;
    sum_p += row.precision;
    sum_r += row.recall;
  }
  const double rows = static_cast<double>(table.per_class.size());
  table.macro = {rows > 0 ? sum_p / rows : 1.0, rows > 0 ? sum_r / rows : 1.0,
                 objects, dets, matched};
  table.micro = {Ratio(matched, dets), Ratio(matched, objects), objects, dets,
                 matched};
  return table;
}

PrTable PerClassPr(std::span<const Annotation> annotations,
                   std::span<const Detection> detections,
                   const MatchResult& match) {
  return PerClassPr(CountMatches(annotations, detections, match));
}

SeverityReport& SeverityReport::operator+=(const SeverityReport& o) {
  for (int i = 0; i < kNumSeverities; ++i) by_condition[i] += o.by_condition[i];
  medium_and_slight += o.medium_and_slight;
  total_missed += o.total_missed;
  severe_missed += o.severe_missed;
  total_objects += o.total_objects;
  return *this;
}

SeverityReport FnSeverityReport(std::span<const Annotation> missed,
                                std::int64_t total_objects) {
  SeverityReport r;
  for (const Annotation& a : missed) {
    const int c = MakeSeverity(a.severity.condition).condition;
    ++r.by_condition[c];
  }
  r.medium_and_slight = r.by_condition[2] + r.by_condition[3];
  r.severe_missed = r.by_condition[0] + r.by_condition[1];
  r.total_missed = static_cast<std::int64_t>(missed.size());
  r.total_objects = total_objects;
  return r;
}

std::string FormatSeverityTable(const SeverityReport& r) {
  std::ostringstream os;
  os << "Object count | Condition class | Severity\n";
  os << "-------------+-----------------+----------------\n";
  auto row = [&](std::int64_t count, const char* cond, const char* label) {
    os << StrFormat("%12lld | %-15s | %s\n", static_cast<long long>(count),
                    cond, label);
  };
  row(r.by_condition[0], "0", "very severe");
  row(r.by_condition[1], "1", "severe");
  row(r.medium_and_slight, "2 & 3", "med. & slight");
  row(r.by_condition[4], "4", "minor");
  if (r.total_objects > 0) {
    os << StrFormat(
        "Missed %lld of %lld objects (%.2f%%); severe (0-1): %lld (%.2f%%)\n",
        static_cast<long long>(r.total_missed),
        static_cast<long long>(r.total_objects),
        Percent(r.total_missed, r.total_objects),
        static_cast<long long>(r.severe_missed),
        Percent(r.severe_missed, r.total_objects));
  } else {
    os << StrFormat("Missed %lld objects; severe (0-1): %lld\n",
                    static_cast<long long>(r.total_missed),
                    static_cast<long long>(r.severe_missed));
  }
  return os.str();
}

void Validate(const EvalConfig& config) {
  if (config.chunk_width_px <= 0)
    throw UsageError("chunk width must be positive");
  if (!(config.match_iou > 0.0 && config.match_iou <= 1.0)) {
    throw UsageError("match IoU threshold must be in (0, 1]");
  }
}

PipeEvalResult EvaluatePipe(const PipeEvalInput& pipe,
                            const EvalConfig& config) {
  Validate(config);
  PipeEvalResult r;
  r.pipe_id = pipe.geometry.pipe_id;
  const std::vector<Chunk> chunks =
      ChunkGrid(pipe.geometry, config.chunk_width_px);
  r.chunks = EvaluateChunks(pipe.annotations, pipe.detections, chunks);
  const MatchResult match =
      MatchObjects(pipe.annotations, pipe.detections, config.match_iou);
  r.class_counts = CountMatches(pipe.annotations, pipe.detections, match);
  std::vector<Annotation> missed;
  for (size_t i : match.unmatched_annotations)
    missed.push_back(pipe.annotations[i]);
  r.fn_severity = FnSeverityReport(
      missed, static_cast<std::int64_t>(pipe.annotations.size()));
  r.meters = pipe.geometry.length_m();
  return r;
}

EvalReport Evaluate(std::span<const PipeEvalInput> pipes,
                    const EvalConfig& config) {
  Validate(config);
  if (pipes.empty()) throw UsageError("nothing to evaluate: no pipes");
  EvalReport report;
  ClassCounts class_counts;
  for (const PipeEvalInput& pipe : pipes) {
    PipeEvalResult r = EvaluatePipe(pipe, config);
    report.counts += r.chunks.counts;
    class_counts += r.class_counts;
    report.fn_severity += r.fn_severity;
    report.meters_evaluated += r.meters;
    report.pipes.push_back(std::move(r));
  }
  report.stats = ComputeSummaryStats(report.counts);
  report.pr = PerClassPr(class_counts);
  report.map = ComputeMapSuite(pipes);
  return report;
}

std::string FormatEvalTables(const EvalReport& report) {
  std::ostringstream os;
  os << "Defects/Struct.      | Precision | Recall | N object\n";
  os << "---------------------+-----------+--------+---------\n";
  auto row = [&](std::string_view label, const ClassPr& pr) {
    os << StrFormat("%-20s | %9.4f | %6.4f | %8lld\n",
                    std::string(label).c_str(), pr.precision, pr.recall,
                    static_cast<long long>(pr.n_objects));
  };
  for (DefectClass c : kTableOrder) {
    auto it = report.pr.per_class.find(c);
    if (it != report.pr.per_class.end()) row(ClassDisplayName(c), it->second);
  }
  row("All average", report.pr.macro);
  row("All average (pooled)", report.pr.micro);
  os << "\n";

  const ConfusionCounts& k = report.counts;
  const std::int64_t n = k.total();
  os << StrFormat("Running meters: %lld sections, %.1f m evaluated\n",
                  static_cast<long long>(n), report.meters_evaluated);
  os << StrFormat(
      "TP %lld (%.0f%%), TN %lld (%.0f%%), FP %lld (%.0f%%), FN %lld "
      "(%.0f%%)\n",
      static_cast<long long>(k.tp), Percent(k.tp, n),
      static_cast<long long>(k.tn), Percent(k.tn, n),
      static_cast<long long>(k.fp), Percent(k.fp, n),
      static_cast<long long>(k.fn), Percent(k.fn, n));
  os << StrFormat(
      "Accuracy %.2f%%, precision %.2f%%, recall %.2f%%, F1 %.2f%%\n",
      100.0 * report.stats.accuracy, 100.0 * report.stats.precision,
      100.0 * report.stats.recall, 100.0 * report.stats.f1);
  os << StrFormat("mAP@0.5 %.1f, mAP@0.75 %.1f, mAP@[.5:.95] %.1f\n\n",
                  100.0 * report.map.map50, 100.0 * report.map.map75,
                  100.0 * report.map.map5095);
  os << FormatSeverityTable(report.fn_severity);
  return os.str();
}

}  // namespace sewerdet
