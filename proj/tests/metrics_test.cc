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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "sewerdet/synth.h"
#include "test_util.h"

namespace sewerdet {
namespace {

using testing::MakeAnnotation;
using testing::MakeDetection;
using testing::MakeGeometry;

constexpr DefectClass kFissure = DefectClass::kFissure;
constexpr DefectClass kRoot = DefectClass::kRoot;

TEST(ChunkGridTest, Examples) {
  EXPECT_EQ(ChunkGrid(MakeGeometry(1200), 600).size(), 2u);
  const auto three = ChunkGrid(MakeGeometry(1300), 600);
  ASSERT_EQ(three.size(), 3u);
  EXPECT_EQ(three[2].width(), 100);
  EXPECT_EQ(ChunkGrid(MakeGeometry(20000)).size(), 34u);
  EXPECT_THROW(ChunkGrid(MakeGeometry(1200), 0), UsageError);
}

TEST(ChunkGridTest, TilesWithoutGapOrOverlap) {
  for (int width = 1; width < 5000; width += 37) {
    for (int chunk : {1, 7, 600, 999}) {
      const auto grid = ChunkGrid(MakeGeometry(width), chunk);
      ASSERT_EQ(static_cast<int>(grid.size()), (width + chunk - 1) / chunk);
      int next = 0;
      for (size_t i = 0; i < grid.size(); ++i) {
        ASSERT_EQ(grid[i].index, static_cast<int>(i));
        ASSERT_EQ(grid[i].x_begin, next);
        ASSERT_GT(grid[i].width(), 0);
        next = grid[i].x_end;
      }
      ASSERT_EQ(next, width);
    }
  }
}

TEST(DecideChunkTest, DecisionTable) {
  ClassSet none, fissure, root, both;
  fissure.set(ClassIndex(kFissure));
  root.set(ClassIndex(kRoot));
  both = fissure | root;
  EXPECT_EQ(DecideChunk(none, none, false), Verdict::kTN);
  EXPECT_EQ(DecideChunk(none, root, true), Verdict::kFP);
  EXPECT_EQ(DecideChunk(fissure, fissure, true), Verdict::kTP);
  EXPECT_EQ(DecideChunk(fissure, root, true), Verdict::kFN);
  EXPECT_EQ(DecideChunk(fissure, none, false), Verdict::kFN);
  EXPECT_EQ(DecideChunk(both, root, true), Verdict::kTP);
}

TEST(EvaluateChunksTest, Examples) {
  const MosaicGeometry g = MakeGeometry(2400);
  const auto chunks = ChunkGrid(g);
  const std::vector<Annotation> anns = {
      MakeAnnotation("a", {50, 100, 40, 40}, kFissure),
      MakeAnnotation("b", {1250, 100, 40, 40}, kFissure)};
  // Chunk 0: fissure far from the annotation -> TP. Chunk 1: defect-free
  // with a detection -> FP. Chunk 2: only a root -> FN. Chunk 3: TN.
  const std::vector<Detection> dets = {
      MakeDetection("d0", {500, 900, 20, 20}, kFissure, 0.5),
      MakeDetection("d1", {700, 10, 20, 20}, kRoot, 0.5),
      MakeDetection("d2", {1300, 10, 20, 20}, kRoot, 0.5)};
  const ChunkConfusion c = EvaluateChunks(anns, dets, chunks);
  ASSERT_EQ(c.verdicts.size(), 4u);
  EXPECT_EQ(c.verdicts[0].verdict, Verdict::kTP);
  EXPECT_EQ(c.verdicts[1].verdict, Verdict::kFP);
  EXPECT_EQ(c.verdicts[2].verdict, Verdict::kFN);
  EXPECT_EQ(c.verdicts[3].verdict, Verdict::kTN);
  EXPECT_EQ(c.counts, (ConfusionCounts{1, 1, 1, 1}));
}

TEST(EvaluateChunksTest, BoxOnChunkEdgeOnlyTouches) {
  const MosaicGeometry g = MakeGeometry(1200);
  const auto chunks = ChunkGrid(g);
  // Ends exactly at x=600: belongs to chunk 0 only.
  const std::vector<Detection> dets = {
      MakeDetection("d", {550, 0, 50, 10}, kRoot, 0.5)};
  const ChunkConfusion c = EvaluateChunks({}, dets, chunks);
  EXPECT_EQ(c.verdicts[0].verdict, Verdict::kFP);
  EXPECT_EQ(c.verdicts[1].verdict, Verdict::kTN);
}

// Tests every (chunk, box) pair for rectangle intersection directly.
ConfusionCounts BruteChunks(const std::vector<Annotation>& anns,
                            const std::vector<Detection>& dets, int width,
                            int chunk_w) {
  ConfusionCounts counts;
  for (int x0 = 0; x0 < width; x0 += chunk_w) {
    const int x1 = std::min(width, x0 + chunk_w);
    auto hits = [&](const PixelBox& b) { return b.x < x1 && b.right() > x0; };
    std::vector<DefectClass> gt;
    for (const Annotation& a : anns) {
      if (hits(a.box)) gt.push_back(a.cls);
    }
    bool any = false, correct = false;
    for (const Detection& d : dets) {
      if (!hits(d.box)) continue;
      any = true;
      for (DefectClass c : gt) correct = correct || c == d.cls;
    }
    if (!gt.empty()) {
      (correct ? counts.tp : counts.fn) += 1;
    } else {
      (any ? counts.fp : counts.tn) += 1;
    }
  }
  return counts;
}

TEST(EvaluateChunksTest, MatchesBruteForceOnSyntheticPipes) {
  PipeSpec spec;
  spec.length_m = 40.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const SyntheticPipe pipe = GeneratePipe(spec, seed);
    const auto sim = SimulateDetector(pipe.geometry, pipe.annotations,
                                      DetectorProfile::Noisy(), seed);
    const int chunk_w = 300 + static_cast<int>(seed % 5) * 150;
    const ChunkConfusion c = EvaluateChunks(pipe.annotations, sim.detections,
                                            ChunkGrid(pipe.geometry, chunk_w));
    ASSERT_EQ(c.counts, BruteChunks(pipe.annotations, sim.detections,
                                    pipe.geometry.width_px, chunk_w))
        << "seed " << seed;
    ASSERT_EQ(c.counts.total(), static_cast<std::int64_t>(c.verdicts.size()));
  }
}

TEST(EvaluateChunksTest, AddingDetectionsNeverTurnsTpIntoFn) {
  std::mt19937_64 rng(61);
  PipeSpec spec;
  spec.length_m = 30.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SyntheticPipe pipe = GeneratePipe(spec, seed);
    auto dets = SimulateDetector(pipe.geometry, pipe.annotations,
                                 DetectorProfile::Noisy(), seed)
                    .detections;
    const auto chunks = ChunkGrid(pipe.geometry);
    const ChunkConfusion before =
        EvaluateChunks(pipe.annotations, dets, chunks);
    for (int i = 0; i < 20; ++i) {
      PixelBox b = testing::RandomBox(rng, pipe.geometry.width_px - 101, 100);
      b.y = std::min(b.y, 1100);
      dets.push_back(MakeDetection("extra" + std::to_string(i), b,
                                   kAllClasses[rng() % kNumClasses], 0.5));
    }
    const ChunkConfusion after = EvaluateChunks(pipe.annotations, dets, chunks);
    for (size_t k = 0; k < chunks.size(); ++k) {
      const Verdict v0 = before.verdicts[k].verdict;
      const Verdict v1 = after.verdicts[k].verdict;
      if (v0 == Verdict::kTP) {
        ASSERT_EQ(v1, Verdict::kTP);
      }
      if (v0 == Verdict::kFP) {
        ASSERT_EQ(v1, Verdict::kFP);
      }
    }
  }
}

TEST(SummaryStatsTest, ReferenceCountsGiveTheReferenceAccuracy) {
  // 391 + 126 + 447 + 188 = 1152 buckets over 1147 reported sections.
  const ConfusionCounts counts{391, 126, 447, 188};
  const SummaryStats s = ComputeSummaryStats(counts, 1147);
  EXPECT_NEAR(s.accuracy, 0.7306, 5e-5);
  EXPECT_NEAR(s.precision, 391.0 / 517.0, 1e-12);
  EXPECT_NEAR(s.recall, 391.0 / 579.0, 1e-12);
  EXPECT_NEAR(s.precision, 0.7563, 5e-5);
  EXPECT_NEAR(s.recall, 0.6753, 5e-5);
  const double p = 391.0 / 517.0, r = 391.0 / 579.0;
  EXPECT_NEAR(s.f1, 2 * p * r / (p + r), 1e-12);
  // Without the explicit total the buckets are the denominator.
  EXPECT_NEAR(ComputeSummaryStats(counts).accuracy, 838.0 / 1152.0, 1e-12);
}

TEST(SummaryStatsTest, Conventions) {
  const SummaryStats s = ComputeSummaryStats({0, 0, 25, 0});
  EXPECT_EQ(s.accuracy, 1.0);
  EXPECT_EQ(s.precision, 1.0);
  EXPECT_EQ(s.recall, 1.0);
  const SummaryStats zero = ComputeSummaryStats({0, 3, 0, 4});
  EXPECT_EQ(zero.precision, 0.0);
  EXPECT_EQ(zero.recall, 0.0);
  EXPECT_EQ(zero.f1, 0.0);
  EXPECT_THROW(ComputeSummaryStats({0, 0, 0, 0}), UsageError);
  EXPECT_THROW(ComputeSummaryStats({5, 0, 5, 0}, 9), UsageError);
}

TEST(MatchObjectsTest, Examples) {
  // IoU 0.6: 60 shared columns out of 100.
  const std::vector<Annotation> anns = {
      MakeAnnotation("a", {0, 0, 80, 10}, kFissure)};
  const std::vector<Detection> one = {
      MakeDetection("d", {20, 0, 80, 10}, kFissure, 0.9)};
  ASSERT_DOUBLE_EQ(Iou(anns[0].box, one[0].box), 0.6);
  const MatchResult m = MatchObjects(anns, one, 0.5);
  ASSERT_EQ(m.matches.size(), 1u);
  EXPECT_EQ(m.matches[0].annotation, 0u);
  EXPECT_EQ(m.matches[0].detection, 0u);

  const std::vector<Detection> cross = {
      MakeDetection("d", {0, 0, 80, 10}, kRoot, 0.9)};
  const MatchResult none = MatchObjects(anns, cross, 0.5);
  EXPECT_TRUE(none.matches.empty());
  EXPECT_EQ(none.unmatched_annotations, std::vector<size_t>{0});
  EXPECT_EQ(none.unmatched_detections, std::vector<size_t>{0});
}

TEST(MatchObjectsTest, ConfidencePriorityOverIou) {
  const std::vector<Annotation> anns = {
      MakeAnnotation("a", {0, 0, 100, 10}, kFissure)};
  // 0.55 and 0.95 IoU with the annotation.
  const std::vector<Detection> dets = {
      MakeDetection("good", {0, 0, 95, 10}, kFissure, 0.8),
      MakeDetection("first", {0, 0, 55, 10}, kFissure, 0.9)};
  ASSERT_DOUBLE_EQ(Iou(anns[0].box, dets[0].box), 0.95);
  ASSERT_DOUBLE_EQ(Iou(anns[0].box, dets[1].box), 0.55);
  const MatchResult m = MatchObjects(anns, dets, 0.5);
  ASSERT_EQ(m.matches.size(), 1u);
  EXPECT_EQ(m.matches[0].detection, 1u);
  EXPECT_EQ(m.unmatched_detections, std::vector<size_t>{0});
  EXPECT_EQ(m.detection_matched, (std::vector<char>{0, 1}));
}

TEST(MatchObjectsTest, OneToOneAndThresholdRespected) {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Annotation> anns;
    std::vector<Detection> dets;
    for (int i = 0; i < 10; ++i) {
      anns.push_back(MakeAnnotation("a" + std::to_string(i),
                                    testing::RandomBox(rng, 200, 80),
                                    (rng() % 2) ? kRoot : kFissure));
      dets.push_back(MakeDetection("d" + std::to_string(i),
                                   testing::RandomBox(rng, 200, 80),
                                   (rng() % 2) ? kRoot : kFissure,
                                   static_cast<double>(rng() % 100) / 100));
    }
    const MatchResult m = MatchObjects(anns, dets, 0.3);
    std::set<size_t> used_a, used_d;
    for (const ObjectMatch& om : m.matches) {
      ASSERT_TRUE(used_a.insert(om.annotation).second);
      ASSERT_TRUE(used_d.insert(om.detection).second);
      ASSERT_EQ(anns[om.annotation].cls, dets[om.detection].cls);
      ASSERT_GE(om.iou, 0.3);
    }
    ASSERT_EQ(m.matches.size() + m.unmatched_annotations.size(), anns.size());
    ASSERT_EQ(m.matches.size() + m.unmatched_detections.size(), dets.size());
  }
}

TEST(PerClassPrTest, Examples) {
  const std::vector<Annotation> anns = {
      MakeAnnotation("a0", {0, 0, 10, 10}, kFissure),
      MakeAnnotation("a1", {100, 0, 10, 10}, kFissure),
      MakeAnnotation("r0", {300, 0, 10, 10}, kRoot)};
  const std::vector<Detection> dets = {
      MakeDetection("d0", {0, 0, 10, 10}, kFissure, 0.9),
      MakeDetection("d1", {100, 0, 10, 10}, kFissure, 0.9),
      MakeDetection("d2", {200, 0, 10, 10}, kFissure, 0.9)};
  const PrTable t = PerClassPr(anns, dets, MatchObjects(anns, dets));
  ASSERT_EQ(t.per_class.size(), 2u);
  const ClassPr& f = t.per_class.at(kFissure);
  EXPECT_DOUBLE_EQ(f.precision, 2.0 / 3.0);
  EXPECT_EQ(f.recall, 1.0);
  EXPECT_EQ(f.n_objects, 2);
  const ClassPr& r = t.per_class.at(kRoot);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_DOUBLE_EQ(t.macro.precision, (2.0 / 3.0 + 1.0) / 2);
  EXPECT_DOUBLE_EQ(t.macro.recall, 0.5);
  EXPECT_DOUBLE_EQ(t.micro.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.micro.recall, 2.0 / 3.0);
}

TEST(PerClassPrTest, PerfectDetector) {
  PipeSpec spec;
  spec.length_m = 100.0;
  const SyntheticPipe pipe = GeneratePipe(spec, 5);
  const auto sim = SimulateDetector(pipe.geometry, pipe.annotations,
                                    DetectorProfile::Perfect(), 5);
  const PrTable t = PerClassPr(pipe.annotations, sim.detections,
                               MatchObjects(pipe.annotations, sim.detections));
  ASSERT_FALSE(t.per_class.empty());
  for (const auto& [cls, row] : t.per_class) {
    EXPECT_EQ(row.precision, 1.0) << ClassCode(cls);
    EXPECT_EQ(row.recall, 1.0) << ClassCode(cls);
  }
}

TEST(FnSeverityTest, Examples) {
  EXPECT_EQ(FnSeverityReport({}).total_missed, 0);
  std::vector<Annotation> missed;
  for (int c : {0, 1, 1, 2, 3, 4}) {
    missed.push_back(MakeAnnotation("m", {0, 0, 1, 1}, kFissure, c));
  }
  const SeverityReport r = FnSeverityReport(missed, 100);
  EXPECT_EQ(r.by_condition, (std::array<std::int64_t, 5>{1, 2, 1, 1, 1}));
  EXPECT_EQ(r.medium_and_slight, 2);
  EXPECT_EQ(r.total_missed, 6);
  EXPECT_EQ(r.severe_missed, 3);
  EXPECT_EQ(r.total_objects, 100);
}

TEST(FnSeverityTest, ReferenceShape) {
  // 1 + 11 + 159 + 90 missed out of 1549 objects.
  std::vector<Annotation> missed;
  auto add = [&](int condition, int n) {
    for (int i = 0; i < n; ++i) {
      missed.push_back(MakeAnnotation("m", {0, 0, 1, 1}, kFissure, condition));
    }
  };
  add(0, 1);
  add(1, 11);
  add(2, 100);
  add(3, 59);
  add(4, 90);
  const SeverityReport r = FnSeverityReport(missed, 1549);
  EXPECT_EQ(r.total_missed, 261);
  EXPECT_EQ(r.medium_and_slight, 159);
  EXPECT_EQ(r.severe_missed, 12);
  EXPECT_NEAR(static_cast<double>(r.total_missed) / r.total_objects, 0.17,
              5e-3);
  EXPECT_NEAR(static_cast<double>(r.severe_missed) / r.total_objects, 0.0077,
              5e-5);
  const std::string table = FormatSeverityTable(r);
  EXPECT_NE(table.find("159"), std::string::npos);
  EXPECT_NE(table.find("2 & 3"), std::string::npos);
}

TEST(EvaluateTest, PerfectDetectorScoresOne) {
  PipeSpec spec;
  spec.length_m = 60.0;
  std::vector<PipeEvalInput> pipes;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    spec.pipe_id = "p" + std::to_string(seed);
    const SyntheticPipe pipe = GeneratePipe(spec, seed);
    pipes.push_back({pipe.geometry, pipe.annotations,
                     SimulateDetector(pipe.geometry, pipe.annotations,
                                      DetectorProfile::Perfect(), seed)
                         .detections});
  }
  const EvalReport r = Evaluate(pipes, EvalConfig{});
  EXPECT_EQ(r.stats.accuracy, 1.0);
  EXPECT_EQ(r.counts.fp + r.counts.fn, 0);
  EXPECT_EQ(r.map.map5095, 1.0);
  EXPECT_EQ(r.fn_severity.total_missed, 0);
  EXPECT_DOUBLE_EQ(r.meters_evaluated, 180.0);
  ASSERT_EQ(r.pipes.size(), 3u);
  EXPECT_EQ(r.pipes[1].pipe_id, "p1");
  const std::string text = FormatEvalTables(r);
  EXPECT_NE(text.find("Fissure"), std::string::npos);
  EXPECT_NE(text.find("All average"), std::string::npos);
}

TEST(EvaluateTest, RejectsEmptyInputAndBadConfig) {
  EXPECT_THROW(Evaluate({}, EvalConfig{}), UsageError);
  EvalConfig bad;
  bad.match_iou = 0.0;
  EXPECT_THROW(Validate(bad), UsageError);
  bad = EvalConfig{};
  bad.chunk_width_px = 0;
  EXPECT_THROW(Validate(bad), UsageError);
}

TEST(EvaluateTest, FoldMatchesPerPipeSums) {
  PipeSpec spec;
  spec.length_m = 50.0;
  std::vector<PipeEvalInput> pipes;
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const SyntheticPipe pipe = GeneratePipe(spec, seed);
    pipes.push_back({pipe.geometry, pipe.annotations,
                     SimulateDetector(pipe.geometry, pipe.annotations,
                                      DetectorProfile::Noisy(), seed)
                         .detections});
  }
  const EvalReport r = Evaluate(pipes, EvalConfig{});
  ConfusionCounts sum;
  std::int64_t missed = 0;
  for (const PipeEvalInput& p : pipes) {
    const PipeEvalResult one = EvaluatePipe(p, EvalConfig{});
    sum += one.chunks.counts;
    missed += one.fn_severity.total_missed;
  }
  EXPECT_EQ(r.counts, sum);
  EXPECT_EQ(r.fn_severity.total_missed, missed);
  for (double v : {r.stats.accuracy, r.stats.precision, r.stats.recall,
                   r.stats.f1, r.map.map50, r.map.map75, r.map.map5095}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

}  // namespace
}  // namespace sewerdet
