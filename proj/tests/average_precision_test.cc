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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sewerdet/metrics.h"
#include "sewerdet/synth.h"
#include "test_util.h"

namespace sewerdet {
namespace {

using testing::MakeAnnotation;
using testing::MakeDetection;
using testing::Rational;

constexpr DefectClass kFissure = DefectClass::kFissure;

// Exact 101-point AP: each recall level k/100 contributes the best precision
// among curve points whose recall reaches it, found by scanning all points.
Rational StepIntegrationAp(const std::vector<bool>& ranked_tp,
                           std::int64_t positives) {
  std::vector<std::pair<Rational, Rational>> points;  // (recall, precision)
  std::int64_t tp = 0;
  for (size_t i = 0; i < ranked_tp.size(); ++i) {
    tp += ranked_tp[i] ? 1 : 0;
    points.emplace_back(Rational(tp, positives),
                        Rational(tp, static_cast<std::int64_t>(i) + 1));
  }
  Rational sum(0);
  for (std::int64_t k = 0; k <= 100; ++k) {
    const Rational level(k, 100);
    Rational best(0);
    for (const auto& [recall, precision] : points) {
      if (!(level > recall) && precision > best) best = precision;
    }
    sum = sum + best;
  }
  return sum / Rational(101);
}

double ToDouble(const Rational& r) {
  return static_cast<double>(r.num()) / static_cast<double>(r.den());
}

std::vector<ScoredDetection> Ranked(const std::vector<bool>& tps) {
  std::vector<ScoredDetection> out;
  for (size_t i = 0; i < tps.size(); ++i) {
    out.push_back({1.0 - static_cast<double>(i) / (tps.size() + 1), tps[i]});
  }
  return out;
}

TEST(AveragePrecisionTest, SingleDetectionAtIouPointSix) {
  const std::vector<Annotation> anns = {
      MakeAnnotation("a", {0, 0, 80, 10}, kFissure)};
  const std::vector<Detection> dets = {
      MakeDetection("d", {20, 0, 80, 10}, kFissure, 0.9)};
  EXPECT_EQ(AveragePrecision(anns, dets, kFissure, 0.5), 1.0);
  EXPECT_EQ(AveragePrecision(anns, dets, kFissure, 0.75), 0.0);
  EXPECT_FALSE(AveragePrecision(anns, dets, DefectClass::kRoot, 0.5));
}

TEST(AveragePrecisionTest, TpFpTpTrace) {
  const std::vector<bool> tps = {true, false, true};
  const double expected = (1.0 * 51 + (2.0 / 3.0) * 50) / 101;
  EXPECT_NEAR(expected, 0.835, 5e-4);
  EXPECT_DOUBLE_EQ(ToDouble(StepIntegrationAp(tps, 2)), expected);
  EXPECT_NEAR(*AveragePrecisionFromRanked(Ranked(tps), 2), expected, 1e-12);

  // Same trace through box matching.
  const std::vector<Annotation> anns = {
      MakeAnnotation("a0", {0, 0, 10, 10}, kFissure),
      MakeAnnotation("a1", {100, 0, 10, 10}, kFissure)};
  const std::vector<Detection> dets = {
      MakeDetection("d0", {0, 0, 10, 10}, kFissure, 0.9),
      MakeDetection("d1", {300, 0, 10, 10}, kFissure, 0.8),
      MakeDetection("d2", {100, 0, 10, 10}, kFissure, 0.7)};
  EXPECT_NEAR(*AveragePrecision(anns, dets, kFissure, 0.5), expected, 1e-12);
}

TEST(AveragePrecisionTest, NoPositivesIsUndefined) {
  EXPECT_FALSE(AveragePrecisionFromRanked(Ranked({false}), 0).has_value());
  EXPECT_EQ(*AveragePrecisionFromRanked({}, 3), 0.0);
}

TEST(AveragePrecisionTest, MatchesStepIntegrationOracle) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = static_cast<int>(rng() % 25);
    std::vector<bool> tps;
    std::int64_t hits = 0;
    for (int i = 0; i < n; ++i) {
      tps.push_back(rng() % 2 == 0);
      hits += tps.back() ? 1 : 0;
    }
    const std::int64_t positives =
        hits + static_cast<std::int64_t>(rng() % 5) + (hits == 0 ? 1 : 0);
    const double ap = *AveragePrecisionFromRanked(Ranked(tps), positives);
    ASSERT_NEAR(ap, ToDouble(StepIntegrationAp(tps, positives)), 1e-12)
        << "trial " << trial;
    ASSERT_GE(ap, 0.0);
    ASSERT_LE(ap, 1.0);
  }
}

TEST(AveragePrecisionTest, InterpolatedPrecisionIsNonIncreasing) {
  std::mt19937_64 rng(72);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<bool> tps;
    for (int i = 0; i < 40; ++i) tps.push_back(rng() % 3 != 0);
    const auto ranked = Ranked(tps);
    const auto curve = PrecisionRecallCurve(ranked, 50);
    const auto interp = InterpolatedPrecision(curve);
    ASSERT_EQ(interp.size(), curve.size());
    for (size_t i = 0; i < interp.size(); ++i) {
      ASSERT_GE(interp[i], curve[i].precision);
      if (i > 0) {
        ASSERT_LE(interp[i], interp[i - 1]);
      }
      if (i > 0) {
        ASSERT_GE(curve[i].recall, curve[i - 1].recall);
      }
    }
  }
}

TEST(AveragePrecisionTest, InvariantUnderMonotoneScoreTransforms) {
  PipeSpec spec;
  spec.length_m = 100.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticPipe pipe = GeneratePipe(spec, seed);
    auto dets = SimulateDetector(pipe.geometry, pipe.annotations,
                                 DetectorProfile::Noisy(), seed)
                    .detections;
    // Distinct grid scores so strict monotone maps keep strict order.
    for (size_t i = 0; i < dets.size(); ++i) {
      dets[i].confidence = static_cast<double>((i * 7919) % 1000 + 1) / 1001.0;
    }
    auto cubed = dets;
    auto squashed = dets;
    for (Detection& d : cubed) d.confidence = std::pow(d.confidence, 3);
    for (Detection& d : squashed) d.confidence = 0.2 + 0.5 * d.confidence;
    const MapSuite base = ComputeMapSuite(pipe.annotations, dets);
    const MapSuite a = ComputeMapSuite(pipe.annotations, cubed);
    const MapSuite b = ComputeMapSuite(pipe.annotations, squashed);
    EXPECT_EQ(base.ap, a.ap);
    EXPECT_EQ(base.ap, b.ap);
    EXPECT_EQ(base.map5095, a.map5095);
  }
}

TEST(MapSuiteTest, ExactDetectionsScoreOne) {
  PipeSpec spec;
  spec.length_m = 100.0;
  const SyntheticPipe pipe = GeneratePipe(spec, 9);
  std::vector<Detection> dets;
  for (const Annotation& a : pipe.annotations) {
    dets.push_back(MakeDetection("d" + a.id, a.box, a.cls, 0.9));
  }
  const MapSuite m = ComputeMapSuite(pipe.annotations, dets);
  EXPECT_EQ(m.map50, 1.0);
  EXPECT_EQ(m.map75, 1.0);
  EXPECT_EQ(m.map5095, 1.0);
}

TEST(MapSuiteTest, MeansOverDefinedClassesAndThresholds) {
  PipeSpec spec;
  spec.length_m = 150.0;
  const SyntheticPipe pipe = GeneratePipe(spec, 4);
  const auto dets = SimulateDetector(pipe.geometry, pipe.annotations,
                                     DetectorProfile::Noisy(), 4)
                        .detections;
  const MapSuite m = ComputeMapSuite(pipe.annotations, dets);
  double total = 0.0;
  for (int t = 0; t < kNumIouThresholds; ++t) {
    double sum = 0.0;
    int n = 0;
    for (DefectClass c : kAllClasses) {
      const auto ap =
          AveragePrecision(pipe.annotations, dets, c, IouThreshold(t));
      ASSERT_EQ(ap, m.ap[ClassIndex(c)][t]);
      if (ap) {
        sum += *ap;
        ++n;
      }
    }
    ASSERT_GT(n, 0);
    if (t == 0) {
      EXPECT_DOUBLE_EQ(m.map50, sum / n);
    }
    if (t == 5) {
      EXPECT_DOUBLE_EQ(m.map75, sum / n);
    }
    total += sum / n;
  }
  EXPECT_NEAR(m.map5095, total / kNumIouThresholds, 1e-12);
  EXPECT_DOUBLE_EQ(IouThreshold(0), 0.5);
  EXPECT_DOUBLE_EQ(IouThreshold(9), 0.95);
}

TEST(MapSuiteTest, NoAnnotationsGivesZero) {
  const std::vector<Detection> dets = {
      MakeDetection("d", {0, 0, 5, 5}, kFissure, 0.5)};
  EXPECT_EQ(ComputeMapSuite({}, dets).map5095, 0.0);
}

}  // namespace
}  // namespace sewerdet
