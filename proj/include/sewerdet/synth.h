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

// Synthetic pipes with known ground truth and a statistical detector model.
//
// Layout guarantees that the rest of the toolkit relies on as oracles:
//  * boxes of one class never overlap each other;
//  * only ceiling defects touch an edge, and they touch y = 0 only;
//  * cluster classes (fissure, root, surface damage) are annotated as many
//    small boxes around an anchor;
//  * roots lie within root_max_distance_m of a joint or connection;
//  * displaced-joint classes sit on a joint when the pipe has joints.

#ifndef SEWERDET_SYNTH_H_
#define SEWERDET_SYNTH_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sewerdet/core.h"

namespace sewerdet {

struct BoxSizeRange {
  int min_w = 50;
  int max_w = 200;
  int min_h = 50;
  int max_h = 200;

  friend bool operator==(const BoxSizeRange&, const BoxSizeRange&) = default;
};

struct ClusterParams {
  int min_boxes = 2;
  int max_boxes = 6;
  int spread_px = 150;
  int min_size_px = 20;
  int max_size_px = 90;

  friend bool operator==(const ClusterParams&, const ClusterParams&) = default;
};

bool IsClusterClass(DefectClass c);

// Rates and sizes are fixture conventions, not measured distributions.
std::array<double, kNumClasses> DefaultDefectRates();
std::array<BoxSizeRange, kNumClasses> DefaultBoxSizes();

struct PipeSpec {
  std::string pipe_id = "pipe";
  double length_m = 50.0;
  double px_per_meter_axial = 500.0;
  int height_px = 1200;
  Material material = Material::kConcrete;
  double joint_spacing_m = 2.0;
  // Expected defect events per 100 m; a cluster counts as one event.
  std::array<double, kNumClasses> rate_per_100m = DefaultDefectRates();
  std::array<BoxSizeRange, kNumClasses> box_size = DefaultBoxSizes();
  ClusterParams cluster;
  // Probability that a single-box defect is placed against the seam (y = 0).
  double ceiling_fraction = 0.1;
  double root_max_distance_m = 0.5;
  // Condition-class weights 0..4. When unset, severity follows box area.
  std::optional<std::array<double, kNumSeverities>> severity_weights;
};

void Validate(const PipeSpec& spec);

struct SyntheticPipe {
  MosaicGeometry geometry;
  std::vector<Annotation> annotations;
};

// Deterministic for a given (spec, seed). Throws UsageError for invalid
// specs, including a zero-length pipe.
SyntheticPipe GeneratePipe(const PipeSpec& spec, std::uint64_t seed);

struct DetectorProfile {
  std::array<double, kNumClasses> detect_probability = Filled(1.0);
  double center_sigma_px = 0.0;
  double size_sigma_px = 0.0;
  double duplicate_probability = 0.0;
  int duplicate_count = 1;
  std::array<double, kNumClasses> false_positives_per_100m = Filled(0.0);
  double tp_confidence_min = 1.0;
  double tp_confidence_max = 1.0;
  double fp_confidence_min = 0.05;
  double fp_confidence_max = 0.5;
  // Ceiling defects come back as two parts touching opposite edges.
  bool seam_split = false;

  static constexpr std::array<double, kNumClasses> Filled(double v) {
    std::array<double, kNumClasses> a{};
    a.fill(v);
    return a;
  }
  // Detects everything exactly, confidence 1.
  static DetectorProfile Perfect();
  // Perfect, but with seam splitting.
  static DetectorProfile SeamSplit();
  // Misses, jitter, duplicates and false positives.
  static DetectorProfile Noisy();
};

void Validate(const DetectorProfile& profile);

struct SimulatedDetections {
  std::vector<Detection> detections;
  int planted_splits = 0;
};

SimulatedDetections SimulateDetector(const MosaicGeometry& geometry,
                                     const std::vector<Annotation>& annotations,
                                     const DetectorProfile& profile,
                                     std::uint64_t seed);

}  // namespace sewerdet

#endif  // SEWERDET_SYNTH_H_
