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

#include "sewerdet/synth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sewerdet/random.h"

namespace sewerdet {

namespace {

constexpr int kPlacementAttempts = 50;
constexpr int kClusterBoxAttempts = 20;

using Rng = std::mt19937_64;

int UniformInt(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

int Poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<int>(mean)(rng);
}

bool IsJointClass(DefectClass c) {
  return c == DefectClass::kAngularDisplacedJoint ||
         c == DefectClass::kHorizontalDisplacedJoint;
}

bool OverlapsAny(const PixelBox& b, const std::vector<PixelBox>& others) {
  for (const PixelBox& o : others) {
    if (IntersectionArea(b, o) > 0) return true;
  }
  return false;
}

// Axial gap between a box and the nearest joint or connection box.
double AxialGapPx(const PixelBox& b, const std::vector<int>& joints,
                  const std::vector<PixelBox>& connections) {
  double best = std::numeric_limits<double>::infinity();
  for (int j : joints) {
    const int gap = j < b.x ? b.x - j : (j > b.right() ? j - b.right() : 0);
    best = std::min(best, static_cast<double>(gap));
  }
  for (const PixelBox& c : connections) {
    const int gap = std::max({0, c.x - b.right(), b.x - c.right()});
    best = std::min(best, static_cast<double>(gap));
  }
  return best;
}

class PipeBuilder {
 public:
  PipeBuilder(const PipeSpec& spec, MosaicGeometry geometry, std::uint64_t seed)
      : spec_(spec), geometry_(std::move(geometry)), rng_(seed) {}

  SyntheticPipe Build() {
    // Connections first so that roots can be anchored near them.
    PlaceClass(DefectClass::kConnection);
    for (DefectClass c : kAllClasses) {
      if (c != DefectClass::kConnection) PlaceClass(c);
    }
    return {geometry_, std::move(annotations_)};
  }

 private:
  int width() const { return geometry_.width_px; }
  int height() const { return geometry_.height_px; }

  void PlaceClass(DefectClass c) {
    const double mean =
        spec_.rate_per_100m[ClassIndex(c)] * spec_.length_m / 100.0;
    const int events = Poisson(rng_, mean);
    for (int e = 0; e < events; ++e) {
      if (IsClusterClass(c)) {
        PlaceCluster(c);
      } else {
        PlaceSingle(c);
      }
    }
  }

  void PlaceSingle(DefectClass c) {
    const BoxSizeRange& size = spec_.box_size[ClassIndex(c)];
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      PixelBox b;
      b.w = std::min(UniformInt(rng_, size.min_w, size.max_w), width());
      b.h = UniformInt(rng_, size.min_h, size.max_h);
      const std::vector<int>& joints = geometry_.joint_positions_px;
      if (IsJointClass(c) && !joints.empty()) {
        const int j = joints[UniformInt(rng_, 0, int(joints.size()) - 1)];
        b.x = std::clamp(j - b.w / 2, 0, width() - b.w);
      } else {
        b.x = UniformInt(rng_, 0, width() - b.w);
      }
      const bool ceiling = UnitDouble(rng_) < spec_.ceiling_fraction;
      b.y = ceiling ? 0 : UniformInt(rng_, 1, height() - b.h - 1);
      if (TryAdd(c, b, static_cast<double>(size.max_w) * size.max_h)) return;
    }
  }

  void PlaceCluster(DefectClass c) {
    const ClusterParams& cp = spec_.cluster;
    const double root_px =
        spec_.root_max_distance_m * geometry_.px_per_meter_axial;
    int anchor_x = UniformInt(rng_, 0, width() - 1);
    if (c == DefectClass::kRoot) {
      std::vector<int> targets = geometry_.joint_positions_px;
      for (const PixelBox& b : boxes_[ClassIndex(DefectClass::kConnection)]) {
        targets.push_back(b.x + b.w / 2);
      }
      if (targets.empty()) return;  // nowhere for roots to enter
      const int t = targets[UniformInt(rng_, 0, int(targets.size()) - 1)];
      const int offset = static_cast<int>(
          std::floor((2.0 * UnitDouble(rng_) - 1.0) * root_px));
      anchor_x = std::clamp(t + offset, 0, width() - 1);
    }
    const int anchor_y = UniformInt(rng_, 1, height() - 2);
    const int count = UniformInt(rng_, cp.min_boxes, cp.max_boxes);
    const double max_area =
        static_cast<double>(cp.max_size_px) * cp.max_size_px;
    for (int i = 0; i < count; ++i) {
      for (int attempt = 0; attempt < kClusterBoxAttempts; ++attempt) {
        PixelBox b;
        b.w =
            std::min(UniformInt(rng_, cp.min_size_px, cp.max_size_px), width());
        b.h = UniformInt(rng_, cp.min_size_px, cp.max_size_px);
        const int cx = anchor_x + UniformInt(rng_, -cp.spread_px, cp.spread_px);
        const int cy = anchor_y + UniformInt(rng_, -cp.spread_px, cp.spread_px);
        b.x = std::clamp(cx - b.w / 2, 0, width() - b.w);
        b.y = std::clamp(cy - b.h / 2, 1, height() - b.h - 1);
        if (c == DefectClass::kRoot &&
            AxialGapPx(b, geometry_.joint_positions_px,
                       boxes_[ClassIndex(DefectClass::kConnection)]) >
                root_px) {
          continue;
        }
        if (TryAdd(c, b, max_area)) break;
      }
    }
  }

  bool TryAdd(DefectClass c, const PixelBox& b, double max_area) {
    std::vector<PixelBox>& same = boxes_[ClassIndex(c)];
    if (OverlapsAny(b, same)) return false;
    same.push_back(b);
    Annotation a;
    a.id = "a" + std::to_string(annotations_.size());
    a.box = b;
    a.cls = c;
    a.severity = DrawSeverity(c, static_cast<double>(b.area()) / max_area);
    annotations_.push_back(std::move(a));
    return true;
  }

  SeverityClass DrawSeverity(DefectClass c, double area_fraction) {
    if (c == DefectClass::kConnection) return kBenignSeverity;
    if (spec_.severity_weights) {
      const auto& w = *spec_.severity_weights;
      return SeverityClass{
          std::discrete_distribution<int>(w.begin(), w.end())(rng_)};
    }
    // Larger findings tend to be worse.
    const double score =
        0.5 * std::clamp(area_fraction, 0.0, 1.0) + 0.5 * UnitDouble(rng_);
    const int bucket = std::min(4, static_cast<int>(score * 5.0));
    return SeverityClass{4 - bucket};
  }

  const PipeSpec& spec_;
  MosaicGeometry geometry_;
  Rng rng_;
  std::vector<Annotation> annotations_;
  std::array<std::vector<PixelBox>, kNumClasses> boxes_;
};

void CheckRate(double r, const char* what) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw UsageError(std::string(what) + " must be finite and >= 0");
  }
}

void CheckUnit(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw UsageError(std::string(what) + " must be in [0, 1]");
  }
}

PixelBox Jitter(const PixelBox& b, double center_sigma, double size_sigma,
                const MosaicGeometry& g, Rng& rng) {
  if (center_sigma <= 0.0 && size_sigma <= 0.0) return b;
  std::normal_distribution<double> center(0.0, std::max(center_sigma, 0.0));
  std::normal_distribution<double> size(0.0, std::max(size_sigma, 0.0));
  const double cx = b.x + b.w / 2.0 + (center_sigma > 0 ? center(rng) : 0.0);
  const double cy = b.y + b.h / 2.0 + (center_sigma > 0 ? center(rng) : 0.0);
  const double w = b.w + (size_sigma > 0 ? size(rng) : 0.0);
  const double h = b.h + (size_sigma > 0 ? size(rng) : 0.0);
  int x0 = static_cast<int>(std::lround(cx - w / 2.0));
  int y0 = static_cast<int>(std::lround(cy - h / 2.0));
  int x1 = static_cast<int>(std::lround(cx + w / 2.0));
  int y1 = static_cast<int>(std::lround(cy + h / 2.0));
  x0 = std::clamp(x0, 0, g.width_px - 1);
  y0 = std::clamp(y0, 0, g.height_px - 1);
  x1 = std::clamp(x1, x0 + 1, g.width_px);
  y1 = std::clamp(y1, y0 + 1, g.height_px);
  return PixelBox{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace

bool IsClusterClass(DefectClass c) {
  return c == DefectClass::kFissure || c == DefectClass::kRoot ||
         c == DefectClass::kSurfaceDamage;
}

std::array<double, kNumClasses> DefaultDefectRates() {
  // BBC BAC BAA BBE BAJ-C BAF BAJ-B BAB BBA BCA
  return {2.0, 0.5, 0.5, 3.0, 1.5, 4.0, 0.5, 8.0, 6.0, 3.0};
}

std::array<BoxSizeRange, kNumClasses> DefaultBoxSizes() {
  std::array<BoxSizeRange, kNumClasses> s;
  s[ClassIndex(DefectClass::kSettledDeposit)] = {200, 800, 150, 400};
  s[ClassIndex(DefectClass::kBreakCollapse)] = {100, 400, 100, 400};
  s[ClassIndex(DefectClass::kDeformation)] = {200, 600, 200, 500};
  s[ClassIndex(DefectClass::kObstacle)] = {80, 300, 80, 300};
  s[ClassIndex(DefectClass::kAngularDisplacedJoint)] = {30, 80, 300, 1000};
  s[ClassIndex(DefectClass::kHorizontalDisplacedJoint)] = {30, 80, 300, 1000};
  s[ClassIndex(DefectClass::kConnection)] = {150, 300, 150, 300};
  // Cluster classes use ClusterParams; these sizes only drive false alarms.
  s[ClassIndex(DefectClass::kSurfaceDamage)] = {40, 160, 40, 160};
  s[ClassIndex(DefectClass::kFissure)] = {20, 120, 20, 120};
  s[ClassIndex(DefectClass::kRoot)] = {30, 120, 30, 120};
  return s;
}

void Validate(const PipeSpec& spec) {
  if (!(spec.length_m > 0.0) || !std::isfinite(spec.length_m)) {
    throw UsageError("pipe length must be positive");
  }
  if (!(spec.px_per_meter_axial > 0.0) ||
      !std::isfinite(spec.px_per_meter_axial)) {
    throw UsageError("px_per_meter_axial must be positive");
  }
  const double width = std::round(spec.length_m * spec.px_per_meter_axial);
  if (width < 1.0 || width > std::numeric_limits<int>::max() / 2) {
    throw UsageError("pipe width in pixels out of range");
  }
  if (spec.height_px < 8) throw UsageError("mosaic height too small");
  if (!(spec.joint_spacing_m >= 0.0)) {
    throw UsageError("joint spacing must be >= 0 (0 means no joints)");
  }
  for (double r : spec.rate_per_100m) CheckRate(r, "defect rate");
  for (const BoxSizeRange& s : spec.box_size) {
    if (s.min_w < 1 || s.min_h < 2 || s.min_w > s.max_w || s.min_h > s.max_h) {
      throw UsageError("box size range must satisfy 1 <= min <= max");
    }
    if (s.max_h > spec.height_px - 2) {
      throw UsageError("box height must leave a margin to both mosaic edges");
    }
  }
  const ClusterParams& c = spec.cluster;
  if (c.min_boxes < 1 || c.min_boxes > c.max_boxes || c.spread_px < 0 ||
      c.min_size_px < 2 || c.min_size_px > c.max_size_px ||
      c.max_size_px > spec.height_px - 2) {
    throw UsageError("invalid cluster parameters");
  }
  CheckUnit(spec.ceiling_fraction, "ceiling fraction");
  CheckRate(spec.root_max_distance_m, "root distance");
  if (spec.severity_weights) {
    double total = 0.0;
    for (double w : *spec.severity_weights) {
      CheckRate(w, "severity weight");
      total += w;
    }
    if (total <= 0.0) throw UsageError("severity weights sum to zero");
  }
}

SyntheticPipe GeneratePipe(const PipeSpec& spec, std::uint64_t seed) {
  Validate(spec);
  MosaicGeometry g;
  g.pipe_id = spec.pipe_id;
  g.width_px =
      static_cast<int>(std::lround(spec.length_m * spec.px_per_meter_axial));
  g.height_px = spec.height_px;
  g.px_per_meter_axial = spec.px_per_meter_axial;
  g.material = spec.material;
  // Interior joints only; the mosaic ends are the manhole faces.
  if (spec.joint_spacing_m > 0.0) {
    for (int k = 1;; ++k) {
      const long j =
          std::lround(k * spec.joint_spacing_m * spec.px_per_meter_axial);
      if (j >= g.width_px) break;
      if (g.joint_positions_px.empty() || j > g.joint_positions_px.back()) {
        g.joint_positions_px.push_back(static_cast<int>(j));
      }
    }
  }
  return PipeBuilder(spec, std::move(g), seed).Build();
}

DetectorProfile DetectorProfile::Perfect() { return DetectorProfile{}; }

DetectorProfile DetectorProfile::SeamSplit() {
  DetectorProfile p;
  p.seam_split = true;
  return p;
}

DetectorProfile DetectorProfile::Noisy() {
  DetectorProfile p;
  p.detect_probability = Filled(0.8);
  p.center_sigma_px = 8.0;
  p.size_sigma_px = 6.0;
  p.duplicate_probability = 0.2;
  p.duplicate_count = 1;
  p.false_positives_per_100m = Filled(2.0);
  p.tp_confidence_min = 0.3;
  p.tp_confidence_max = 0.95;
  p.fp_confidence_min = 0.02;
  p.fp_confidence_max = 0.6;
  return p;
}

void Validate(const DetectorProfile& p) {
  for (double v : p.detect_probability) CheckUnit(v, "detection probability");
  for (double v : p.false_positives_per_100m) {
    CheckRate(v, "false positive rate");
  }
  CheckRate(p.center_sigma_px, "center jitter");
  CheckRate(p.size_sigma_px, "size jitter");
  CheckUnit(p.duplicate_probability, "duplicate probability");
  if (p.duplicate_count < 0) throw UsageError("duplicate count must be >= 0");
  CheckUnit(p.tp_confidence_min, "confidence");
  CheckUnit(p.tp_confidence_max, "confidence");
  CheckUnit(p.fp_confidence_min, "confidence");
  CheckUnit(p.fp_confidence_max, "confidence");
  if (p.tp_confidence_min > p.tp_confidence_max ||
      p.fp_confidence_min > p.fp_confidence_max) {
    throw UsageError("confidence range must satisfy min <= max");
  }
}

SimulatedDetections SimulateDetector(const MosaicGeometry& geometry,
                                     const std::vector<Annotation>& annotations,
                                     const DetectorProfile& profile,
                                     std::uint64_t seed) {
  Validate(geometry);
  Validate(profile);
  Rng rng(seed);
  SimulatedDetections out;
  auto next_id = [&]() { return "d" + std::to_string(out.detections.size()); };
  auto draw = [&](double lo, double hi) {
    return lo + UnitDouble(rng) * (hi - lo);
  };
  auto emit = [&](PixelBox box, DefectClass cls, double conf) {
    Detection d;
    d.id = next_id();
    d.box = box;
    d.cls = cls;
    d.confidence = conf;
    out.detections.push_back(std::move(d));
  };

  for (const Annotation& a : annotations) {
    if (!geometry.InBounds(a.box)) {
      throw UsageError("annotation " + a.id + " outside the mosaic");
    }
    if (!(UnitDouble(rng) < profile.detect_probability[ClassIndex(a.cls)])) {
      continue;
    }
    const double conf =
        draw(profile.tp_confidence_min, profile.tp_confidence_max);
    const PixelBox box = Jitter(a.box, profile.center_sigma_px,
                                profile.size_sigma_px, geometry, rng);
    if (profile.seam_split && a.box.y == 0 && box.y == 0 && box.h >= 2) {
      const int k = std::max(1, box.h / 3);
      emit(PixelBox{box.x, 0, box.w, box.h - k}, a.cls, conf);
      emit(PixelBox{box.x, geometry.height_px - k, box.w, k}, a.cls, conf);
      ++out.planted_splits;
    } else {
      emit(box, a.cls, conf);
    }
    if (profile.duplicate_count > 0 &&
        UnitDouble(rng) < profile.duplicate_probability) {
      const double sigma = std::max(2.0, profile.center_sigma_px);
      for (int i = 0; i < profile.duplicate_count; ++i) {
        emit(Jitter(box, sigma, sigma, geometry, rng), a.cls,
             conf * draw(0.9, 1.0));
      }
    }
  }

  // False alarms go to defect-free interior area.
  std::vector<PixelBox> truth;
  for (const Annotation& a : annotations) truth.push_back(a.box);
  const std::array<BoxSizeRange, kNumClasses> sizes = DefaultBoxSizes();
  for (DefectClass c : kAllClasses) {
    const double mean = profile.false_positives_per_100m[ClassIndex(c)] *
                        geometry.length_m() / 100.0;
    const int n = Poisson(rng, mean);
    const BoxSizeRange& s = sizes[ClassIndex(c)];
    for (int i = 0; i < n; ++i) {
      for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
        PixelBox b;
        b.w = std::min(UniformInt(rng, s.min_w, s.max_w), geometry.width_px);
        b.h =
            std::min(UniformInt(rng, s.min_h, s.max_h), geometry.height_px - 2);
        if (b.h < 1) break;
        b.x = UniformInt(rng, 0, geometry.width_px - b.w);
        b.y = UniformInt(rng, 1, geometry.height_px - b.h - 1);
        if (OverlapsAny(b, truth)) continue;
        emit(b, c, draw(profile.fp_confidence_min, profile.fp_confidence_max));
        break;
      }
    }
  }
  return out;
}

}  // namespace sewerdet
