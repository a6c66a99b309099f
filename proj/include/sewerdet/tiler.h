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

// Sliding-window tiling of W x 1200 mosaics into square patches, coordinate
// mapping between the mosaic, patch and network frames, and flip
// augmentation for training export.
//
// Frames:
//   mosaic   integer pixels of the whole unrolled pipe
//   patch    integer pixels relative to a window's left edge
//   network  real-valued patch coordinates multiplied by `scale`

#ifndef SEWERDET_TILER_H_
#define SEWERDET_TILER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sewerdet/core.h"

namespace sewerdet {

inline constexpr int kDefaultPatchSizePx = 1200;
inline constexpr int kDefaultStridePx = 600;
inline constexpr int kDefaultNetworkSizePx = 640;
inline constexpr double kDefaultMinVisibleFraction = 0.25;
inline constexpr double kFlipProbability = 0.25;

struct WindowPlan {
  int patch_size_px = kDefaultPatchSizePx;
  int stride_px = kDefaultStridePx;
  // Left edges in mosaic pixels, ascending.
  std::vector<int> windows;
};

// Offsets 0, stride, 2*stride, ... while the window fits; a final window is
// clamped to width - patch when the regular ones stop short of the right
// edge. A mosaic no wider than one patch gets a single window at 0.
WindowPlan PlanWindows(int width_px, int patch_size_px = kDefaultPatchSizePx,
                       int stride_px = kDefaultStridePx);
WindowPlan PlanWindows(const MosaicGeometry& mosaic,
                       int patch_size_px = kDefaultPatchSizePx,
                       int stride_px = kDefaultStridePx);

struct PatchAnnotation {
  std::string source_id;
  PixelBox box;  // patch frame
  DefectClass cls = DefectClass::kFissure;

  friend bool operator==(const PatchAnnotation&,
                         const PatchAnnotation&) = default;
};

// Translates annotations intersecting the square window into the patch frame
// and clips them to it. Annotations keeping less than `min_visible_fraction`
// of their area are dropped.
std::vector<PatchAnnotation> ClipToWindow(
    int window_offset_px, int patch_size_px,
    std::span<const Annotation> annotations,
    double min_visible_fraction = kDefaultMinVisibleFraction);

// Real-valued box for scaled frames. Templated on the scalar so the frame
// maps can also run in exact arithmetic.
template <typename Scalar>
struct BasicRealBox {
  Scalar x{};
  Scalar y{};
  Scalar w{};
  Scalar h{};

  friend bool operator==(const BasicRealBox&, const BasicRealBox&) = default;
};

using RealBox = BasicRealBox<double>;

RealBox ToRealBox(const PixelBox& b);
// Rounds both edges of each axis to the nearest integer.
PixelBox RoundBox(const RealBox& b);

template <typename Scalar>
BasicRealBox<Scalar> ToNetworkFrame(const BasicRealBox<Scalar>& patch_box,
                                    const Scalar& scale) {
  if (!(scale > Scalar(0))) throw UsageError("scale must be positive");
  return {patch_box.x * scale, patch_box.y * scale, patch_box.w * scale,
          patch_box.h * scale};
}

RealBox ToNetworkFrame(const PixelBox& patch_box, double scale);

// Network frame back to the mosaic frame of the window at `window_offset_px`.
template <typename Scalar>
BasicRealBox<Scalar> ToMosaicFrame(const BasicRealBox<Scalar>& network_box,
                                   int window_offset_px, const Scalar& scale) {
  if (!(scale > Scalar(0))) throw UsageError("scale must be positive");
  return {network_box.x / scale + Scalar(window_offset_px),
          network_box.y / scale, network_box.w / scale, network_box.h / scale};
}

struct PatchSample {
  std::string pipe_id;
  int window_index = 0;
  int window_offset_px = 0;
  int patch_size_px = kDefaultPatchSizePx;
  double scale =
      static_cast<double>(kDefaultNetworkSizePx) / kDefaultPatchSizePx;
  std::vector<PatchAnnotation> annotations;  // patch frame, already flipped
  bool flip_ud = false;
  bool flip_lr = false;

  friend bool operator==(const PatchSample&, const PatchSample&) = default;
};

// Network-frame view of the sample's boxes (same order as `annotations`).
std::vector<RealBox> NetworkBoxes(const PatchSample& sample);

// Reflects boxes about the patch's horizontal and/or vertical axis and
// toggles the matching flags, so applying the same flip twice is identity.
PatchSample FlipPatch(const PatchSample& sample, bool up_down, bool left_right);

struct TilerConfig {
  int patch_size_px = kDefaultPatchSizePx;
  int stride_px = kDefaultStridePx;
  int network_size_px = kDefaultNetworkSizePx;
  double min_visible_fraction = kDefaultMinVisibleFraction;
  std::uint64_t seed = 0;

  double scale() const {
    return static_cast<double>(network_size_px) / patch_size_px;
  }
};

// Throws UsageError for out-of-range parameters.
void Validate(const TilerConfig& config);

struct AnnotatedPipe {
  MosaicGeometry geometry;
  std::vector<Annotation> annotations;
};

// One sample per planned window of every pipe, in (pipe, window) order. The
// flip draws of window w of pipe p come from a generator seeded with
// DeriveSeed(DeriveSeed(seed, kPatch, p), kPatch, w); each flag is
// Bernoulli(0.25). Patches are square, so the patch size must equal the
// mosaic height.
std::vector<PatchSample> ExportTrainingSet(std::span<const AnnotatedPipe> pipes,
                                           const TilerConfig& config);

// The samples of the pipe at position `pipe_index` of ExportTrainingSet.
std::vector<PatchSample> ExportPipePatches(const AnnotatedPipe& pipe,
                                           size_t pipe_index,
                                           const TilerConfig& config);

}  // namespace sewerdet

#endif  // SEWERDET_TILER_H_
