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

#include "sewerdet/tiler.h"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>

#include "sewerdet/random.h"

namespace sewerdet {

WindowPlan PlanWindows(int width_px, int patch_size_px, int stride_px) {
  if (patch_size_px <= 0 || stride_px <= 0) {
    throw UsageError("patch size and stride must be positive");
  }
  if (stride_px > patch_size_px) {
    throw UsageError("stride larger than the patch leaves columns uncovered");
  }
  if (width_px <= 0) throw UsageError("mosaic width must be positive");

  WindowPlan plan{patch_size_px, stride_px, {}};
  if (width_px <= patch_size_px) {
    plan.windows.push_back(0);
    return plan;
  }
  int offset = 0;
  for (; offset + patch_size_px <= width_px; offset += stride_px) {
    plan.windows.push_back(offset);
  }
  if (plan.windows.back() + patch_size_px < width_px) {
    plan.windows.push_back(width_px - patch_size_px);
  }
  return plan;
}

WindowPlan PlanWindows(const MosaicGeometry& mosaic, int patch_size_px,
                       int stride_px) {
  return PlanWindows(mosaic.width_px, patch_size_px, stride_px);
}

std::vector<PatchAnnotation> ClipToWindow(
    int window_offset_px, int patch_size_px,
    std::span<const Annotation> annotations, double min_visible_fraction) {
  const PixelBox window{window_offset_px, 0, patch_size_px, patch_size_px};
  std::vector<PatchAnnotation> out;
  for (const Annotation& a : annotations) {
    const std::int64_t visible = IntersectionArea(a.box, window);
    if (visible == 0) continue;
    const double fraction =
        static_cast<double>(visible) / static_cast<double>(a.box.area());
    if (fraction < min_visible_fraction) continue;
    const int x0 = std::max(a.box.x, window.x);
    const int y0 = std::max(a.box.y, window.y);
    const int x1 = std::min(a.box.right(), window.right());
    const int y1 = std::min(a.box.bottom(), window.bottom());
    out.push_back(
        {a.id, PixelBox{x0 - window_offset_px, y0, x1 - x0, y1 - y0}, a.cls});
  }
  return out;
}

RealBox ToRealBox(const PixelBox& b) {
  return RealBox{static_cast<double>(b.x), static_cast<double>(b.y),
                 static_cast<double>(b.w), static_cast<double>(b.h)};
}

PixelBox RoundBox(const RealBox& b) {
  const int x0 = static_cast<int>(std::lround(b.x));
  const int y0 = static_cast<int>(std::lround(b.y));
  const int x1 = static_cast<int>(std::lround(b.x + b.w));
  const int y1 = static_cast<int>(std::lround(b.y + b.h));
  return PixelBox{x0, y0, x1 - x0, y1 - y0};
}

RealBox ToNetworkFrame(const PixelBox& patch_box, double scale) {
  return ToNetworkFrame(ToRealBox(patch_box), scale);
}

std::vector<RealBox> NetworkBoxes(const PatchSample& sample) {
  std::vector<RealBox> out;
  out.reserve(sample.annotations.size());
  for (const PatchAnnotation& a : sample.annotations) {
    out.push_back(ToNetworkFrame(a.box, sample.scale));
  }
  return out;
}

PatchSample FlipPatch(const PatchSample& sample, bool up_down,
                      bool left_right) {
  PatchSample out = sample;
  const int p = sample.patch_size_px;
  for (PatchAnnotation& a : out.annotations) {
    if (left_right) a.box.x = p - a.box.x - a.box.w;
    if (up_down) a.box.y = p - a.box.y - a.box.h;
  }
  out.flip_ud = sample.flip_ud != up_down;
  out.flip_lr = sample.flip_lr != left_right;
  return out;
}

void Validate(const TilerConfig& config) {
  if (config.patch_size_px <= 0 || config.stride_px <= 0 ||
      config.network_size_px <= 0) {
    throw UsageError("patch, stride and network size must be positive");
  }
  if (config.stride_px > config.patch_size_px) {
    throw UsageError("stride must not exceed the patch size");
  }
  if (!(config.min_visible_fraction >= 0.0 &&
        config.min_visible_fraction <= 1.0)) {
    throw UsageError("min_visible_fraction must be in [0, 1]");
  }
}

std::vector<PatchSample> ExportPipePatches(const AnnotatedPipe& pipe,
                                           size_t pipe_index,
                                           const TilerConfig& config) {
  Validate(config);
  if (pipe.geometry.height_px != config.patch_size_px) {
    throw UsageError("patch size " + std::to_string(config.patch_size_px) +
                     " does not match mosaic height " +
                     std::to_string(pipe.geometry.height_px) + " of " +
                     pipe.geometry.pipe_id);
  }
  const WindowPlan plan =
      PlanWindows(pipe.geometry, config.patch_size_px, config.stride_px);
  const std::uint64_t pipe_seed =
      DeriveSeed(config.seed, Stream::kPatch, pipe_index);
  std::vector<PatchSample> out;
  for (size_t w = 0; w < plan.windows.size(); ++w) {
    PatchSample sample;
    sample.pipe_id = pipe.geometry.pipe_id;
    sample.window_index = static_cast<int>(w);
    sample.window_offset_px = plan.windows[w];
    sample.patch_size_px = config.patch_size_px;
    sample.scale = config.scale();
    sample.annotations =
        ClipToWindow(plan.windows[w], config.patch_size_px, pipe.annotations,
                     config.min_visible_fraction);

    std::mt19937_64 rng(DeriveSeed(pipe_seed, Stream::kPatch, w));
    const bool ud = UnitDouble(rng) < kFlipProbability;
    const bool lr = UnitDouble(rng) < kFlipProbability;
    out.push_back(FlipPatch(sample, ud, lr));
  }
  return out;
}

std::vector<PatchSample> ExportTrainingSet(std::span<const AnnotatedPipe> pipes,
                                           const TilerConfig& config) {
  std::vector<PatchSample> out;
  for (size_t p = 0; p < pipes.size(); ++p) {
    std::vector<PatchSample> samples = ExportPipePatches(pipes[p], p, config);
    out.insert(out.end(), std::make_move_iterator(samples.begin()),
               std::make_move_iterator(samples.end()));
  }
  return out;
}

}  // namespace sewerdet
