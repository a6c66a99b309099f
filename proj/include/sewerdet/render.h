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

// Overlay raster of a mosaic with annotation and detection outlines.

#ifndef SEWERDET_RENDER_H_
#define SEWERDET_RENDER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sewerdet/core.h"

namespace sewerdet {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(Rgb, Rgb) = default;
};

inline constexpr Rgb kAnnotationColor{0, 200, 0};
inline constexpr Rgb kDetectionColor{255, 0, 255};
// Background gray levels stay inside this band.
inline constexpr int kBackgroundMin = 90;
inline constexpr int kBackgroundMax = 160;
inline constexpr std::int64_t kDefaultPixelBudget = 40'000'000;

struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Rgb At(int x, int y) const;
  void Set(int x, int y, Rgb c);
};

struct RenderOptions {
  std::uint64_t seed = 0;
  std::int64_t pixel_budget = kDefaultPixelBudget;
};

struct RenderResult {
  Raster image;
  int downscale = 1;
  std::vector<std::string> warnings;
};

// Draws 1 px outlines: annotations first, detections on top. Output is a
// pure function of the inputs.
RenderResult RenderOverlay(const MosaicGeometry& geometry,
                           std::span<const Annotation> annotations,
                           std::span<const Detection> detections,
                           const RenderOptions& options = {});

// Binary PPM (P6).
std::string EncodePpm(const Raster& image);

}  // namespace sewerdet

#endif  // SEWERDET_RENDER_H_
