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

#include "sewerdet/render.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sewerdet/random.h"

namespace sewerdet {

namespace {

int CeilDiv(std::int64_t a, std::int64_t b) {
  return static_cast<int>((a + b - 1) / b);
}

void StrokeBox(Raster& img, const PixelBox& box, int scale, Rgb color) {
  // Scaled edges enclose the source box; keep at least one pixel.
  const int x0 = std::clamp(box.x / scale, 0, img.width - 1);
  const int y0 = std::clamp(box.y / scale, 0, img.height - 1);
  const int x1 = std::clamp(CeilDiv(box.right(), scale), x0 + 1, img.width);
  const int y1 = std::clamp(CeilDiv(box.bottom(), scale), y0 + 1, img.height);
  for (int x = x0; x < x1; ++x) {
    img.Set(x, y0, color);
    img.Set(x, y1 - 1, color);
  }
  for (int y = y0; y < y1; ++y) {
    img.Set(x0, y, color);
    img.Set(x1 - 1, y, color);
  }
}

}  // namespace

Rgb Raster::At(int x, int y) const {
  const size_t i = (static_cast<size_t>(y) * width + x) * 3;
  return Rgb{rgb[i], rgb[i + 1], rgb[i + 2]};
}

void Raster::Set(int x, int y, Rgb c) {
  const size_t i = (static_cast<size_t>(y) * width + x) * 3;
  rgb[i] = c.r;
  rgb[i + 1] = c.g;
  rgb[i + 2] = c.b;
}

RenderResult RenderOverlay(const MosaicGeometry& geometry,
                           std::span<const Annotation> annotations,
                           std::span<const Detection> detections,
                           const RenderOptions& options) {
  Validate(geometry);
  if (options.pixel_budget < 1) throw UsageError("pixel budget must be >= 1");
  RenderResult result;
  int scale = 1;
  auto pixels = [&](int s) {
    return std::int64_t{CeilDiv(geometry.width_px, s)} *
           CeilDiv(geometry.height_px, s);
  };
  while (pixels(scale) > options.pixel_budget &&
         (scale < geometry.width_px || scale < geometry.height_px)) {
    ++scale;
  }
  if (scale > 1) {
    result.warnings.push_back("overlay for " + geometry.pipe_id +
                              " downscaled by " + std::to_string(scale) +
                              " to fit a budget of " +
                              std::to_string(options.pixel_budget) + " pixels");
  }
  result.downscale = scale;

  Raster& img = result.image;
  img.width = CeilDiv(geometry.width_px, scale);
  img.height = CeilDiv(geometry.height_px, scale);
  img.rgb.resize(static_cast<size_t>(img.width) * img.height * 3);

  // Axial texture: per-column noise over a circumferential shading profile.
  std::mt19937_64 rng(DeriveSeed(options.seed, Stream::kRender, 0));
  std::vector<int> column_noise(img.width);
  for (int& n : column_noise) n = static_cast<int>(UnitDouble(rng) * 31.0);
  std::vector<int> row_shade(img.height);
  for (int y = 0; y < img.height; ++y) {
    const double t = (y + 0.5) / img.height;
    row_shade[y] = static_cast<int>(
        std::lround(kBackgroundMin + 40.0 * std::sin(std::numbers::pi * t)));
  }
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto v = static_cast<std::uint8_t>(std::clamp(
          row_shade[y] + column_noise[x], kBackgroundMin, kBackgroundMax));
      img.Set(x, y, Rgb{v, v, v});
    }
  }

  for (const Annotation& a : annotations) {
    if (!geometry.InBounds(a.box)) {
      throw UsageError("annotation " + a.id + " outside the mosaic");
    }
    StrokeBox(img, a.box, scale, kAnnotationColor);
  }
  for (const Detection& d : detections) {
    if (!geometry.InBounds(d.box)) {
      throw UsageError("detection " + d.id + " outside the mosaic");
    }
    StrokeBox(img, d.box, scale, kDetectionColor);
  }
  return result;
}

std::string EncodePpm(const Raster& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.rgb.data()), image.rgb.size());
  return out;
}

}  // namespace sewerdet
