// Copyright 2026 The fmse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fmse/error.hpp"
#include "fmse/types.hpp"

namespace fmse {

/// Brown-Conrady forward model on normalized image coordinates.
Eigen::Vector2d distort_point(const CameraIntrinsics& intr, const Eigen::Vector2d& normalized);

/// Inverse of distort_point by Newton iteration; stops once the step drops
/// below 1e-10 or after 20 iterations. Throws NO_CONVERGENCE when the result
/// does not reproduce the input or has a non-positive radial factor.
/// Supported range: |k1| <= 0.5, |k2| <= 0.1, |k3| <= 0.05, |p1|, |p2| <= 0.01
/// and normalized radius <= 0.8.
Eigen::Vector2d undistort_point(const CameraIntrinsics& intr, const Eigen::Vector2d& distorted);

/// Per-destination-pixel source lookup coordinates. NaN marks pixels whose
/// ray has no source (behind the source camera).
struct PixelMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t source_width = 0;
  std::uint32_t source_height = 0;
  std::vector<double> map_x;
  std::vector<double> map_y;

  double x(std::uint32_t u, std::uint32_t v) const { return map_x[std::size_t{v} * width + u]; }
  double y(std::uint32_t u, std::uint32_t v) const { return map_y[std::size_t{v} * width + u]; }
};

/// For each destination pixel: unproject with `dst`, rotate by
/// rotation^T, distort with `src` coefficients, project with `src`.
PixelMap rectification_map(const CameraIntrinsics& src, const CameraIntrinsics& dst,
                           const Eigen::Matrix3d& rotation = Eigen::Matrix3d::Identity());

/// Bilinear remap. `fetch(x, y, c)` returns source channel c at integer
/// pixel (x, y) and is only called with in-bounds coordinates. Destination
/// pixels whose lookup falls outside [0, w-1] x [0, h-1] become 0.
template <typename Fetch>
void remap_bilinear(const PixelMap& map, std::uint32_t channel_count, Fetch&& fetch, std::span<std::uint8_t> out) {
  const std::uint32_t w = map.source_width;
  const std::uint32_t h = map.source_height;
  for (std::uint32_t v = 0; v < map.height; ++v) {
    for (std::uint32_t u = 0; u < map.width; ++u) {
      const double sx = map.x(u, v);
      const double sy = map.y(u, v);
      std::uint8_t* px = out.data() + (std::size_t{v} * map.width + u) * channel_count;
      if (!(sx >= 0.0 && sy >= 0.0 && sx <= w - 1.0 && sy <= h - 1.0)) {
        for (std::uint32_t c = 0; c < channel_count; ++c) px[c] = 0;
        continue;
      }
      const auto x0 = static_cast<std::uint32_t>(sx);
      const auto y0 = static_cast<std::uint32_t>(sy);
      const double ax = sx - x0;
      const double ay = sy - y0;
      const std::uint32_t x1 = ax > 0.0 ? x0 + 1 : x0;
      const std::uint32_t y1 = ay > 0.0 ? y0 + 1 : y0;
      for (std::uint32_t c = 0; c < channel_count; ++c) {
        const double top = (1.0 - ax) * fetch(x0, y0, c) + (ax > 0.0 ? ax * fetch(x1, y0, c) : 0.0);
        const double bottom =
            ay > 0.0 ? (1.0 - ax) * fetch(x0, y1, c) + (ax > 0.0 ? ax * fetch(x1, y1, c) : 0.0) : 0.0;
        const double value = (1.0 - ay) * top + ay * bottom;
        px[c] = static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
      }
    }
  }
}

/// Throws DIMENSION_MISMATCH unless the image matches the map's source size.
CameraImage apply_map(const CameraImage& image, const PixelMap& map);

}  // namespace fmse
