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

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "fmse/transform.hpp"
#include "fmse/types.hpp"

namespace fmse {

struct ProjectedPoint {
  double u = 0;
  double v = 0;
  /// Camera-frame z, meters.
  double depth = 0;
  std::size_t source_index = 0;
};

/// Points closer than this (camera-frame z) are treated as behind the camera.
inline constexpr double kMinProjectionDepth = 1e-6;

/// Pinhole projection of `cloud` through `cam_from_lidar`; drops points
/// behind the camera and outside [0, width) x [0, height).
std::vector<ProjectedPoint> project_cloud(const PointCloud& cloud, const RigidTransform& cam_from_lidar,
                                          const CameraIntrinsics& intr, bool apply_distortion);

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

inline constexpr Rgb kNearColor{255, 255, 0};
inline constexpr Rgb kMidColor{128, 0, 128};
inline constexpr Rgb kFarColor{0, 0, 0};

/// Yellow -> purple -> black over the [1st, 99th] depth percentiles (linear
/// interpolation between order statistics); depths outside are clamped.
/// Throws EMPTY_INPUT on an empty list.
std::vector<Rgb> colorize_depth(std::span<const double> depths);

/// Same colormap over fixed bounds [near, far].
std::vector<Rgb> colorize_depth(std::span<const double> depths, double near, double far);

/// Colormap position t in [0, 1] (0 = near).
Rgb depth_color(double t);

/// RGB8 copy of `base` with each projected point drawn as a
/// (2 * radius + 1)^2 square; nearer points are drawn last.
CameraImage render_overlay(const CameraImage& base, std::span<const ProjectedPoint> points,
                           std::span<const Rgb> colors, int radius = 1);

/// Binary PPM (P6). MONO8 is expanded to gray RGB, BGR8 is swizzled.
void write_ppm(std::ostream& out, const CameraImage& image);

}  // namespace fmse
