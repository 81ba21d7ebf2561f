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

#include "fmse/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fmse/camera.hpp"
#include "fmse/error.hpp"

namespace fmse {

std::vector<ProjectedPoint> project_cloud(const PointCloud& cloud, const RigidTransform& cam_from_lidar,
                                          const CameraIntrinsics& intr, bool apply_distortion) {
  std::vector<ProjectedPoint> out;
  out.reserve(cloud.points.size());
  const Eigen::Matrix3d& r = cam_from_lidar.rotation();
  const Eigen::Vector3d& t = cam_from_lidar.translation();
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    const Eigen::Vector3d pc = r * Eigen::Vector3d(p.x, p.y, p.z) + t;
    if (pc.z() <= kMinProjectionDepth) continue;
    Eigen::Vector2d n(pc.x() / pc.z(), pc.y() / pc.z());
    if (apply_distortion) n = distort_point(intr, n);
    const double u = intr.fx * n.x() + intr.cx;
    const double v = intr.fy * n.y() + intr.cy;
    if (!(u >= 0.0 && u < intr.width && v >= 0.0 && v < intr.height)) continue;
    out.push_back({u, v, pc.z(), i});
  }
  return out;
}

Rgb depth_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto mix = [](std::uint8_t a, std::uint8_t b, double s) {
    return static_cast<std::uint8_t>(std::lround(a + (double(b) - a) * s));
  };
  if (t <= 0.5) {
    const double s = 2.0 * t;
    return {mix(kNearColor.r, kMidColor.r, s), mix(kNearColor.g, kMidColor.g, s), mix(kNearColor.b, kMidColor.b, s)};
  }
  const double s = 2.0 * t - 1.0;
  return {mix(kMidColor.r, kFarColor.r, s), mix(kMidColor.g, kFarColor.g, s), mix(kMidColor.b, kFarColor.b, s)};
}

namespace {

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

}  // namespace

std::vector<Rgb> colorize_depth(std::span<const double> depths) {
  if (depths.empty()) throw Error(ErrorCode::EmptyInput, "no depths to colorize");
  std::vector<double> sorted(depths.begin(), depths.end());
  std::sort(sorted.begin(), sorted.end());
  return colorize_depth(depths, percentile(sorted, 0.01), percentile(sorted, 0.99));
}

std::vector<Rgb> colorize_depth(std::span<const double> depths, double near, double far) {
  if (!(std::isfinite(near) && std::isfinite(far) && near <= far)) {
    throw Error(ErrorCode::InvalidArgument, "depth bounds must be finite with near <= far");
  }
  const double lo = near;
  const double range = far - near;
  std::vector<Rgb> out;
  out.reserve(depths.size());
  for (double d : depths) out.push_back(depth_color(range > 0.0 ? (d - lo) / range : 0.0));
  return out;
}

namespace {

Rgb pixel_rgb(const CameraImage& img, std::size_t i) {
  const auto* p = img.pixels.data();
  switch (img.encoding) {
    case PixelEncoding::Rgb8: return {p[3 * i], p[3 * i + 1], p[3 * i + 2]};
    case PixelEncoding::Bgr8: return {p[3 * i + 2], p[3 * i + 1], p[3 * i]};
    case PixelEncoding::Mono8: return {p[i], p[i], p[i]};
  }
  return {};
}

}  // namespace

CameraImage render_overlay(const CameraImage& base, std::span<const ProjectedPoint> points,
                           std::span<const Rgb> colors, int radius) {
  validate(base);
  if (colors.size() != points.size()) throw Error(ErrorCode::InvalidArgument, "one color per projected point required");
  CameraImage out = base;
  out.encoding = PixelEncoding::Rgb8;
  const std::size_t n = std::size_t{base.width} * base.height;
  out.pixels.resize(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    const Rgb c = pixel_rgb(base, i);
    out.pixels[3 * i] = c.r;
    out.pixels[3 * i + 1] = c.g;
    out.pixels[3 * i + 2] = c.b;
  }
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a].depth > points[b].depth; });
  const auto w = static_cast<long>(base.width);
  const auto h = static_cast<long>(base.height);
  for (std::size_t k : order) {
    const long cu = static_cast<long>(std::floor(points[k].u));
    const long cv = static_cast<long>(std::floor(points[k].v));
    for (long y = cv - radius; y <= cv + radius; ++y) {
      for (long x = cu - radius; x <= cu + radius; ++x) {
        if (x < 0 || y < 0 || x >= w || y >= h) continue;
        const std::size_t i = static_cast<std::size_t>(y * w + x) * 3;
        out.pixels[i] = colors[k].r;
        out.pixels[i + 1] = colors[k].g;
        out.pixels[i + 2] = colors[k].b;
      }
    }
  }
  return out;
}

void write_ppm(std::ostream& out, const CameraImage& image) {
  validate(image);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  const std::size_t n = std::size_t{image.width} * image.height;
  std::vector<std::uint8_t> rgb(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    const Rgb c = pixel_rgb(image, i);
    rgb[3 * i] = c.r;
    rgb[3 * i + 1] = c.g;
    rgb[3 * i + 2] = c.b;
  }
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "PPM write failed");
}

}  // namespace fmse
