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

#include "fmse/camera.hpp"

#include <algorithm>

namespace fmse {

Eigen::Vector2d distort_point(const CameraIntrinsics& intr, const Eigen::Vector2d& normalized) {
  const double x = normalized.x();
  const double y = normalized.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (intr.k1() + r2 * (intr.k2() + r2 * intr.k3()));
  return {x * radial + 2.0 * intr.p1() * x * y + intr.p2() * (r2 + 2.0 * x * x),
          y * radial + intr.p1() * (r2 + 2.0 * y * y) + 2.0 * intr.p2() * x * y};
}

namespace {

Eigen::Matrix2d distortion_jacobian(const CameraIntrinsics& intr, const Eigen::Vector2d& p) {
  const double k1 = intr.k1(), k2 = intr.k2(), k3 = intr.k3(), p1 = intr.p1(), p2 = intr.p2();
  const double x = p.x();
  const double y = p.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
  const double dradial = k1 + r2 * (2.0 * k2 + 3.0 * r2 * k3);
  Eigen::Matrix2d jac;
  jac(0, 0) = radial + 2.0 * x * x * dradial + 2.0 * p1 * y + 6.0 * p2 * x;
  jac(0, 1) = 2.0 * x * y * dradial + 2.0 * p1 * x + 2.0 * p2 * y;
  jac(1, 0) = jac(0, 1);
  jac(1, 1) = radial + 2.0 * y * y * dradial + 6.0 * p1 * y + 2.0 * p2 * x;
  return jac;
}

}  // namespace

Eigen::Vector2d undistort_point(const CameraIntrinsics& intr, const Eigen::Vector2d& distorted) {
  Eigen::Vector2d p = distorted;
  for (int iter = 0; iter < 20; ++iter) {
    const Eigen::Vector2d residual = distort_point(intr, p) - distorted;
    const Eigen::Vector2d step = distortion_jacobian(intr, p).partialPivLu().solve(-residual);
    if (!step.allFinite()) break;
    p += step;
    if (step.norm() < 1e-10) break;
  }
  const double err = (distort_point(intr, p) - distorted).norm();
  if (!p.allFinite() || !(err <= 1e-9)) {
    throw Error(ErrorCode::NoConvergence, "undistortion did not converge");
  }
  // A non-positive radial factor sends the ray through the image center,
  // so such a root is not the physical inverse.
  const double r2 = p.squaredNorm();
  const double radial = 1.0 + r2 * (intr.k1() + r2 * (intr.k2() + r2 * intr.k3()));
  if (!(radial > 0.0)) {
    throw Error(ErrorCode::NoConvergence, "undistortion root maps through the image center");
  }
  return p;
}

PixelMap rectification_map(const CameraIntrinsics& src, const CameraIntrinsics& dst, const Eigen::Matrix3d& rotation) {
  PixelMap map;
  map.width = dst.width;
  map.height = dst.height;
  map.source_width = src.width;
  map.source_height = src.height;
  const std::size_t n = std::size_t{dst.width} * dst.height;
  map.map_x.resize(n);
  map.map_y.resize(n);
  const Eigen::Matrix3d rt = rotation.transpose();
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  for (std::uint32_t v = 0; v < dst.height; ++v) {
    for (std::uint32_t u = 0; u < dst.width; ++u) {
      const Eigen::Vector3d ray((u - dst.cx) / dst.fx, (v - dst.cy) / dst.fy, 1.0);
      const Eigen::Vector3d r = rt * ray;
      const std::size_t i = std::size_t{v} * dst.width + u;
      if (r.z() <= 0.0) {
        map.map_x[i] = kNaN;
        map.map_y[i] = kNaN;
        continue;
      }
      const Eigen::Vector2d d = distort_point(src, {r.x() / r.z(), r.y() / r.z()});
      map.map_x[i] = src.fx * d.x() + src.cx;
      map.map_y[i] = src.fy * d.y() + src.cy;
    }
  }
  return map;
}

CameraImage apply_map(const CameraImage& image, const PixelMap& map) {
  if (image.width != map.source_width || image.height != map.source_height) {
    throw Error(ErrorCode::DimensionMismatch, "image is " + std::to_string(image.width) + "x" +
                                                  std::to_string(image.height) + ", map expects " +
                                                  std::to_string(map.source_width) + "x" +
                                                  std::to_string(map.source_height));
  }
  validate(image);
  const std::uint32_t ch = channels(image.encoding);
  CameraImage out = image;
  out.width = map.width;
  out.height = map.height;
  out.pixels.assign(std::size_t{map.width} * map.height * ch, 0);
  const auto* src = image.pixels.data();
  const std::uint32_t w = image.width;
  remap_bilinear(
      map, ch, [&](std::uint32_t x, std::uint32_t y, std::uint32_t c) { return double(src[(std::size_t{y} * w + x) * ch + c]); },
      out.pixels);
  return out;
}

}  // namespace fmse
