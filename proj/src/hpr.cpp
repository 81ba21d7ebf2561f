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

#include "fmse/hpr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fmse/error.hpp"
#include "fmse/hull.hpp"

namespace fmse {

Eigen::Vector3d spherical_flip(const Eigen::Vector3d& p, const Eigen::Vector3d& center, double r) {
  const Eigen::Vector3d rel = p - center;
  const double d = rel.norm();
  return p + 2.0 * (r - d) * (rel / d);
}

HprResult hidden_point_removal(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& viewpoint,
                               const HprOptions& options) {
  HprResult result;
  if (points.empty()) return result;
  double max_d = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite point " + std::to_string(i));
    const double d = (points[i] - viewpoint).norm();
    if (d == 0.0) throw Error(ErrorCode::InvalidArgument, "point " + std::to_string(i) + " coincides with the viewpoint");
    max_d = std::max(max_d, d);
  }
  if (options.radius) {
    if (!(*options.radius > max_d)) {
      throw Error(ErrorCode::InvalidArgument, "radius must exceed the farthest point distance " + std::to_string(max_d));
    }
    result.radius = *options.radius;
  } else {
    if (!(options.auto_multiplier > 1.0)) throw Error(ErrorCode::InvalidArgument, "auto multiplier must exceed 1");
    result.radius = options.auto_multiplier * max_d;
  }

  std::vector<Eigen::Vector3d> flipped;
  flipped.reserve(points.size() + 1);
  for (const auto& p : points) flipped.push_back(spherical_flip(p, viewpoint, result.radius));
  flipped.push_back(viewpoint);

  const HullVertices hv = hull_vertices(flipped);
  result.degenerate = hv.dimension < 3;
  for (std::size_t v : hv.vertices) {
    if (v < points.size()) result.visible.push_back(v);
  }
  return result;
}

HprResult hidden_point_removal(const PointCloud& cloud, const Eigen::Vector3d& viewpoint, const HprOptions& options) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(cloud.points.size());
  for (const auto& p : cloud.points) pts.emplace_back(p.x, p.y, p.z);
  return hidden_point_removal(pts, viewpoint, options);
}

}  // namespace fmse
