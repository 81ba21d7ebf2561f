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

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace fmse {

struct ConvexHull {
  /// Sorted input indices of the hull vertices.
  std::vector<std::size_t> vertices;
  /// Triangles, counter-clockwise seen from outside.
  std::vector<std::array<std::size_t, 3>> facets;
};

/// Quickhull. Throws DEGENERATE on fewer than 4 points or when the input
/// is coplanar or collinear within the distance tolerance.
ConvexHull convex_hull_3d(std::span<const Eigen::Vector3d> points);

/// Extreme points of the input in its own affine dimension: one point for
/// coincident input, the two ends of a segment, the corners of a polygon,
/// or the vertices of a polyhedron.
struct HullVertices {
  int dimension = 0;
  std::vector<std::size_t> vertices;
};

HullVertices hull_vertices(std::span<const Eigen::Vector3d> points);

/// Distance below which a point counts as on a plane through `points`.
double hull_tolerance(std::span<const Eigen::Vector3d> points);

}  // namespace fmse
