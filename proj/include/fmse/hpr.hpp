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

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fmse/types.hpp"

namespace fmse {

struct HprOptions {
  /// Flipping radius in meters; unset selects auto_multiplier times the
  /// largest point distance from the viewpoint.
  std::optional<double> radius;
  double auto_multiplier = 100.0;
};

struct HprResult {
  /// Sorted indices of the visible points.
  std::vector<std::size_t> visible;
  /// Radius actually used (0 for an empty cloud).
  double radius = 0;
  /// Set when the flipped points and viewpoint span fewer than three
  /// dimensions; visibility then comes from the lower-dimensional hull.
  bool degenerate = false;
};

/// Image of `p` under spherical flipping about `center` with radius `r`.
Eigen::Vector3d spherical_flip(const Eigen::Vector3d& p, const Eigen::Vector3d& center, double r);

/// Throws INVALID_ARGUMENT if a point coincides with the viewpoint or the
/// radius does not exceed the farthest point distance.
HprResult hidden_point_removal(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& viewpoint,
                               const HprOptions& options = {});

HprResult hidden_point_removal(const PointCloud& cloud, const Eigen::Vector3d& viewpoint,
                               const HprOptions& options = {});

}  // namespace fmse
