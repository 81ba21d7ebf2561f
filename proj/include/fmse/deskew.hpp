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

#include <span>

#include <Eigen/Core>

#include "fmse/transform.hpp"
#include "fmse/types.hpp"

namespace fmse {

/// Rigid motion of the sensor after `dt_s` seconds of constant twist, as
/// the exponential of the twist (angular part integrated exactly).
RigidTransform twist_motion(const EgoMotionState& motion, double dt_s);

/// Re-expresses a point measured `dt_s` after the reference instant in the
/// sensor pose at the reference instant.
Eigen::Vector3d deskew_point(const Eigen::Vector3d& p, double dt_s, const EgoMotionState& motion);

/// Applies deskew_point to every point using its own dt. Per-point dt and
/// all other fields are preserved.
PointCloud undistort_cloud(const PointCloud& cloud, const EgoMotionState& motion);

/// The twist that undoes `motion` over the same interval.
EgoMotionState inverse_twist(const EgoMotionState& motion);

/// Linear interpolation of velocity and angular rate between the bracketing
/// samples. `ins` must be sorted by timestamp; throws OUT_OF_RANGE outside
/// [first, last] and UNSORTED_INPUT on descending timestamps.
EgoMotionState ego_state_at(std::span<const InsRecord> ins, Timestamp t);

}  // namespace fmse
