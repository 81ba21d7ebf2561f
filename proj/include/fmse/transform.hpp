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

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace fmse {

/// Element of SE(3): x' = R x + t.
///
/// The rotation is kept as a 3x3 matrix so point kernels avoid quaternion
/// conversions. Quaternions are only used at file boundaries.
class RigidTransform {
 public:
  /// Tolerance used when checking orthonormality and det(R) = 1.
  static constexpr double kInvariantTolerance = 1e-9;
  /// Drift beyond which compose() re-orthonormalizes its result.
  static constexpr double kDriftThreshold = 1e-12;

  RigidTransform() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

  /// Throws Error(InvalidArgument) unless the rotation is orthonormal with
  /// det = +1 within kInvariantTolerance and all entries are finite.
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Eigen::Vector3d& t);
  /// Rotation about `axis` (need not be normalized) by `angle` radians.
  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double angle,
                                        const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());
  /// Quaternion is normalized before conversion; a zero quaternion throws.
  static RigidTransform from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& translation);
  /// Throws unless the bottom row is (0, 0, 0, 1) and the block is a rotation.
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  /// Unit quaternion with w >= 0.
  Eigen::Quaterniond quaternion() const;
  Eigen::Matrix4d matrix() const;

  /// max |R^T R - I| elementwise.
  double orthonormality_error() const;

  bool operator==(const RigidTransform& other) const {
    return rotation_ == other.rotation_ && translation_ == other.translation_;
  }

 private:
  struct Unchecked {};
  RigidTransform(Unchecked, const Eigen::Matrix3d& r, const Eigen::Vector3d& t)
      : rotation_(r), translation_(t) {}

  friend RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
  friend RigidTransform invert(const RigidTransform& t);

  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

/// `a` applied after `b`, i.e. the 4x4 product a * b.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

/// Closed form (R^T, -R^T t).
RigidTransform invert(const RigidTransform& t);

inline Eigen::Vector3d apply(const RigidTransform& t, const Eigen::Vector3d& p) {
  return t.rotation() * p + t.translation();
}

/// Largest elementwise difference between the two 4x4 matrices.
double max_abs_difference(const RigidTransform& a, const RigidTransform& b);

/// Polar-factor projection of a near-rotation back onto SO(3) using the
/// Newton iteration R <- (R + R^-T) / 2.
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r);

/// Rotation matrix for the rotation vector `w` (axis * angle), exact
/// Rodrigues formula.
Eigen::Matrix3d rotation_from_vector(const Eigen::Vector3d& w);

}  // namespace fmse
