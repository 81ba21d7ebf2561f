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

#include "fmse/transform.hpp"

#include <cmath>

#include "fmse/error.hpp"

namespace fmse {

namespace {

double rotation_error(const Eigen::Matrix3d& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "rigid transform has non-finite entries");
  }
  if (rotation_error(rotation) > kInvariantTolerance) {
    throw Error(ErrorCode::InvalidArgument, "rotation is not orthonormal");
  }
  if (std::abs(rotation.determinant() - 1.0) > kInvariantTolerance) {
    throw Error(ErrorCode::InvalidArgument, "rotation determinant is not +1");
  }
}

RigidTransform RigidTransform::from_translation(const Eigen::Vector3d& t) {
  return {Unchecked{}, Eigen::Matrix3d::Identity(), t};
}

RigidTransform RigidTransform::from_axis_angle(const Eigen::Vector3d& axis, double angle,
                                               const Eigen::Vector3d& translation) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(angle)) {
    throw Error(ErrorCode::InvalidArgument, "axis-angle needs a nonzero axis and finite angle");
  }
  return {Eigen::AngleAxisd(angle, axis / n).toRotationMatrix(), translation};
}

RigidTransform RigidTransform::from_quaternion(const Eigen::Quaterniond& q,
                                               const Eigen::Vector3d& translation) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::InvalidArgument, "quaternion must be nonzero and finite");
  }
  return {q.normalized().toRotationMatrix(), translation};
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  const Eigen::RowVector4d bottom = m.row(3);
  if (bottom != Eigen::RowVector4d(0, 0, 0, 1)) {
    throw Error(ErrorCode::InvalidArgument, "homogeneous matrix bottom row must be (0,0,0,1)");
  }
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Eigen::Quaterniond RigidTransform::quaternion() const {
  Eigen::Quaterniond q(rotation_);
  q.normalize();
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  return q;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double RigidTransform::orthonormality_error() const { return rotation_error(rotation_); }

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r) {
  Eigen::Matrix3d x = r;
  for (int i = 0; i < 8; ++i) {
    const Eigen::Matrix3d next = 0.5 * (x + x.inverse().transpose());
    const double step = (next - x).cwiseAbs().maxCoeff();
    x = next;
    if (step < 1e-16) break;
  }
  return x;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  Eigen::Matrix3d r = a.rotation_ * b.rotation_;
  const Eigen::Vector3d t = a.rotation_ * b.translation_ + a.translation_;
  if (rotation_error(r) > RigidTransform::kDriftThreshold) r = orthonormalize(r);
  return {RigidTransform::Unchecked{}, r, t};
}

RigidTransform invert(const RigidTransform& t) {
  const Eigen::Matrix3d rt = t.rotation_.transpose();
  return {RigidTransform::Unchecked{}, rt, -(rt * t.translation_)};
}

double max_abs_difference(const RigidTransform& a, const RigidTransform& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

Eigen::Matrix3d rotation_from_vector(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

}  // namespace fmse
