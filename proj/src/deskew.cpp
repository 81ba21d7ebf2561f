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

#include "fmse/deskew.hpp"

#include <algorithm>
#include <cmath>

#include "fmse/error.hpp"

namespace fmse {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d k;
  k << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return k;
}

// Left Jacobian of SO(3); maps the integrated linear velocity to the
// translation of the exponential.
Eigen::Matrix3d left_jacobian(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  double a;
  double b;
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    a = 0.5 - t2 / 24.0;
    b = 1.0 / 6.0 - t2 / 120.0;
  } else {
    a = (1.0 - std::cos(theta)) / (theta * theta);
    b = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

}  // namespace

RigidTransform twist_motion(const EgoMotionState& motion, double dt_s) {
  const Eigen::Vector3d phi = motion.angular_velocity * dt_s;
  const Eigen::Vector3d rho = motion.linear_velocity * dt_s;
  if (phi.isZero(0.0)) return RigidTransform::from_translation(rho);
  return RigidTransform(rotation_from_vector(phi), left_jacobian(phi) * rho);
}

Eigen::Vector3d deskew_point(const Eigen::Vector3d& p, double dt_s, const EgoMotionState& motion) {
  const Eigen::Vector3d phi = motion.angular_velocity * dt_s;
  const Eigen::Vector3d rho = motion.linear_velocity * dt_s;
  if (phi.isZero(0.0)) return p + rho;
  return rotation_from_vector(phi) * p + left_jacobian(phi) * rho;
}

PointCloud undistort_cloud(const PointCloud& cloud, const EgoMotionState& motion) {
  PointCloud out = cloud;
  if (motion.linear_velocity.isZero(0.0) && motion.angular_velocity.isZero(0.0)) return out;
  for (auto& pt : out.points) {
    const double dt = static_cast<double>(pt.dt_ns) * 1e-9;
    const Eigen::Vector3d q = deskew_point(Eigen::Vector3d(pt.x, pt.y, pt.z), dt, motion);
    pt.x = static_cast<float>(q.x());
    pt.y = static_cast<float>(q.y());
    pt.z = static_cast<float>(q.z());
  }
  return out;
}

EgoMotionState inverse_twist(const EgoMotionState& motion) {
  return {-motion.linear_velocity, -motion.angular_velocity};
}

EgoMotionState ego_state_at(std::span<const InsRecord> ins, Timestamp t) {
  if (ins.empty()) throw Error(ErrorCode::OutOfRange, "no INS samples");
  for (std::size_t i = 1; i < ins.size(); ++i) {
    if (ins[i].timestamp < ins[i - 1].timestamp) throw Error(ErrorCode::UnsortedInput, "INS samples not sorted");
  }
  if (t < ins.front().timestamp || t > ins.back().timestamp) {
    throw Error(ErrorCode::OutOfRange, "t=" + std::to_string(t) + " outside INS range [" +
                                           std::to_string(ins.front().timestamp) + ", " +
                                           std::to_string(ins.back().timestamp) + "]");
  }
  auto vec = [](const std::array<double, 3>& a) { return Eigen::Vector3d(a[0], a[1], a[2]); };
  auto it = std::lower_bound(ins.begin(), ins.end(), t,
                             [](const InsRecord& r, Timestamp v) { return r.timestamp < v; });
  if (it->timestamp == t) return {vec(it->velocity), vec(it->angular_rate)};
  const InsRecord& b = *it;
  const InsRecord& a = *(it - 1);
  const double s = static_cast<double>(t - a.timestamp) / static_cast<double>(b.timestamp - a.timestamp);
  return {vec(a.velocity) + s * (vec(b.velocity) - vec(a.velocity)),
          vec(a.angular_rate) + s * (vec(b.angular_rate) - vec(a.angular_rate))};
}

}  // namespace fmse
