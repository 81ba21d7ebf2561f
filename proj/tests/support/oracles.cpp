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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Geometry>
#include <unsupported/Eigen/MatrixFunctions>

namespace fmse::testing {

std::vector<std::size_t> oracle_hull_vertices(std::span<const Eigen::Vector3d> points, double eps) {
  const std::size_t n = points.size();
  double scale = 0;
  for (const auto& p : points) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double tol = eps * std::max(scale, 1.0);
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        Eigen::Vector3d normal = (points[j] - points[i]).cross(points[k] - points[i]);
        const double len = normal.norm();
        if (len == 0) continue;
        normal /= len;
        bool above = false, below = false;
        for (std::size_t m = 0; m < n && !(above && below); ++m) {
          if (m == i || m == j || m == k) continue;
          const double d = normal.dot(points[m] - points[i]);
          if (d > tol) above = true;
          if (d < -tol) below = true;
        }
        if (!(above && below)) out.insert({i, j, k});
      }
    }
  }
  return {out.begin(), out.end()};
}

Eigen::Vector3d oracle_flip(const Eigen::Vector3d& p, const Eigen::Vector3d& c, double radius) {
  const Eigen::Vector3d d = p - c;
  const double len = std::sqrt(d.x() * d.x() + d.y() * d.y() + d.z() * d.z());
  return p + 2.0 * (radius - len) * d / len;
}

std::vector<std::size_t> oracle_hpr(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& viewpoint,
                                    double radius) {
  const std::size_t n = points.size();
  if (n <= 3) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  std::vector<Eigen::Vector3d> flipped;
  for (const auto& p : points) flipped.push_back(oracle_flip(p, viewpoint, radius));
  flipped.push_back(viewpoint);
  std::vector<std::size_t> out;
  for (std::size_t i : oracle_hull_vertices(flipped))
    if (i < n) out.push_back(i);
  return out;
}

std::optional<Eigen::Vector3d> oracle_project(const Eigen::Matrix4d& cam_from_lidar, const CameraIntrinsics& intr,
                                              const Eigen::Vector3d& p) {
  Eigen::Matrix<double, 3, 4> k_rt;
  Eigen::Matrix3d k;
  k << intr.fx, 0, intr.cx, 0, intr.fy, intr.cy, 0, 0, 1;
  k_rt = k * cam_from_lidar.topRows<3>();
  const Eigen::Vector3d h = k_rt * p.homogeneous();
  if (!(h.z() > 0)) return std::nullopt;
  return Eigen::Vector3d(h.x() / h.z(), h.y() / h.z(), h.z());
}

Eigen::Matrix4d oracle_twist_exp(const Eigen::Vector3d& v, const Eigen::Vector3d& w, double dt) {
  Eigen::Matrix4d xi = Eigen::Matrix4d::Zero();
  xi(0, 1) = -w.z();
  xi(0, 2) = w.y();
  xi(1, 0) = w.z();
  xi(1, 2) = -w.x();
  xi(2, 0) = -w.y();
  xi(2, 1) = w.x();
  xi.block<3, 1>(0, 3) = v;
  return (xi * dt).exp();
}

}  // namespace fmse::testing
