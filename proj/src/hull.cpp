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

#include "fmse/hull.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include <Eigen/Geometry>

#include "fmse/error.hpp"

namespace fmse {

double hull_tolerance(std::span<const Eigen::Vector3d> points) {
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  for (const auto& p : points) m = m.cwiseMax(p.cwiseAbs());
  return 3.0 * DBL_EPSILON * std::max(m.sum(), 1.0);
}

namespace {

struct Simplex {
  int dimension = 0;
  std::array<std::size_t, 4> index{};
};

Simplex find_simplex(std::span<const Eigen::Vector3d> pts, double eps) {
  Simplex s;
  double spread = -1.0;
  for (int axis = 0; axis < 3; ++axis) {
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i][axis] < pts[lo][axis]) lo = i;
      if (pts[i][axis] > pts[hi][axis]) hi = i;
    }
    const double d = pts[hi][axis] - pts[lo][axis];
    if (d > spread) {
      spread = d;
      s.index[0] = lo;
      s.index[1] = hi;
    }
  }
  if (spread <= eps) return s;
  s.dimension = 1;

  const Eigen::Vector3d& p0 = pts[s.index[0]];
  const Eigen::Vector3d dir = (pts[s.index[1]] - p0).normalized();
  double best = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Eigen::Vector3d r = pts[i] - p0;
    const double d = (r - dir * dir.dot(r)).norm();
    if (d > best) {
      best = d;
      s.index[2] = i;
    }
  }
  if (best <= eps) return s;
  s.dimension = 2;

  const Eigen::Vector3d n = (pts[s.index[1]] - p0).cross(pts[s.index[2]] - p0).normalized();
  best = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = std::abs(n.dot(pts[i] - p0));
    if (d > best) {
      best = d;
      s.index[3] = i;
    }
  }
  if (best <= eps) return s;
  s.dimension = 3;
  return s;
}

std::vector<std::size_t> polygon_vertices(std::span<const Eigen::Vector3d> pts, const Simplex& s, double eps) {
  const Eigen::Vector3d& o = pts[s.index[0]];
  const Eigen::Vector3d e1 = (pts[s.index[1]] - o).normalized();
  const Eigen::Vector3d n = e1.cross(pts[s.index[2]] - o).normalized();
  const Eigen::Vector3d e2 = n.cross(e1);
  struct P2 {
    double x;
    double y;
    std::size_t i;
  };
  std::vector<P2> q;
  q.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) q.push_back({e1.dot(pts[i] - o), e2.dot(pts[i] - o), i});
  std::sort(q.begin(), q.end(), [](const P2& a, const P2& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
  // Andrew's monotone chain; points within eps of an edge line are dropped.
  auto turn = [eps](const P2& a, const P2& b, const P2& c) {
    const double ux = b.x - a.x, uy = b.y - a.y;
    const double len = std::hypot(ux, uy);
    if (len == 0.0) return 0.0;
    return (ux * (c.y - a.y) - uy * (c.x - a.x)) / len > eps ? 1.0 : 0.0;
  };
  std::vector<P2> chain;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t base = chain.size();
    for (const auto& p : q) {
      while (chain.size() >= base + 2 && turn(chain[chain.size() - 2], chain.back(), p) <= 0.0) chain.pop_back();
      chain.push_back(p);
    }
    chain.pop_back();
    std::reverse(q.begin(), q.end());
  }
  std::vector<std::size_t> out;
  for (const auto& p : chain) out.push_back(p.i);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

class Quickhull {
 public:
  Quickhull(std::span<const Eigen::Vector3d> pts, double eps) : pts_(pts), eps_(eps), stride_(pts.size() + 1) {}

  ConvexHull run(const Simplex& s) {
    const auto& ix = s.index;
    const Eigen::Vector3d centroid = (pts_[ix[0]] + pts_[ix[1]] + pts_[ix[2]] + pts_[ix[3]]) / 4.0;
    const std::array<std::array<std::size_t, 3>, 4> tri{{{ix[0], ix[1], ix[2]},
                                                         {ix[0], ix[1], ix[3]},
                                                         {ix[0], ix[2], ix[3]},
                                                         {ix[1], ix[2], ix[3]}}};
    std::vector<std::size_t> initial;
    for (auto t : tri) {
      Face f = make_face(t[0], t[1], t[2]);
      if (f.n.dot(centroid) - f.d > 0.0) f = make_face(t[0], t[2], t[1]);
      initial.push_back(add_face(std::move(f)));
    }
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (i != ix[0] && i != ix[1] && i != ix[2] && i != ix[3]) rest.push_back(i);
    }
    assign(rest, initial);

    std::vector<std::size_t> stack(initial.begin(), initial.end());
    while (!stack.empty()) {
      const std::size_t f = stack.back();
      stack.pop_back();
      if (!faces_[f].alive || faces_[f].outside.empty()) continue;
      add_point(f, stack);
    }

    ConvexHull hull;
    for (const auto& f : faces_) {
      if (!f.alive) continue;
      hull.facets.push_back(f.v);
      hull.vertices.insert(hull.vertices.end(), f.v.begin(), f.v.end());
    }
    std::sort(hull.vertices.begin(), hull.vertices.end());
    hull.vertices.erase(std::unique(hull.vertices.begin(), hull.vertices.end()), hull.vertices.end());
    return hull;
  }

 private:
  struct Face {
    std::array<std::size_t, 3> v{};
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    double d = 0;
    std::vector<std::size_t> outside;
    bool alive = true;
    std::uint64_t stamp = 0;
  };

  Face make_face(std::size_t a, std::size_t b, std::size_t c) const {
    Face f;
    f.v = {a, b, c};
    const Eigen::Vector3d n = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]);
    const double len = n.norm();
    if (len > 0.0) f.n = n / len;
    f.d = f.n.dot(pts_[a]);
    return f;
  }

  double distance(const Face& f, std::size_t p) const { return f.n.dot(pts_[p]) - f.d; }

  std::uint64_t key(std::size_t a, std::size_t b) const { return std::uint64_t{a} * stride_ + b; }

  std::size_t add_face(Face f) {
    const std::size_t id = faces_.size();
    for (int e = 0; e < 3; ++e) edges_[key(f.v[e], f.v[(e + 1) % 3])] = id;
    faces_.push_back(std::move(f));
    return id;
  }

  void assign(const std::vector<std::size_t>& candidates, const std::vector<std::size_t>& targets) {
    for (std::size_t p : candidates) {
      double best = eps_;
      std::size_t owner = faces_.size();
      for (std::size_t f : targets) {
        const double d = distance(faces_[f], p);
        if (d > best) {
          best = d;
          owner = f;
        }
      }
      if (owner != faces_.size()) faces_[owner].outside.push_back(p);
    }
  }

  void add_point(std::size_t start, std::vector<std::size_t>& stack) {
    const Face& sf = faces_[start];
    std::size_t eye = sf.outside.front();
    double far = distance(sf, eye);
    for (std::size_t p : sf.outside) {
      const double d = distance(sf, p);
      if (d > far) {
        far = d;
        eye = p;
      }
    }

    ++stamp_;
    std::vector<std::size_t> visible{start};
    faces_[start].stamp = stamp_;
    std::vector<std::array<std::size_t, 2>> horizon;
    for (std::size_t k = 0; k < visible.size(); ++k) {
      const std::array<std::size_t, 3> v = faces_[visible[k]].v;
      for (int e = 0; e < 3; ++e) {
        const std::size_t a = v[e];
        const std::size_t b = v[(e + 1) % 3];
        const std::size_t g = edges_.at(key(b, a));
        if (faces_[g].stamp == stamp_) continue;
        if (distance(faces_[g], eye) > eps_) {
          faces_[g].stamp = stamp_;
          visible.push_back(g);
        } else {
          horizon.push_back({a, b});
        }
      }
    }

    std::vector<std::size_t> orphans;
    for (std::size_t f : visible) {
      Face& face = faces_[f];
      for (std::size_t p : face.outside) {
        if (p != eye) orphans.push_back(p);
      }
      face.outside.clear();
      face.outside.shrink_to_fit();
      face.alive = false;
      for (int e = 0; e < 3; ++e) edges_.erase(key(face.v[e], face.v[(e + 1) % 3]));
    }

    std::vector<std::size_t> created;
    created.reserve(horizon.size());
    for (const auto& h : horizon) created.push_back(add_face(make_face(h[0], h[1], eye)));
    assign(orphans, created);
    for (std::size_t f : created) {
      if (!faces_[f].outside.empty()) stack.push_back(f);
    }
  }

  std::span<const Eigen::Vector3d> pts_;
  double eps_;
  std::uint64_t stride_;
  std::vector<Face> faces_;
  std::unordered_map<std::uint64_t, std::size_t> edges_;
  std::uint64_t stamp_ = 0;
};

}  // namespace

ConvexHull convex_hull_3d(std::span<const Eigen::Vector3d> points) {
  if (points.size() < 4) {
    throw Error(ErrorCode::Degenerate, "convex hull needs at least 4 points, got " + std::to_string(points.size()));
  }
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite point");
  }
  const double eps = hull_tolerance(points);
  const Simplex s = find_simplex(points, eps);
  if (s.dimension < 3) {
    throw Error(ErrorCode::Degenerate, s.dimension == 2 ? "input is coplanar" : "input is collinear or coincident");
  }
  return Quickhull(points, eps).run(s);
}

HullVertices hull_vertices(std::span<const Eigen::Vector3d> points) {
  HullVertices out;
  if (points.empty()) return out;
  const double eps = hull_tolerance(points);
  const Simplex s = find_simplex(points, eps);
  out.dimension = s.dimension;
  switch (s.dimension) {
    case 0:
      out.vertices = {0};
      break;
    case 1:
      out.vertices = {std::min(s.index[0], s.index[1]), std::max(s.index[0], s.index[1])};
      break;
    case 2:
      out.vertices = polygon_vertices(points, s, eps);
      break;
    default:
      out.vertices = Quickhull(points, eps).run(s).vertices;
      break;
  }
  return out;
}

}  // namespace fmse
