// Copyright 2026 the covsim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "covsim/geo.hpp"
#include "covsim/lidar.hpp"
#include "covsim/rng.hpp"

namespace covsim::perception {

struct Roi {
  double x_min = -40.0, x_max = 40.0;
  double y_min = -40.0, y_max = 40.0;
  double z_min = -0.5, z_max = 3.5;
};

struct PerceptionConfig {
  Roi roi{};
  int ransac_iters = 100;
  double ransac_inlier_dist = 0.2;
  double cluster_eps = 0.7;
  int cluster_min_pts = 5;
  double min_box_extent = 0.2;
};

inline void validate(const PerceptionConfig& cfg) {
  if (!(cfg.roi.x_min < cfg.roi.x_max && cfg.roi.y_min < cfg.roi.y_max &&
        cfg.roi.z_min < cfg.roi.z_max)) {
    throw std::invalid_argument("perception: roi min must be < max per axis");
  }
  if (cfg.ransac_iters < 1) throw std::invalid_argument("perception: ransac_iters must be >= 1");
  if (!(cfg.ransac_inlier_dist > 0.0)) {
    throw std::invalid_argument("perception: ransac_inlier_dist must be > 0");
  }
  if (!(cfg.cluster_eps > 0.0)) throw std::invalid_argument("perception: cluster_eps must be > 0");
  if (cfg.cluster_min_pts < 1) {
    throw std::invalid_argument("perception: cluster_min_pts must be >= 1");
  }
  if (!(cfg.min_box_extent >= 0.0)) {
    throw std::invalid_argument("perception: min_box_extent must be >= 0");
  }
}

struct Detection {
  geo::Vec3 center;               // body frame
  double length = 0.0, width = 0.0, height = 0.0;
  double yaw = 0.0;               // [0, pi/2)
  int n_points = 0;
  double t = 0.0;
};

/// Keeps exactly the points inside the closed ROI box, input order preserved.
inline lidar::PointCloud crop_roi(const lidar::PointCloud& cloud, const Roi& roi) {
  lidar::PointCloud out;
  out.frame = cloud.frame;
  out.frame_actor = cloud.frame_actor;
  out.t = cloud.t;
  for (const geo::Vec3& p : cloud.points) {
    if (p.x >= roi.x_min && p.x <= roi.x_max && p.y >= roi.y_min &&
        p.y <= roi.y_max && p.z >= roi.z_min && p.z <= roi.z_max) {
      out.points.push_back(p);
    }
  }
  return out;
}

namespace detail {

// Hypothesis sampling order is tied to a canonical sort of the points, not
// to their arrival order, so ground labels survive input permutation.
inline std::vector<std::uint32_t> canonical_order(const std::vector<geo::Vec3>& pts) {
  std::vector<std::uint32_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
    const geo::Vec3& p = pts[a];
    const geo::Vec3& q = pts[b];
    if (p.x != q.x) return p.x < q.x;
    if (p.y != q.y) return p.y < q.y;
    if (p.z != q.z) return p.z < q.z;
    return a < b;
  });
  return idx;
}

}  // namespace detail

struct GroundSplit {
  lidar::PointCloud ground;
  lidar::PointCloud obstacles;
};

/// RANSAC plane removal. Each iteration draws 3 distinct points (in the
/// canonical order) from a counter stream keyed by (seed, iteration); the
/// hypothesis with the most inliers wins, ties going to the earlier
/// iteration. Clouds of fewer than 3 points are all obstacles.
inline GroundSplit remove_ground(const lidar::PointCloud& cloud,
                                 const PerceptionConfig& cfg, std::uint64_t seed) {
  GroundSplit out;
  out.ground.frame = out.obstacles.frame = cloud.frame;
  out.ground.frame_actor = out.obstacles.frame_actor = cloud.frame_actor;
  out.ground.t = out.obstacles.t = cloud.t;

  const std::size_t n = cloud.points.size();
  if (n < 3) {
    out.obstacles.points = cloud.points;
    return out;
  }
  const auto order = detail::canonical_order(cloud.points);

  std::size_t best_count = 0;
  geo::Vec3 best_normal{};
  geo::Vec3 best_anchor{};
  for (int iter = 0; iter < cfg.ransac_iters; ++iter) {
    std::uint32_t pick[3];
    std::uint64_t counter = 0;
    for (int k = 0; k < 3;) {
      const std::uint64_t h =
          rng::mix(seed, static_cast<std::uint64_t>(iter), counter++);
      const auto j = static_cast<std::uint32_t>(
          rng::uniform(h, 0.0, static_cast<double>(n)));
      if ((k > 0 && j == pick[0]) || (k > 1 && j == pick[1])) continue;
      pick[k++] = j;
    }
    const geo::Vec3& a = cloud.points[order[pick[0]]];
    const geo::Vec3& b = cloud.points[order[pick[1]]];
    const geo::Vec3& c = cloud.points[order[pick[2]]];
    const geo::Vec3 u = b - a;
    const geo::Vec3 v = c - a;
    geo::Vec3 normal{u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z,
                     u.x * v.y - u.y * v.x};
    const double len = normal.norm();
    if (len < 1e-12) continue;  // degenerate triple
    normal = normal * (1.0 / len);

    std::size_t count = 0;
    for (const geo::Vec3& p : cloud.points) {
      if (std::abs(normal.dot(p - a)) <= cfg.ransac_inlier_dist) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_normal = normal;
      best_anchor = a;
    }
  }

  if (best_count == 0) {
    out.obstacles.points = cloud.points;
    return out;
  }
  for (const geo::Vec3& p : cloud.points) {
    if (std::abs(best_normal.dot(p - best_anchor)) <= cfg.ransac_inlier_dist) {
      out.ground.points.push_back(p);
    } else {
      out.obstacles.points.push_back(p);
    }
  }
  return out;
}

namespace detail {

struct Dsu {
  std::vector<std::uint32_t> parent;
  explicit Dsu(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0u);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

inline std::uint64_t cell_key(std::int64_t ix, std::int64_t iy, std::int64_t iz) {
  return rng::mix(static_cast<std::uint64_t>(ix), static_cast<std::uint64_t>(iy),
                  static_cast<std::uint64_t>(iz));
}

}  // namespace detail

/// Connected components of the fixed-radius graph (3-D distance <= eps).
/// Components smaller than min_pts are dropped. Clusters are ordered by
/// their smallest point index, members ascending. Neighbor search is
/// bucketed on an eps grid; a hash collision only adds candidate pairs,
/// which the exact distance test then rejects.
inline std::vector<std::vector<std::uint32_t>> cluster(
    const lidar::PointCloud& cloud, double eps, int min_pts) {
  const std::size_t n = cloud.points.size();
  std::vector<std::vector<std::uint32_t>> clusters;
  if (n == 0) return clusters;

  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid;
  grid.reserve(n * 2);
  const double inv = 1.0 / eps;
  const auto cell_of = [&](const geo::Vec3& p) {
    return std::array<std::int64_t, 3>{
        static_cast<std::int64_t>(std::floor(p.x * inv)),
        static_cast<std::int64_t>(std::floor(p.y * inv)),
        static_cast<std::int64_t>(std::floor(p.z * inv))};
  };
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto c = cell_of(cloud.points[i]);
    grid[detail::cell_key(c[0], c[1], c[2])].push_back(i);
  }

  detail::Dsu dsu(n);
  const double eps2 = eps * eps;
  for (std::uint32_t i = 0; i < n; ++i) {
    const geo::Vec3& p = cloud.points[i];
    const auto c = cell_of(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find(detail::cell_key(c[0] + dx, c[1] + dy, c[2] + dz));
          if (it == grid.end()) continue;
          for (std::uint32_t j : it->second) {
            if (j <= i) continue;
            const geo::Vec3 d = cloud.points[j] - p;
            if (d.dot(d) <= eps2) dsu.unite(i, j);
          }
        }
      }
    }
  }

  std::unordered_map<std::uint32_t, std::uint32_t> root_to_cluster;
  std::vector<std::vector<std::uint32_t>> all;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t r = dsu.find(i);
    auto [it, inserted] = root_to_cluster.try_emplace(r, static_cast<std::uint32_t>(all.size()));
    if (inserted) all.emplace_back();
    all[it->second].push_back(i);
  }
  // Scanning i in ascending order already yields clusters ordered by their
  // smallest member, with members ascending.
  for (auto& c : all) {
    if (static_cast<int>(c.size()) >= min_pts) clusters.push_back(std::move(c));
  }
  return clusters;
}

/// Minimum-area rectangle of an xy point set, axes identified mod 90 deg.
struct RectXY {
  double cx = 0.0, cy = 0.0;
  double len = 0.0;    // side along yaw
  double width = 0.0;  // side across
  double yaw = 0.0;    // [0, pi/2)
};

namespace detail {

inline double canonical_quarter(double angle) {
  double a = std::fmod(angle, geo::kPi / 2.0);
  if (a < 0.0) a += geo::kPi / 2.0;
  if (a >= geo::kPi / 2.0) a = 0.0;
  return a;
}

// Convex hull, CCW, collinear points dropped (monotone chain).
inline std::vector<geo::Vec3> hull_xy(std::vector<geo::Vec3> pts) {
  std::sort(pts.begin(), pts.end(), [](const geo::Vec3& a, const geo::Vec3& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const geo::Vec3& a, const geo::Vec3& b) {
                          return a.x == b.x && a.y == b.y;
                        }),
            pts.end());
  const std::size_t n = pts.size();
  if (n <= 2) return pts;
  const auto cross = [](const geo::Vec3& o, const geo::Vec3& a, const geo::Vec3& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<geo::Vec3> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

struct Projection {
  double u_min, u_max, v_min, v_max;
};

inline Projection project(const std::vector<geo::Vec3>& pts, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Projection pr{1e300, -1e300, 1e300, -1e300};
  for (const geo::Vec3& p : pts) {
    const double u = c * p.x + s * p.y;
    const double v = -s * p.x + c * p.y;
    pr.u_min = std::min(pr.u_min, u);
    pr.u_max = std::max(pr.u_max, u);
    pr.v_min = std::min(pr.v_min, v);
    pr.v_max = std::max(pr.v_max, v);
  }
  return pr;
}

}  // namespace detail

/// Smallest-area oriented bounding rectangle of the xy projection. An
/// optimal rectangle is flush with some hull edge, so only hull-edge
/// directions are tried; ties keep the earliest edge.
inline RectXY min_area_rect(const std::vector<geo::Vec3>& points) {
  if (points.empty()) throw std::invalid_argument("perception: fit on empty point set");
  const auto hull = detail::hull_xy(points);

  RectXY rect;
  if (hull.size() == 1) {
    rect.cx = hull[0].x;
    rect.cy = hull[0].y;
    return rect;
  }

  double best_area = 1e300;
  double best_angle = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const geo::Vec3& a = hull[i];
    const geo::Vec3& b = hull[(i + 1) % hull.size()];
    if (a.x == b.x && a.y == b.y) continue;
    const double angle =
        detail::canonical_quarter(std::atan2(b.y - a.y, b.x - a.x));
    const auto pr = detail::project(hull, angle);
    const double area = (pr.u_max - pr.u_min) * (pr.v_max - pr.v_min);
    if (area < best_area) {
      best_area = area;
      best_angle = angle;
    }
  }

  const auto pr = detail::project(hull, best_angle);
  const double cu = (pr.u_min + pr.u_max) / 2.0;
  const double cv = (pr.v_min + pr.v_max) / 2.0;
  const double c = std::cos(best_angle);
  const double s = std::sin(best_angle);
  rect.cx = c * cu - s * cv;
  rect.cy = s * cu + c * cv;
  rect.len = pr.u_max - pr.u_min;
  rect.width = pr.v_max - pr.v_min;
  rect.yaw = best_angle;
  return rect;
}

/// Oriented box around one cluster: minimum-area rectangle in xy, raw
/// [min z, max z] span in z, every extent clamped up to min_box_extent.
inline Detection fit_box(const std::vector<geo::Vec3>& points, double min_box_extent) {
  const RectXY r = min_area_rect(points);
  double z_min = points[0].z, z_max = points[0].z;
  for (const geo::Vec3& p : points) {
    z_min = std::min(z_min, p.z);
    z_max = std::max(z_max, p.z);
  }
  Detection d;
  d.center = {r.cx, r.cy, (z_min + z_max) / 2.0};
  d.length = std::max(r.len, min_box_extent);
  d.width = std::max(r.width, min_box_extent);
  d.height = std::max(z_max - z_min, min_box_extent);
  d.yaw = r.yaw;
  d.n_points = static_cast<int>(points.size());
  return d;
}

/// The full three-step pipeline: ROI crop, RANSAC ground removal, then
/// clustering with one oriented box per cluster.
inline std::vector<Detection> detect(const lidar::PointCloud& cloud,
                                     const PerceptionConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  const lidar::PointCloud cropped = crop_roi(cloud, cfg.roi);
  const GroundSplit split = remove_ground(cropped, cfg, seed);
  const auto clusters = cluster(split.obstacles, cfg.cluster_eps, cfg.cluster_min_pts);

  std::vector<Detection> detections;
  detections.reserve(clusters.size());
  for (const auto& idx : clusters) {
    std::vector<geo::Vec3> pts;
    pts.reserve(idx.size());
    for (std::uint32_t i : idx) pts.push_back(split.obstacles.points[i]);
    Detection d = fit_box(pts, cfg.min_box_extent);
    d.t = cloud.t;
    detections.push_back(d);
  }
  return detections;
}

}  // namespace covsim::perception
