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

// Test-side reference implementations, written independently of the library
// code paths they check: brute force, extended precision, or a different
// algorithm entirely. Deliberately slow and simple.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "covsim/geo.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Geodesy at extended precision.

struct LlaL {
  long double lat, lon, alt;
};

inline covsim::geo::Vec3 lla_to_enu_ld(long double lat, long double lon,
                                       long double alt,
                                       const covsim::geo::GeoOrigin& origin) {
  const long double deg = 3.141592653589793238462643383279502884L / 180.0L;
  const long double R = 6378137.0L;
  const long double x =
      (lon - static_cast<long double>(origin.lon0)) * deg * R *
      std::cos(static_cast<long double>(origin.lat0) * deg);
  const long double y = (lat - static_cast<long double>(origin.lat0)) * deg * R;
  const long double z = alt - static_cast<long double>(origin.alt0);
  return {static_cast<double>(x), static_cast<double>(y),
          static_cast<double>(z)};
}

inline LlaL enu_to_lla_ld(const covsim::geo::Vec3& p,
                          const covsim::geo::GeoOrigin& origin) {
  const long double deg = 3.141592653589793238462643383279502884L / 180.0L;
  const long double R = 6378137.0L;
  LlaL out;
  out.lat = static_cast<long double>(origin.lat0) +
            static_cast<long double>(p.y) / (deg * R);
  out.lon = static_cast<long double>(origin.lon0) +
            static_cast<long double>(p.x) /
                (deg * R *
                 std::cos(static_cast<long double>(origin.lat0) * deg));
  out.alt = static_cast<long double>(origin.alt0) +
            static_cast<long double>(p.z);
  return out;
}

// Hand-expanded 2-D rotation, kept scalar on purpose.
inline covsim::geo::Vec3 rotate_translate(double px, double py, double pz,
                                          double tx, double ty, double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {c * px - s * py + tx, s * px + c * py + ty, pz};
}

// ---------------------------------------------------------------------------
// Oriented boxes: containment, ray marching, per-face intersection.

struct OBox {
  covsim::geo::Vec3 center;
  double length, width, height;  // full extents
  double yaw;
};

inline bool point_in_box(const covsim::geo::Vec3& p, const OBox& b,
                         double pad = 0.0) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double dx = p.x - b.center.x;
  const double dy = p.y - b.center.y;
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= b.length / 2 + pad &&
         std::abs(ly) <= b.width / 2 + pad &&
         std::abs(p.z - b.center.z) <= b.height / 2 + pad;
}

// First ray parameter at which the ray is inside the box, found by marching.
// Coarse pass at 1e-2 m, refined to 1e-6 m, so the reported entry distance
// is far tighter than the 1e-3 comparison tolerance. Returns nullopt when no
// sample within [0, t_max] lands inside.
inline std::optional<double> ray_march_box(const covsim::geo::Vec3& o,
                                           const covsim::geo::Vec3& d,
                                           const OBox& b, double t_max) {
  auto at = [&](double t) {
    return covsim::geo::Vec3{o.x + d.x * t, o.y + d.y * t, o.z + d.z * t};
  };
  auto refine = [&](double lo, double hi, double step) {
    for (double t = lo; t <= hi; t += step) {
      if (point_in_box(at(t), b)) return t;
    }
    return hi + step;
  };
  const double coarse = 1e-2;
  for (double t = 0.0; t <= t_max; t += coarse) {
    if (point_in_box(at(t), b)) {
      double lo = std::max(0.0, t - coarse);
      double mid = refine(lo, t, 1e-4);
      double fine = refine(std::max(0.0, mid - 1e-4), mid, 1e-6);
      return fine;
    }
  }
  return std::nullopt;
}

// Ray/box entry distance via six face-plane solves in the box frame. A
// different algebraic route than the slab method.
inline std::optional<double> ray_box_faces(const covsim::geo::Vec3& o,
                                           const covsim::geo::Vec3& d,
                                           const OBox& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  auto to_local = [&](const covsim::geo::Vec3& p) {
    const double dx = p.x - b.center.x;
    const double dy = p.y - b.center.y;
    return covsim::geo::Vec3{c * dx + s * dy, -s * dx + c * dy,
                             p.z - b.center.z};
  };
  const covsim::geo::Vec3 lo = to_local(o);
  const covsim::geo::Vec3 ld{c * d.x + s * d.y, -s * d.x + c * d.y, d.z};
  const double hx = b.length / 2, hy = b.width / 2, hz = b.height / 2;
  const double org[3] = {lo.x, lo.y, lo.z};
  const double dir[3] = {ld.x, ld.y, ld.z};
  const double half[3] = {hx, hy, hz};
  double best = std::numeric_limits<double>::infinity();
  const double eps = 1e-9;
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = -1; side <= 1; side += 2) {
      if (std::abs(dir[axis]) < 1e-300) continue;
      const double t = (side * half[axis] - org[axis]) / dir[axis];
      if (t <= 0.0 || t >= best) continue;
      bool inside = true;
      for (int other = 0; other < 3; ++other) {
        if (other == axis) continue;
        const double v = org[other] + dir[other] * t;
        if (std::abs(v) > half[other] + eps) inside = false;
      }
      if (inside) best = t;
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  // A ray starting inside the box has no entry, matching the library rule.
  if (std::abs(lo.x) < hx - eps && std::abs(lo.y) < hy - eps &&
      std::abs(lo.z) < hz - eps) {
    return std::nullopt;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Clustering: O(n^2) union-find over every pair.

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

inline std::vector<std::vector<std::uint32_t>> brute_clusters(
    const std::vector<covsim::geo::Vec3>& pts, double eps,
    std::size_t min_pts) {
  const int n = static_cast<int>(pts.size());
  UnionFind uf(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = pts[i].x - pts[j].x;
      const double dy = pts[i].y - pts[j].y;
      const double dz = pts[i].z - pts[j].z;
      if (dx * dx + dy * dy + dz * dz <= eps * eps) uf.unite(i, j);
    }
  }
  std::map<int, std::vector<std::uint32_t>> groups;
  for (int i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);
  std::vector<std::vector<std::uint32_t>> out;
  for (auto& [root, members] : groups) {
    if (members.size() >= min_pts) out.push_back(std::move(members));
  }
  // groups is keyed by the smallest member, so out is already ordered by it.
  return out;
}

// ---------------------------------------------------------------------------
// Minimum-area rectangle by exhaustive angle sweep (0.01 degree grid).

inline double sweep_min_area(const std::vector<covsim::geo::Vec3>& pts,
                             double step_deg = 0.01) {
  double best = std::numeric_limits<double>::infinity();
  for (double deg = 0.0; deg < 90.0; deg += step_deg) {
    const double a = deg * covsim::geo::kDegToRad;
    const double c = std::cos(a);
    const double s = std::sin(a);
    double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
    for (const auto& p : pts) {
      const double u = c * p.x + s * p.y;
      const double v = -s * p.x + c * p.y;
      umin = std::min(umin, u);
      umax = std::max(umax, u);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
    best = std::min(best, (umax - umin) * (vmax - vmin));
  }
  return best;
}

inline double aabb_area(const std::vector<covsim::geo::Vec3>& pts) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  return (xmax - xmin) * (ymax - ymin);
}

// ---------------------------------------------------------------------------
// JPDA joint events, enumerated measurement-first (the library walks tracks).

// gated[t][j] = true when measurement j lies in track t's gate; g[t][j] is
// the Gaussian likelihood. Returns the (T x (M+1)) marginal matrix with
// column 0 the miss probability.
inline Eigen::MatrixXd jpda_brute(const std::vector<std::vector<bool>>& gated,
                                  const std::vector<std::vector<double>>& g,
                                  double p_detect, double clutter) {
  const int T = static_cast<int>(gated.size());
  const int M = T > 0 ? static_cast<int>(gated[0].size()) : 0;
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(T, M + 1);
  std::vector<int> owner(M, -1);  // -1 = clutter
  double total = 0.0;

  auto weight = [&]() {
    double w = 1.0;
    std::vector<bool> track_used(T, false);
    for (int j = 0; j < M; ++j) {
      if (owner[j] < 0) {
        w *= clutter;
      } else {
        w *= p_detect * g[owner[j]][j];
        track_used[owner[j]] = true;
      }
    }
    for (int t = 0; t < T; ++t) {
      if (!track_used[t]) w *= 1.0 - p_detect;
    }
    return w;
  };

  auto record = [&]() {
    const double w = weight();
    total += w;
    std::vector<bool> track_used(T, false);
    for (int j = 0; j < M; ++j) {
      if (owner[j] >= 0) {
        beta(owner[j], j + 1) += w;
        track_used[owner[j]] = true;
      }
    }
    for (int t = 0; t < T; ++t) {
      if (!track_used[t]) beta(t, 0) += w;
    }
  };

  std::vector<bool> used(T, false);
  auto rec = [&](auto&& self, int j) -> void {
    if (j == M) {
      record();
      return;
    }
    owner[j] = -1;
    self(self, j + 1);
    for (int t = 0; t < T; ++t) {
      if (used[t] || !gated[t][j]) continue;
      used[t] = true;
      owner[j] = t;
      self(self, j + 1);
      owner[j] = -1;
      used[t] = false;
    }
  };
  rec(rec, 0);

  if (total <= 0.0 || !std::isfinite(total)) {
    beta.setZero();
    beta.col(0).setOnes();
    return beta;
  }
  return beta / total;
}

// ---------------------------------------------------------------------------
// Textbook Kalman update with an explicit 2x2 inverse.

struct KfResult {
  Eigen::Vector4d x;
  Eigen::Matrix4d P;
};

inline KfResult kf_update(const Eigen::Vector4d& x, const Eigen::Matrix4d& P,
                          const Eigen::Vector2d& z, const Eigen::Matrix2d& R) {
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = 1.0;
  H(1, 1) = 1.0;
  const Eigen::Matrix2d S = H * P * H.transpose() + R;
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  Eigen::Matrix2d Sinv;
  Sinv << S(1, 1), -S(0, 1), -S(1, 0), S(0, 0);
  Sinv /= det;
  const Eigen::Matrix<double, 4, 2> K = P * H.transpose() * Sinv;
  KfResult out;
  out.x = x + K * (z - H * x);
  out.P = (Eigen::Matrix4d::Identity() - K * H) * P;
  return out;
}

// ---------------------------------------------------------------------------
// Polyline position by explicit arc-length bookkeeping.

struct PolyPose {
  double x, y, yaw, speed;
};

inline PolyPose polyline_at(const std::vector<std::pair<double, double>>& wps,
                            const std::vector<double>& speeds, double t) {
  double yaw = 0.0;
  for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
    const double dx = wps[i + 1].first - wps[i].first;
    const double dy = wps[i + 1].second - wps[i].second;
    if (dx != 0.0 || dy != 0.0) {
      yaw = std::atan2(dy, dx);
      break;
    }
  }
  double remaining = t;
  for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
    const double dx = wps[i + 1].first - wps[i].first;
    const double dy = wps[i + 1].second - wps[i].second;
    const double len = std::hypot(dx, dy);
    if (len == 0.0) continue;
    yaw = std::atan2(dy, dx);
    if (speeds[i] <= 0.0) {
      return {wps[i].first, wps[i].second, yaw, 0.0};
    }
    const double seg_time = len / speeds[i];
    if (remaining < seg_time) {
      const double f = remaining * speeds[i] / len;
      return {wps[i].first + f * dx, wps[i].second + f * dy, yaw, speeds[i]};
    }
    remaining -= seg_time;
  }
  return {wps.back().first, wps.back().second, yaw, 0.0};
}

}  // namespace oracles
