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

#include <cmath>
#include <stdexcept>

namespace covsim::geo {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

// Radius of the local tangent plane. Scenarios span well under 2 km, where
// the equirectangular approximation stays below 1 cm of error, so a single
// spherical radius is used instead of the full WGS-84 ellipsoid.
inline constexpr double kEarthRadius = 6378137.0;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  double norm_xy() const { return std::hypot(x, y); }

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

/// Normalizes an angle to (-pi, pi]. Idempotent.
inline double normalize_yaw(double yaw) {
  double y = std::remainder(yaw, 2.0 * kPi);
  if (y <= -kPi) y += 2.0 * kPi;
  return y;
}

/// 2-D pose in the world ENU frame: x east, y north, yaw CCW from +x.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

/// Geodetic anchor of the world frame. Set once per scenario.
struct GeoOrigin {
  double lat0 = 0.0;  // degrees WGS-84
  double lon0 = 0.0;  // degrees
  double alt0 = 0.0;  // meters

  bool valid() const {
    return std::isfinite(lat0) && std::isfinite(lon0) && std::isfinite(alt0) &&
           std::abs(lat0) < 89.0;
  }
};

inline void check_origin(const GeoOrigin& origin) {
  if (!origin.valid()) {
    throw std::domain_error("geo: invalid origin (|lat0| must be < 89 deg and all fields finite)");
  }
}

/// Geodetic -> local ENU on the equirectangular tangent plane at `origin`.
inline Vec3 lla_to_enu(double lat, double lon, double alt, const GeoOrigin& origin) {
  check_origin(origin);
  if (!std::isfinite(lat) || !std::isfinite(lon) || !std::isfinite(alt)) {
    throw std::domain_error("geo: non-finite lat/lon/alt");
  }
  const double c = std::cos(origin.lat0 * kDegToRad);
  return {(lon - origin.lon0) * kDegToRad * kEarthRadius * c,
          (lat - origin.lat0) * kDegToRad * kEarthRadius,
          alt - origin.alt0};
}

struct Lla {
  double lat = 0.0;
  double lon = 0.0;
  double alt = 0.0;
};

/// Exact algebraic inverse of lla_to_enu.
inline Lla enu_to_lla(const Vec3& p, const GeoOrigin& origin) {
  check_origin(origin);
  if (!p.finite()) {
    throw std::domain_error("geo: non-finite ENU point");
  }
  const double c = std::cos(origin.lat0 * kDegToRad);
  return {origin.lat0 + p.y / (kDegToRad * kEarthRadius),
          origin.lon0 + p.x / (kDegToRad * kEarthRadius * c),
          origin.alt0 + p.z};
}

/// Rotates (x, y) by pose.yaw and translates by (pose.x, pose.y); z passes through.
inline Vec3 body_to_world(const Pose2& pose, const Vec3& p) {
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  return {pose.x + c * p.x - s * p.y, pose.y + s * p.x + c * p.y, p.z};
}

/// Exact inverse of body_to_world.
inline Vec3 world_to_body(const Pose2& pose, const Vec3& p) {
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  const double dx = p.x - pose.x;
  const double dy = p.y - pose.y;
  return {c * dx + s * dy, -s * dx + c * dy, p.z};
}

}  // namespace covsim::geo
