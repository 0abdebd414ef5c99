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
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "covsim/geo.hpp"
#include "covsim/rng.hpp"
#include "covsim/world.hpp"

namespace covsim::lidar {

struct LidarConfig {
  int channels = 16;
  double elev_min = -15.0 * geo::kDegToRad;
  double elev_max = 1.0 * geo::kDegToRad;
  double azimuth_step = 0.4 * geo::kDegToRad;
  double max_range = 80.0;
  double range_noise_sigma = 0.02;
  geo::Vec3 mount{0.0, 0.0, 1.8};
  double rate_hz = 10.0;
};

inline void validate(const LidarConfig& cfg) {
  if (cfg.channels < 1) throw std::invalid_argument("lidar: channels must be >= 1");
  if (!(cfg.azimuth_step > 0.0 && cfg.azimuth_step <= 2.0 * geo::kPi)) {
    throw std::invalid_argument("lidar: azimuth_step must be in (0, 2pi]");
  }
  if (!(cfg.max_range > 0.0)) throw std::invalid_argument("lidar: max_range must be > 0");
  if (!(cfg.range_noise_sigma >= 0.0)) {
    throw std::invalid_argument("lidar: range_noise_sigma must be >= 0");
  }
  if (!(cfg.rate_hz > 0.0)) throw std::invalid_argument("lidar: rate_hz must be > 0");
  if (cfg.elev_max < cfg.elev_min) {
    throw std::invalid_argument("lidar: elev_max must be >= elev_min");
  }
}

enum class Frame { Body, World };

struct PointCloud {
  Frame frame = Frame::Body;
  std::uint32_t frame_actor = 0;  // meaningful when frame == Body
  double t = 0.0;
  std::vector<geo::Vec3> points;
};

/// Axis-aligned in its own yawed frame: a vehicle footprint extruded in z.
struct Box {
  geo::Vec3 center;  // geometric center, center.z = base + height / 2
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  double yaw = 0.0;
};

inline Box box_from_actor(const world::ActorState& a) {
  return {{a.pose.x, a.pose.y, a.z + a.extent.height / 2.0},
          a.extent.length,
          a.extent.width,
          a.extent.height,
          a.pose.yaw};
}

/// Slab-method ray/box test in the box frame. Returns the entry distance
/// (smallest t > 0) or nullopt; a ray starting inside the box never enters.
inline std::optional<double> ray_box_intersect(const geo::Vec3& origin,
                                               const geo::Vec3& dir,
                                               const Box& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double ox = origin.x - box.center.x;
  const double oy = origin.y - box.center.y;
  const geo::Vec3 o{c * ox + s * oy, -s * ox + c * oy, origin.z - box.center.z};
  const geo::Vec3 d{c * dir.x + s * dir.y, -s * dir.x + c * dir.y, dir.z};
  const double half[3] = {box.length / 2.0, box.width / 2.0, box.height / 2.0};
  const double po[3] = {o.x, o.y, o.z};
  const double pd[3] = {d.x, d.y, d.z};

  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (pd[i] == 0.0) {
      if (std::abs(po[i]) > half[i]) return std::nullopt;
      continue;
    }
    double t1 = (-half[i] - po[i]) / pd[i];
    double t2 = (half[i] - po[i]) / pd[i];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmax < tmin) return std::nullopt;
  }
  if (tmin > 0.0) return tmin;
  return std::nullopt;
}

namespace detail {

// Per-scan obstacle list sorted by nearest possible hit distance, so the
// ray loop can stop as soon as the current best hit is provably closest.
struct SortedBox {
  Box box;
  double near_bound = 0.0;  // |center - sensor| - bounding radius
  double radius = 0.0;
  geo::Vec3 center_rel;  // box center minus sensor origin
};

inline std::vector<SortedBox> sort_boxes(const world::WorldState& w,
                                         std::uint32_t host_id,
                                         const geo::Vec3& sensor,
                                         double max_range) {
  std::vector<SortedBox> out;
  out.reserve(w.actors.size());
  for (const world::ActorState& a : w.actors) {
    if (a.id == host_id) continue;
    SortedBox sb;
    sb.box = box_from_actor(a);
    sb.radius = 0.5 * std::sqrt(a.extent.length * a.extent.length +
                                a.extent.width * a.extent.width +
                                a.extent.height * a.extent.height);
    sb.center_rel = sb.box.center - sensor;
    sb.near_bound = sb.center_rel.norm() - sb.radius;
    if (sb.near_bound <= max_range) out.push_back(sb);
  }
  std::sort(out.begin(), out.end(), [](const SortedBox& a, const SortedBox& b) {
    return a.near_bound < b.near_bound;
  });
  return out;
}

}  // namespace detail

/// One full revolution from the host's mount point. Rays sweep all
/// (channel, azimuth) pairs; each keeps the nearest surface among every
/// other actor's box and the ground plane z = 0. Output points are in the
/// host body frame, channel-major then azimuth, misses skipped.
inline PointCloud scan(const world::WorldState& w, const world::ActorState& host,
                       const LidarConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  PointCloud cloud;
  cloud.frame = Frame::Body;
  cloud.frame_actor = host.id;
  cloud.t = w.t;

  const geo::Vec3 sensor =
      geo::body_to_world(host.pose, cfg.mount) + geo::Vec3{0.0, 0.0, host.z};
  const auto boxes = detail::sort_boxes(w, host.id, sensor, cfg.max_range);

  const int n_az = static_cast<int>(std::floor(2.0 * geo::kPi / cfg.azimuth_step));
  const std::uint64_t t_key = static_cast<std::uint64_t>(std::llround(w.t * 1000.0));

  for (int ch = 0; ch < cfg.channels; ++ch) {
    const double elev =
        cfg.channels == 1
            ? cfg.elev_min
            : cfg.elev_min + (cfg.elev_max - cfg.elev_min) * ch / (cfg.channels - 1);
    const double ce = std::cos(elev);
    const double se = std::sin(elev);
    for (int az = 0; az < n_az; ++az) {
      const double a = host.pose.yaw + az * cfg.azimuth_step;
      const geo::Vec3 dir{ce * std::cos(a), ce * std::sin(a), se};

      double best = cfg.max_range;
      bool hit = false;
      if (se < 0.0 && sensor.z > 0.0) {
        const double tg = -sensor.z / se;
        if (tg <= best) {
          best = tg;
          hit = true;
        }
      }
      for (const auto& sb : boxes) {
        if (sb.near_bound > best) break;
        // Bounding-sphere rejection before the exact slab test.
        const double t_ca = sb.center_rel.dot(dir);
        if (t_ca + sb.radius < 0.0) continue;
        const double d2 = sb.center_rel.dot(sb.center_rel) - t_ca * t_ca;
        if (d2 > sb.radius * sb.radius) continue;
        if (auto t = ray_box_intersect(sensor, dir, sb.box); t && *t < best) {
          best = *t;
          hit = true;
        }
      }
      if (!hit) continue;

      double r = best;
      if (cfg.range_noise_sigma > 0.0) {
        const double g = rng::gaussian(rng::mix(
            seed, t_key, static_cast<std::uint64_t>(ch), static_cast<std::uint64_t>(az)));
        r += cfg.range_noise_sigma * std::clamp(g, -6.0, 6.0);
        if (r < 0.0) r = 0.0;
      }
      cloud.points.push_back(geo::world_to_body(host.pose, sensor + dir * r));
    }
  }
  return cloud;
}

/// Binary dump record: magic "CVS1", float64 t, uint32 count, then
/// count little-endian float32 (x, y, z) triplets.
inline void append_cloud_record(std::ostream& os, const PointCloud& cloud) {
  char header[16];
  std::memcpy(header, "CVS1", 4);
  std::memcpy(header + 4, &cloud.t, 8);
  const std::uint32_t n = static_cast<std::uint32_t>(cloud.points.size());
  std::memcpy(header + 12, &n, 4);
  os.write(header, sizeof header);
  for (const geo::Vec3& p : cloud.points) {
    const float xyz[3] = {static_cast<float>(p.x), static_cast<float>(p.y),
                          static_cast<float>(p.z)};
    os.write(reinterpret_cast<const char*>(xyz), sizeof xyz);
  }
}

}  // namespace covsim::lidar
