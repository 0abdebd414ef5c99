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
#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "covsim/collab.hpp"
#include "covsim/geo.hpp"
#include "covsim/lidar.hpp"
#include "covsim/perception.hpp"
#include "covsim/tracking.hpp"
#include "covsim/v2x.hpp"
#include "covsim/world.hpp"

namespace covsim::scenario {

/// Anything wrong with a scenario document, as opposed to a failure while
/// running one. The message names the offending path.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Scenario {
  geo::GeoOrigin origin;
  double dt = 0.05;
  double duration = 0.0;
  std::uint32_t host_id = 0;
  std::vector<world::ActorSpec> actors;
  lidar::LidarConfig lidar;
  tracking::TrackerParams tracker;
  v2x::ChannelConfig channel;
  perception::PerceptionConfig perception;
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& path,
                       const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ScenarioError(path + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ScenarioError(path + ": unknown key '" + key + "'");
    }
  }
}

inline double num(const json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError(path + ": expected a number");
  return j.get<double>();
}

inline double num_or(const json& parent, const char* key, const std::string& path,
                     double fallback) {
  return parent.contains(key) ? num(parent.at(key), path + "." + key) : fallback;
}

inline std::int64_t integer(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    throw ScenarioError(path + ": expected an integer");
  }
  return j.get<std::int64_t>();
}

inline std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw ScenarioError(path + ": expected a string");
  return j.get<std::string>();
}

inline const json& array_of(const json& j, const std::string& path, std::size_t n) {
  if (!j.is_array() || j.size() != n) {
    throw ScenarioError(path + ": expected an array of " + std::to_string(n));
  }
  return j;
}

inline Eigen::Matrix2d covariance2(const json& j, const std::string& path) {
  if (j.is_number()) {
    const double v = j.get<double>();
    if (!(v > 0.0)) throw ScenarioError(path + ": variance must be > 0");
    return v * Eigen::Matrix2d::Identity();
  }
  const json& a = array_of(j, path, 2);
  Eigen::Matrix2d r;
  r << num(a[0], path + "[0]"), 0.0, 0.0, num(a[1], path + "[1]");
  if (!(r(0, 0) > 0.0 && r(1, 1) > 0.0)) {
    throw ScenarioError(path + ": variances must be > 0");
  }
  return r;
}

inline world::ActorSpec parse_actor(const json& j, const std::string& path) {
  check_keys(j, path, {"id", "class", "capability", "extent", "waypoints", "speed"});
  for (const char* key : {"id", "class", "capability", "extent", "waypoints"}) {
    if (!j.contains(key)) {
      throw ScenarioError(path + ": missing required key '" + std::string(key) + "'");
    }
  }
  world::ActorSpec spec;
  const std::int64_t id = integer(j.at("id"), path + ".id");
  if (id < 0 || id > 294966) {
    // The ceiling keeps every proxy subject id inside 32 bits and outside
    // the reserved proxy namespace.
    throw ScenarioError(path + ".id: must be in [0, 294966]");
  }
  spec.id = static_cast<std::uint32_t>(id);
  try {
    spec.cls = world::actor_class_from_string(text(j.at("class"), path + ".class"));
    spec.capability =
        world::capability_from_string(text(j.at("capability"), path + ".capability"));
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(path + ": " + e.what());
  }

  const json& ext = array_of(j.at("extent"), path + ".extent", 3);
  spec.extent.length = num(ext[0], path + ".extent[0]");
  spec.extent.width = num(ext[1], path + ".extent[1]");
  spec.extent.height = num(ext[2], path + ".extent[2]");
  if (!(spec.extent.length > 0.0 && spec.extent.width > 0.0 && spec.extent.height > 0.0)) {
    throw ScenarioError(path + ".extent: components must be > 0");
  }

  const json& wps = j.at("waypoints");
  if (!wps.is_array() || wps.empty()) {
    throw ScenarioError(path + ".waypoints: expected a nonempty array");
  }
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const std::string wp_path = path + ".waypoints[" + std::to_string(i) + "]";
    const json& wp = array_of(wps[i], wp_path, 2);
    spec.waypoints.push_back({num(wp[0], wp_path + "[0]"), num(wp[1], wp_path + "[1]")});
  }

  const std::size_t segments = spec.waypoints.size() - 1;
  if (j.contains("speed")) {
    const json& sp = j.at("speed");
    if (sp.is_number()) {
      const double v = num(sp, path + ".speed");
      if (segments == 0 && v != 0.0) {
        throw ScenarioError(path + ".speed: a single-waypoint actor cannot move");
      }
      spec.speeds.assign(segments, v);
    } else {
      const json& a = array_of(sp, path + ".speed", segments);
      for (std::size_t i = 0; i < segments; ++i) {
        spec.speeds.push_back(num(a[i], path + ".speed[" + std::to_string(i) + "]"));
      }
    }
  } else {
    spec.speeds.assign(segments, 0.0);
  }
  for (double v : spec.speeds) {
    if (!(v >= 0.0)) throw ScenarioError(path + ".speed: must be >= 0");
  }
  return spec;
}

inline lidar::LidarConfig parse_lidar(const json& j) {
  check_keys(j, "lidar",
             {"channels", "elev_min_deg", "elev_max_deg", "azimuth_step_deg",
              "max_range", "range_noise_sigma", "mount", "rate_hz"});
  lidar::LidarConfig cfg;
  if (j.contains("channels")) {
    cfg.channels = static_cast<int>(integer(j.at("channels"), "lidar.channels"));
  }
  cfg.elev_min = num_or(j, "elev_min_deg", "lidar", cfg.elev_min * geo::kRadToDeg) *
                 geo::kDegToRad;
  cfg.elev_max = num_or(j, "elev_max_deg", "lidar", cfg.elev_max * geo::kRadToDeg) *
                 geo::kDegToRad;
  cfg.azimuth_step =
      num_or(j, "azimuth_step_deg", "lidar", cfg.azimuth_step * geo::kRadToDeg) *
      geo::kDegToRad;
  cfg.max_range = num_or(j, "max_range", "lidar", cfg.max_range);
  cfg.range_noise_sigma = num_or(j, "range_noise_sigma", "lidar", cfg.range_noise_sigma);
  if (j.contains("mount")) {
    const json& m = array_of(j.at("mount"), "lidar.mount", 3);
    cfg.mount = {num(m[0], "lidar.mount[0]"), num(m[1], "lidar.mount[1]"),
                 num(m[2], "lidar.mount[2]")};
  }
  cfg.rate_hz = num_or(j, "rate_hz", "lidar", cfg.rate_hz);
  try {
    lidar::validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  return cfg;
}

inline tracking::TrackerParams parse_tracker(const json& j) {
  check_keys(j, "tracker",
             {"q", "r_lidar", "r_bsm_pos", "gate_gamma", "p_detect",
              "clutter_density", "confirm_m", "confirm_n", "delete_k", "init_p"});
  tracking::TrackerParams p;
  p.q = num_or(j, "q", "tracker", p.q);
  if (j.contains("r_lidar")) p.r_lidar = covariance2(j.at("r_lidar"), "tracker.r_lidar");
  if (j.contains("r_bsm_pos")) {
    p.r_bsm_pos = covariance2(j.at("r_bsm_pos"), "tracker.r_bsm_pos");
  }
  p.gate_gamma = num_or(j, "gate_gamma", "tracker", p.gate_gamma);
  p.p_detect = num_or(j, "p_detect", "tracker", p.p_detect);
  p.clutter_density = num_or(j, "clutter_density", "tracker", p.clutter_density);
  if (j.contains("confirm_m")) {
    p.confirm_m = static_cast<int>(integer(j.at("confirm_m"), "tracker.confirm_m"));
  }
  if (j.contains("confirm_n")) {
    p.confirm_n = static_cast<int>(integer(j.at("confirm_n"), "tracker.confirm_n"));
  }
  if (j.contains("delete_k")) {
    p.delete_k = static_cast<int>(integer(j.at("delete_k"), "tracker.delete_k"));
  }
  if (j.contains("init_p")) {
    const json& a = array_of(j.at("init_p"), "tracker.init_p", 4);
    for (int i = 0; i < 4; ++i) {
      p.init_p(i) = num(a[i], "tracker.init_p[" + std::to_string(i) + "]");
    }
  }
  try {
    tracking::validate(p);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  return p;
}

inline v2x::ChannelConfig parse_channel(const json& j) {
  check_keys(j, "channel",
             {"latency_base", "latency_jitter", "loss_prob", "range_limit", "seed"});
  v2x::ChannelConfig cfg;
  cfg.latency_base = num_or(j, "latency_base", "channel", cfg.latency_base);
  cfg.latency_jitter = num_or(j, "latency_jitter", "channel", cfg.latency_jitter);
  cfg.loss_prob = num_or(j, "loss_prob", "channel", cfg.loss_prob);
  cfg.range_limit = num_or(j, "range_limit", "channel", cfg.range_limit);
  if (j.contains("seed")) {
    cfg.seed = static_cast<std::uint64_t>(integer(j.at("seed"), "channel.seed"));
  }
  try {
    v2x::validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  return cfg;
}

inline perception::PerceptionConfig parse_perception(const json& j) {
  check_keys(j, "perception",
             {"roi", "ransac_iters", "ransac_inlier_dist", "cluster_eps",
              "cluster_min_pts", "min_box_extent"});
  perception::PerceptionConfig cfg;
  if (j.contains("roi")) {
    const json& roi = j.at("roi");
    check_keys(roi, "perception.roi", {"x", "y", "z"});
    const auto span = [&](const char* axis, double& lo, double& hi) {
      if (!roi.contains(axis)) return;
      const std::string p = std::string("perception.roi.") + axis;
      const json& a = array_of(roi.at(axis), p, 2);
      lo = num(a[0], p + "[0]");
      hi = num(a[1], p + "[1]");
    };
    span("x", cfg.roi.x_min, cfg.roi.x_max);
    span("y", cfg.roi.y_min, cfg.roi.y_max);
    span("z", cfg.roi.z_min, cfg.roi.z_max);
  }
  if (j.contains("ransac_iters")) {
    cfg.ransac_iters =
        static_cast<int>(integer(j.at("ransac_iters"), "perception.ransac_iters"));
  }
  cfg.ransac_inlier_dist =
      num_or(j, "ransac_inlier_dist", "perception", cfg.ransac_inlier_dist);
  cfg.cluster_eps = num_or(j, "cluster_eps", "perception", cfg.cluster_eps);
  if (j.contains("cluster_min_pts")) {
    cfg.cluster_min_pts =
        static_cast<int>(integer(j.at("cluster_min_pts"), "perception.cluster_min_pts"));
  }
  cfg.min_box_extent = num_or(j, "min_box_extent", "perception", cfg.min_box_extent);
  try {
    perception::validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  return cfg;
}

}  // namespace detail

inline Scenario load_scenario(const nlohmann::json& doc) {
  using detail::num;
  detail::check_keys(doc, "scenario",
                     {"origin", "dt", "duration", "host_id", "actors", "lidar",
                      "tracker", "channel", "perception"});
  for (const char* key : {"origin", "duration", "host_id", "actors"}) {
    if (!doc.contains(key)) {
      throw ScenarioError("scenario: missing required key '" + std::string(key) + "'");
    }
  }

  Scenario sc;
  const nlohmann::json& origin = doc.at("origin");
  detail::check_keys(origin, "origin", {"lat", "lon", "alt"});
  sc.origin.lat0 = detail::num_or(origin, "lat", "origin", 0.0);
  sc.origin.lon0 = detail::num_or(origin, "lon", "origin", 0.0);
  sc.origin.alt0 = detail::num_or(origin, "alt", "origin", 0.0);
  if (!sc.origin.valid()) throw ScenarioError("origin: invalid geodetic origin");

  sc.dt = detail::num_or(doc, "dt", "scenario", 0.05);
  if (!(sc.dt > 0.0)) throw ScenarioError("dt: must be > 0");
  sc.duration = num(doc.at("duration"), "duration");
  if (!(sc.duration >= sc.dt)) throw ScenarioError("duration: must be >= dt");

  const std::int64_t host = detail::integer(doc.at("host_id"), "host_id");
  if (host < 0) throw ScenarioError("host_id: must be >= 0");
  sc.host_id = static_cast<std::uint32_t>(host);

  const nlohmann::json& actors = doc.at("actors");
  if (!actors.is_array() || actors.empty()) {
    throw ScenarioError("actors: expected a nonempty array");
  }
  std::set<std::uint32_t> ids;
  for (std::size_t i = 0; i < actors.size(); ++i) {
    world::ActorSpec spec =
        detail::parse_actor(actors[i], "actors[" + std::to_string(i) + "]");
    if (!ids.insert(spec.id).second) {
      throw ScenarioError("actors[" + std::to_string(i) + "].id: duplicate id " +
                          std::to_string(spec.id));
    }
    sc.actors.push_back(std::move(spec));
  }
  if (!ids.contains(sc.host_id)) {
    throw ScenarioError("host_id: no actor with id " + std::to_string(sc.host_id));
  }

  sc.lidar = doc.contains("lidar") ? detail::parse_lidar(doc.at("lidar"))
                                   : lidar::LidarConfig{};
  sc.tracker = doc.contains("tracker") ? detail::parse_tracker(doc.at("tracker"))
                                       : tracking::TrackerParams{};
  sc.channel = doc.contains("channel") ? detail::parse_channel(doc.at("channel"))
                                       : v2x::ChannelConfig{};
  sc.perception = doc.contains("perception")
                      ? detail::parse_perception(doc.at("perception"))
                      : perception::PerceptionConfig{};

  // Both broadcast schedules must land exactly on the step grid.
  const double lidar_steps = 1.0 / (sc.dt * sc.lidar.rate_hz);
  if (std::abs(lidar_steps - std::round(lidar_steps)) > 1e-6 || lidar_steps < 1.0 - 1e-6) {
    throw ScenarioError("lidar.rate_hz: scan period must be a whole number of steps");
  }
  const double bsm_steps = 0.1 / sc.dt;
  if (std::abs(bsm_steps - std::round(bsm_steps)) > 1e-6 || bsm_steps < 1.0 - 1e-6) {
    throw ScenarioError("dt: the 10 Hz broadcast period must be a whole number of steps");
  }
  return sc;
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError("scenario parse: " + std::string(e.what()));
  }
  return load_scenario(doc);
}

inline world::WorldState initial_world(const Scenario& sc) {
  return world::world_at(sc.actors, sc.dt, 0);
}

inline world::WorldState step(const world::WorldState& state, const Scenario& sc) {
  return world::step_world(state, sc.actors, sc.dt, sc.duration);
}

}  // namespace covsim::scenario
