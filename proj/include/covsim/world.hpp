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
#include <stdexcept>
#include <string>
#include <vector>

#include "covsim/geo.hpp"

namespace covsim::world {

enum class ActorClass { Car, Truck, Pedestrian };

enum class Capability { NoSensing, Connected, ConnectedWithSensors };

inline std::string to_string(ActorClass c) {
  switch (c) {
    case ActorClass::Car: return "Car";
    case ActorClass::Truck: return "Truck";
    case ActorClass::Pedestrian: return "Pedestrian";
  }
  throw std::logic_error("world: bad ActorClass");
}

inline std::string to_string(Capability c) {
  switch (c) {
    case Capability::NoSensing: return "NoSensing";
    case Capability::Connected: return "Connected";
    case Capability::ConnectedWithSensors: return "ConnectedWithSensors";
  }
  throw std::logic_error("world: bad Capability");
}

inline ActorClass actor_class_from_string(const std::string& s) {
  if (s == "Car") return ActorClass::Car;
  if (s == "Truck") return ActorClass::Truck;
  if (s == "Pedestrian") return ActorClass::Pedestrian;
  throw std::invalid_argument("world: unknown actor class '" + s + "'");
}

inline Capability capability_from_string(const std::string& s) {
  if (s == "NoSensing") return Capability::NoSensing;
  if (s == "Connected") return Capability::Connected;
  if (s == "ConnectedWithSensors") return Capability::ConnectedWithSensors;
  throw std::invalid_argument("world: unknown capability '" + s + "'");
}

/// Box size in meters: length along heading, width across, height up.
struct Extent {
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
};

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
};

/// Static description of one actor: identity, box, and motion plan.
/// Segment i runs from waypoints[i] to waypoints[i+1] at speeds[i];
/// speed 0 parks the actor at the segment start (the segment still
/// defines its heading).
struct ActorSpec {
  std::uint32_t id = 0;
  ActorClass cls = ActorClass::Car;
  Capability capability = Capability::NoSensing;
  Extent extent{};
  std::vector<Waypoint> waypoints;
  std::vector<double> speeds;  // one per segment, size() == waypoints.size() - 1
};

struct ActorState {
  std::uint32_t id = 0;
  ActorClass cls = ActorClass::Car;
  Capability capability = Capability::NoSensing;
  geo::Pose2 pose{};
  double z = 0.0;      // box base height
  double speed = 0.0;  // m/s along heading
  double accel = 0.0;  // m/s^2 along heading; 0 under piecewise-constant speed
  Extent extent{};
};

struct WorldState {
  double t = 0.0;
  std::int64_t step_count = 0;  // t == step_count * dt, kept exact
  std::vector<ActorState> actors;
};

/// Pose and speed of an actor at absolute time t, evaluated in closed form
/// from the cumulative segment schedule. Evaluating from t = 0 every call
/// keeps stepping free of accumulated drift.
inline ActorState actor_state_at(const ActorSpec& spec, double t) {
  if (spec.waypoints.empty()) {
    throw std::invalid_argument("world: actor without waypoints");
  }
  ActorState s;
  s.id = spec.id;
  s.cls = spec.cls;
  s.capability = spec.capability;
  s.extent = spec.extent;

  // Heading before any travel: direction of the first segment with length.
  double yaw = 0.0;
  for (std::size_t i = 0; i + 1 < spec.waypoints.size(); ++i) {
    const double dx = spec.waypoints[i + 1].x - spec.waypoints[i].x;
    const double dy = spec.waypoints[i + 1].y - spec.waypoints[i].y;
    if (dx != 0.0 || dy != 0.0) {
      yaw = std::atan2(dy, dx);
      break;
    }
  }

  double remaining = t;
  for (std::size_t i = 0; i + 1 < spec.waypoints.size(); ++i) {
    const Waypoint& a = spec.waypoints[i];
    const Waypoint& b = spec.waypoints[i + 1];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (len == 0.0) continue;  // pass through, keep previous yaw
    yaw = std::atan2(b.y - a.y, b.x - a.x);
    const double v = spec.speeds[i];
    if (v == 0.0) {
      // Parked segment: never traversed.
      s.pose = {a.x, a.y, yaw};
      return s;
    }
    const double seg_time = len / v;
    if (remaining < seg_time) {
      const double f = v * remaining / len;
      s.pose = {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f, yaw};
      s.speed = v;
      return s;
    }
    remaining -= seg_time;
  }

  // Past the final waypoint (or no traversable segment at all): stopped.
  const Waypoint& last = spec.waypoints.back();
  s.pose = {last.x, last.y, yaw};
  return s;
}

inline WorldState world_at(const std::vector<ActorSpec>& specs, double dt,
                           std::int64_t step_count) {
  WorldState w;
  w.step_count = step_count;
  w.t = static_cast<double>(step_count) * dt;
  w.actors.reserve(specs.size());
  for (const ActorSpec& spec : specs) {
    w.actors.push_back(actor_state_at(spec, w.t));
  }
  return w;
}

inline WorldState step_world(const WorldState& state,
                             const std::vector<ActorSpec>& specs, double dt,
                             double duration) {
  const double next_t = static_cast<double>(state.step_count + 1) * dt;
  if (next_t > duration + 1e-9) {
    throw std::logic_error("world: step past scenario duration");
  }
  return world_at(specs, dt, state.step_count + 1);
}

inline const ActorState* find_actor(const WorldState& w, std::uint32_t id) {
  for (const ActorState& a : w.actors) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

}  // namespace covsim::world
