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
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "covsim/geo.hpp"
#include "covsim/rng.hpp"
#include "covsim/world.hpp"

namespace covsim::v2x {

enum class BsmSource : std::uint8_t { Self = 0, Proxy = 1 };

/// Basic safety message, position/kinematics subset. Field units follow
/// J2735 data-element resolutions; the record layout is this project's own.
struct Bsm {
  std::uint32_t subject_id = 0;  // vehicle the message describes
  std::uint32_t sender_id = 0;   // vehicle that broadcast it
  BsmSource source = BsmSource::Self;
  std::uint64_t t_ms = 0;        // milliseconds since sim epoch
  std::int32_t lat_q = 0;        // 1e-7 degree
  std::int32_t lon_q = 0;        // 1e-7 degree
  std::int32_t elev_q = 0;       // 0.1 m
  std::uint16_t speed_q = 0;     // 0.02 m/s
  std::uint16_t heading_q = 0;   // 0.0125 degree, clockwise from north, < 28800
  std::int16_t accel_q = 0;      // 0.01 m/s^2

  bool operator==(const Bsm&) const = default;
};

inline constexpr std::size_t kBsmWireSize = 39;

namespace detail {

template <typename T>
void put_le(std::uint8_t* dst, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    dst[i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i));
  }
}

template <typename T>
T get_le(const std::uint8_t* src) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(src[i]) << (8 * i);
  }
  return static_cast<T>(v);
}

inline std::int64_t checked_round(double v, std::int64_t lo, std::int64_t hi,
                                  const char* field) {
  if (!std::isfinite(v)) {
    throw std::range_error(std::string("v2x: non-finite ") + field);
  }
  const double r = std::round(v);  // half away from zero
  if (r < static_cast<double>(lo) || r > static_cast<double>(hi)) {
    throw std::range_error(std::string("v2x: ") + field + " out of quantizable range");
  }
  return std::llround(v);
}

}  // namespace detail

/// Fixed 39-byte little-endian record. Byte 3 of the magic doubles as the
/// format version ("BSM1" = version 1).
inline std::vector<std::uint8_t> encode_bsm(const Bsm& b) {
  std::vector<std::uint8_t> out(kBsmWireSize);
  out[0] = 'B';
  out[1] = 'S';
  out[2] = 'M';
  out[3] = '1';
  out[4] = static_cast<std::uint8_t>(b.source);
  detail::put_le(&out[5], b.sender_id);
  detail::put_le(&out[9], b.subject_id);
  detail::put_le(&out[13], b.t_ms);
  detail::put_le(&out[21], b.lat_q);
  detail::put_le(&out[25], b.lon_q);
  detail::put_le(&out[29], b.elev_q);
  detail::put_le(&out[33], b.speed_q);
  detail::put_le(&out[35], b.heading_q);
  detail::put_le(&out[37], b.accel_q);
  return out;
}

inline Bsm decode_bsm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kBsmWireSize) {
    throw std::runtime_error("v2x: bad BSM length (want 39 bytes, got " +
                             std::to_string(bytes.size()) + ")");
  }
  if (bytes[0] != 'B' || bytes[1] != 'S' || bytes[2] != 'M') {
    throw std::runtime_error("v2x: bad BSM magic");
  }
  if (bytes[3] != '1') {
    throw std::runtime_error("v2x: unsupported BSM version");
  }
  if (bytes[4] > 1) {
    throw std::runtime_error("v2x: bad BSM source byte");
  }
  Bsm b;
  b.source = static_cast<BsmSource>(bytes[4]);
  b.sender_id = detail::get_le<std::uint32_t>(&bytes[5]);
  b.subject_id = detail::get_le<std::uint32_t>(&bytes[9]);
  b.t_ms = detail::get_le<std::uint64_t>(&bytes[13]);
  b.lat_q = detail::get_le<std::int32_t>(&bytes[21]);
  b.lon_q = detail::get_le<std::int32_t>(&bytes[25]);
  b.elev_q = detail::get_le<std::int32_t>(&bytes[29]);
  b.speed_q = detail::get_le<std::uint16_t>(&bytes[33]);
  b.heading_q = detail::get_le<std::uint16_t>(&bytes[35]);
  b.accel_q = detail::get_le<std::int16_t>(&bytes[37]);
  return b;
}

/// ENU yaw (CCW from east) to J2735 heading quantum (CW from north).
inline std::uint16_t quantize_heading(double yaw) {
  double deg = std::fmod(90.0 - yaw * geo::kRadToDeg, 360.0);
  if (deg < 0.0) deg += 360.0;
  return static_cast<std::uint16_t>(std::llround(deg / 0.0125) % 28800);
}

inline double heading_deg(const Bsm& b) { return b.heading_q * 0.0125; }

/// World-frame velocity encoded by speed and heading.
inline geo::Vec3 bsm_velocity(const Bsm& b) {
  const double speed = b.speed_q * 0.02;
  const double h = heading_deg(b) * geo::kDegToRad;
  return {speed * std::sin(h), speed * std::cos(h), 0.0};
}

inline geo::Lla bsm_lla(const Bsm& b) {
  return {b.lat_q * 1e-7, b.lon_q * 1e-7, b.elev_q * 0.1};
}

/// Quantizes position and kinematics into an existing message. Throws
/// std::range_error when any field leaves its representable range.
inline void fill_bsm_kinematics(Bsm& b, const geo::Vec3& world_pos, double speed,
                                double yaw, double accel, const geo::GeoOrigin& origin) {
  const geo::Lla lla = geo::enu_to_lla(world_pos, origin);
  b.lat_q = static_cast<std::int32_t>(
      detail::checked_round(lla.lat * 1e7, INT32_MIN, INT32_MAX, "latitude"));
  b.lon_q = static_cast<std::int32_t>(
      detail::checked_round(lla.lon * 1e7, INT32_MIN, INT32_MAX, "longitude"));
  b.elev_q = static_cast<std::int32_t>(
      detail::checked_round(lla.alt * 10.0, INT32_MIN, INT32_MAX, "elevation"));
  b.speed_q = static_cast<std::uint16_t>(
      detail::checked_round(speed / 0.02, 0, UINT16_MAX, "speed"));
  b.heading_q = quantize_heading(yaw);
  b.accel_q = static_cast<std::int16_t>(
      detail::checked_round(accel / 0.01, INT16_MIN, INT16_MAX, "acceleration"));
}

/// Self-describing BSM for a connected actor.
inline Bsm make_self_bsm(const world::ActorState& actor, double t,
                         const geo::GeoOrigin& origin) {
  if (actor.capability == world::Capability::NoSensing) {
    throw std::invalid_argument("v2x: actor without a V2X unit cannot broadcast");
  }
  Bsm b;
  b.subject_id = actor.id;
  b.sender_id = actor.id;
  b.source = BsmSource::Self;
  b.t_ms = static_cast<std::uint64_t>(std::llround(t * 1000.0));
  fill_bsm_kinematics(b, {actor.pose.x, actor.pose.y, actor.z}, actor.speed,
                      actor.pose.yaw, actor.accel, origin);
  return b;
}

struct ChannelConfig {
  double latency_base = 0.02;
  double latency_jitter = 0.01;  // uniform half-width around the base
  double loss_prob = 0.02;
  double range_limit = 300.0;
  std::uint64_t seed = 0;
};

inline void validate(const ChannelConfig& cfg) {
  if (!(cfg.loss_prob >= 0.0 && cfg.loss_prob <= 1.0)) {
    throw std::invalid_argument("v2x: loss_prob must be in [0, 1]");
  }
  if (!(cfg.latency_base >= 0.0)) {
    throw std::invalid_argument("v2x: latency_base must be >= 0");
  }
  if (!(cfg.latency_jitter >= 0.0)) {
    throw std::invalid_argument("v2x: latency_jitter must be >= 0");
  }
  if (!(cfg.range_limit > 0.0)) {
    throw std::invalid_argument("v2x: range_limit must be > 0");
  }
}

struct Recipient {
  std::uint32_t id = 0;
  geo::Vec3 pos;
};

struct ChannelStats {
  std::uint64_t sent = 0;       // (message, receiver) pairs offered
  std::uint64_t delivered = 0;  // pairs polled by their receiver
  std::uint64_t dropped = 0;    // pairs lost to range or random loss
  double latency_sum = 0.0;     // over delivered pairs
};

/// Broadcast medium with per-receiver loss, latency jitter, and a send-time
/// range cut. Every outcome is a pure function of (seed, message index,
/// receiver id), so delivery is independent of polling order.
class Channel {
 public:
  Channel(const ChannelConfig& cfg, std::uint64_t run_seed)
      : cfg_(cfg), seed_(rng::mix(cfg.seed, run_seed)) {
    validate(cfg_);
  }

  void broadcast(const std::vector<std::uint8_t>& msg, std::uint32_t sender_id,
                 const geo::Vec3& sender_pos,
                 std::span<const Recipient> recipients, double t) {
    check_time(t);
    const std::uint64_t idx = next_msg_index_++;
    for (const Recipient& r : recipients) {
      if (r.id == sender_id) continue;
      ++stats_.sent;
      if ((r.pos - sender_pos).norm() > cfg_.range_limit) {
        ++stats_.dropped;
        continue;
      }
      const double u = rng::to_unit(rng::mix(seed_, idx, r.id, 0));
      if (u <= cfg_.loss_prob) {
        ++stats_.dropped;
        continue;
      }
      double delay = cfg_.latency_base;
      if (cfg_.latency_jitter > 0.0) {
        delay += rng::uniform(rng::mix(seed_, idx, r.id, 1), -cfg_.latency_jitter,
                              cfg_.latency_jitter);
      }
      if (delay < 0.0) delay = 0.0;
      queues_[r.id].push_back({t + delay, idx, t, msg});
    }
  }

  /// All messages for receiver_id whose delivery time has passed, ordered by
  /// (delivery time, message index).
  std::vector<std::vector<std::uint8_t>> poll(std::uint32_t receiver_id, double t) {
    check_time(t);
    std::vector<std::vector<std::uint8_t>> out;
    auto it = queues_.find(receiver_id);
    if (it == queues_.end()) return out;
    auto& q = it->second;
    std::stable_sort(q.begin(), q.end(), [](const Pending& a, const Pending& b) {
      return a.deliver_t != b.deliver_t ? a.deliver_t < b.deliver_t
                                        : a.msg_index < b.msg_index;
    });
    std::size_t n = 0;
    while (n < q.size() && q[n].deliver_t <= t) ++n;
    for (std::size_t i = 0; i < n; ++i) {
      ++stats_.delivered;
      stats_.latency_sum += q[i].deliver_t - q[i].send_t;
      out.push_back(std::move(q[i].payload));
    }
    q.erase(q.begin(), q.begin() + n);
    return out;
  }

  const ChannelStats& stats() const { return stats_; }

 private:
  struct Pending {
    double deliver_t;
    std::uint64_t msg_index;
    double send_t;
    std::vector<std::uint8_t> payload;
  };

  void check_time(double t) {
    if (t < last_t_) throw std::logic_error("v2x: channel time went backwards");
    last_t_ = t;
  }

  ChannelConfig cfg_;
  std::uint64_t seed_;
  std::uint64_t next_msg_index_ = 0;
  double last_t_ = -std::numeric_limits<double>::infinity();
  std::map<std::uint32_t, std::vector<Pending>> queues_;
  ChannelStats stats_;
};

}  // namespace covsim::v2x
