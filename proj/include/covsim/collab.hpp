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
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "covsim/geo.hpp"
#include "covsim/tracking.hpp"
#include "covsim/v2x.hpp"
#include "covsim/world.hpp"

namespace covsim::collab {

struct CollabParams {
  double dedup_radius = 3.0;      // meters, proxy-vs-known-object suppression
  double staleness = 0.5;         // seconds, BSM acceptance window
  double relevance_radius = 100.0;
  double match_dist = 2.0;        // entity-to-truth matching
};

enum class ProvenanceKind { LocalTrack, SelfBsm, ProxyBsm };

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::LocalTrack;
  std::uint64_t id = 0;  // track id, subject id, or sender id by kind

  auto operator<=>(const Provenance&) const = default;
};

inline std::string to_string(const Provenance& p) {
  switch (p.kind) {
    case ProvenanceKind::LocalTrack: return "local:" + std::to_string(p.id);
    case ProvenanceKind::SelfBsm: return "self:" + std::to_string(p.id);
    case ProvenanceKind::ProxyBsm: return "proxy:" + std::to_string(p.id);
  }
  throw std::logic_error("collab: bad provenance kind");
}

/// One object the host knows about after fusion, in the world frame.
struct FusedEntity {
  std::uint64_t entity_id = 0;
  geo::Vec3 position;
  double vx = 0.0, vy = 0.0;
  std::set<Provenance> provenance;
  double last_update = 0.0;
};

// Entity id namespaces: self-reported entities keep their actor id; tracker
// tracks are offset so the two can never collide (actor ids are validated
// to stay below the proxy namespace, which is itself far below this).
inline constexpr std::uint64_t kTrackEntityBase = 1'000'000'000'000ULL;

inline constexpr std::uint32_t kProxySubjectBase = 4'000'000'000U;

/// Proxy BSMs for a sensing host's confirmed tracks (body frame). Each
/// track's position goes body -> world -> geodetic; the subject id is
/// drawn from the proxy namespace so it cannot collide with a real actor.
/// Tracks whose state does not quantize are skipped.
inline std::vector<v2x::Bsm> proxy_bsms(const world::ActorState& host,
                                        const std::vector<tracking::Track>& tracks,
                                        double t, const geo::GeoOrigin& origin) {
  if (host.capability != world::Capability::ConnectedWithSensors) {
    throw std::invalid_argument("collab: proxy BSMs require a sensing host");
  }
  std::vector<v2x::Bsm> out;
  for (const tracking::Track& tr : tracks) {
    if (tr.status != tracking::TrackStatus::Confirmed) continue;
    const geo::Vec3 world_pos =
        geo::body_to_world(host.pose, {tr.x(0), tr.x(1), 0.0});
    const double c = std::cos(host.pose.yaw);
    const double s = std::sin(host.pose.yaw);
    const double vx = c * tr.x(2) - s * tr.x(3);
    const double vy = s * tr.x(2) + c * tr.x(3);
    const double speed = std::hypot(vx, vy);

    v2x::Bsm b;
    b.sender_id = host.id;
    b.source = v2x::BsmSource::Proxy;
    b.t_ms = static_cast<std::uint64_t>(std::llround(t * 1000.0));
    const std::uint64_t subject =
        kProxySubjectBase +
        static_cast<std::uint64_t>(host.id) * 1000 +
        static_cast<std::uint64_t>(tr.track_id);
    if (tr.track_id < 0 || tr.track_id >= 1000 ||
        subject > std::numeric_limits<std::uint32_t>::max()) {
      continue;  // subject would leave its namespace slot
    }
    b.subject_id = static_cast<std::uint32_t>(subject);
    try {
      const double yaw = speed < 0.1 ? geo::kPi / 2.0 : std::atan2(vy, vx);
      v2x::fill_bsm_kinematics(b, world_pos, speed, yaw, 0.0, origin);
      if (speed < 0.1) b.heading_q = 0;
    } catch (const std::range_error&) {
      continue;
    }
    out.push_back(b);
  }
  return out;
}

/// Per-host fusion: one world-frame JPDA tracker fed by sequential
/// single-sensor passes (LiDAR measurements at scan rate, then proxy-BSM
/// measurements as they arrive), plus ID-keyed entities for self-reporting
/// vehicles, merged by proximity.
class FusionState {
 public:
  FusionState(std::uint32_t host_id, const tracking::TrackerParams& tp,
              CollabParams cp = {})
      : host_id_(host_id), params_(cp), tracker_(tp) {}

  const tracking::Tracker& tracker() const { return tracker_; }
  std::uint64_t stale_count() const { return stale_count_; }

  /// LiDAR pass: world-frame box-center measurements from this host's own
  /// detector.
  void lidar_pass(const std::vector<tracking::Measurement>& meas, double t) {
    tracker_.step(meas, t);
    for (const auto& a : tracker_.last_associations()) lidar_backed_.insert(a.track_id);
    for (const auto& a : tracker_.last_seeds()) lidar_backed_.insert(a.track_id);
    prune_dead_state();
  }

  /// Sorts a received batch into self-entity updates and deduplicated
  /// proxy measurements; the proxies wait for the next fuse() pass.
  void ingest_bsms(const std::vector<v2x::Bsm>& batch,
                   const geo::GeoOrigin& origin, const world::ActorState& host,
                   double t) {
    for (const v2x::Bsm& b : batch) {
      if (t - static_cast<double>(b.t_ms) / 1000.0 > params_.staleness) {
        ++stale_count_;
        continue;
      }
      if (b.source == v2x::BsmSource::Self) apply_self(b, origin);
    }
    for (const v2x::Bsm& b : batch) {
      if (b.source != v2x::BsmSource::Proxy) continue;
      if (t - static_cast<double>(b.t_ms) / 1000.0 > params_.staleness) continue;
      const geo::Lla lla = v2x::bsm_lla(b);
      const geo::Vec3 p = geo::lla_to_enu(lla.lat, lla.lon, lla.alt, origin);
      if (is_duplicate(p, host)) continue;
      tracking::Measurement m;
      m.z << p.x, p.y;
      m.R = tracker_.params().r_bsm_pos;
      m.source = tracking::MeasurementSource::Bsm;
      m.source_id = b.sender_id;
      m.t = static_cast<double>(b.t_ms) / 1000.0;
      pending_.push_back(m);
    }
  }

  /// BSM pass (when proxy measurements are pending), self-entity pruning,
  /// and the merged entity list, sorted by entity id.
  std::vector<FusedEntity> fuse(double t) {
    if (!pending_.empty()) {
      tracker_.step(pending_, t);
      for (const auto& a : tracker_.last_associations()) {
        proxy_senders_[a.track_id].insert(pending_[a.meas_index].source_id);
      }
      for (const auto& a : tracker_.last_seeds()) {
        proxy_senders_[a.track_id].insert(pending_[a.meas_index].source_id);
      }
      pending_.clear();
      prune_dead_state();
    }
    std::erase_if(self_entities_, [&](const auto& kv) {
      return t - kv.second.last_update > params_.staleness;
    });

    std::vector<FusedEntity> out;
    std::vector<const tracking::Track*> confirmed;
    for (const tracking::Track& tr : tracker_.tracks()) {
      if (tr.status == tracking::TrackStatus::Confirmed) confirmed.push_back(&tr);
    }

    // Attach each confirmed track to its nearest self-reporting entity
    // within the dedup radius; leftovers become standalone entities.
    std::map<std::uint32_t, std::vector<const tracking::Track*>> attached;
    std::vector<const tracking::Track*> standalone;
    for (const tracking::Track* tr : confirmed) {
      const std::uint32_t* best_id = nullptr;
      double best_d = params_.dedup_radius;
      for (const auto& [sid, se] : self_entities_) {
        const double d = std::hypot(tr->x(0) - se.position.x, tr->x(1) - se.position.y);
        if (d <= best_d) {
          best_d = d;
          best_id = &sid;
        }
      }
      if (best_id) {
        attached[*best_id].push_back(tr);
      } else {
        standalone.push_back(tr);
      }
    }

    for (const auto& [sid, se] : self_entities_) {
      FusedEntity e;
      e.entity_id = sid;
      e.position = se.position;
      e.vx = se.velocity.x;
      e.vy = se.velocity.y;
      e.provenance.insert({ProvenanceKind::SelfBsm, sid});
      e.last_update = se.last_update;
      if (auto it = attached.find(sid); it != attached.end()) {
        // The self report keeps the authoritative kinematic state; attached
        // tracks contribute provenance only. A box-fit track center can sit
        // meters off a partially visible vehicle, the broadcast cannot.
        for (const tracking::Track* tr : it->second) {
          merge_track_provenance(e.provenance, *tr);
        }
      }
      out.push_back(std::move(e));
    }
    for (const tracking::Track* tr : standalone) {
      FusedEntity e;
      e.entity_id = kTrackEntityBase + static_cast<std::uint64_t>(tr->track_id);
      e.position = {tr->x(0), tr->x(1), 0.0};
      e.vx = tr->x(2);
      e.vy = tr->x(3);
      merge_track_provenance(e.provenance, *tr);
      e.last_update = t;
      out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(), [](const FusedEntity& a, const FusedEntity& b) {
      return a.entity_id < b.entity_id;
    });
    return out;
  }

  /// What the host would know from its own range sensors alone: confirmed
  /// tracks that have ever been fed by a LiDAR measurement.
  std::vector<FusedEntity> sensor_only_entities(double t) const {
    std::vector<FusedEntity> out;
    for (const tracking::Track& tr : tracker_.tracks()) {
      if (tr.status != tracking::TrackStatus::Confirmed) continue;
      if (!lidar_backed_.contains(tr.track_id)) continue;
      FusedEntity e;
      e.entity_id = kTrackEntityBase + static_cast<std::uint64_t>(tr.track_id);
      e.position = {tr.x(0), tr.x(1), 0.0};
      e.vx = tr.x(2);
      e.vy = tr.x(3);
      e.provenance.insert({ProvenanceKind::LocalTrack,
                           static_cast<std::uint64_t>(tr.track_id)});
      e.last_update = t;
      out.push_back(std::move(e));
    }
    return out;
  }

 private:
  struct SelfEntity {
    geo::Vec3 position;
    geo::Vec3 velocity;
    double last_update = 0.0;
  };

  void apply_self(const v2x::Bsm& b, const geo::GeoOrigin& origin) {
    const double msg_t = static_cast<double>(b.t_ms) / 1000.0;
    auto [it, inserted] = self_entities_.try_emplace(b.subject_id);
    if (!inserted && msg_t < it->second.last_update) return;  // stale reorder
    const geo::Lla lla = v2x::bsm_lla(b);
    it->second.position = geo::lla_to_enu(lla.lat, lla.lon, lla.alt, origin);
    it->second.velocity = v2x::bsm_velocity(b);
    it->second.last_update = msg_t;
  }

  bool is_duplicate(const geo::Vec3& p, const world::ActorState& host) const {
    if (std::hypot(p.x - host.pose.x, p.y - host.pose.y) <= params_.dedup_radius) {
      return true;
    }
    for (const auto& [sid, se] : self_entities_) {
      if (std::hypot(p.x - se.position.x, p.y - se.position.y) <= params_.dedup_radius) {
        return true;
      }
    }
    // Only sensor-backed tracks suppress proxies; a track sustained purely
    // by earlier proxies must keep receiving them.
    for (const tracking::Track& tr : tracker_.tracks()) {
      if (!lidar_backed_.contains(tr.track_id)) continue;
      if (std::hypot(p.x - tr.x(0), p.y - tr.x(1)) <= params_.dedup_radius) {
        return true;
      }
    }
    return false;
  }

  void merge_track_provenance(std::set<Provenance>& prov,
                              const tracking::Track& tr) const {
    bool any = false;
    if (lidar_backed_.contains(tr.track_id)) {
      prov.insert({ProvenanceKind::LocalTrack, static_cast<std::uint64_t>(tr.track_id)});
      any = true;
    }
    if (auto it = proxy_senders_.find(tr.track_id); it != proxy_senders_.end()) {
      for (std::uint32_t s : it->second) {
        prov.insert({ProvenanceKind::ProxyBsm, s});
        any = true;
      }
    }
    if (!any) {
      prov.insert({ProvenanceKind::LocalTrack, static_cast<std::uint64_t>(tr.track_id)});
    }
  }

  void prune_dead_state() {
    std::set<int> alive;
    for (const tracking::Track& tr : tracker_.tracks()) alive.insert(tr.track_id);
    std::erase_if(lidar_backed_, [&](int id) { return !alive.contains(id); });
    std::erase_if(proxy_senders_, [&](const auto& kv) { return !alive.contains(kv.first); });
  }

  std::uint32_t host_id_;
  CollabParams params_;
  tracking::Tracker tracker_;
  std::map<std::uint32_t, SelfEntity> self_entities_;
  std::vector<tracking::Measurement> pending_;
  std::set<int> lidar_backed_;
  std::map<int, std::set<std::uint32_t>> proxy_senders_;
  std::uint64_t stale_count_ = 0;
};

struct AwarenessReport {
  double t = 0.0;
  std::set<std::uint32_t> relevant_ids;
  std::set<std::uint32_t> perceivable_ids;
  double awareness_ratio = 1.0;
  std::map<std::uint32_t, std::set<Provenance>> per_id_provenance;
  int phantoms = 0;
};

/// Matches entities to ground truth (nearest actor within match_dist) and
/// scores how much of the host's neighborhood it knows about.
inline AwarenessReport awareness(const world::ActorState& host,
                                 const std::vector<FusedEntity>& entities,
                                 const world::WorldState& w,
                                 const CollabParams& params = {}) {
  AwarenessReport rep;
  rep.t = w.t;
  for (const world::ActorState& a : w.actors) {
    if (a.id == host.id) continue;
    if (std::hypot(a.pose.x - host.pose.x, a.pose.y - host.pose.y) <=
        params.relevance_radius) {
      rep.relevant_ids.insert(a.id);
    }
  }
  for (const FusedEntity& e : entities) {
    const world::ActorState* best = nullptr;
    double best_d = params.match_dist;
    for (const world::ActorState& a : w.actors) {
      if (a.id == host.id) continue;
      const double d = std::hypot(e.position.x - a.pose.x, e.position.y - a.pose.y);
      if (d <= best_d) {
        best_d = d;
        best = &a;
      }
    }
    if (best) {
      rep.perceivable_ids.insert(best->id);
      auto& prov = rep.per_id_provenance[best->id];
      prov.insert(e.provenance.begin(), e.provenance.end());
    } else {
      ++rep.phantoms;
    }
  }
  if (rep.relevant_ids.empty()) {
    rep.awareness_ratio = 1.0;
  } else {
    std::size_t hit = 0;
    for (std::uint32_t id : rep.perceivable_ids) {
      if (rep.relevant_ids.contains(id)) ++hit;
    }
    rep.awareness_ratio =
        static_cast<double>(hit) / static_cast<double>(rep.relevant_ids.size());
  }
  return rep;
}

}  // namespace covsim::collab
