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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "covsim/collab.hpp"
#include "covsim/geo.hpp"
#include "covsim/lidar.hpp"
#include "covsim/log.hpp"
#include "covsim/perception.hpp"
#include "covsim/rng.hpp"
#include "covsim/scenario.hpp"
#include "covsim/tracking.hpp"
#include "covsim/v2x.hpp"
#include "covsim/world.hpp"

namespace covsim::harness {

using json = nlohmann::ordered_json;

struct RunOptions {
  std::string dump_cloud_dir;  // empty: no binary cloud sidecars
};

namespace detail {

template <typename F>
auto phase(const char* module, std::int64_t step, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error("step " + std::to_string(step) + ", module " +
                             module + ": " + e.what());
  }
}

inline json bsm_summary(const v2x::Bsm& b) {
  json j;
  j["sender"] = b.sender_id;
  j["subject"] = b.subject_id;
  j["source"] = b.source == v2x::BsmSource::Self ? "Self" : "Proxy";
  j["t_ms"] = b.t_ms;
  return j;
}

inline json provenance_json(const std::set<collab::Provenance>& prov) {
  json a = json::array();
  for (const collab::Provenance& p : prov) a.push_back(collab::to_string(p));
  return a;
}

inline json entity_json(const collab::FusedEntity& e) {
  json j;
  j["id"] = e.entity_id;
  j["x"] = e.position.x;
  j["y"] = e.position.y;
  j["z"] = e.position.z;
  j["vx"] = e.vx;
  j["vy"] = e.vy;
  j["prov"] = provenance_json(e.provenance);
  j["last_update"] = e.last_update;
  return j;
}

inline json awareness_json(const collab::AwarenessReport& rep, bool with_provenance) {
  json j;
  j["relevant"] = json::array();
  for (std::uint32_t id : rep.relevant_ids) j["relevant"].push_back(id);
  j["perceivable"] = json::array();
  for (std::uint32_t id : rep.perceivable_ids) j["perceivable"].push_back(id);
  j["ratio"] = rep.awareness_ratio;
  j["phantoms"] = rep.phantoms;
  if (with_provenance) {
    json prov = json::object();
    for (const auto& [id, set] : rep.per_id_provenance) {
      prov[std::to_string(id)] = provenance_json(set);
    }
    j["provenance"] = prov;
  }
  return j;
}

}  // namespace detail

/// Runs a scenario end to end and returns one trace record per step.
/// Everything downstream (trace file, metrics, SVG) is derived from these
/// records. Deterministic in (scenario, seed).
inline std::vector<json> run(const scenario::Scenario& sc, std::uint64_t seed,
                             const RunOptions& opt = {}) {
  const std::int64_t n_steps = std::llround(sc.duration / sc.dt);
  const std::int64_t lidar_div = std::llround(1.0 / (sc.dt * sc.lidar.rate_hz));
  const std::int64_t bsm_div = std::llround(0.1 / sc.dt);

  std::vector<std::uint32_t> sensing_ids;
  std::vector<std::uint32_t> connected_ids;
  for (const world::ActorSpec& a : sc.actors) {
    if (a.capability == world::Capability::ConnectedWithSensors) {
      sensing_ids.push_back(a.id);
    }
    if (a.capability != world::Capability::NoSensing) connected_ids.push_back(a.id);
  }
  std::sort(sensing_ids.begin(), sensing_ids.end());
  std::sort(connected_ids.begin(), connected_ids.end());

  std::map<std::uint32_t, collab::FusionState> fusion;
  for (std::uint32_t id : sensing_ids) {
    fusion.emplace(id, collab::FusionState(id, sc.tracker));
  }

  std::map<std::uint32_t, std::ofstream> cloud_dumps;
  if (!opt.dump_cloud_dir.empty()) {
    std::filesystem::create_directories(opt.dump_cloud_dir);
    for (std::uint32_t id : sensing_ids) {
      const auto path = std::filesystem::path(opt.dump_cloud_dir) /
                        ("clouds_host_" + std::to_string(id) + ".bin");
      cloud_dumps.emplace(id, std::ofstream(path, std::ios::binary));
      if (!cloud_dumps.at(id)) {
        throw std::runtime_error("cannot open cloud dump file: " + path.string());
      }
    }
  }

  v2x::Channel channel(sc.channel, seed);
  world::WorldState world = scenario::initial_world(sc);
  std::vector<json> records;
  records.reserve(static_cast<std::size_t>(n_steps));

  for (std::int64_t k = 1; k <= n_steps; ++k) {
    world = detail::phase("world", k, [&] { return scenario::step(world, sc); });
    const double t = world.t;

    json rec;
    rec["t"] = t;
    rec["ground_truth"] = json::array();
    for (const world::ActorState& a : world.actors) {
      json g;
      g["id"] = a.id;
      g["class"] = world::to_string(a.cls);
      g["capability"] = world::to_string(a.capability);
      g["x"] = a.pose.x;
      g["y"] = a.pose.y;
      g["z"] = a.z;
      g["yaw"] = a.pose.yaw;
      g["speed"] = a.speed;
      rec["ground_truth"].push_back(std::move(g));
    }

    // Own-sensor pipeline per sensing host at the scan rate.
    std::map<std::uint32_t, std::vector<perception::Detection>> detections;
    if (k % lidar_div == 0) {
      for (std::uint32_t host_id : sensing_ids) {
        const world::ActorState* host = world::find_actor(world, host_id);
        const lidar::PointCloud cloud = detail::phase("lidar", k, [&] {
          return lidar::scan(world, *host, sc.lidar, rng::mix(seed, host_id));
        });
        if (auto it = cloud_dumps.find(host_id); it != cloud_dumps.end()) {
          lidar::append_cloud_record(it->second, cloud);
        }
        const auto dets = detail::phase("perception", k, [&] {
          return perception::detect(cloud, sc.perception,
                                    rng::mix(seed, host_id, static_cast<std::uint64_t>(k)));
        });
        std::vector<tracking::Measurement> meas;
        meas.reserve(dets.size());
        for (const perception::Detection& d : dets) {
          const geo::Vec3 wp = geo::body_to_world(host->pose, d.center);
          tracking::Measurement m;
          m.z << wp.x, wp.y;
          m.R = sc.tracker.r_lidar;
          m.source = tracking::MeasurementSource::Lidar;
          m.t = t;
          meas.push_back(m);
        }
        detail::phase("tracking", k, [&] {
          fusion.at(host_id).lidar_pass(meas, t);
          return 0;
        });
        detections[host_id] = dets;
      }
    }

    // 10 Hz broadcast slot: every connected actor sends a self-BSM, sensing
    // hosts add proxies for their confirmed tracks.
    json sent_bsms = json::array();
    std::map<std::uint32_t, json> sent_by_host;
    for (std::uint32_t id : sensing_ids) sent_by_host[id] = json::array();
    if (k % bsm_div == 0) {
      std::vector<v2x::Recipient> recipients;
      for (std::uint32_t id : connected_ids) {
        const world::ActorState* a = world::find_actor(world, id);
        recipients.push_back({id, {a->pose.x, a->pose.y, a->z}});
      }
      for (std::uint32_t id : connected_ids) {
        const world::ActorState* a = world::find_actor(world, id);
        std::vector<v2x::Bsm> outgoing;
        detail::phase("v2x", k, [&] {
          outgoing.push_back(v2x::make_self_bsm(*a, t, sc.origin));
          return 0;
        });
        if (fusion.contains(id)) {
          // The tracker runs in the world frame; proxy generation wants
          // body-frame tracks, so map them back through the host pose.
          std::vector<tracking::Track> body_tracks;
          for (const tracking::Track& tr : fusion.at(id).tracker().tracks()) {
            if (tr.status != tracking::TrackStatus::Confirmed) continue;
            tracking::Track bt = tr;
            const geo::Vec3 p =
                geo::world_to_body(a->pose, {tr.x(0), tr.x(1), 0.0});
            const double c = std::cos(a->pose.yaw);
            const double s = std::sin(a->pose.yaw);
            bt.x << p.x, p.y, c * tr.x(2) + s * tr.x(3), -s * tr.x(2) + c * tr.x(3);
            body_tracks.push_back(std::move(bt));
          }
          const auto proxies = detail::phase("collab", k, [&] {
            return collab::proxy_bsms(*a, body_tracks, t, sc.origin);
          });
          outgoing.insert(outgoing.end(), proxies.begin(), proxies.end());
        }
        for (const v2x::Bsm& b : outgoing) {
          detail::phase("v2x", k, [&] {
            channel.broadcast(v2x::encode_bsm(b), id, {a->pose.x, a->pose.y, a->z},
                              recipients, t);
            return 0;
          });
          sent_bsms.push_back(detail::bsm_summary(b));
          if (auto it = sent_by_host.find(id); it != sent_by_host.end()) {
            it->second.push_back(detail::bsm_summary(b));
          }
        }
      }
    }
    rec["sent_bsms"] = std::move(sent_bsms);

    // Delivery, fusion, and awareness. Connected actors without sensors
    // still poll so delivery accounting reflects every receiver.
    std::map<std::uint32_t, std::vector<v2x::Bsm>> received;
    for (std::uint32_t id : connected_ids) {
      const auto payloads = detail::phase("v2x", k, [&] { return channel.poll(id, t); });
      if (!fusion.contains(id)) continue;
      auto& batch = received[id];
      for (const auto& bytes : payloads) {
        batch.push_back(detail::phase("v2x", k, [&] { return v2x::decode_bsm(bytes); }));
      }
    }

    rec["hosts"] = json::object();
    for (std::uint32_t host_id : sensing_ids) {
      const world::ActorState* host = world::find_actor(world, host_id);
      collab::FusionState& fs = fusion.at(host_id);
      const auto& batch = received[host_id];
      detail::phase("collab", k, [&] {
        fs.ingest_bsms(batch, sc.origin, *host, t);
        return 0;
      });
      const auto fused = detail::phase("collab", k, [&] { return fs.fuse(t); });
      const auto sensor_only = fs.sensor_only_entities(t);
      const auto aw_host = collab::awareness(*host, sensor_only, world);
      const auto aw_collab = collab::awareness(*host, fused, world);

      json h;
      h["detections"] = json::array();
      if (auto it = detections.find(host_id); it != detections.end()) {
        for (const perception::Detection& d : it->second) {
          json dj;
          dj["x"] = d.center.x;
          dj["y"] = d.center.y;
          dj["z"] = d.center.z;
          dj["length"] = d.length;
          dj["width"] = d.width;
          dj["height"] = d.height;
          dj["yaw"] = d.yaw;
          dj["n_points"] = d.n_points;
          h["detections"].push_back(std::move(dj));
        }
      }
      h["tracks"] = json::array();
      for (const tracking::Track& tr : fs.tracker().tracks()) {
        if (tr.status != tracking::TrackStatus::Confirmed) continue;
        json tj;
        tj["id"] = tr.track_id;
        tj["x"] = tr.x(0);
        tj["y"] = tr.x(1);
        tj["vx"] = tr.x(2);
        tj["vy"] = tr.x(3);
        h["tracks"].push_back(std::move(tj));
      }
      h["sent_bsms"] = std::move(sent_by_host.at(host_id));
      h["received_bsms"] = json::array();
      for (const v2x::Bsm& b : batch) {
        h["received_bsms"].push_back(detail::bsm_summary(b));
      }
      h["fused"] = json::array();
      for (const collab::FusedEntity& e : fused) {
        h["fused"].push_back(detail::entity_json(e));
      }
      h["awareness"] = json::object();
      h["awareness"]["host_only"] = detail::awareness_json(aw_host, false);
      h["awareness"]["collaborative"] = detail::awareness_json(aw_collab, true);
      rec["hosts"][std::to_string(host_id)] = std::move(h);
    }

    const v2x::ChannelStats& st = channel.stats();
    rec["channel"] = json::object();
    rec["channel"]["sent"] = st.sent;
    rec["channel"]["delivered"] = st.delivered;
    rec["channel"]["dropped"] = st.dropped;
    rec["channel"]["latency_sum"] = st.latency_sum;

    records.push_back(std::move(rec));
  }
  return records;
}

inline void write_trace(const std::vector<json>& records, std::ostream& os) {
  for (const json& rec : records) os << rec.dump() << '\n';
}

namespace detail {

inline std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct TruthMatch {
  std::uint32_t actor_id = 0;
  double d2 = 0.0;
};

inline std::optional<TruthMatch> match_truth(const json& rec, std::uint32_t host_id,
                                             double x, double y, double match_dist) {
  std::optional<TruthMatch> best;
  for (const json& g : rec.at("ground_truth")) {
    const auto id = g.at("id").get<std::uint32_t>();
    if (id == host_id) continue;
    const double dx = x - g.at("x").get<double>();
    const double dy = y - g.at("y").get<double>();
    const double d2 = dx * dx + dy * dy;
    if (d2 <= match_dist * match_dist && (!best || d2 < best->d2)) {
      best = TruthMatch{id, d2};
    }
  }
  return best;
}

}  // namespace detail

/// Aggregates a finished trace into CSV rows "metric,host_id,value".
/// Global rows use host_id -1. Awareness and error statistics skip the
/// first second of sim time while tracks are still confirming.
inline std::string metrics_csv(const std::vector<json>& records) {
  if (records.empty()) throw std::runtime_error("metrics: empty trace");
  constexpr double kWarmup = 1.0;
  constexpr double kMatchDist = 2.0;

  const json& last = records.back();
  const auto sent = last.at("channel").at("sent").get<std::uint64_t>();
  const auto delivered = last.at("channel").at("delivered").get<std::uint64_t>();
  const auto dropped = last.at("channel").at("dropped").get<std::uint64_t>();
  const double latency_sum = last.at("channel").at("latency_sum").get<double>();

  struct HostAgg {
    double host_only_sum = 0.0;
    double collab_sum = 0.0;
    std::int64_t steps = 0;
    std::int64_t phantoms = 0;
    std::map<std::uint32_t, std::pair<double, std::int64_t>> sq_err;  // id -> (sum, n)
  };
  std::map<std::uint32_t, HostAgg> hosts;

  for (const json& rec : records) {
    if (rec.at("t").get<double>() <= kWarmup) continue;
    for (const auto& [key, h] : rec.at("hosts").items()) {
      const auto host_id = static_cast<std::uint32_t>(std::stoul(key));
      HostAgg& agg = hosts[host_id];
      agg.host_only_sum += h.at("awareness").at("host_only").at("ratio").get<double>();
      agg.collab_sum += h.at("awareness").at("collaborative").at("ratio").get<double>();
      agg.phantoms += h.at("awareness").at("collaborative").at("phantoms").get<std::int64_t>();
      ++agg.steps;
      for (const json& e : h.at("fused")) {
        const auto m = detail::match_truth(rec, host_id, e.at("x").get<double>(),
                                           e.at("y").get<double>(), kMatchDist);
        if (!m) continue;
        auto& [sum, n] = agg.sq_err[m->actor_id];
        sum += m->d2;
        ++n;
      }
    }
  }

  std::string out = "metric,host_id,value\n";
  const auto row = [&out](const std::string& metric, std::int64_t host,
                          const std::string& value) {
    out += metric + "," + std::to_string(host) + "," + value + "\n";
  };
  row("bsm_sent", -1, std::to_string(sent));
  row("bsm_delivered", -1, std::to_string(delivered));
  row("bsm_dropped", -1, std::to_string(dropped));
  row("bsm_in_flight", -1, std::to_string(sent - delivered - dropped));
  row("bsm_mean_latency", -1,
      detail::shortest(delivered > 0 ? latency_sum / static_cast<double>(delivered) : 0.0));
  for (const auto& [host_id, agg] : hosts) {
    const double steps = static_cast<double>(std::max<std::int64_t>(agg.steps, 1));
    row("awareness_host_only_mean", host_id, detail::shortest(agg.host_only_sum / steps));
    row("awareness_collaborative_mean", host_id, detail::shortest(agg.collab_sum / steps));
    row("phantoms_total", host_id, std::to_string(agg.phantoms));
    for (const auto& [actor_id, se] : agg.sq_err) {
      row("rmse_actor_" + std::to_string(actor_id), host_id,
          detail::shortest(std::sqrt(se.first / static_cast<double>(se.second))));
    }
  }
  return out;
}

struct SvgOptions {
  std::optional<std::uint32_t> host_id;  // default: lowest host in the record
  double fov_range = 80.0;
};

namespace detail {

inline std::string f2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct SvgMapper {
  double min_x, min_y, scale, height_px, margin;
  double px(double x) const { return margin + (x - min_x) * scale; }
  double py(double y) const { return height_px - margin - (y - min_y) * scale; }
};

}  // namespace detail

/// Renders the trace record nearest to t as a top-down snapshot: truth
/// boxes styled by perceivability, detections, tracks, fused entities, and
/// the chosen host's sensor ring. Output bytes are deterministic.
inline std::string render_svg(const std::vector<json>& records, double t,
                              const SvgOptions& opt = {}) {
  if (records.empty()) throw std::out_of_range("svg: empty trace");
  double dt = 0.05;
  if (records.size() > 1) {
    dt = records[1].at("t").get<double>() - records[0].at("t").get<double>();
  }
  const json* rec = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const json& r : records) {
    const double d = std::abs(r.at("t").get<double>() - t);
    if (d < best) {
      best = d;
      rec = &r;
    }
  }
  if (!rec || best > dt / 2.0 + 1e-9) {
    throw std::out_of_range("svg: no trace record near t = " + detail::f2(t));
  }

  std::uint32_t host_id = 0;
  if (opt.host_id) {
    host_id = *opt.host_id;
  } else if (!rec->at("hosts").empty()) {
    host_id = static_cast<std::uint32_t>(std::stoul(rec->at("hosts").items().begin().key()));
  }
  const std::string host_key = std::to_string(host_id);
  const bool have_host = rec->at("hosts").contains(host_key);

  std::set<std::uint32_t> perceivable;
  if (have_host) {
    for (const json& id :
         rec->at("hosts").at(host_key).at("awareness").at("collaborative").at("perceivable")) {
      perceivable.insert(id.get<std::uint32_t>());
    }
  }

  // World window: every truth actor plus the host FOV ring, padded.
  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  bool host_truth = false;
  double host_x = 0.0, host_y = 0.0, host_yaw = 0.0;
  for (const json& g : rec->at("ground_truth")) {
    const double x = g.at("x").get<double>();
    const double y = g.at("y").get<double>();
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
    min_y = std::min(min_y, y);
    max_y = std::max(max_y, y);
    if (g.at("id").get<std::uint32_t>() == host_id) {
      host_x = x;
      host_y = y;
      host_yaw = g.at("yaw").get<double>();
      host_truth = true;
    }
  }
  if (host_truth) {
    min_x = std::min(min_x, host_x - opt.fov_range);
    max_x = std::max(max_x, host_x + opt.fov_range);
    min_y = std::min(min_y, host_y - opt.fov_range);
    max_y = std::max(max_y, host_y + opt.fov_range);
  }
  const double pad = 8.0;
  min_x -= pad;
  max_x += pad;
  min_y -= pad;
  max_y += pad;

  const double width_px = 840.0, height_px = 880.0, margin = 40.0, legend_h = 70.0;
  const double usable_w = width_px - 2 * margin;
  const double usable_h = height_px - 2 * margin - legend_h;
  const double scale = std::min(usable_w / (max_x - min_x), usable_h / (max_y - min_y));
  // Center the window in the drawable area.
  const double cx = (min_x + max_x) / 2.0, cy = (min_y + max_y) / 2.0;
  detail::SvgMapper m{cx - usable_w / (2 * scale), cy - usable_h / (2 * scale), scale,
                      height_px - legend_h, margin};
  using detail::f2;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"840\" height=\"880\" "
         "viewBox=\"0 0 840 880\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"840\" height=\"880\" fill=\"#fcfcfa\"/>\n";

  // 20 m grid.
  svg += "<g stroke=\"#e8e8e4\" stroke-width=\"1\">\n";
  for (double gx = std::ceil(m.min_x / 20.0) * 20.0; gx <= m.min_x + usable_w / scale;
       gx += 20.0) {
    svg += "<line x1=\"" + f2(m.px(gx)) + "\" y1=\"" + f2(margin) + "\" x2=\"" +
           f2(m.px(gx)) + "\" y2=\"" + f2(height_px - legend_h - margin) + "\"/>\n";
  }
  for (double gy = std::ceil(m.min_y / 20.0) * 20.0; gy <= m.min_y + usable_h / scale;
       gy += 20.0) {
    svg += "<line x1=\"" + f2(margin) + "\" y1=\"" + f2(m.py(gy)) + "\" x2=\"" +
           f2(width_px - margin) + "\" y2=\"" + f2(m.py(gy)) + "\"/>\n";
  }
  svg += "</g>\n";

  if (host_truth) {
    svg += "<circle cx=\"" + f2(m.px(host_x)) + "\" cy=\"" + f2(m.py(host_y)) +
           "\" r=\"" + f2(opt.fov_range * scale) +
           "\" fill=\"none\" stroke=\"#4a90d9\" stroke-width=\"1.5\" "
           "stroke-dasharray=\"6 4\"/>\n";
  }

  // Ground-truth boxes.
  for (const json& g : rec->at("ground_truth")) {
    const auto id = g.at("id").get<std::uint32_t>();
    const double x = g.at("x").get<double>();
    const double y = g.at("y").get<double>();
    const double yaw = g.at("yaw").get<double>();
    const bool is_host = id == host_id;
    const bool seen = perceivable.contains(id);
    // Extent is not in the trace; draw a nominal footprint by class.
    const std::string cls = g.at("class").get<std::string>();
    double l = 4.6, w = 2.0;
    if (cls == "Truck") {
      l = 8.0;
      w = 2.5;
    } else if (cls == "Pedestrian") {
      l = 0.6;
      w = 0.6;
    }
    const double c = std::cos(yaw), s = std::sin(yaw);
    std::string pts;
    const double hx[4] = {l / 2, l / 2, -l / 2, -l / 2};
    const double hy[4] = {w / 2, -w / 2, -w / 2, w / 2};
    for (int i = 0; i < 4; ++i) {
      const double wx = x + c * hx[i] - s * hy[i];
      const double wy = y + s * hx[i] + c * hy[i];
      if (i) pts += " ";
      pts += f2(m.px(wx)) + "," + f2(m.py(wy));
    }
    std::string style;
    if (is_host) {
      style = "fill=\"#4a90d9\" stroke=\"#1b5a9e\" stroke-width=\"1.5\"";
    } else if (seen) {
      style = "fill=\"#b9dcb9\" stroke=\"#2e7d32\" stroke-width=\"1.5\"";
    } else {
      style = "fill=\"#e3e3e0\" stroke=\"#9e9e9e\" stroke-width=\"1\" "
              "stroke-dasharray=\"3 2\"";
    }
    svg += "<polygon points=\"" + pts + "\" " + style + "/>\n";
    svg += "<text x=\"" + f2(m.px(x) + 4) + "\" y=\"" + f2(m.py(y) - 4) +
           "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#555550\">" +
           std::to_string(id) + "</text>\n";
  }

  if (have_host) {
    const json& h = rec->at("hosts").at(host_key);
    // Detections are in the host body frame.
    const double c = std::cos(host_yaw), s = std::sin(host_yaw);
    for (const json& d : h.at("detections")) {
      const double bx = d.at("x").get<double>();
      const double by = d.at("y").get<double>();
      const double wx = host_x + c * bx - s * by;
      const double wy = host_y + s * bx + c * by;
      const double px = m.px(wx), py = m.py(wy);
      svg += "<path d=\"M" + f2(px - 4) + " " + f2(py - 4) + " L" + f2(px + 4) + " " +
             f2(py + 4) + " M" + f2(px - 4) + " " + f2(py + 4) + " L" + f2(px + 4) +
             " " + f2(py - 4) + "\" stroke=\"#e07b39\" stroke-width=\"1.5\"/>\n";
    }
    for (const json& tr : h.at("tracks")) {
      svg += "<circle cx=\"" + f2(m.px(tr.at("x").get<double>())) + "\" cy=\"" +
             f2(m.py(tr.at("y").get<double>())) +
             "\" r=\"5\" fill=\"none\" stroke=\"#7b1fa2\" stroke-width=\"1.5\"/>\n";
    }
    for (const json& e : h.at("fused")) {
      const double px = m.px(e.at("x").get<double>());
      const double py = m.py(e.at("y").get<double>());
      svg += "<polygon points=\"" + f2(px) + "," + f2(py - 6) + " " + f2(px + 6) + "," +
             f2(py) + " " + f2(px) + "," + f2(py + 6) + " " + f2(px - 6) + "," + f2(py) +
             "\" fill=\"none\" stroke=\"#c62828\" stroke-width=\"1.5\"/>\n";
    }
  }

  // Legend strip.
  const double ly = height_px - legend_h + 8;
  svg += "<rect x=\"" + f2(margin) + "\" y=\"" + f2(ly) + "\" width=\"" +
         f2(width_px - 2 * margin) + "\" height=\"" + f2(legend_h - 16) +
         "\" fill=\"#ffffff\" stroke=\"#ccccc8\"/>\n";
  const double ty = ly + 22;
  double tx = margin + 12;
  const auto legend_item = [&](const std::string& marker, const std::string& label) {
    svg += marker;
    svg += "<text x=\"" + f2(tx + 16) + "\" y=\"" + f2(ty + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333330\">" + label +
           "</text>\n";
    tx += 16 + 8.0 * label.size() + 20;
  };
  legend_item("<rect x=\"" + f2(tx) + "\" y=\"" + f2(ty - 6) +
                  "\" width=\"12\" height=\"12\" fill=\"#4a90d9\"/>\n",
              "host");
  legend_item("<rect x=\"" + f2(tx) + "\" y=\"" + f2(ty - 6) +
                  "\" width=\"12\" height=\"12\" fill=\"#b9dcb9\" stroke=\"#2e7d32\"/>\n",
              "perceivable");
  legend_item("<rect x=\"" + f2(tx) + "\" y=\"" + f2(ty - 6) +
                  "\" width=\"12\" height=\"12\" fill=\"#e3e3e0\" stroke=\"#9e9e9e\"/>\n",
              "not perceivable");
  legend_item("<path d=\"M" + f2(tx) + " " + f2(ty - 5) + " L" + f2(tx + 10) + " " +
                  f2(ty + 5) + " M" + f2(tx) + " " + f2(ty + 5) + " L" + f2(tx + 10) +
                  " " + f2(ty - 5) + "\" stroke=\"#e07b39\" stroke-width=\"1.5\"/>\n",
              "detection");
  legend_item("<circle cx=\"" + f2(tx + 6) + "\" cy=\"" + f2(ty) +
                  "\" r=\"5\" fill=\"none\" stroke=\"#7b1fa2\" stroke-width=\"1.5\"/>\n",
              "track");
  legend_item("<polygon points=\"" + f2(tx + 6) + "," + f2(ty - 6) + " " + f2(tx + 12) +
                  "," + f2(ty) + " " + f2(tx + 6) + "," + f2(ty + 6) + " " + f2(tx) +
                  "," + f2(ty) + "\" fill=\"none\" stroke=\"#c62828\" "
                  "stroke-width=\"1.5\"/>\n",
              "fused");
  svg += "<text x=\"" + f2(width_px - margin - 150) + "\" y=\"" + f2(ty + 4) +
         "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333330\">t = " +
         f2(rec->at("t").get<double>()) + " s, host " + std::to_string(host_id) +
         "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace covsim::harness
