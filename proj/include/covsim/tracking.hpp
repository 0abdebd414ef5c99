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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "covsim/geo.hpp"

namespace covsim::tracking {

enum class TrackStatus { Tentative, Confirmed };

enum class MeasurementSource { Lidar, Bsm };

struct Measurement {
  Eigen::Vector2d z = Eigen::Vector2d::Zero();
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity();
  MeasurementSource source = MeasurementSource::Lidar;
  std::uint32_t source_id = 0;  // BSM sender when source == Bsm
  double t = 0.0;
};

struct Track {
  int track_id = 0;
  Eigen::Vector4d x = Eigen::Vector4d::Zero();  // [px, py, vx, vy]
  Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
  TrackStatus status = TrackStatus::Tentative;
  std::vector<bool> hit_history;  // most recent last, length <= confirm_n
  int misses = 0;
  std::optional<std::uint32_t> bound_bsm_id;
};

struct TrackerParams {
  double q = 1.0;  // white-acceleration intensity, m^2/s^3
  Eigen::Matrix2d r_lidar = 0.25 * Eigen::Matrix2d::Identity();
  Eigen::Matrix2d r_bsm_pos = 0.25 * Eigen::Matrix2d::Identity();
  double gate_gamma = 9.21;  // chi-square 99%, 2 dof
  double p_detect = 0.9;
  double clutter_density = 1e-4;  // expected false alarms per m^2
  int confirm_m = 2;
  int confirm_n = 3;
  int delete_k = 5;
  Eigen::Vector4d init_p = Eigen::Vector4d(1.0, 1.0, 25.0, 25.0);
};

inline void validate(const TrackerParams& p) {
  if (!(p.p_detect > 0.0 && p.p_detect <= 1.0)) {
    throw std::invalid_argument("tracking: p_detect must be in (0, 1]");
  }
  if (!(p.clutter_density >= 0.0)) {
    throw std::invalid_argument("tracking: clutter_density must be >= 0");
  }
  if (p.confirm_m > p.confirm_n || p.confirm_m < 1) {
    throw std::invalid_argument("tracking: require 1 <= confirm_m <= confirm_n");
  }
  if (!(p.gate_gamma > 0.0)) throw std::invalid_argument("tracking: gate_gamma must be > 0");
  if (!(p.q >= 0.0)) throw std::invalid_argument("tracking: q must be >= 0");
  if (p.delete_k < 1) throw std::invalid_argument("tracking: delete_k must be >= 1");
  if (!(p.init_p.minCoeff() > 0.0)) {
    throw std::invalid_argument("tracking: init_p must be positive");
  }
}

inline Eigen::Matrix4d cv_transition(double dt) {
  Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
  F(0, 2) = dt;
  F(1, 3) = dt;
  return F;
}

inline Eigen::Matrix4d cv_process_noise(double dt, double q) {
  const double a = dt * dt * dt / 3.0 * q;
  const double b = dt * dt / 2.0 * q;
  const double c = dt * q;
  Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
  Q(0, 0) = a;
  Q(1, 1) = a;
  Q(0, 2) = b;
  Q(2, 0) = b;
  Q(1, 3) = b;
  Q(3, 1) = b;
  Q(2, 2) = c;
  Q(3, 3) = c;
  return Q;
}

inline Eigen::Matrix<double, 2, 4> position_h() {
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = 1.0;
  H(1, 1) = 1.0;
  return H;
}

inline Track predict(Track track, double dt, double q) {
  if (dt < 0.0) throw std::invalid_argument("tracking: negative dt");
  const Eigen::Matrix4d F = cv_transition(dt);
  track.x = F * track.x;
  track.P = F * track.P * F.transpose() + cv_process_noise(dt, q);
  track.P = 0.5 * (track.P + track.P.transpose()).eval();
  return track;
}

namespace detail {

struct Inverse2 {
  Eigen::Matrix2d inv;
  double det;
};

inline Inverse2 invert2(const Eigen::Matrix2d& S) {
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw std::runtime_error("tracking: innovation covariance not invertible");
  }
  Eigen::Matrix2d inv;
  inv << S(1, 1), -S(0, 1), -S(1, 0), S(0, 0);
  inv /= det;
  return {inv, det};
}

}  // namespace detail

/// Squared Mahalanobis distance of a measurement against a track's
/// predicted position under S = H P H' + R.
inline double gate_distance2(const Track& track, const Measurement& m) {
  const auto H = position_h();
  const Eigen::Matrix2d S = H * track.P * H.transpose() + m.R;
  const auto Sinv = detail::invert2(S);
  const Eigen::Vector2d nu = m.z - H * track.x;
  return nu.dot(Sinv.inv * nu);
}

/// Indices of the measurements inside the chi-square gate.
inline std::vector<int> gate(const Track& track,
                             const std::vector<Measurement>& meas,
                             double gate_gamma) {
  std::vector<int> in;
  for (int j = 0; j < static_cast<int>(meas.size()); ++j) {
    if (gate_distance2(track, meas[j]) <= gate_gamma) in.push_back(j);
  }
  return in;
}

/// Association marginals over all feasible joint events. Row t of the
/// result holds [beta_miss, beta_t1 .. beta_tM] and sums to 1. A feasible
/// event assigns every track at most one gated measurement and every
/// measurement at most one track; unassigned measurements count as clutter.
inline Eigen::MatrixXd jpda_probabilities(const std::vector<Track>& tracks,
                                          const std::vector<Measurement>& meas,
                                          const std::vector<std::vector<int>>& gates,
                                          const TrackerParams& params) {
  const int T = static_cast<int>(tracks.size());
  const int M = static_cast<int>(meas.size());
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(T, M + 1);
  if (T == 0) return beta;

  // Gaussian likelihood of each gated (track, measurement) pair.
  const auto H = position_h();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(T, M);
  for (int t = 0; t < T; ++t) {
    for (int j : gates[t]) {
      const Eigen::Matrix2d S = H * tracks[t].P * H.transpose() + meas[j].R;
      const auto Sinv = detail::invert2(S);
      const Eigen::Vector2d nu = meas[j].z - H * tracks[t].x;
      const double d2 = nu.dot(Sinv.inv * nu);
      g(t, j) = std::exp(-0.5 * d2) / (2.0 * geo::kPi * std::sqrt(Sinv.det));
    }
  }

  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(T, M + 1);
  std::vector<int> choice(T, -1);
  std::uint64_t events = 0;
  double total = 0.0;

  auto leaf = [&](double w, int assigned) {
    if (++events > 1000000) {
      throw std::runtime_error("tracking: joint association event count exceeds 1e6");
    }
    const double weight =
        w * std::pow(params.clutter_density, static_cast<double>(M - assigned));
    total += weight;
    for (int t = 0; t < T; ++t) {
      raw(t, choice[t] + 1) += weight;  // column 0 is the miss slot
    }
  };

  std::uint64_t used = 0;  // bitmask over measurements (M is desk-scale)
  auto recurse = [&](auto&& self, int t, double w, int assigned) -> void {
    if (t == T) {
      leaf(w, assigned);
      return;
    }
    choice[t] = -1;
    self(self, t + 1, w * (1.0 - params.p_detect), assigned);
    for (int j : gates[t]) {
      if (used & (1ull << j)) continue;
      used |= 1ull << j;
      choice[t] = j;
      self(self, t + 1, w * params.p_detect * g(t, j), assigned + 1);
      used &= ~(1ull << j);
    }
    choice[t] = -1;
  };
  if (M > 62) throw std::runtime_error("tracking: too many measurements in one pass");
  recurse(recurse, 0, 1.0, 0);

  if (total > 0.0 && std::isfinite(total)) {
    beta = raw / total;
  } else {
    for (int t = 0; t < T; ++t) beta(t, 0) = 1.0;  // degenerate: all miss
  }
  return beta;
}

/// Spread-of-innovations JPDA measurement update for one track. beta_row
/// is [miss, m_0 .. m_{M-1}] and must sum to 1.
inline Track jpda_update(Track track, const std::vector<Measurement>& meas,
                         const Eigen::VectorXd& beta_row) {
  if (beta_row.size() != static_cast<Eigen::Index>(meas.size()) + 1) {
    throw std::invalid_argument("tracking: beta row size mismatch");
  }
  if (std::abs(beta_row.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("tracking: beta row must sum to 1");
  }
  int first = -1;
  for (int j = 0; j < static_cast<int>(meas.size()); ++j) {
    if (beta_row(j + 1) > 0.0) {
      first = j;
      break;
    }
  }
  if (first < 0) return track;  // all probability mass on the miss

  const auto H = position_h();
  const double beta0 = beta_row(0);
  const Eigen::Matrix2d S = H * track.P * H.transpose() + meas[first].R;
  const Eigen::Matrix2d Sinv = detail::invert2(S).inv;
  const Eigen::Matrix<double, 4, 2> K = track.P * H.transpose() * Sinv;

  Eigen::Vector2d nu_bar = Eigen::Vector2d::Zero();
  Eigen::Matrix2d spread = Eigen::Matrix2d::Zero();
  for (int j = 0; j < static_cast<int>(meas.size()); ++j) {
    const double b = beta_row(j + 1);
    if (b <= 0.0) continue;
    const Eigen::Vector2d nu = meas[j].z - H * track.x;
    nu_bar += b * nu;
    spread += b * nu * nu.transpose();
  }
  spread -= nu_bar * nu_bar.transpose();

  const Eigen::Matrix4d Pc = track.P - K * S * K.transpose();
  track.x += K * nu_bar;
  track.P = beta0 * track.P + (1.0 - beta0) * Pc +
            K * spread * K.transpose();
  track.P = 0.5 * (track.P + track.P.transpose()).eval();
  return track;
}

struct ManageResult {
  std::vector<Track> tracks;
  int next_id = 0;
  std::vector<int> seeded_meas;  // measurement index per appended track
};

/// Hit/miss bookkeeping, M-of-N confirmation, deletion, and new-track
/// seeding from measurements left mostly unexplained by existing tracks.
inline ManageResult manage(std::vector<Track> tracks,
                           const std::vector<Measurement>& meas,
                           const Eigen::MatrixXd& beta,
                           const TrackerParams& params, int next_id) {
  const int M = static_cast<int>(meas.size());

  for (int t = 0; t < static_cast<int>(tracks.size()); ++t) {
    Track& tr = tracks[t];
    double best = 0.0;
    int best_j = -1;
    for (int j = 0; j < M; ++j) {
      if (beta(t, j + 1) > best) {
        best = beta(t, j + 1);
        best_j = j;
      }
    }
    const bool hit = best_j >= 0 && best > beta(t, 0);
    tr.hit_history.push_back(hit);
    if (static_cast<int>(tr.hit_history.size()) > params.confirm_n) {
      tr.hit_history.erase(tr.hit_history.begin());
    }
    if (hit) {
      tr.misses = 0;
      if (meas[best_j].source == MeasurementSource::Bsm) {
        tr.bound_bsm_id = meas[best_j].source_id;
      }
    } else {
      ++tr.misses;
    }
    if (tr.status == TrackStatus::Tentative) {
      const int hits = static_cast<int>(
          std::count(tr.hit_history.begin(), tr.hit_history.end(), true));
      if (hits >= params.confirm_m) tr.status = TrackStatus::Confirmed;
    }
  }

  std::erase_if(tracks, [&](const Track& tr) { return tr.misses >= params.delete_k; });

  // Unclaimed measurements seed Tentative tracks; candidates are ordered by
  // position so seeded ids do not depend on measurement input order.
  std::vector<int> seeds;
  for (int j = 0; j < M; ++j) {
    double claimed = 0.0;
    for (Eigen::Index t = 0; t < beta.rows(); ++t) claimed += beta(t, j + 1);
    if (claimed < 0.1) seeds.push_back(j);
  }
  std::sort(seeds.begin(), seeds.end(), [&](int a, int b) {
    if (meas[a].z.x() != meas[b].z.x()) return meas[a].z.x() < meas[b].z.x();
    if (meas[a].z.y() != meas[b].z.y()) return meas[a].z.y() < meas[b].z.y();
    return a < b;
  });
  for (int j : seeds) {
    Track tr;
    tr.track_id = next_id++;
    tr.x << meas[j].z.x(), meas[j].z.y(), 0.0, 0.0;
    tr.P = params.init_p.asDiagonal();
    tr.status = params.confirm_m <= 1 ? TrackStatus::Confirmed : TrackStatus::Tentative;
    tr.hit_history = {true};
    if (meas[j].source == MeasurementSource::Bsm) {
      tr.bound_bsm_id = meas[j].source_id;
    }
    tracks.push_back(tr);
  }
  return {std::move(tracks), next_id, std::move(seeds)};
}

/// Index pairing of a track with the measurement that carried most of its
/// association mass this step (-1 when the miss dominated).
struct Association {
  int track_id = 0;
  int meas_index = -1;
};

/// Single-owner JPDA tracker: predict, gate, associate, update, manage.
class Tracker {
 public:
  explicit Tracker(TrackerParams params) : params_(std::move(params)) {
    validate(params_);
  }

  const TrackerParams& params() const { return params_; }
  const std::vector<Track>& tracks() const { return tracks_; }
  double last_t() const { return last_t_; }

  /// Which measurement dominated each pre-existing track in the last step,
  /// and which measurements seeded new tracks. Used by fusion provenance.
  const std::vector<Association>& last_associations() const { return last_assoc_; }
  const std::vector<Association>& last_seeds() const { return last_seeds_; }

  std::vector<Track> step(const std::vector<Measurement>& meas, double t) {
    const double dt = has_stepped_ ? t - last_t_ : 0.0;
    if (dt < 0.0) throw std::invalid_argument("tracking: time went backwards");

    for (Track& tr : tracks_) tr = predict(tr, dt, params_.q);

    std::vector<std::vector<int>> gates;
    gates.reserve(tracks_.size());
    for (const Track& tr : tracks_) gates.push_back(gate(tr, meas, params_.gate_gamma));

    const Eigen::MatrixXd beta = jpda_probabilities(tracks_, meas, gates, params_);
    for (int ti = 0; ti < static_cast<int>(tracks_.size()); ++ti) {
      tracks_[ti] = jpda_update(std::move(tracks_[ti]), meas, beta.row(ti).transpose());
    }

    last_assoc_.clear();
    for (int ti = 0; ti < static_cast<int>(tracks_.size()); ++ti) {
      double best = 0.0;
      int best_j = -1;
      for (int j = 0; j < static_cast<int>(meas.size()); ++j) {
        if (beta(ti, j + 1) > best) {
          best = beta(ti, j + 1);
          best_j = j;
        }
      }
      if (best_j >= 0 && best > beta(ti, 0)) {
        last_assoc_.push_back({tracks_[ti].track_id, best_j});
      }
    }

    auto managed = manage(std::move(tracks_), meas, beta, params_, next_id_);
    tracks_ = std::move(managed.tracks);
    next_id_ = managed.next_id;

    last_seeds_.clear();
    const std::size_t first_seeded = tracks_.size() - managed.seeded_meas.size();
    for (std::size_t i = 0; i < managed.seeded_meas.size(); ++i) {
      last_seeds_.push_back(
          {tracks_[first_seeded + i].track_id, managed.seeded_meas[i]});
    }

    last_t_ = t;
    has_stepped_ = true;

    std::vector<Track> confirmed;
    for (const Track& tr : tracks_) {
      if (tr.status == TrackStatus::Confirmed) confirmed.push_back(tr);
    }
    return confirmed;
  }

 private:
  TrackerParams params_;
  std::vector<Track> tracks_;
  std::vector<Association> last_assoc_;
  std::vector<Association> last_seeds_;
  int next_id_ = 1;
  double last_t_ = 0.0;
  bool has_stepped_ = false;
};

}  // namespace covsim::tracking
