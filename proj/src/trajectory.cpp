/*
 * Copyright 2026 The trackgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "trackgp/sim.hpp"

namespace trackgp {
namespace {

constexpr int kArcSamplesPerSegment = 400;

void check_periodic_args(double size, int period_steps, double sample_time, int laps) {
  if (!(size > 0.0)) throw std::invalid_argument("trajectory size must be positive");
  if (period_steps < 4) throw std::invalid_argument("period must be at least 4 steps");
  if (!(sample_time > 0.0)) throw std::invalid_argument("sample_time must be positive");
  if (laps < 1) throw std::invalid_argument("laps must be >= 1");
}

}  // namespace

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kFigure8:
      return "figure8";
    case TrajectoryKind::kCircle:
      return "circle";
    case TrajectoryKind::kWaypoints:
      return "waypoints";
  }
  return "unknown";
}

ReferencePoint ReferenceTrajectory::point(std::size_t t) const {
  if (t + 2 >= positions.size()) throw std::out_of_range("reference step out of range");
  const Eigen::Vector2d& p0 = positions[t];
  const Eigen::Vector2d d0 = positions[t + 1] - p0;
  const Eigen::Vector2d d1 = positions[t + 2] - positions[t + 1];
  return {p0.x(), p0.y(), d0.x(), d0.y(), d1.x(), d1.y()};
}

std::vector<ReferencePoint> ReferenceTrajectory::samples() const {
  std::vector<ReferencePoint> out;
  out.reserve(steps());
  for (std::size_t t = 0; t < steps(); ++t) out.push_back(point(t));
  return out;
}

double ReferenceTrajectory::initial_heading() const {
  for (std::size_t i = 0; i + 1 < positions.size(); ++i) {
    const Eigen::Vector2d d = positions[i + 1] - positions[i];
    if (d.norm() > 1e-12) return std::atan2(d.y(), d.x());
  }
  return 0.0;
}

ReferenceTrajectory make_figure8(double amplitude, int period_steps, double sample_time,
                                 int laps) {
  check_periodic_args(amplitude, period_steps, sample_time, laps);
  ReferenceTrajectory traj;
  traj.kind = TrajectoryKind::kFigure8;
  traj.sample_time = sample_time;
  const int total = period_steps * laps;
  traj.positions.reserve(static_cast<std::size_t>(total) + 1);
  for (int k = 0; k <= total; ++k) {
    // Phase from the step index modulo the period keeps laps bit-identical.
    const double phase = 2.0 * std::numbers::pi * (k % period_steps) / period_steps;
    const double s = std::sin(phase);
    traj.positions.emplace_back(amplitude * s, amplitude * s * std::cos(phase));
  }
  return traj;
}

ReferenceTrajectory make_circle(double radius, int period_steps, double sample_time, int laps) {
  check_periodic_args(radius, period_steps, sample_time, laps);
  ReferenceTrajectory traj;
  traj.kind = TrajectoryKind::kCircle;
  traj.sample_time = sample_time;
  const int total = period_steps * laps;
  traj.positions.reserve(static_cast<std::size_t>(total) + 1);
  for (int k = 0; k <= total; ++k) {
    const double phase = 2.0 * std::numbers::pi * (k % period_steps) / period_steps;
    traj.positions.emplace_back(radius * std::cos(phase), radius * std::sin(phase));
  }
  return traj;
}

CatmullRomSpline::CatmullRomSpline(std::vector<Eigen::Vector2d> waypoints)
    : points_(std::move(waypoints)) {
  if (points_.size() < 2) throw std::invalid_argument("at least 2 waypoints are required");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].allFinite()) throw std::invalid_argument("non-finite waypoint");
    if (i > 0 && (points_[i] - points_[i - 1]).norm() < 1e-9) {
      throw std::invalid_argument("coincident consecutive waypoints");
    }
  }
}

Eigen::Vector2d CatmullRomSpline::evaluate(double u) const {
  const int n = segments();
  u = std::clamp(u, 0.0, static_cast<double>(n));
  int seg = std::min(static_cast<int>(std::floor(u)), n - 1);
  const double s = u - seg;
  const auto at = [&](int i) -> Eigen::Vector2d {
    if (i < 0) return 2.0 * points_[0] - points_[1];
    if (i > n) return 2.0 * points_[static_cast<std::size_t>(n)] - points_[static_cast<std::size_t>(n - 1)];
    return points_[static_cast<std::size_t>(i)];
  };
  const Eigen::Vector2d p0 = at(seg - 1);
  const Eigen::Vector2d p1 = at(seg);
  const Eigen::Vector2d p2 = at(seg + 1);
  const Eigen::Vector2d p3 = at(seg + 2);
  if (s == 0.0) return p1;
  if (s == 1.0) return p2;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return 0.5 * (2.0 * p1 + (p2 - p0) * s + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s2 +
                (3.0 * p1 - p0 - 3.0 * p2 + p3) * s3);
}

ReferenceTrajectory make_waypoint_path(const std::vector<Eigen::Vector2d>& waypoints,
                                       double cruise_speed, double sample_time, double accel) {
  if (!(cruise_speed > 0.0)) throw std::invalid_argument("cruise_speed must be positive");
  if (!(accel > 0.0)) throw std::invalid_argument("accel must be positive");
  if (!(sample_time > 0.0)) throw std::invalid_argument("sample_time must be positive");
  const CatmullRomSpline spline(waypoints);

  // Arc-length table over the spline parameter.
  const int samples = spline.segments() * kArcSamplesPerSegment;
  std::vector<double> params(static_cast<std::size_t>(samples) + 1);
  std::vector<double> lengths(static_cast<std::size_t>(samples) + 1, 0.0);
  Eigen::Vector2d prev = spline.evaluate(0.0);
  for (int i = 1; i <= samples; ++i) {
    const double u = static_cast<double>(i) / kArcSamplesPerSegment;
    const Eigen::Vector2d p = spline.evaluate(u);
    params[static_cast<std::size_t>(i)] = u;
    lengths[static_cast<std::size_t>(i)] = lengths[static_cast<std::size_t>(i - 1)] + (p - prev).norm();
    prev = p;
  }
  const double total = lengths.back();

  // Trapezoidal (or triangular) speed profile.
  double peak = cruise_speed;
  double ramp_dist = peak * peak / (2.0 * accel);
  if (2.0 * ramp_dist > total) {
    peak = std::sqrt(accel * total);
    ramp_dist = total / 2.0;
  }
  const double ramp_time = peak / accel;
  const double cruise_time = (total - 2.0 * ramp_dist) / peak;
  const double duration = 2.0 * ramp_time + cruise_time;
  const auto arc_at = [&](double t) {
    if (t <= 0.0) return 0.0;
    if (t >= duration) return total;
    if (t < ramp_time) return 0.5 * accel * t * t;
    if (t < ramp_time + cruise_time) return ramp_dist + peak * (t - ramp_time);
    const double r = duration - t;
    return total - 0.5 * accel * r * r;
  };
  const auto param_at = [&](double s) {
    if (s >= total) return static_cast<double>(spline.segments());
    const auto it = std::upper_bound(lengths.begin(), lengths.end(), s);
    const auto hi = static_cast<std::size_t>(it - lengths.begin());
    const std::size_t lo = hi - 1;
    const double span = lengths[hi] - lengths[lo];
    const double f = span > 0.0 ? (s - lengths[lo]) / span : 0.0;
    return params[lo] + f * (params[hi] - params[lo]);
  };

  ReferenceTrajectory traj;
  traj.kind = TrajectoryKind::kWaypoints;
  traj.sample_time = sample_time;
  const auto steps = static_cast<int>(std::ceil(duration / sample_time));
  for (int k = 0; k <= steps; ++k) {
    traj.positions.push_back(spline.evaluate(param_at(arc_at(k * sample_time))));
  }
  // Two resting samples so the final position is a full reference step.
  traj.positions.push_back(traj.positions.back());
  traj.positions.push_back(traj.positions.back());
  return traj;
}

}  // namespace trackgp
