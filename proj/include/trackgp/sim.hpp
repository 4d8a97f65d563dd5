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

#ifndef TRACKGP_SIM_HPP_
#define TRACKGP_SIM_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "trackgp/control.hpp"
#include "trackgp/gp.hpp"
#include "trackgp/kinematics.hpp"
#include "trackgp/terrain3d.hpp"

namespace trackgp {

// ---------------------------------------------------------------------------
// Reference trajectories

enum class TrajectoryKind { kFigure8, kCircle, kWaypoints };

std::string to_string(TrajectoryKind kind);

/// Positions sampled every `sample_time`. Step t uses positions t, t+1 and
/// t+2, so a trajectory with P positions has P - 2 reference steps.
struct ReferenceTrajectory {
  TrajectoryKind kind = TrajectoryKind::kFigure8;
  double sample_time = 0.05;
  std::vector<Eigen::Vector2d> positions;

  std::size_t steps() const { return positions.size() < 2 ? 0 : positions.size() - 2; }
  ReferencePoint point(std::size_t t) const;
  std::vector<ReferencePoint> samples() const;
  /// Heading of the first nonzero reference displacement.
  double initial_heading() const;
};

/// Gerono lemniscate x = A sin(wt), y = A sin(wt) cos(wt), w = 2 pi / (period Ts).
/// Positions k = 0 .. laps * period, so the last position equals the first.
ReferenceTrajectory make_figure8(double amplitude, int period_steps, double sample_time,
                                 int laps = 1);

/// Counter-clockwise circle (r cos(wt), r sin(wt)) starting at (r, 0).
ReferenceTrajectory make_circle(double radius, int period_steps, double sample_time,
                                int laps = 1);

/// Uniform Catmull-Rom spline through the waypoints; the end tangents come
/// from reflected phantom points.
class CatmullRomSpline {
 public:
  explicit CatmullRomSpline(std::vector<Eigen::Vector2d> waypoints);

  /// Parameter u in [0, segments()]; integer u hits waypoint u exactly.
  Eigen::Vector2d evaluate(double u) const;
  int segments() const { return static_cast<int>(points_.size()) - 1; }

 private:
  std::vector<Eigen::Vector2d> points_;
};

/// Spline through the waypoints resampled by arc length with a trapezoidal
/// speed profile (ramp at `accel` to `cruise_speed` and back to rest).
ReferenceTrajectory make_waypoint_path(const std::vector<Eigen::Vector2d>& waypoints,
                                       double cruise_speed, double sample_time,
                                       double accel = 0.25);

// ---------------------------------------------------------------------------
// Closed loop

enum class PlantKind { kNominal, kSlip };

std::string to_string(PlantKind kind);

struct PlantConfig {
  PlantKind kind = PlantKind::kNominal;
  SlipPlaneWorld world;
  /// EMA lag v(t+1) = a v(t) + (1 - a) v^d(t) with a = params.alpha_filter.
  /// Without lag the command acts within the same step.
  bool actuator_lag = true;
};

struct ControllerConfig {
  Gains gains;
  InverseModelSlot slot = InverseModelSlot::nominal_second();
};

enum class InitialVelocity { kMatched, kRest };

struct RolloutOptions {
  /// kMatched starts the offset point moving with the first reference delta.
  InitialVelocity initial_velocity = InitialVelocity::kMatched;
  /// Initial offset-point displacement from the reference, x_B(0) - x_d(0).
  Eigen::Vector2d initial_offset = Eigen::Vector2d::Zero();
  /// Seeded Gaussian perturbation added to the initial offset.
  double offset_sigma = 0.0;
  /// 0 runs every reference step.
  std::size_t max_steps = 0;
  /// Seeded zero-mean Gaussian dither on each track command (m/s). Used when
  /// collecting data so the inverse model is identifiable off the
  /// closed-loop manifold.
  double excitation_sigma = 0.0;
};

struct RolloutStep {
  std::size_t t = 0;
  ReferencePoint ref;
  Pose2 pose;              // centre
  OffsetPose offset;       // x_B(t)
  PoseDelta delta;         // x_B(t+1) - x_B(t), yaw increment
  TrackCommand command;    // reference command v^d(t) as applied (saturated)
  TrackCommand realized;   // actual track velocities during [t, t+1] after slip
  SlipState slip;
  double error = 0.0;      // |x_d(t) - x_B(t)|
};

struct RolloutLog {
  std::vector<RolloutStep> steps;
  std::size_t saturated_steps = 0;
};

/// Runs controller and plant in lockstep at params.sample_time. Deterministic
/// in (inputs, seed). Throws ConfigurationError for bad controller setups and
/// std::runtime_error if the state becomes non-finite.
RolloutLog rollout(const ReferenceTrajectory& traj, const ControllerConfig& controller,
                   const PlantConfig& plant, const VehicleParams& params, std::uint64_t seed,
                   const RolloutOptions& options = {});

/// One sample per interior step t = 1 .. L-2:
/// w = [dx_B(t+1); dq_B(t); phi_t], z = v^d(t).
std::vector<gp::Sample> extract_dataset(const RolloutLog& log);

struct DatasetSplit {
  std::vector<gp::Sample> train;
  std::vector<gp::Sample> test;
};

/// Seeded shuffle, first round(train_fraction * N) samples train.
DatasetSplit split_dataset(const std::vector<gp::Sample>& samples, double train_fraction,
                           std::uint64_t seed);

struct Metrics {
  std::vector<double> per_step;
  double mean = 0.0;
  double max = 0.0;
};

Metrics cartesian_error(const RolloutLog& log);

// ---------------------------------------------------------------------------
// CSV formats

/// Header: t,x_d,y_d,x,y,phi,x_B,y_B,dx,dy,dphi,vl_cmd,vr_cmd,vl_real,vr_real,a_l,a_r,beta,err
void write_log_csv(std::ostream& os, const RolloutLog& log);
/// Header: w1,w2,w3,w4,w5,w6,z1,z2
void write_dataset_csv(std::ostream& os, const std::vector<gp::Sample>& samples);
/// Throws std::invalid_argument on a malformed header or row.
std::vector<gp::Sample> read_dataset_csv(std::istream& is);

}  // namespace trackgp

#endif  // TRACKGP_SIM_HPP_
