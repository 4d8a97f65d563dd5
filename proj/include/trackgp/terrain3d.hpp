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

// Tilted-plane world with longitudinal and lateral track slip. This is the
// ground-truth plant used to generate data and to evaluate controllers.

#ifndef TRACKGP_TERRAIN3D_HPP_
#define TRACKGP_TERRAIN3D_HPP_

#include <cstdint>

#include "trackgp/kinematics.hpp"

namespace trackgp {

/// Supporting plane with normal [-sin(slope), 0, cos(slope)] and slip knobs.
///
/// Longitudinal slip magnitude is base_slip * (1 + sin|slope| / friction_mu),
/// clamped to [0, kMaxSlip]; the left/right split follows the ratio model
/// a_r / a_l = -sign(v_l v_r) |v_l / v_r|^n. Lateral slip angle is
/// beta0 * sign(w) * min(1, |w| / omega_ref) for realized yaw rate w.
struct SlipPlaneWorld {
  double slope_alpha = 0.0;      // rad
  double height_db = 0.1;        // m
  double slip_exponent_n = 1.0;
  double base_slip = 0.0;        // [0, 1)
  double friction_mu = 0.6;
  double beta0 = 0.05;           // rad
  double omega_ref = 1.0;        // rad/s
  double noise_sigma = 0.0;      // m (and rad) per step, realized deltas
  std::uint64_t seed = 0;

  static constexpr double kMaxSlip = 0.95;

  void validate() const;
  /// Clamped longitudinal slip magnitude for this slope and friction.
  double slip_magnitude() const;
};

struct Pose3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw_phi = 0.0;
  double pitch_theta = 0.0;
  double roll_psi = 0.0;
};

struct SlipState {
  double a_left = 0.0;
  double a_right = 0.0;
  double beta = 0.0;
};

struct WorldRates {
  double x_dot = 0.0;
  double y_dot = 0.0;
  double z_dot = 0.0;
  double phi_dot = 0.0;
};

/// Pitch of a body with yaw `phi` resting on the plane.
double plane_pitch(double phi, double slope_alpha);
/// Roll of a body with yaw `phi` and pitch `theta` resting on the plane.
double plane_roll(double phi, double theta, double slope_alpha);

Pose3 lift_pose(const Pose2& pose, const SlipPlaneWorld& world);

/// Residuals of n.p - d_b, n.u_b and n.v_b for a lifted pose.
Eigen::Vector3d plane_constraint_residuals(const Pose3& pose,
                                           const SlipPlaneWorld& world);

/// Yaw conversions between the plane-aligned frame and the world frame
/// (tan(phi) = tan(phi_p) / cos(alpha)).
double world_yaw_from_plane(double phi_p, double slope_alpha);
double plane_yaw_from_world(double phi, double slope_alpha);

WorldRates plane_to_world_rates(double xp_dot, double yp_dot, double phi_p_dot,
                                const SlipPlaneWorld& world, double phi_p);

/// Slip ratios for commanded track velocities. `tread_d` sets the yaw rate
/// used by the slip-angle model.
SlipState slip_ratios(const TrackCommand& cmd, const SlipPlaneWorld& world,
                      double tread_d);

/// Realized track velocities v_i (1 - a_i).
TrackCommand realized_tracks(const TrackCommand& cmd, const SlipState& slip);

/// Continuous-time world-frame rates of the centre under slip.
WorldRates slip_rates(const Pose2& pose, const TrackCommand& cmd,
                      const SlipState& slip, const SlipPlaneWorld& world,
                      const VehicleParams& params);

/// Euler step of slip_rates over params.sample_time; returns the centre delta.
PoseDelta slip_forward(const Pose2& pose, const TrackCommand& cmd,
                       const SlipState& slip, const SlipPlaneWorld& world,
                       const VehicleParams& params);

}  // namespace trackgp

#endif  // TRACKGP_TERRAIN3D_HPP_
