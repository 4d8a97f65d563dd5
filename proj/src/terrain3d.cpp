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

#include "trackgp/terrain3d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Geometry>

namespace trackgp {
namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

void SlipPlaneWorld::validate() const {
  if (!(std::abs(slope_alpha) < std::numbers::pi / 2.0)) {
    throw std::invalid_argument("|slope_alpha| must be below pi/2");
  }
  if (!(height_db >= 0.0)) throw std::invalid_argument("height_db must be >= 0");
  if (!(base_slip >= 0.0 && base_slip < 1.0)) {
    throw std::invalid_argument("base_slip must lie in [0, 1)");
  }
  if (!(friction_mu > 0.0)) throw std::invalid_argument("friction_mu must be positive");
  if (!std::isfinite(slip_exponent_n)) throw std::invalid_argument("slip_exponent_n must be finite");
  if (!(omega_ref > 0.0)) throw std::invalid_argument("omega_ref must be positive");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
  if (!std::isfinite(beta0)) throw std::invalid_argument("beta0 must be finite");
}

double SlipPlaneWorld::slip_magnitude() const {
  const double m = base_slip * (1.0 + std::sin(std::abs(slope_alpha)) / friction_mu);
  return std::clamp(m, 0.0, kMaxSlip);
}

double plane_pitch(double phi, double slope_alpha) {
  return std::atan(-std::tan(slope_alpha) * std::cos(phi));
}

double plane_roll(double phi, double theta, double slope_alpha) {
  const double t = std::tan(slope_alpha);
  // The denominator is -cos(theta) (1 + tan^2 alpha cos^2 phi) < 0, never zero.
  return std::atan(t * std::sin(phi) / (t * std::cos(phi) * std::sin(theta) - std::cos(theta)));
}

Pose3 lift_pose(const Pose2& pose, const SlipPlaneWorld& world) {
  Pose3 out;
  out.x = pose.x;
  out.y = pose.y;
  out.z = (world.height_db + pose.x * std::sin(world.slope_alpha)) / std::cos(world.slope_alpha);
  out.yaw_phi = pose.phi;
  out.pitch_theta = plane_pitch(pose.phi, world.slope_alpha);
  out.roll_psi = plane_roll(pose.phi, out.pitch_theta, world.slope_alpha);
  return out;
}

Eigen::Vector3d plane_constraint_residuals(const Pose3& pose, const SlipPlaneWorld& world) {
  const Eigen::Vector3d normal(-std::sin(world.slope_alpha), 0.0, std::cos(world.slope_alpha));
  const Eigen::Matrix3d rotation =
      (Eigen::AngleAxisd(pose.yaw_phi, Eigen::Vector3d::UnitZ()) *
       Eigen::AngleAxisd(pose.pitch_theta, Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(pose.roll_psi, Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  const Eigen::Vector3d position(pose.x, pose.y, pose.z);
  return {normal.dot(position) - world.height_db, normal.dot(rotation.col(0)),
          normal.dot(rotation.col(1))};
}

double world_yaw_from_plane(double phi_p, double slope_alpha) {
  return std::atan2(std::sin(phi_p), std::cos(phi_p) * std::cos(slope_alpha));
}

double plane_yaw_from_world(double phi, double slope_alpha) {
  return std::atan2(std::sin(phi) * std::cos(slope_alpha), std::cos(phi));
}

WorldRates plane_to_world_rates(double xp_dot, double yp_dot, double phi_p_dot,
                                const SlipPlaneWorld& world, double phi_p) {
  const double ca = std::cos(world.slope_alpha);
  const double sa = std::sin(world.slope_alpha);
  const double phi = world_yaw_from_plane(phi_p, world.slope_alpha);
  const double ct = std::cos(plane_pitch(phi, world.slope_alpha));
  return {xp_dot * ca, yp_dot, xp_dot * sa, phi_p_dot * ca / (ct * ct)};
}

SlipState slip_ratios(const TrackCommand& cmd, const SlipPlaneWorld& world, double tread_d) {
  const double vl = cmd.v_left;
  const double vr = cmd.v_right;
  SlipState slip;
  if (vl == 0.0 && vr == 0.0) return slip;

  const double m = world.slip_magnitude();
  if (m == 0.0) return slip;  // no slippage, longitudinal or lateral
  if (vr == 0.0 || vl == 0.0) {
    // Ratio is zero or undefined; the stationary track carries no slip.
    slip.a_left = vl == 0.0 ? 0.0 : m;
    slip.a_right = vr == 0.0 ? 0.0 : m;
  } else {
    const double ratio = -sign(vl * vr) * std::pow(std::abs(vl / vr), world.slip_exponent_n);
    // The larger of |a_l|, |a_r| gets the full magnitude so both stay below 1.
    slip.a_left = std::abs(ratio) <= 1.0 ? m : m / std::abs(ratio);
    slip.a_right = ratio * slip.a_left;
  }

  const TrackCommand real = realized_tracks(cmd, slip);
  const double omega = (real.v_right - real.v_left) / tread_d;
  slip.beta = world.beta0 * sign(omega) * std::min(1.0, std::abs(omega) / world.omega_ref);
  return slip;
}

TrackCommand realized_tracks(const TrackCommand& cmd, const SlipState& slip) {
  return {cmd.v_left * (1.0 - slip.a_left), cmd.v_right * (1.0 - slip.a_right)};
}

WorldRates slip_rates(const Pose2& pose, const TrackCommand& cmd, const SlipState& slip,
                      const SlipPlaneWorld& world, const VehicleParams& params) {
  const TrackCommand real = realized_tracks(cmd, slip);
  const double speed = (real.v_right + real.v_left) / 2.0;
  const double yaw_rate_plane = (real.v_right - real.v_left) / params.tread_d;
  const double ct = std::cos(plane_pitch(pose.phi, world.slope_alpha));
  const double heading = pose.phi + slip.beta;
  WorldRates rates;
  rates.x_dot = speed * std::cos(heading) * ct;
  rates.y_dot = speed * std::sin(heading) * ct;
  rates.z_dot = rates.x_dot * std::tan(world.slope_alpha);
  rates.phi_dot = yaw_rate_plane * std::cos(world.slope_alpha) / (ct * ct);
  return rates;
}

PoseDelta slip_forward(const Pose2& pose, const TrackCommand& cmd, const SlipState& slip,
                       const SlipPlaneWorld& world, const VehicleParams& params) {
  const WorldRates rates = slip_rates(pose, cmd, slip, world, params);
  const double ts = params.sample_time;
  return {ts * rates.x_dot, ts * rates.y_dot, wrap_angle(ts * rates.phi_dot)};
}

}  // namespace trackgp
