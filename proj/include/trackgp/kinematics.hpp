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

#ifndef TRACKGP_KINEMATICS_HPP_
#define TRACKGP_KINEMATICS_HPP_

#include <Eigen/Core>

namespace trackgp {

using Matrix32 = Eigen::Matrix<double, 3, 2>;
using Matrix23 = Eigen::Matrix<double, 2, 3>;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// Planar configuration of the vehicle centre. `phi` is kept in (-pi, pi].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;
};

/// Single-step increment of a configuration, either of the centre or of the
/// offset point depending on context.
struct PoseDelta {
  double dx = 0.0;
  double dy = 0.0;
  double dphi = 0.0;

  Eigen::Vector3d vector() const { return {dx, dy, dphi}; }
  Eigen::Vector2d position() const { return {dx, dy}; }
  static PoseDelta from(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
};

/// Left/right track velocities in m/s.
struct TrackCommand {
  double v_left = 0.0;
  double v_right = 0.0;

  Eigen::Vector2d vector() const { return {v_left, v_right}; }
  static TrackCommand from(const Eigen::Vector2d& v) { return {v(0), v(1)}; }
};

/// Point at distance `offset_b` along the sagittal axis, plus the yaw.
struct OffsetPose {
  double x_b = 0.0;
  double y_b = 0.0;
  double phi = 0.0;

  Eigen::Vector2d position() const { return {x_b, y_b}; }
};

struct VehicleParams {
  double tread_d = 0.5;        // m
  double chi = 0.9;            // steering efficiency, (0, 1]
  double offset_b = 0.25;      // m, nonzero
  double sample_time = 0.05;   // s
  double alpha_filter = 0.1;   // EMA forgetting factor, [0, 1)
  double v_max = 2.0;          // m/s, applied at the plant boundary only

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

/// Tracked-vehicle model for the centre point (steering-efficiency model).
Matrix32 centre_model_matrix(double phi, const VehicleParams& params);
Matrix23 centre_inverse_matrix(double phi, const VehicleParams& params);

/// Tracked-vehicle model for the offset point; its inverse is the exact
/// left inverse and satisfies the output consistency condition.
Matrix32 offset_model_matrix(double phi, const VehicleParams& params);
Matrix23 offset_inverse_matrix(double phi, const VehicleParams& params);

OffsetPose offset_point(const Pose2& pose, const VehicleParams& params);
Pose2 centre_from_offset(const OffsetPose& offset, const VehicleParams& params);

/// One-step displacement of the offset point: Ts * G_b(phi) * v.
PoseDelta forward_first_order(double phi, const TrackCommand& cmd,
                              const VehicleParams& params);

/// Track velocities that move the offset point by `desired` in one step.
TrackCommand inverse_first_order(const Eigen::Vector2d& desired, double phi,
                                 const VehicleParams& params);

/// True iff the top 2x3 block of G * G_plus is [I 0] within `tolerance`.
bool consistency_condition(const Matrix32& model, const Matrix23& inverse,
                           double tolerance = 1e-10);

/// Next-step displacement with first-order (EMA) actuator lag:
///   dq_{t+1} = Ts G(phi_{t+1}) (alpha G+(phi_t) dq_t / Ts + (1 - alpha) v^d_t)
/// with phi_{t+1} = phi_t + dphi_t taken from `prev_delta`.
PoseDelta forward_second_order(const PoseDelta& prev_delta, double phi,
                               const TrackCommand& ref_cmd,
                               const VehicleParams& params);

/// Reference command that produces `desired_next` at the next step given the
/// current displacement. Throws if alpha_filter >= 1.
TrackCommand inverse_second_order(const Eigen::Vector2d& desired_next,
                                  const PoseDelta& current_delta, double phi,
                                  const VehicleParams& params);

/// Clamps both tracks to [-v_max, v_max].
TrackCommand saturate(const TrackCommand& cmd, double v_max);

}  // namespace trackgp

#endif  // TRACKGP_KINEMATICS_HPP_
