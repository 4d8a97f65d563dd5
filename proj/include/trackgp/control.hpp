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

// Feedback-linearizing trajectory tracking on the offset point. With a
// matching plant the closed loop reduces to the linear error dynamics
//   first order:  e(t+1) = (1 - kP) e(t)
//   second order: e(t+2) + (kD - 1) e(t+1) + (kP - kD) e(t) = 0
// per axis, with e = x_d - x_B.

#ifndef TRACKGP_CONTROL_HPP_
#define TRACKGP_CONTROL_HPP_

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "trackgp/gp.hpp"
#include "trackgp/kinematics.hpp"

namespace trackgp {

class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Gains {
  Eigen::Vector2d kp = Eigen::Vector2d::Constant(0.02);
  Eigen::Vector2d kd = Eigen::Vector2d::Constant(0.05);
};

/// Poles are rejected unless |lambda| < 1 - kPoleMargin.
constexpr double kPoleMargin = 1e-9;

/// Pole magnitudes of the error dynamics. Order 1 yields |1 - kP_i| per axis;
/// order 2 yields both root magnitudes per axis, larger first, axis-major.
std::vector<double> validate_gains(const Gains& gains, int order);

bool poles_stable(const std::vector<double>& magnitudes);

/// Reference sample at step t: position x_d(t), delta x_d(t+1) - x_d(t) and
/// next delta x_d(t+2) - x_d(t+1).
struct ReferencePoint {
  double x_d = 0.0;
  double y_d = 0.0;
  double dx_d = 0.0;
  double dy_d = 0.0;
  double dx_d_next = 0.0;
  double dy_d_next = 0.0;

  Eigen::Vector2d position() const { return {x_d, y_d}; }
  Eigen::Vector2d delta() const { return {dx_d, dy_d}; }
  Eigen::Vector2d next_delta() const { return {dx_d_next, dy_d_next}; }
};

enum class SlotKind { kNominalFirst, kNominalSecond, kGpSecond };

std::string to_string(SlotKind kind);
SlotKind slot_from_string(const std::string& name);

/// Inverse model used by the controller: closed-form nominal or a trained GP
/// that replaces the second-order inverse.
struct InverseModelSlot {
  SlotKind kind = SlotKind::kNominalSecond;
  std::shared_ptr<const gp::GpModel> model;

  static InverseModelSlot nominal_first() { return {SlotKind::kNominalFirst, nullptr}; }
  static InverseModelSlot nominal_second() { return {SlotKind::kNominalSecond, nullptr}; }
  static InverseModelSlot gp_second(std::shared_ptr<const gp::GpModel> model);

  int order() const { return kind == SlotKind::kNominalFirst ? 1 : 2; }
  /// Throws ConfigurationError when a GP slot has no fitted 6->2 model.
  void validate() const;
};

/// GP query for the second-order inverse: [u(t+1); dq_B(t); phi_t].
gp::Input gp_query(const Eigen::Vector2d& desired_next, const PoseDelta& current_delta,
                   double phi);

class FirstOrderController {
 public:
  /// Throws ConfigurationError for unstable gains or invalid params.
  FirstOrderController(const Gains& gains, const VehicleParams& params);

  /// u = dx_d(t) + kP (x_d(t) - x_B(t)).
  Eigen::Vector2d control_input(const ReferencePoint& ref, const OffsetPose& measured) const;
  TrackCommand step(const ReferencePoint& ref, const OffsetPose& measured) const;

 private:
  Gains gains_;
  VehicleParams params_;
};

class SecondOrderController {
 public:
  /// Throws ConfigurationError for unstable gains, invalid params or an
  /// unusable slot.
  SecondOrderController(const Gains& gains, const VehicleParams& params, InverseModelSlot slot);

  /// u(t+1) = dx_d(t+1) + kD (dx_d(t) - dx_B(t)) + kP (x_d(t) - x_B(t)).
  Eigen::Vector2d control_input(const ReferencePoint& ref, const OffsetPose& measured,
                                const PoseDelta& measured_delta) const;
  TrackCommand step(const ReferencePoint& ref, const OffsetPose& measured,
                    const PoseDelta& measured_delta) const;

  const InverseModelSlot& slot() const { return slot_; }

 private:
  Gains gains_;
  VehicleParams params_;
  InverseModelSlot slot_;
};

}  // namespace trackgp

#endif  // TRACKGP_CONTROL_HPP_
