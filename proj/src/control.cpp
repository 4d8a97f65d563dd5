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

#include "trackgp/control.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace trackgp {
namespace {

void require_stable(const Gains& gains, int order) {
  if (!gains.kp.allFinite() || !gains.kd.allFinite()) {
    throw ConfigurationError("gains must be finite");
  }
  const auto poles = validate_gains(gains, order);
  if (!poles_stable(poles)) {
    std::string msg = "unstable gains for order " + std::to_string(order) + ": |lambda| =";
    for (double p : poles) msg += " " + std::to_string(p);
    throw ConfigurationError(msg);
  }
}

void require_params(const VehicleParams& params) {
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigurationError(e.what());
  }
}

}  // namespace

std::vector<double> validate_gains(const Gains& gains, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("order must be 1 or 2");
  std::vector<double> out;
  for (int i = 0; i < 2; ++i) {
    const double kp = gains.kp(i);
    const double kd = gains.kd(i);
    if (order == 1) {
      out.push_back(std::abs(1.0 - kp));
      continue;
    }
    // lambda^2 + (kd - 1) lambda + (kp - kd) = 0
    const double b = kd - 1.0;
    const double c = kp - kd;
    const double disc = b * b - 4.0 * c;
    double m1 = 0.0;
    double m2 = 0.0;
    if (disc >= 0.0) {
      const double r = std::sqrt(disc);
      m1 = std::abs((-b + r) / 2.0);
      m2 = std::abs((-b - r) / 2.0);
    } else {
      m1 = m2 = std::sqrt(c);
    }
    out.push_back(std::max(m1, m2));
    out.push_back(std::min(m1, m2));
  }
  return out;
}

bool poles_stable(const std::vector<double>& magnitudes) {
  return std::all_of(magnitudes.begin(), magnitudes.end(),
                     [](double m) { return std::isfinite(m) && m < 1.0 - kPoleMargin; });
}

std::string to_string(SlotKind kind) {
  switch (kind) {
    case SlotKind::kNominalFirst:
      return "nominal_first";
    case SlotKind::kNominalSecond:
      return "nominal_second";
    case SlotKind::kGpSecond:
      return "gp_second";
  }
  return "unknown";
}

SlotKind slot_from_string(const std::string& name) {
  if (name == "nominal_first") return SlotKind::kNominalFirst;
  if (name == "nominal_second") return SlotKind::kNominalSecond;
  if (name == "gp_second") return SlotKind::kGpSecond;
  throw ConfigurationError("unknown controller slot '" + name + "'");
}

InverseModelSlot InverseModelSlot::gp_second(std::shared_ptr<const gp::GpModel> model) {
  InverseModelSlot slot{SlotKind::kGpSecond, std::move(model)};
  slot.validate();
  return slot;
}

void InverseModelSlot::validate() const {
  if (kind != SlotKind::kGpSecond) return;
  if (!model || !model->fitted()) throw ConfigurationError("gp_second slot requires a trained GP");
  if (model->input_dim() != gp::kInputDim || model->output_dim() != gp::kOutputDim) {
    throw ConfigurationError("gp_second slot requires a 6-input, 2-output GP");
  }
}

gp::Input gp_query(const Eigen::Vector2d& desired_next, const PoseDelta& current_delta,
                   double phi) {
  gp::Input w;
  w << desired_next(0), desired_next(1), current_delta.dx, current_delta.dy, current_delta.dphi,
      wrap_angle(phi);
  return w;
}

FirstOrderController::FirstOrderController(const Gains& gains, const VehicleParams& params)
    : gains_(gains), params_(params) {
  require_params(params_);
  require_stable(gains_, 1);
}

Eigen::Vector2d FirstOrderController::control_input(const ReferencePoint& ref,
                                                    const OffsetPose& measured) const {
  return ref.delta() + gains_.kp.cwiseProduct(ref.position() - measured.position());
}

TrackCommand FirstOrderController::step(const ReferencePoint& ref,
                                        const OffsetPose& measured) const {
  return inverse_first_order(control_input(ref, measured), measured.phi, params_);
}

SecondOrderController::SecondOrderController(const Gains& gains, const VehicleParams& params,
                                             InverseModelSlot slot)
    : gains_(gains), params_(params), slot_(std::move(slot)) {
  require_params(params_);
  require_stable(gains_, 2);
  if (slot_.kind == SlotKind::kNominalFirst) {
    throw ConfigurationError("second-order controller needs a second-order inverse model");
  }
  slot_.validate();
}

Eigen::Vector2d SecondOrderController::control_input(const ReferencePoint& ref,
                                                     const OffsetPose& measured,
                                                     const PoseDelta& measured_delta) const {
  return ref.next_delta() + gains_.kd.cwiseProduct(ref.delta() - measured_delta.position()) +
         gains_.kp.cwiseProduct(ref.position() - measured.position());
}

TrackCommand SecondOrderController::step(const ReferencePoint& ref, const OffsetPose& measured,
                                         const PoseDelta& measured_delta) const {
  const Eigen::Vector2d u = control_input(ref, measured, measured_delta);
  if (slot_.kind == SlotKind::kGpSecond) {
    return TrackCommand::from(slot_.model->predict_mean(gp_query(u, measured_delta, measured.phi)));
  }
  return inverse_second_order(u, measured_delta, measured.phi, params_);
}

}  // namespace trackgp
