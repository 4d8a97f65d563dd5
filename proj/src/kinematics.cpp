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

#include "trackgp/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace trackgp {
namespace {

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument(std::string("non-finite ") + what);
  }
}

void require_finite(const TrackCommand& cmd) {
  require_finite(cmd.v_left, "v_left");
  require_finite(cmd.v_right, "v_right");
}

void require_finite(const PoseDelta& delta) {
  require_finite(delta.dx, "dx");
  require_finite(delta.dy, "dy");
  require_finite(delta.dphi, "dphi");
}

}  // namespace

double wrap_angle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double wrapped = std::remainder(angle, 2.0 * kPi);
  // remainder() yields [-pi, pi]; fold -pi onto +pi.
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

void VehicleParams::validate() const {
  if (!(tread_d > 0.0) || !std::isfinite(tread_d)) {
    throw std::invalid_argument("tread_d must be positive");
  }
  if (!(chi > 0.0 && chi <= 1.0)) {
    throw std::invalid_argument("chi must lie in (0, 1]");
  }
  if (offset_b == 0.0 || !std::isfinite(offset_b)) {
    throw std::invalid_argument("offset_b must be nonzero");
  }
  if (!(sample_time > 0.0) || !std::isfinite(sample_time)) {
    throw std::invalid_argument("sample_time must be positive");
  }
  if (!(alpha_filter >= 0.0 && alpha_filter < 1.0)) {
    throw std::invalid_argument("alpha_filter must lie in [0, 1)");
  }
  if (!(v_max > 0.0)) {
    throw std::invalid_argument("v_max must be positive");
  }
}

Matrix32 centre_model_matrix(double phi, const VehicleParams& params) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double w = params.chi / params.tread_d;
  Matrix32 g;
  g << c / 2.0, c / 2.0,
       s / 2.0, s / 2.0,
       -w, w;
  return g;
}

Matrix23 centre_inverse_matrix(double phi, const VehicleParams& params) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double h = params.tread_d / (2.0 * params.chi);
  Matrix23 g;
  g << c, s, -h,
       c, s, h;
  return g;
}

Matrix32 offset_model_matrix(double phi, const VehicleParams& params) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double w = params.chi / params.tread_d;
  const double k = w * params.offset_b;
  Matrix32 g;
  g << c / 2.0 + k * s, c / 2.0 - k * s,
       s / 2.0 - k * c, s / 2.0 + k * c,
       -w, w;
  return g;
}

Matrix23 offset_inverse_matrix(double phi, const VehicleParams& params) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double h = params.tread_d / (2.0 * params.chi * params.offset_b);
  Matrix23 g;
  g << c + h * s, s - h * c, 0.0,
       c - h * s, s + h * c, 0.0;
  return g;
}

OffsetPose offset_point(const Pose2& pose, const VehicleParams& params) {
  return {pose.x + params.offset_b * std::cos(pose.phi),
          pose.y + params.offset_b * std::sin(pose.phi), pose.phi};
}

Pose2 centre_from_offset(const OffsetPose& offset, const VehicleParams& params) {
  return {offset.x_b - params.offset_b * std::cos(offset.phi),
          offset.y_b - params.offset_b * std::sin(offset.phi), offset.phi};
}

PoseDelta forward_first_order(double phi, const TrackCommand& cmd,
                              const VehicleParams& params) {
  require_finite(phi, "phi");
  require_finite(cmd);
  const Eigen::Vector3d dq =
      params.sample_time * offset_model_matrix(phi, params) * cmd.vector();
  return {dq(0), dq(1), wrap_angle(dq(2))};
}

TrackCommand inverse_first_order(const Eigen::Vector2d& desired, double phi,
                                 const VehicleParams& params) {
  if (params.offset_b == 0.0) throw std::invalid_argument("offset_b must be nonzero");
  if (params.chi <= 0.0) throw std::invalid_argument("chi must be positive");
  require_finite(phi, "phi");
  require_finite(desired(0), "desired dx");
  require_finite(desired(1), "desired dy");
  // The third column of G+_b is zero, so the yaw increment never enters.
  const Eigen::Vector2d v =
      offset_inverse_matrix(phi, params).leftCols<2>() * desired / params.sample_time;
  return TrackCommand::from(v);
}

bool consistency_condition(const Matrix32& model, const Matrix23& inverse,
                           double tolerance) {
  if (!model.allFinite() || !inverse.allFinite()) return false;
  const Eigen::Matrix3d product = model * inverse;
  const double top_left = (product.topLeftCorner<2, 2>() - Eigen::Matrix2d::Identity())
                              .cwiseAbs()
                              .maxCoeff();
  const double top_right = product.topRightCorner<2, 1>().cwiseAbs().maxCoeff();
  return top_left <= tolerance && top_right <= tolerance;
}

PoseDelta forward_second_order(const PoseDelta& prev_delta, double phi,
                               const TrackCommand& ref_cmd,
                               const VehicleParams& params) {
  require_finite(phi, "phi");
  require_finite(prev_delta);
  require_finite(ref_cmd);
  const double ts = params.sample_time;
  const double alpha = params.alpha_filter;
  const double phi_next = phi + prev_delta.dphi;
  const Eigen::Vector2d actual =
      offset_inverse_matrix(phi, params) * prev_delta.vector() / ts;
  const Eigen::Vector2d filtered = alpha * actual + (1.0 - alpha) * ref_cmd.vector();
  const Eigen::Vector3d dq = ts * offset_model_matrix(phi_next, params) * filtered;
  return {dq(0), dq(1), wrap_angle(dq(2))};
}

TrackCommand inverse_second_order(const Eigen::Vector2d& desired_next,
                                  const PoseDelta& current_delta, double phi,
                                  const VehicleParams& params) {
  const double alpha = params.alpha_filter;
  if (!(alpha < 1.0)) throw std::invalid_argument("alpha_filter must be < 1");
  if (params.offset_b == 0.0) throw std::invalid_argument("offset_b must be nonzero");
  if (params.chi <= 0.0) throw std::invalid_argument("chi must be positive");
  require_finite(phi, "phi");
  require_finite(current_delta);
  require_finite(desired_next(0), "desired dx");
  require_finite(desired_next(1), "desired dy");
  const double ts = params.sample_time;
  const double phi_next = phi + current_delta.dphi;
  const Eigen::Vector2d target =
      offset_inverse_matrix(phi_next, params).leftCols<2>() * desired_next / ts;
  const Eigen::Vector2d actual =
      offset_inverse_matrix(phi, params) * current_delta.vector() / ts;
  return TrackCommand::from((target - alpha * actual) / (1.0 - alpha));
}

TrackCommand saturate(const TrackCommand& cmd, double v_max) {
  return {std::clamp(cmd.v_left, -v_max, v_max),
          std::clamp(cmd.v_right, -v_max, v_max)};
}

}  // namespace trackgp
