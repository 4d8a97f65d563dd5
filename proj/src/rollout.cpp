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
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "trackgp/sim.hpp"

namespace trackgp {
namespace {

// Ground-truth vehicle. The nominal plant integrates the offset point with
// the offset model exactly; the slip plant integrates the centre on the
// tilted plane and derives the offset point from it.
class Plant {
 public:
  Plant(const PlantConfig& config, const VehicleParams& params, const Pose2& start,
        std::uint64_t seed)
      : config_(config), params_(params), centre_(start), offset_(offset_point(start, params)) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(config.world.seed),
                      static_cast<std::uint32_t>(config.world.seed >> 32)};
    rng_.seed(seq);
  }

  const Pose2& centre() const { return centre_; }
  const OffsetPose& offset() const { return offset_; }

  struct Motion {
    PoseDelta offset_delta;
    PoseDelta centre_delta;
    TrackCommand realized;
    SlipState slip;
  };

  /// Displacement over [t, t+1] for actual track velocities `v`.
  Motion motion(const TrackCommand& v) {
    Motion m;
    if (config_.kind == PlantKind::kNominal) {
      m.offset_delta = forward_first_order(offset_.phi, v, params_);
      m.realized = v;
      const OffsetPose next{offset_.x_b + m.offset_delta.dx, offset_.y_b + m.offset_delta.dy,
                            offset_.phi + m.offset_delta.dphi};
      const Pose2 c = centre_from_offset(next, params_);
      m.centre_delta = {c.x - centre_.x, c.y - centre_.y, m.offset_delta.dphi};
      return m;
    }
    m.slip = slip_ratios(v, config_.world, params_.tread_d);
    m.realized = realized_tracks(v, m.slip);
    m.centre_delta = slip_forward(centre_, v, m.slip, config_.world, params_);
    if (config_.world.noise_sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, config_.world.noise_sigma);
      m.centre_delta.dx += noise(rng_);
      m.centre_delta.dy += noise(rng_);
      m.centre_delta.dphi += noise(rng_);
    }
    const Pose2 next{centre_.x + m.centre_delta.dx, centre_.y + m.centre_delta.dy,
                     centre_.phi + m.centre_delta.dphi};
    const OffsetPose b = offset_point(next, params_);
    m.offset_delta = {b.x_b - offset_.x_b, b.y_b - offset_.y_b, m.centre_delta.dphi};
    return m;
  }

  void advance(const Motion& m) {
    if (config_.kind == PlantKind::kNominal) {
      offset_.x_b += m.offset_delta.dx;
      offset_.y_b += m.offset_delta.dy;
      offset_.phi = wrap_angle(offset_.phi + m.offset_delta.dphi);
      centre_ = centre_from_offset(offset_, params_);
    } else {
      centre_.x += m.centre_delta.dx;
      centre_.y += m.centre_delta.dy;
      centre_.phi = wrap_angle(centre_.phi + m.centre_delta.dphi);
      offset_ = offset_point(centre_, params_);
    }
  }

 private:
  PlantConfig config_;
  VehicleParams params_;
  Pose2 centre_;
  OffsetPose offset_;
  std::mt19937_64 rng_;
};

bool finite(const Pose2& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.phi);
}

}  // namespace

std::string to_string(PlantKind kind) {
  return kind == PlantKind::kNominal ? "nominal" : "slip";
}

RolloutLog rollout(const ReferenceTrajectory& traj, const ControllerConfig& controller,
                   const PlantConfig& plant_config, const VehicleParams& params,
                   std::uint64_t seed, const RolloutOptions& options) {
  if (traj.steps() < 1) throw std::invalid_argument("reference trajectory has no steps");
  if (plant_config.kind == PlantKind::kSlip) plant_config.world.validate();

  std::optional<FirstOrderController> first;
  std::optional<SecondOrderController> second;
  if (controller.slot.order() == 1) {
    first.emplace(controller.gains, params);
  } else {
    second.emplace(controller.gains, params, controller.slot);
  }

  std::mt19937_64 init_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Eigen::Vector2d e0 = options.initial_offset;
  if (options.offset_sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, options.offset_sigma);
    e0.x() += normal(init_rng);
    e0.y() += normal(init_rng);
  }
  if (!(options.excitation_sigma >= 0.0)) {
    throw std::invalid_argument("excitation_sigma must be >= 0");
  }
  std::mt19937_64 dither_rng(seed ^ 0xd1b54a32d192ed03ULL);
  std::normal_distribution<double> dither(0.0, options.excitation_sigma);

  const ReferencePoint first_ref = traj.point(0);
  const double phi0 = traj.initial_heading();
  const OffsetPose start_offset{first_ref.x_d + e0.x(), first_ref.y_d + e0.y(), phi0};
  Plant plant(plant_config, params, centre_from_offset(start_offset, params), seed);

  const double lag = plant_config.actuator_lag ? params.alpha_filter : 0.0;
  TrackCommand velocity;
  if (options.initial_velocity == InitialVelocity::kMatched) {
    velocity = saturate(inverse_first_order(first_ref.delta(), phi0, params), params.v_max);
  }

  const std::size_t steps =
      options.max_steps == 0 ? traj.steps() : std::min(options.max_steps, traj.steps());
  RolloutLog log;
  log.steps.reserve(steps);
  std::optional<Plant::Motion> pending;
  if (plant_config.actuator_lag) pending = plant.motion(velocity);

  for (std::size_t t = 0; t < steps; ++t) {
    const ReferencePoint ref = traj.point(t);
    RolloutStep row;
    row.t = t;
    row.ref = ref;
    row.pose = plant.centre();
    row.offset = plant.offset();

    TrackCommand cmd;
    Plant::Motion motion;
    if (plant_config.actuator_lag) {
      // dq_B(t) is already fixed by v(t); the command shapes v(t+1).
      motion = *pending;
      cmd = first ? first->step(ref, row.offset) : second->step(ref, row.offset, motion.offset_delta);
    } else {
      cmd = first ? first->step(ref, row.offset) : second->step(ref, row.offset, PoseDelta{});
    }
    if (options.excitation_sigma > 0.0) {
      cmd.v_left += dither(dither_rng);
      cmd.v_right += dither(dither_rng);
    }
    const TrackCommand applied = saturate(cmd, params.v_max);
    if (applied.v_left != cmd.v_left || applied.v_right != cmd.v_right) ++log.saturated_steps;
    if (!plant_config.actuator_lag) motion = plant.motion(applied);

    row.command = applied;
    row.delta = motion.offset_delta;
    row.realized = motion.realized;
    row.slip = motion.slip;
    row.error = (ref.position() - row.offset.position()).norm();
    log.steps.push_back(row);

    plant.advance(motion);
    if (!finite(plant.centre()) || !std::isfinite(applied.v_left) ||
        !std::isfinite(applied.v_right)) {
      throw std::runtime_error("rollout diverged to a non-finite state at step " +
                               std::to_string(t));
    }
    if (plant_config.actuator_lag) {
      velocity = TrackCommand::from(lag * velocity.vector() + (1.0 - lag) * applied.vector());
      pending = plant.motion(velocity);
    }
  }
  return log;
}

std::vector<gp::Sample> extract_dataset(const RolloutLog& log) {
  const auto& s = log.steps;
  if (s.size() < 3) throw std::invalid_argument("rollout log needs at least 3 steps");
  std::vector<gp::Sample> out;
  out.reserve(s.size() - 2);
  for (std::size_t t = 1; t + 1 < s.size(); ++t) {
    gp::Sample sample;
    sample.w = gp_query(s[t + 1].delta.position(), s[t].delta, s[t].offset.phi);
    sample.z = s[t].command.vector();
    out.push_back(sample);
  }
  return out;
}

DatasetSplit split_dataset(const std::vector<gp::Sample>& samples, double train_fraction,
                           std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * samples.size()));
  DatasetSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? split.train : split.test).push_back(samples[order[i]]);
  }
  return split;
}

Metrics cartesian_error(const RolloutLog& log) {
  if (log.steps.empty()) throw std::invalid_argument("empty rollout log");
  Metrics m;
  m.per_step.reserve(log.steps.size());
  for (const RolloutStep& s : log.steps) {
    m.per_step.push_back((s.ref.position() - s.offset.position()).norm());
  }
  m.mean = std::accumulate(m.per_step.begin(), m.per_step.end(), 0.0) /
           static_cast<double>(m.per_step.size());
  m.max = *std::max_element(m.per_step.begin(), m.per_step.end());
  return m;
}

}  // namespace trackgp
