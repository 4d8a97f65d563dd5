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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "test_util.hpp"
#include "trackgp/harness.hpp"

namespace trackgp {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Eigen::Vector2d error_at(const RolloutStep& s) { return s.ref.position() - s.offset.position(); }

Gains default_gains() {
  Gains g;
  g.kp.setConstant(0.02);
  g.kd.setConstant(0.05);
  return g;
}

Outcome consistency() {
  const auto start = Clock::now();
  Outcome out;
  testing::Gen gen(1001);
  const VehicleParams p;
  double worst_first = 0.0;
  double worst_second = 0.0;
  double worst_inverse = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double phi = gen.angle();
    const Eigen::Vector2d desired(gen.uniform(-0.1, 0.1), gen.uniform(-0.1, 0.1));
    const PoseDelta d1 = forward_first_order(phi, inverse_first_order(desired, phi, p), p);
    worst_first = std::max(worst_first, (Eigen::Vector2d(d1.dx, d1.dy) - desired).lpNorm<Eigen::Infinity>());

    const PoseDelta current{gen.uniform(-0.1, 0.1), gen.uniform(-0.1, 0.1), gen.uniform(-0.2, 0.2)};
    const TrackCommand v = inverse_second_order(desired, current, phi, p);
    const PoseDelta d2 = forward_second_order(current, phi, v, p);
    worst_second = std::max(worst_second, (Eigen::Vector2d(d2.dx, d2.dy) - desired).lpNorm<Eigen::Infinity>());

    const Eigen::Matrix2d product =
        (offset_inverse_matrix(phi, p) * offset_model_matrix(phi, p)).topRows<2>();
    worst_inverse = std::max(worst_inverse, (product - Eigen::Matrix2d::Identity()).lpNorm<Eigen::Infinity>());
  }
  const double elapsed = seconds_since(start);
  out.require(worst_first < 1e-10, "first-order residual " + fmt("%.3g", worst_first));
  out.require(worst_second < 1e-10, "second-order residual " + fmt("%.3g", worst_second));
  out.require(worst_inverse < 1e-12, "left inverse residual " + fmt("%.3g", worst_inverse));
  out.require(elapsed < 1.0, "runtime " + fmt("%.2f s", elapsed));
  out.detail = out.pass ? "max residuals " + fmt("%.2g", worst_first) + ", " + fmt("%.2g", worst_second) +
                              ", left inverse " + fmt("%.2g", worst_inverse)
                        : out.detail;
  return out;
}

Outcome error_dynamics() {
  const auto start = Clock::now();
  Outcome out;
  const VehicleParams p;
  const Gains g = default_gains();

  // First order, lag-free plant: e_{t+1} = (1 - kP) e_t.
  PlantConfig no_lag;
  no_lag.actuator_lag = false;
  RolloutOptions opt;
  opt.initial_offset = {-0.4, 0.3};
  const RolloutLog first = rollout(make_figure8(2.0, 800, p.sample_time), {g, InverseModelSlot::nominal_first()},
                                   no_lag, p, 1, opt);
  double worst_first = 0.0;
  for (std::size_t t = 0; t + 1 < 500; ++t) {
    const Eigen::Vector2d predicted = 0.98 * error_at(first.steps[t]);
    worst_first = std::max(worst_first, (error_at(first.steps[t + 1]) - predicted).lpNorm<Eigen::Infinity>());
  }

  // Second order, lagged plant.
  const RolloutLog second = rollout(make_figure8(2.0, 800, p.sample_time),
                                    {g, InverseModelSlot::nominal_second()}, PlantConfig{}, p, 1, opt);
  double worst_second = 0.0;
  for (std::size_t t = 0; t + 2 < 500; ++t) {
    const Eigen::Vector2d residual = error_at(second.steps[t + 2]) + (0.05 - 1.0) * error_at(second.steps[t + 1]) +
                                     (0.02 - 0.05) * error_at(second.steps[t]);
    worst_second = std::max(worst_second, residual.lpNorm<Eigen::Infinity>());
  }
  const double elapsed = seconds_since(start);
  out.require(first.steps.size() >= 500 && second.steps.size() >= 500, "short rollout");
  out.require(worst_first < 1e-9, "first-order residual " + fmt("%.3g", worst_first));
  out.require(worst_second < 1e-9, "second-order residual " + fmt("%.3g", worst_second));
  out.require(elapsed < 1.0, "runtime " + fmt("%.2f s", elapsed));
  if (out.pass) {
    out.detail = "max recurrence residuals " + fmt("%.2g", worst_first) + ", " + fmt("%.2g", worst_second);
  }
  return out;
}

Outcome pole_gate() {
  Outcome out;
  const std::vector<double> m = validate_gains(default_gains(), 2);
  // Quadratic z^2 + (kD - 1) z + (kP - kD).
  const std::complex<double> disc = std::sqrt(std::complex<double>(0.95 * 0.95 + 4.0 * 0.03));
  const double l1 = std::abs((0.95 + disc) / 2.0);
  const double l2 = std::abs((0.95 - disc) / 2.0);
  out.require(m.size() == 4, "expected four magnitudes");
  if (m.size() == 4) {
    out.require(std::abs(m[0] - l1) < 1e-12 && std::abs(m[1] - l2) < 1e-12, "magnitudes differ from roots");
    out.require(std::abs(m[0] - 0.9806) < 5e-5 && std::abs(m[1] - 0.0306) < 5e-5, "magnitudes not ~{0.9806, 0.0306}");
  }
  out.require(poles_stable(m), "default gains rejected");

  Gains marginal;  // kP = kD = 0 puts a pole on the unit circle
  marginal.kp.setZero();
  marginal.kd.setZero();
  out.require(!poles_stable(validate_gains(marginal, 2)), "marginal gains accepted");
  Gains fast = default_gains();
  fast.kp.x() = 1.2;
  out.require(!poles_stable(validate_gains(fast, 2)), "unstable x gains accepted");
  bool threw = false;
  try {
    SecondOrderController(fast, VehicleParams{}, InverseModelSlot::nominal_second());
  } catch (const ConfigurationError&) {
    threw = true;
  }
  out.require(threw, "controller accepted unstable gains");
  if (out.pass) out.detail = "magnitudes " + fmt("%.6f", m[0]) + ", " + fmt("%.6f", m[1]);
  return out;
}

double se(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, const Eigen::VectorXd& ls, double sf2) {
  return sf2 * std::exp(-0.5 * ((a - b).transpose().array() / ls.array()).square().sum());
}

Outcome gp_correctness() {
  Outcome out;
  testing::Gen gen(4004);
  double worst_grad = 0.0;
  for (int n : {5, 20, 50}) {
    const Eigen::MatrixXd x = gen.matrix(n, 6, -1.5, 1.5);
    const Eigen::VectorXd z = gen.matrix(n, 1, -1, 1);
    Eigen::VectorXd theta(8);
    for (int i = 0; i < 6; ++i) theta(i) = gen.uniform(-0.5, 1.0);
    theta(6) = gen.uniform(-1.0, 1.0);
    theta(7) = gen.uniform(-4.0, -1.0);
    const gp::LikelihoodResult r = gp::log_marginal_likelihood(theta, x, z, true);
    for (int i = 0; i < 8; ++i) {
      const double h = 1e-5;
      Eigen::VectorXd tp = theta;
      Eigen::VectorXd tm = theta;
      tp(i) += h;
      tm(i) -= h;
      const double fd = (gp::log_marginal_likelihood(tp, x, z, false).value -
                         gp::log_marginal_likelihood(tm, x, z, false).value) / (2.0 * h);
      worst_grad = std::max(worst_grad, std::abs(fd - r.gradient(i)) / std::max(std::abs(fd), 1e-3));
    }
  }
  out.require(worst_grad < 1e-4, "gradient relative error " + fmt("%.3g", worst_grad));

  const int n = 12;
  const Eigen::MatrixXd x = gen.matrix(n, 6, -1, 1);
  const Eigen::MatrixXd z = gen.matrix(n, 2, -1, 1);
  std::vector<gp::OutputHyperparameters> hyper(2);
  for (auto& h : hyper) {
    h.kernel.log_lengthscales = gen.matrix(6, 1, -0.3, 0.5);
    h.kernel.log_signal_variance = gen.uniform(-0.5, 0.5);
    h.log_noise_variance = std::log(0.03);
  }
  const gp::GpModel model = gp::GpModel::condition(x, z, hyper, false);
  double worst_pred = 0.0;
  for (int q = 0; q < 20; ++q) {
    const Eigen::VectorXd w = gen.matrix(6, 1, -1.5, 1.5);
    const gp::Prediction p = model.predict(w);
    for (int j = 0; j < 2; ++j) {
      const Eigen::VectorXd ls = hyper[j].kernel.log_lengthscales.array().exp();
      const double sf2 = std::exp(hyper[j].kernel.log_signal_variance);
      Eigen::MatrixXd k(n, n);
      Eigen::VectorXd ks(n);
      for (int a = 0; a < n; ++a) {
        ks(a) = se(x.row(a), w.transpose(), ls, sf2);
        for (int b = 0; b < n; ++b) k(a, b) = se(x.row(a), x.row(b), ls, sf2);
      }
      k.diagonal().array() += 0.03;
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
      worst_pred = std::max(worst_pred, std::abs(p.mean(j) - ks.dot(lu.solve(z.col(j)))));
      worst_pred = std::max(worst_pred, std::abs(p.variance(j) - (sf2 - ks.dot(lu.solve(ks)) + 0.03)));
    }
  }
  out.require(worst_pred < 1e-10, "dense-solve gap " + fmt("%.3g", worst_pred));

  gp::OptimizerConfig oc;
  oc.seed = 3;
  const gp::GpModel fitted = gp::GpModel::fit(gen.matrix(40, 6, -1, 1), gen.matrix(40, 2, -1, 1), oc);
  const gp::GpModel loaded = gp::GpModel::from_json(fitted.to_json());
  double worst_json = 0.0;
  for (int q = 0; q < 50; ++q) {
    const Eigen::VectorXd w = gen.matrix(6, 1, -2, 2);
    const gp::Prediction a = fitted.predict(w);
    const gp::Prediction b = loaded.predict(w);
    worst_json = std::max({worst_json, (a.mean - b.mean).lpNorm<Eigen::Infinity>(),
                           (a.variance - b.variance).lpNorm<Eigen::Infinity>()});
  }
  out.require(worst_json <= 1e-12, "JSON round trip gap " + fmt("%.3g", worst_json));
  if (out.pass) {
    out.detail = "gradient rel " + fmt("%.2g", worst_grad) + ", dense gap " + fmt("%.2g", worst_pred) +
                 ", JSON gap " + fmt("%.2g", worst_json);
  }
  return out;
}

struct HeldOut {
  double mean_error = 0.0;
  double command_magnitude = 0.0;
  std::size_t samples = 0;
  double fit_seconds = 0.0;
};

// Figure-8 dataset (three laps, 2000 samples) split 80/20 and fitted with
// the default optimizer settings.
HeldOut figure8_held_out(const PlantConfig& plant) {
  const VehicleParams p;
  RolloutOptions opt;
  opt.max_steps = 2002;
  opt.excitation_sigma = 0.05;
  const RolloutLog log = rollout(make_figure8(2.0, 800, p.sample_time, 3),
                                 {default_gains(), InverseModelSlot::nominal_second()}, plant, p, 7, opt);
  const std::vector<gp::Sample> data = extract_dataset(log);
  const DatasetSplit split = split_dataset(data, 0.8, 1);
  gp::OptimizerConfig oc;
  oc.seed = 1;
  const auto start = Clock::now();
  const gp::GpModel model = gp::GpModel::fit(split.train, oc);
  HeldOut h;
  h.fit_seconds = seconds_since(start);
  h.samples = data.size();
  h.mean_error = gp::held_out_error(model, split.test).mean;
  for (const auto& s : split.test) h.command_magnitude += s.z.norm();
  h.command_magnitude /= static_cast<double>(split.test.size());
  return h;
}

PlantConfig tilted_plant() {
  PlantConfig plant;
  plant.kind = PlantKind::kSlip;
  plant.world.slope_alpha = 35.0 * std::numbers::pi / 180.0;
  plant.world.friction_mu = 0.6;
  plant.world.base_slip = 0.05;
  return plant;
}

HeldOut flat_result;

Outcome gp_recovery() {
  const auto start = Clock::now();
  Outcome out;
  flat_result = figure8_held_out(PlantConfig{});
  const double elapsed = seconds_since(start);
  const double rel = flat_result.mean_error / flat_result.command_magnitude;
  out.require(flat_result.samples == 2000, "dataset has " + std::to_string(flat_result.samples) + " samples");
  out.require(rel < 1e-3, "relative held-out error " + fmt("%.3g", rel));
  out.require(elapsed < 120.0, "runtime " + fmt("%.1f s", elapsed));
  if (out.pass) {
    out.detail = "held-out " + fmt("%.3g", flat_result.mean_error) + " m/s, relative " + fmt("%.3g", rel) +
                 ", " + fmt("%.1f s", elapsed);
  }
  return out;
}

Outcome ordering() {
  Outcome out;
  const HeldOut tilted = figure8_held_out(tilted_plant());
  out.require(tilted.mean_error > flat_result.mean_error,
              "tilted " + fmt("%.3g", tilted.mean_error) + " <= flat " + fmt("%.3g", flat_result.mean_error));
  if (out.pass) {
    out.detail = "flat " + fmt("%.3g", flat_result.mean_error) + " < tilted " + fmt("%.3g", tilted.mean_error) +
                 " m/s";
  }
  return out;
}

Outcome hybrid_beats_nominal() {
  using namespace harness;
  const auto start = Clock::now();
  Outcome out;
  const fs::path dir = fs::temp_directory_path() / ("trackgp_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  ExperimentConfig config = parse_config(R"({
    "world": {"plant": "slip", "alpha_deg": 35, "mu": 0.6, "base_slip": 0.05},
    "rollout": {"offset_sigma": 0.05},
    "seeds": [1, 2, 3]})");
  CommandOptions opt;
  opt.out_dir = dir;
  cmd_collect(config, opt);
  opt.dataset = dir / "train.csv";
  opt.test = dir / "test.csv";
  cmd_train(config, opt);
  opt.model = dir / "model.json";
  const nlohmann::json report = cmd_evaluate(config, opt);
  fs::remove_all(dir);

  std::string summary;
  for (const auto& row : report["trajectories"]) {
    const std::string name = row["name"];
    for (const auto& s : row["seeds"]) {
      const double nominal = s["nominal"]["mean_error"];
      const double learned = s["gp"]["mean_error"];
      const std::string tag = name + " seed " + std::to_string(s["seed"].get<int>());
      out.require(learned <= nominal, tag + ": gp " + fmt("%.4g", learned) + " > nominal " + fmt("%.4g", nominal));
      out.require(nominal >= 0.01 && nominal <= 1.0, tag + ": nominal " + fmt("%.4g", nominal) + " outside 0.01-1 m");
    }
    summary += (summary.empty() ? "" : ", ") + name + " " +
               fmt("%.4f", row["gp"]["mean_error"].get<double>()) + " vs " +
               fmt("%.4f", row["nominal"]["mean_error"].get<double>());
  }
  out.require(report["trajectories"].size() == 3, "expected three references");
  const double elapsed = seconds_since(start);
  out.require(elapsed < 600.0, "runtime " + fmt("%.0f s", elapsed));
  if (out.pass) out.detail = "gp vs nominal mean error (m): " + summary + ", " + fmt("%.0f s", elapsed);
  return out;
}

Outcome appendix_geometry() {
  Outcome out;
  testing::Gen gen(8008);
  double worst_plane = 0.0;
  double worst_ratio = 0.0;
  double worst_unicycle = 0.0;
  for (int i = 0; i < 1000; ++i) {
    SlipPlaneWorld world;
    world.slope_alpha = gen.uniform(-1.3, 1.3);
    world.height_db = gen.uniform(0.0, 0.5);
    const Pose2 pose{gen.uniform(-5, 5), gen.uniform(-5, 5), gen.angle()};
    worst_plane = std::max(worst_plane,
                           plane_constraint_residuals(lift_pose(pose, world), world).lpNorm<Eigen::Infinity>());

    world.base_slip = gen.uniform(0.01, 0.2);
    world.slip_exponent_n = gen.uniform(0.5, 3.0);
    const TrackCommand cmd{gen.signed_magnitude(0.05, 2.0), gen.signed_magnitude(0.05, 2.0)};
    const SlipState s = slip_ratios(cmd, world, 0.5);
    const double expected = -std::copysign(1.0, cmd.v_left * cmd.v_right) *
                            std::pow(std::abs(cmd.v_left / cmd.v_right), world.slip_exponent_n);
    worst_ratio = std::max(worst_ratio, std::abs(s.a_right / s.a_left - expected) / std::max(1.0, std::abs(expected)));

    SlipPlaneWorld flat;
    VehicleParams unit;
    unit.chi = 1.0;
    const SlipState none = slip_ratios(cmd, flat, unit.tread_d);
    const PoseDelta got = slip_forward(pose, cmd, none, flat, unit);
    const Eigen::Vector3d want = unit.sample_time * centre_model_matrix(pose.phi, unit) *
                                 Eigen::Vector2d(cmd.v_left, cmd.v_right);
    worst_unicycle = std::max(worst_unicycle, (Eigen::Vector3d(got.dx, got.dy, got.dphi) - want).lpNorm<Eigen::Infinity>());
  }
  out.require(worst_plane < 1e-12, "plane residual " + fmt("%.3g", worst_plane));
  out.require(worst_ratio < 1e-10, "slip ratio residual " + fmt("%.3g", worst_ratio));
  out.require(worst_unicycle < 1e-12, "unicycle gap " + fmt("%.3g", worst_unicycle));
  if (out.pass) {
    out.detail = "plane " + fmt("%.2g", worst_plane) + ", ratio " + fmt("%.2g", worst_ratio) + ", unicycle " +
                 fmt("%.2g", worst_unicycle);
  }
  return out;
}

}  // namespace
}  // namespace trackgp

int main() {
  using trackgp::Outcome;
  const std::vector<std::function<Outcome()>> criteria = {
      trackgp::consistency,   trackgp::error_dynamics, trackgp::pole_gate,
      trackgp::gp_correctness, trackgp::gp_recovery,    trackgp::ordering,
      trackgp::hybrid_beats_nominal, trackgp::appendix_geometry};
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += o.pass ? 0 : 1;
    std::printf("Criterion %zu: %s  %s\n", k + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
