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

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "trackgp/harness.hpp"
#include "trackgp/sim.hpp"

namespace py = pybind11;
using namespace trackgp;

namespace {

// Plain-number dataset views: W is N x 6, Z is N x 2.
py::tuple dataset_arrays(const std::vector<gp::Sample>& samples) {
  return py::make_tuple(gp::stack_inputs(samples), gp::stack_targets(samples));
}

std::vector<gp::Sample> samples_from(const Eigen::MatrixXd& w, const Eigen::MatrixXd& z) {
  if (w.rows() != z.rows() || w.cols() != 6 || z.cols() != 2) {
    throw std::invalid_argument("expected W (N x 6) and Z (N x 2)");
  }
  std::vector<gp::Sample> out(static_cast<std::size_t>(w.rows()));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    out[static_cast<std::size_t>(i)].w = w.row(i).transpose();
    out[static_cast<std::size_t>(i)].z = z.row(i).transpose();
  }
  return out;
}

py::object as_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_trackgp, m) {
  m.doc() = "Tracked-vehicle kinematics, slip plant and GP inverse-model control";

  auto config_error = py::register_exception<harness::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<harness::NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<harness::ArtifactError>(m, "ArtifactError", PyExc_OSError);
  py::register_exception<ConfigurationError>(m, "ConfigurationError", PyExc_ValueError);
  py::register_exception<gp::CholeskyFailure>(m, "CholeskyFailure", PyExc_ArithmeticError);
  (void)config_error;

  // -- kinematics -----------------------------------------------------------
  py::class_<VehicleParams>(m, "VehicleParams")
      .def(py::init<>())
      .def_readwrite("tread_d", &VehicleParams::tread_d)
      .def_readwrite("chi", &VehicleParams::chi)
      .def_readwrite("offset_b", &VehicleParams::offset_b)
      .def_readwrite("sample_time", &VehicleParams::sample_time)
      .def_readwrite("alpha_filter", &VehicleParams::alpha_filter)
      .def_readwrite("v_max", &VehicleParams::v_max)
      .def("validate", &VehicleParams::validate);

  py::class_<Pose2>(m, "Pose2")
      .def(py::init([](double x, double y, double phi) { return Pose2{x, y, phi}; }),
           py::arg("x") = 0.0, py::arg("y") = 0.0, py::arg("phi") = 0.0)
      .def_readwrite("x", &Pose2::x)
      .def_readwrite("y", &Pose2::y)
      .def_readwrite("phi", &Pose2::phi);

  py::class_<PoseDelta>(m, "PoseDelta")
      .def(py::init([](double dx, double dy, double dphi) { return PoseDelta{dx, dy, dphi}; }),
           py::arg("dx") = 0.0, py::arg("dy") = 0.0, py::arg("dphi") = 0.0)
      .def_readwrite("dx", &PoseDelta::dx)
      .def_readwrite("dy", &PoseDelta::dy)
      .def_readwrite("dphi", &PoseDelta::dphi)
      .def("vector", &PoseDelta::vector);

  py::class_<TrackCommand>(m, "TrackCommand")
      .def(py::init([](double l, double r) { return TrackCommand{l, r}; }),
           py::arg("v_left") = 0.0, py::arg("v_right") = 0.0)
      .def_readwrite("v_left", &TrackCommand::v_left)
      .def_readwrite("v_right", &TrackCommand::v_right)
      .def("vector", &TrackCommand::vector);

  m.def("wrap_angle", &wrap_angle);
  m.def("offset_model_matrix", &offset_model_matrix, py::arg("phi"), py::arg("params") = VehicleParams{});
  m.def("offset_inverse_matrix", &offset_inverse_matrix, py::arg("phi"), py::arg("params") = VehicleParams{});
  m.def("forward_first_order", &forward_first_order, py::arg("phi"), py::arg("cmd"),
        py::arg("params") = VehicleParams{});
  m.def("inverse_first_order", &inverse_first_order, py::arg("desired"), py::arg("phi"),
        py::arg("params") = VehicleParams{});
  m.def("forward_second_order", &forward_second_order, py::arg("prev_delta"), py::arg("phi"),
        py::arg("ref_cmd"), py::arg("params") = VehicleParams{});
  m.def("inverse_second_order", &inverse_second_order, py::arg("desired_next"), py::arg("current_delta"),
        py::arg("phi"), py::arg("params") = VehicleParams{});

  // -- terrain3d ------------------------------------------------------------
  py::class_<SlipPlaneWorld>(m, "SlipPlaneWorld")
      .def(py::init<>())
      .def_readwrite("slope_alpha", &SlipPlaneWorld::slope_alpha)
      .def_readwrite("height_db", &SlipPlaneWorld::height_db)
      .def_readwrite("slip_exponent_n", &SlipPlaneWorld::slip_exponent_n)
      .def_readwrite("base_slip", &SlipPlaneWorld::base_slip)
      .def_readwrite("friction_mu", &SlipPlaneWorld::friction_mu)
      .def_readwrite("beta0", &SlipPlaneWorld::beta0)
      .def_readwrite("omega_ref", &SlipPlaneWorld::omega_ref)
      .def_readwrite("noise_sigma", &SlipPlaneWorld::noise_sigma)
      .def_readwrite("seed", &SlipPlaneWorld::seed)
      .def("slip_magnitude", &SlipPlaneWorld::slip_magnitude)
      .def("validate", &SlipPlaneWorld::validate);

  py::class_<SlipState>(m, "SlipState")
      .def(py::init<>())
      .def_readwrite("a_left", &SlipState::a_left)
      .def_readwrite("a_right", &SlipState::a_right)
      .def_readwrite("beta", &SlipState::beta);

  m.def("lift_pose", [](const Pose2& pose, const SlipPlaneWorld& world) {
    const Pose3 p = lift_pose(pose, world);
    return py::dict(py::arg("x") = p.x, py::arg("y") = p.y, py::arg("z") = p.z,
                    py::arg("yaw") = p.yaw_phi, py::arg("pitch") = p.pitch_theta, py::arg("roll") = p.roll_psi);
  });
  m.def("plane_constraint_residuals", [](const Pose2& pose, const SlipPlaneWorld& world) {
    return Eigen::Vector3d(plane_constraint_residuals(lift_pose(pose, world), world));
  }, "Residuals of the lifted pose against the plane constraints.");
  m.def("slip_ratios", &slip_ratios, py::arg("cmd"), py::arg("world"), py::arg("tread_d") = 0.5);
  m.def("slip_forward", &slip_forward, py::arg("pose"), py::arg("cmd"), py::arg("slip"), py::arg("world"),
        py::arg("params") = VehicleParams{});

  // -- control --------------------------------------------------------------
  m.def("validate_gains",
        [](const Eigen::Vector2d& kp, const Eigen::Vector2d& kd, int order) {
          return validate_gains(Gains{kp, kd}, order);
        },
        py::arg("kp") = Eigen::Vector2d::Constant(0.02), py::arg("kd") = Eigen::Vector2d::Constant(0.05),
        py::arg("order") = 2, "Closed-loop pole magnitudes, per axis.");
  m.def("poles_stable", &poles_stable);

  // -- gp -------------------------------------------------------------------
  py::class_<gp::GpModel, std::shared_ptr<gp::GpModel>>(m, "GpModel")
      .def_static("fit",
                  [](const Eigen::MatrixXd& w, const Eigen::MatrixXd& z, std::uint64_t seed, int restarts,
                     int max_iterations, std::size_t max_opt_points, bool standardize) {
                    gp::OptimizerConfig cfg;
                    cfg.seed = seed;
                    cfg.restarts = restarts;
                    cfg.max_iterations = max_iterations;
                    cfg.max_opt_points = max_opt_points;
                    cfg.standardize = standardize;
                    py::gil_scoped_release release;
                    return std::make_shared<gp::GpModel>(gp::GpModel::fit(w, z, cfg));
                  },
                  py::arg("inputs"), py::arg("targets"), py::arg("seed") = 0, py::arg("restarts") = 3,
                  py::arg("max_iterations") = 200, py::arg("max_opt_points") = 500, py::arg("standardize") = true)
      .def_static("from_json",
                  [](const std::string& text) { return std::make_shared<gp::GpModel>(gp::GpModel::from_json(text)); })
      .def("to_json", &gp::GpModel::to_json)
      .def("predict",
           [](const gp::GpModel& model, const Eigen::VectorXd& w) {
             const gp::Prediction p = model.predict(w);
             return py::make_tuple(p.mean, p.variance);
           },
           "Mean and predictive variance (noise included) for one input.")
      .def("predict_mean", &gp::GpModel::predict_mean_batch, "Row-wise means for an N x D input matrix.")
      .def("log_hyperparameters", [](const gp::GpModel& model, int j) { return model.hyperparameters(j).pack(); })
      .def("log_likelihood", [](const gp::GpModel& model, int j) { return model.report(j).log_likelihood; })
      .def_property_readonly("input_dim", &gp::GpModel::input_dim)
      .def_property_readonly("output_dim", &gp::GpModel::output_dim)
      .def_property_readonly("num_points", &gp::GpModel::num_points);
  m.def("held_out_error", [](const gp::GpModel& model, const Eigen::MatrixXd& w, const Eigen::MatrixXd& z) {
    return gp::held_out_error(model, samples_from(w, z)).mean;
  });

  // -- sim ------------------------------------------------------------------
  py::enum_<TrajectoryKind>(m, "TrajectoryKind")
      .value("figure8", TrajectoryKind::kFigure8)
      .value("circle", TrajectoryKind::kCircle)
      .value("waypoints", TrajectoryKind::kWaypoints);

  py::class_<ReferenceTrajectory>(m, "ReferenceTrajectory")
      .def_readonly("kind", &ReferenceTrajectory::kind)
      .def_readonly("sample_time", &ReferenceTrajectory::sample_time)
      .def_property_readonly("positions",
                             [](const ReferenceTrajectory& t) {
                               Eigen::MatrixXd out(static_cast<Eigen::Index>(t.positions.size()), 2);
                               for (std::size_t i = 0; i < t.positions.size(); ++i) {
                                 out.row(static_cast<Eigen::Index>(i)) = t.positions[i].transpose();
                               }
                               return out;
                             })
      .def("steps", &ReferenceTrajectory::steps);

  m.def("make_figure8", &make_figure8, py::arg("amplitude") = 2.0, py::arg("period_steps") = 800,
        py::arg("sample_time") = 0.05, py::arg("laps") = 1);
  m.def("make_circle", &make_circle, py::arg("radius") = 1.5, py::arg("period_steps") = 800,
        py::arg("sample_time") = 0.05, py::arg("laps") = 1);
  m.def("make_waypoint_path",
        [](const Eigen::MatrixXd& points, double cruise_speed, double sample_time, double accel) {
          std::vector<Eigen::Vector2d> wp;
          for (Eigen::Index i = 0; i < points.rows(); ++i) wp.emplace_back(points(i, 0), points(i, 1));
          return make_waypoint_path(wp, cruise_speed, sample_time, accel);
        },
        py::arg("waypoints"), py::arg("cruise_speed") = 0.3, py::arg("sample_time") = 0.05,
        py::arg("accel") = 0.25);

  py::class_<RolloutLog>(m, "RolloutLog")
      .def("__len__", [](const RolloutLog& log) { return log.steps.size(); })
      .def_readonly("saturated_steps", &RolloutLog::saturated_steps)
      .def("errors", [](const RolloutLog& log) { return cartesian_error(log).per_step; })
      .def("mean_error", [](const RolloutLog& log) { return cartesian_error(log).mean; })
      .def("max_error", [](const RolloutLog& log) { return cartesian_error(log).max; })
      .def("dataset", [](const RolloutLog& log) { return dataset_arrays(extract_dataset(log)); },
           "(W, Z) arrays of the inverse-model samples.")
      .def("to_csv", [](const RolloutLog& log) {
        std::ostringstream os;
        write_log_csv(os, log);
        return os.str();
      });

  m.def("rollout",
        [](const ReferenceTrajectory& traj, const std::string& slot, std::shared_ptr<gp::GpModel> model,
           const std::string& plant, const SlipPlaneWorld& world, const VehicleParams& params,
           const Eigen::Vector2d& kp, const Eigen::Vector2d& kd, std::uint64_t seed, double offset_sigma,
           double excitation_sigma, bool actuator_lag) {
          ControllerConfig controller{Gains{kp, kd}, InverseModelSlot{slot_from_string(slot), nullptr}};
          if (controller.slot.kind == SlotKind::kGpSecond) controller.slot = InverseModelSlot::gp_second(model);
          PlantConfig pc;
          if (plant == "slip") {
            pc.kind = PlantKind::kSlip;
          } else if (plant != "nominal") {
            throw std::invalid_argument("plant must be nominal or slip");
          }
          pc.world = world;
          pc.actuator_lag = actuator_lag;
          RolloutOptions opt;
          opt.offset_sigma = offset_sigma;
          opt.excitation_sigma = excitation_sigma;
          py::gil_scoped_release release;
          return rollout(traj, controller, pc, params, seed, opt);
        },
        py::arg("trajectory"), py::arg("slot") = "nominal_second", py::arg("model") = nullptr,
        py::arg("plant") = "nominal", py::arg("world") = SlipPlaneWorld{}, py::arg("params") = VehicleParams{},
        py::arg("kp") = Eigen::Vector2d::Constant(0.02), py::arg("kd") = Eigen::Vector2d::Constant(0.05),
        py::arg("seed") = 1, py::arg("offset_sigma") = 0.0, py::arg("excitation_sigma") = 0.0,
        py::arg("actuator_lag") = true);

  // -- harness --------------------------------------------------------------
  m.def("resolve_config", [](const std::string& text) { return as_python(harness::config_to_json(harness::parse_config(text))); },
        "Parses a JSON config and returns it with every default filled in.");
  m.def("content_hash", [](const std::string& bytes) { return harness::content_hash(bytes); });
  m.def("run_command",
        [](const std::string& command, const std::string& config_text, const std::filesystem::path& out_dir,
           std::optional<std::filesystem::path> model, std::optional<std::filesystem::path> dataset,
           std::optional<std::filesystem::path> test) {
          const harness::ExperimentConfig config = harness::parse_config(config_text);
          harness::CommandOptions opt{out_dir, model, dataset, test};
          nlohmann::json report;
          {
            py::gil_scoped_release release;
            if (command == "simulate") {
              report = harness::cmd_simulate(config, opt);
            } else if (command == "collect") {
              report = harness::cmd_collect(config, opt);
            } else if (command == "train") {
              report = harness::cmd_train(config, opt);
            } else if (command == "evaluate") {
              report = harness::cmd_evaluate(config, opt);
            } else if (command == "gains-check") {
              report = harness::cmd_gains_check(config);
            } else {
              throw harness::ConfigError("unknown command " + command);
            }
          }
          return as_python(report);
        },
        py::arg("command"), py::arg("config") = "{}", py::arg("out_dir") = "out", py::arg("model") = py::none(),
        py::arg("dataset") = py::none(), py::arg("test") = py::none(),
        "Runs a CLI command in-process and returns its report.");
}
