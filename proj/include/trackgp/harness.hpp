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

// Experiment orchestration behind the `trackgp` command-line tool:
// configuration, simulation, data collection, training and evaluation.

#ifndef TRACKGP_HARNESS_HPP_
#define TRACKGP_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trackgp/sim.hpp"

namespace trackgp::harness {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitArtifact = 4,
};

/// Error carrying the process exit code it maps to.
class HarnessError : public std::runtime_error {
 public:
  HarnessError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

struct ConfigError : HarnessError {
  explicit ConfigError(const std::string& what) : HarnessError(kExitConfig, what) {}
};
struct NumericError : HarnessError {
  explicit NumericError(const std::string& what) : HarnessError(kExitNumeric, what) {}
};
struct ArtifactError : HarnessError {
  explicit ArtifactError(const std::string& what) : HarnessError(kExitArtifact, what) {}
};

/// Maps any exception to its exit code.
ExitCode exit_code_for(const std::exception& e);

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kFigure8;
  std::string name;
  double amplitude = 2.0;        // figure-8, m
  double radius = 1.5;           // circle, m
  int period_steps = 800;        // 40 s at 20 Hz
  int laps = 1;
  std::vector<Eigen::Vector2d> waypoints;
  double cruise_speed = 0.3;     // m/s
  double accel = 0.25;           // m/s^2
};

struct ExperimentConfig {
  std::vector<TrajectorySpec> trajectories;
  VehicleParams vehicle;
  PlantConfig plant;
  Gains gains;
  SlotKind slot = SlotKind::kNominalSecond;
  RolloutOptions rollout;
  RolloutOptions collect;        // options for data-collection rollouts
  gp::OptimizerConfig gp;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string output_dir = "out";
};

/// Defaults: figure-8, circle and a 5-waypoint path; collection dither on.
ExperimentConfig default_config();

/// Parses and validates a JSON document. Unknown keys, wrong types and out of
/// range values throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully materialized configuration, every default included.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Git blob hash: sha1("blob <size>\0" + bytes), lowercase hex.
std::string content_hash(std::string_view bytes);

/// Writes to a temporary sibling, then renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

ReferenceTrajectory build_trajectory(const TrajectorySpec& spec, double sample_time);
std::string trajectory_label(const TrajectorySpec& spec, std::size_t index);

/// Loads a model and checks it fits the 6 -> 2 inverse-model slot. Any
/// failure throws ArtifactError.
gp::GpModel load_model(const std::filesystem::path& path);

struct CommandOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> test;
};

/// Each command returns the report it wrote.
nlohmann::json cmd_simulate(const ExperimentConfig& config, const CommandOptions& options);
nlohmann::json cmd_collect(const ExperimentConfig& config, const CommandOptions& options);
nlohmann::json cmd_train(const ExperimentConfig& config, const CommandOptions& options);
nlohmann::json cmd_evaluate(const ExperimentConfig& config, const CommandOptions& options);
nlohmann::json cmd_gains_check(const ExperimentConfig& config);

}  // namespace trackgp::harness

#endif  // TRACKGP_HARNESS_HPP_
