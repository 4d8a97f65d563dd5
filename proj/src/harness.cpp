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

#include "trackgp/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <memory>
#include <sstream>
#include <system_error>

namespace trackgp::harness {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

fs::path prepare_out_dir(const CommandOptions& options, const ExperimentConfig& config) {
  const fs::path dir = options.out_dir.empty() ? fs::path(config.output_dir) : options.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw HarnessError(kExitOther, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

json base_report(const char* command, const ExperimentConfig& config) {
  const json resolved = config_to_json(config);
  return {{"command", command},
          {"config", resolved},
          {"config_hash", content_hash(resolved.dump())}};
}

// Rollout failures are numeric; controller setup failures are config errors.
RolloutLog run(const ReferenceTrajectory& traj, const ControllerConfig& controller,
               const ExperimentConfig& config, std::uint64_t seed, const RolloutOptions& options) {
  try {
    return rollout(traj, controller, config.plant, config.vehicle, seed, options);
  } catch (const ConfigurationError& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::runtime_error& e) {
    throw NumericError(e.what());
  }
}

std::vector<gp::Sample> load_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open dataset " + path.string());
  try {
    return read_dataset_csv(in);
  } catch (const std::invalid_argument& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

std::string dataset_text(const std::vector<gp::Sample>& samples) {
  std::ostringstream os;
  write_dataset_csv(os, samples);
  return os.str();
}

double mean_command_magnitude(const std::vector<gp::Sample>& samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const gp::Sample& s : samples) sum += s.z.norm();
  return sum / static_cast<double>(samples.size());
}

json held_out_json(const gp::GpModel& model, const std::vector<gp::Sample>& test) {
  if (test.empty()) return nullptr;
  const gp::HeldOutError err = gp::held_out_error(model, test);
  const double scale = mean_command_magnitude(test);
  return {{"samples", test.size()},
          {"mean_error", err.mean},
          {"max_error", *std::max_element(err.errors.begin(), err.errors.end())},
          {"mean_command_magnitude", scale},
          {"relative_error", scale > 0.0 ? err.mean / scale : 0.0}};
}

std::uint64_t collection_seed(std::uint64_t seed, std::size_t index) {
  return seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(index);
}

}  // namespace

ExitCode exit_code_for(const std::exception& e) {
  if (const auto* h = dynamic_cast<const HarnessError*>(&e)) return h->code();
  if (dynamic_cast<const ConfigurationError*>(&e)) return kExitConfig;
  if (dynamic_cast<const gp::CholeskyFailure*>(&e)) return kExitNumeric;
  if (dynamic_cast<const gp::OptimizationError*>(&e)) return kExitNumeric;
  return kExitOther;
}

std::string content_hash(std::string_view bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw std::runtime_error("sha1 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

void atomic_write(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw HarnessError(kExitOther, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw HarnessError(kExitOther, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw HarnessError(kExitOther, "cannot rename onto " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ReferenceTrajectory build_trajectory(const TrajectorySpec& spec, double sample_time) {
  switch (spec.kind) {
    case TrajectoryKind::kFigure8:
      return make_figure8(spec.amplitude, spec.period_steps, sample_time, spec.laps);
    case TrajectoryKind::kCircle:
      return make_circle(spec.radius, spec.period_steps, sample_time, spec.laps);
    case TrajectoryKind::kWaypoints:
      return make_waypoint_path(spec.waypoints, spec.cruise_speed, sample_time, spec.accel);
  }
  throw std::invalid_argument("unknown trajectory kind");
}

std::string trajectory_label(const TrajectorySpec& spec, std::size_t index) {
  return spec.name.empty() ? to_string(spec.kind) + "_" + std::to_string(index) : spec.name;
}

gp::GpModel load_model(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ArtifactError(std::string("model: ") + e.what());
  }
  gp::GpModel model;
  try {
    model = gp::GpModel::from_json(text);
  } catch (const std::exception& e) {
    throw ArtifactError("model " + path.string() + ": " + e.what());
  }
  if (model.input_dim() != gp::kInputDim || model.output_dim() != gp::kOutputDim) {
    throw ArtifactError("model " + path.string() + " maps " + std::to_string(model.input_dim()) +
                        " -> " + std::to_string(model.output_dim()) + ", expected 6 -> 2");
  }
  return model;
}

json cmd_simulate(const ExperimentConfig& config, const CommandOptions& options) {
  const fs::path dir = prepare_out_dir(options, config);
  json report = base_report("simulate", config);

  ControllerConfig controller{config.gains, InverseModelSlot{config.slot, nullptr}};
  if (config.slot == SlotKind::kGpSecond) {
    if (!options.model) throw ConfigError("controller slot gp_second needs --model");
    controller.slot = InverseModelSlot::gp_second(
        std::make_shared<const gp::GpModel>(load_model(*options.model)));
    report["inputs"]["model"] = content_hash(read_file(*options.model));
  }

  json rows = json::array();
  for (std::size_t i = 0; i < config.trajectories.size(); ++i) {
    const TrajectorySpec& spec = config.trajectories[i];
    const std::string label = trajectory_label(spec, i);
    const ReferenceTrajectory traj = build_trajectory(spec, config.vehicle.sample_time);
    const RolloutLog log = run(traj, controller, config, config.seed, config.rollout);
    const Metrics m = cartesian_error(log);

    std::ostringstream csv;
    write_log_csv(csv, log);
    const std::string file = "simulate_" + label + ".csv";
    atomic_write(dir / file, csv.str());
    rows.push_back({{"name", label},
                    {"kind", to_string(spec.kind)},
                    {"steps", log.steps.size()},
                    {"mean_error", m.mean},
                    {"max_error", m.max},
                    {"saturated_steps", log.saturated_steps},
                    {"log_file", file},
                    {"log_hash", content_hash(csv.str())}});
  }
  report["trajectories"] = rows;
  atomic_write(dir / "metrics.json", dump(report));
  return report;
}

json cmd_collect(const ExperimentConfig& config, const CommandOptions& options) {
  const fs::path dir = prepare_out_dir(options, config);
  json report = base_report("collect", config);

  // Collection always drives the plant with the closed-form inverse.
  const ControllerConfig controller{config.gains, InverseModelSlot::nominal_second()};
  std::vector<gp::Sample> all;
  json rows = json::array();
  for (std::size_t i = 0; i < config.trajectories.size(); ++i) {
    const TrajectorySpec& spec = config.trajectories[i];
    const ReferenceTrajectory traj = build_trajectory(spec, config.vehicle.sample_time);
    const RolloutLog log =
        run(traj, controller, config, collection_seed(config.seed, i), config.collect);
    std::vector<gp::Sample> samples;
    try {
      samples = extract_dataset(log);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(trajectory_label(spec, i) + ": " + e.what());
    }
    rows.push_back({{"name", trajectory_label(spec, i)},
                    {"samples", samples.size()},
                    {"mean_error", cartesian_error(log).mean}});
    all.insert(all.end(), samples.begin(), samples.end());
  }
  const DatasetSplit split = split_dataset(all, config.train_fraction, config.seed);

  const std::string full = dataset_text(all);
  const std::string train = dataset_text(split.train);
  const std::string test = dataset_text(split.test);
  atomic_write(dir / "dataset.csv", full);
  atomic_write(dir / "train.csv", train);
  atomic_write(dir / "test.csv", test);

  report["trajectories"] = rows;
  report["samples"] = {{"total", all.size()}, {"train", split.train.size()}, {"test", split.test.size()}};
  report["outputs"] = {{"dataset.csv", content_hash(full)},
                       {"train.csv", content_hash(train)},
                       {"test.csv", content_hash(test)}};
  atomic_write(dir / "collect.json", dump(report));
  return report;
}

json cmd_train(const ExperimentConfig& config, const CommandOptions& options) {
  if (!options.dataset) throw ConfigError("train needs --dataset");
  const fs::path dir = prepare_out_dir(options, config);
  json report = base_report("train", config);

  const std::string data_bytes = [&] {
    try {
      return read_file(*options.dataset);
    } catch (const std::exception& e) {
      throw ArtifactError(e.what());
    }
  }();
  const std::vector<gp::Sample> train = load_dataset(*options.dataset);
  std::vector<gp::Sample> test;
  report["inputs"]["dataset"] = content_hash(data_bytes);
  if (options.test) {
    test = load_dataset(*options.test);
    report["inputs"]["test"] = content_hash(read_file(*options.test));
  }
  if (train.size() < 2) {
    throw NumericError("training needs at least 2 samples, dataset has " +
                       std::to_string(train.size()));
  }

  gp::GpModel model;
  try {
    model = gp::GpModel::fit(train, config.gp);
  } catch (const gp::CholeskyFailure& e) {
    throw NumericError(std::string("conditioning failed: ") + e.what());
  } catch (const std::exception& e) {
    throw NumericError(std::string("training failed: ") + e.what());
  }

  const std::string model_text = model.to_json();
  const fs::path model_path = options.model ? *options.model : dir / "model.json";
  atomic_write(model_path, model_text);

  json outputs = json::array();
  for (int j = 0; j < model.output_dim(); ++j) {
    const gp::OutputReport& r = model.report(j);
    const gp::OutputHyperparameters& h = model.hyperparameters(j);
    std::vector<double> ls(h.kernel.log_lengthscales.data(),
                           h.kernel.log_lengthscales.data() + h.kernel.log_lengthscales.size());
    outputs.push_back({{"log_likelihood", r.log_likelihood},
                       {"iterations", r.iterations},
                       {"restarts", r.restarts},
                       {"converged", r.converged},
                       {"jitter", model.jitter(j)},
                       {"log_lengthscales", ls},
                       {"log_signal_variance", h.kernel.log_signal_variance},
                       {"log_noise_variance", h.log_noise_variance}});
  }
  report["training"] = {{"samples", train.size()},
                        {"conditioning_points", model.num_points()},
                        {"outputs", outputs}};
  report["held_out"] = held_out_json(model, test);
  report["model_file"] = model_path.string();
  report["model_hash"] = content_hash(model_text);
  atomic_write(dir / "train_report.json", dump(report));
  return report;
}

json cmd_evaluate(const ExperimentConfig& config, const CommandOptions& options) {
  if (!options.model) throw ArtifactError("evaluate needs --model");
  const auto model = std::make_shared<const gp::GpModel>(load_model(*options.model));
  const fs::path dir = prepare_out_dir(options, config);
  json report = base_report("evaluate", config);
  report["inputs"]["model"] = content_hash(read_file(*options.model));

  std::vector<gp::Sample> test;
  if (options.test) {
    test = load_dataset(*options.test);
    report["inputs"]["test"] = content_hash(read_file(*options.test));
  }

  const ControllerConfig nominal{config.gains, InverseModelSlot::nominal_second()};
  const ControllerConfig learned{config.gains, InverseModelSlot::gp_second(model)};

  std::ostringstream csv;
  csv << "trajectory,seed,t,err_nominal,err_gp\n";
  json rows = json::array();
  for (std::size_t i = 0; i < config.trajectories.size(); ++i) {
    const TrajectorySpec& spec = config.trajectories[i];
    const std::string label = trajectory_label(spec, i);
    const ReferenceTrajectory traj = build_trajectory(spec, config.vehicle.sample_time);
    json per_seed = json::array();
    double nominal_mean = 0.0;
    double gp_mean = 0.0;
    double nominal_max = 0.0;
    double gp_max = 0.0;
    for (std::uint64_t seed : config.seeds) {
      const Metrics a = cartesian_error(run(traj, nominal, config, seed, config.rollout));
      const Metrics b = cartesian_error(run(traj, learned, config, seed, config.rollout));
      for (std::size_t t = 0; t < a.per_step.size(); ++t) {
        csv << label << ',' << seed << ',' << t << ',' << format_double(a.per_step[t]) << ','
            << format_double(b.per_step[t]) << '\n';
      }
      per_seed.push_back({{"seed", seed},
                          {"nominal", {{"mean_error", a.mean}, {"max_error", a.max}}},
                          {"gp", {{"mean_error", b.mean}, {"max_error", b.max}}}});
      nominal_mean += a.mean;
      gp_mean += b.mean;
      nominal_max = std::max(nominal_max, a.max);
      gp_max = std::max(gp_max, b.max);
    }
    const auto n = static_cast<double>(config.seeds.size());
    rows.push_back({{"name", label},
                    {"kind", to_string(spec.kind)},
                    {"nominal", {{"mean_error", nominal_mean / n}, {"max_error", nominal_max}}},
                    {"gp", {{"mean_error", gp_mean / n}, {"max_error", gp_max}}},
                    {"gp_not_worse", gp_mean <= nominal_mean},
                    {"seeds", per_seed}});
  }
  report["trajectories"] = rows;
  report["held_out"] = held_out_json(*model, test);
  report["errors_file"] = "errors.csv";
  report["errors_hash"] = content_hash(csv.str());
  atomic_write(dir / "errors.csv", csv.str());
  atomic_write(dir / "report.json", dump(report));
  return report;
}

json cmd_gains_check(const ExperimentConfig& config) {
  const int order = config.slot == SlotKind::kNominalFirst ? 1 : 2;
  const std::vector<double> magnitudes = validate_gains(config.gains, order);
  json report = base_report("gains-check", config);
  report["order"] = order;
  report["kp"] = {config.gains.kp.x(), config.gains.kp.y()};
  report["kd"] = {config.gains.kd.x(), config.gains.kd.y()};
  report["pole_magnitudes"] = magnitudes;
  report["margin"] = kPoleMargin;
  report["stable"] = poles_stable(magnitudes);
  return report;
}

}  // namespace trackgp::harness
