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

#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include "trackgp/harness.hpp"

namespace trackgp::harness {
namespace {

using nlohmann::json;

// Object view that records which keys were read so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("", "must be an object");
  }

  ~Section() = default;
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key);
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError("config " + (key.empty() ? (path_.empty() ? "root" : path_) : child(key)) +
                      ": " + msg);
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) fail(key, "must be finite");
  }

  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    const auto i = v.get<long long>();
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
      fail(key, "out of range");
    }
    out = static_cast<int>(i);
  }

  void unsigned_integer(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void size(const std::string& key, std::size_t& out) {
    std::uint64_t v = out;
    unsigned_integer(key, v);
    out = static_cast<std::size_t>(v);
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    out = v.get<bool>();
  }

  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    out = v.get<std::string>();
  }

  Eigen::Vector2d point(const json& v, const std::string& key) const {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(key, "expected a [x, y] pair of numbers");
    }
    const Eigen::Vector2d p(v[0].get<double>(), v[1].get<double>());
    if (!p.allFinite()) fail(key, "must be finite");
    return p;
  }

  /// Scalar applies to both axes; a pair sets them separately.
  void axis_pair(const std::string& key, Eigen::Vector2d& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (v.is_number()) {
      out.setConstant(v.get<double>());
      if (!out.allFinite()) fail(key, "must be finite");
    } else {
      out = point(v, key);
    }
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) fail(key, "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

TrajectoryKind trajectory_kind(const std::string& name) {
  if (name == "figure8") return TrajectoryKind::kFigure8;
  if (name == "circle") return TrajectoryKind::kCircle;
  if (name == "waypoints") return TrajectoryKind::kWaypoints;
  throw ConfigError("unknown trajectory kind '" + name + "' (figure8, circle, waypoints)");
}

std::vector<Eigen::Vector2d> default_waypoints() {
  return {{0.0, 0.0}, {2.0, 1.0}, {4.0, -1.0}, {5.0, 2.0}, {2.0, 3.0}};
}

TrajectorySpec parse_trajectory(const json& node, const std::string& path) {
  Section s(node, path);
  TrajectorySpec spec;
  std::string kind = "figure8";
  s.string("kind", kind);
  try {
    spec.kind = trajectory_kind(kind);
  } catch (const ConfigError& e) {
    s.fail("kind", e.what());
  }
  if (spec.kind == TrajectoryKind::kWaypoints) spec.waypoints = default_waypoints();
  s.string("name", spec.name);
  s.number("amplitude", spec.amplitude);
  s.number("radius", spec.radius);
  s.integer("period_steps", spec.period_steps);
  s.integer("laps", spec.laps);
  s.number("cruise_speed", spec.cruise_speed);
  s.number("accel", spec.accel);
  if (s.has("waypoints")) {
    const json& wps = s.at("waypoints");
    if (!wps.is_array()) s.fail("waypoints", "expected a list of [x, y] pairs");
    spec.waypoints.clear();
    for (const json& p : wps) spec.waypoints.push_back(s.point(p, "waypoints"));
  }
  s.finish();
  return spec;
}

void parse_vehicle(const json& node, VehicleParams& v) {
  Section s(node, "vehicle");
  s.number("tread_d", v.tread_d);
  s.number("chi", v.chi);
  s.number("offset_b", v.offset_b);
  s.number("sample_time", v.sample_time);
  s.number("alpha_filter", v.alpha_filter);
  s.number("v_max", v.v_max);
  s.finish();
}

void parse_world(const json& node, PlantConfig& plant) {
  Section s(node, "world");
  std::string kind = to_string(plant.kind);
  s.string("plant", kind);
  if (kind == "nominal") {
    plant.kind = PlantKind::kNominal;
  } else if (kind == "slip") {
    plant.kind = PlantKind::kSlip;
  } else {
    s.fail("plant", "expected 'nominal' or 'slip'");
  }
  SlipPlaneWorld& w = plant.world;
  const bool has_rad = s.has("alpha");
  const bool has_deg = s.has("alpha_deg");
  if (has_rad && has_deg) s.fail("alpha", "give either alpha (rad) or alpha_deg, not both");
  s.number("alpha", w.slope_alpha);
  if (has_deg) {
    double deg = 0.0;
    s.number("alpha_deg", deg);
    w.slope_alpha = deg * std::numbers::pi / 180.0;
  }
  s.number("d_b", w.height_db);
  s.number("n", w.slip_exponent_n);
  s.number("base_slip", w.base_slip);
  s.number("mu", w.friction_mu);
  s.number("beta0", w.beta0);
  s.number("omega_ref", w.omega_ref);
  s.number("noise_sigma", w.noise_sigma);
  s.unsigned_integer("seed", w.seed);
  s.boolean("actuator_lag", plant.actuator_lag);
  s.finish();
}

void parse_rollout(const json& node, const std::string& path, RolloutOptions& r) {
  Section s(node, path);
  std::string init = r.initial_velocity == InitialVelocity::kMatched ? "matched" : "rest";
  s.string("initial_velocity", init);
  if (init == "matched") {
    r.initial_velocity = InitialVelocity::kMatched;
  } else if (init == "rest") {
    r.initial_velocity = InitialVelocity::kRest;
  } else {
    s.fail("initial_velocity", "expected 'matched' or 'rest'");
  }
  if (s.has("initial_offset")) r.initial_offset = s.point(s.at("initial_offset"), "initial_offset");
  s.number("offset_sigma", r.offset_sigma);
  s.size("max_steps", r.max_steps);
  s.number("excitation_sigma", r.excitation_sigma);
  if (r.offset_sigma < 0.0) s.fail("offset_sigma", "must be >= 0");
  if (r.excitation_sigma < 0.0) s.fail("excitation_sigma", "must be >= 0");
  s.finish();
}

void parse_gp(const json& node, gp::OptimizerConfig& g) {
  Section s(node, "gp");
  s.integer("max_iterations", g.max_iterations);
  s.number("gradient_tolerance", g.gradient_tolerance);
  s.integer("restarts", g.restarts);
  s.number("restart_spread", g.restart_spread);
  s.size("max_points", g.max_points);
  s.size("max_opt_points", g.max_opt_points);
  s.boolean("standardize", g.standardize);
  s.boolean("parallel_outputs", g.parallel_outputs);
  s.finish();
}

json point_json(const Eigen::Vector2d& p) { return json::array({p.x(), p.y()}); }

json rollout_json(const RolloutOptions& r) {
  return {{"initial_velocity", r.initial_velocity == InitialVelocity::kMatched ? "matched" : "rest"},
          {"initial_offset", point_json(r.initial_offset)},
          {"offset_sigma", r.offset_sigma},
          {"max_steps", r.max_steps},
          {"excitation_sigma", r.excitation_sigma}};
}

void validate(const ExperimentConfig& c) {
  const auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config ") + section + ": " + e.what());
    }
  };
  wrap("vehicle", [&] { c.vehicle.validate(); });
  wrap("world", [&] { c.plant.world.validate(); });
  wrap("gp", [&] { c.gp.validate(); });
  wrap("gains", [&] { validate_gains(c.gains, c.slot == SlotKind::kNominalFirst ? 1 : 2); });
  if (c.trajectories.empty()) throw ConfigError("config trajectories: at least one is required");
  for (std::size_t i = 0; i < c.trajectories.size(); ++i) {
    const std::string section = "trajectories[" + std::to_string(i) + "]";
    wrap(section.c_str(), [&] { build_trajectory(c.trajectories[i], c.vehicle.sample_time); });
  }
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
    throw ConfigError("config train_fraction: must lie in (0, 1)");
  }
  if (c.seeds.empty()) throw ConfigError("config seeds: at least one seed is required");
  if (c.output_dir.empty()) throw ConfigError("config output_dir: must not be empty");
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig c;
  TrajectorySpec f8;
  f8.kind = TrajectoryKind::kFigure8;
  TrajectorySpec circle;
  circle.kind = TrajectoryKind::kCircle;
  TrajectorySpec path;
  path.kind = TrajectoryKind::kWaypoints;
  path.waypoints = default_waypoints();
  c.trajectories = {f8, circle, path};
  c.collect.offset_sigma = 0.05;
  c.collect.excitation_sigma = 0.05;
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = default_config();
  Section s(root, "");
  if (s.has("trajectories")) {
    const json& list = s.at("trajectories");
    if (!list.is_array()) s.fail("trajectories", "expected a list");
    c.trajectories.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      c.trajectories.push_back(parse_trajectory(list[i], "trajectories[" + std::to_string(i) + "]"));
    }
  }
  if (s.has("vehicle")) parse_vehicle(s.at("vehicle"), c.vehicle);
  if (s.has("world")) parse_world(s.at("world"), c.plant);
  if (s.has("gains")) {
    Section g(s.at("gains"), "gains");
    g.axis_pair("kp", c.gains.kp);
    g.axis_pair("kd", c.gains.kd);
    g.finish();
  }
  if (s.has("controller")) {
    Section ctl(s.at("controller"), "controller");
    std::string slot = to_string(c.slot);
    ctl.string("slot", slot);
    try {
      c.slot = slot_from_string(slot);
    } catch (const std::invalid_argument& e) {
      ctl.fail("slot", e.what());
    }
    ctl.finish();
  }
  if (s.has("rollout")) parse_rollout(s.at("rollout"), "rollout", c.rollout);
  if (s.has("collect")) parse_rollout(s.at("collect"), "collect", c.collect);
  if (s.has("gp")) parse_gp(s.at("gp"), c.gp);
  s.number("train_fraction", c.train_fraction);
  s.unsigned_integer("seed", c.seed);
  if (s.has("seeds")) {
    const json& list = s.at("seeds");
    if (!list.is_array()) s.fail("seeds", "expected a list of non-negative integers");
    c.seeds.clear();
    for (const json& v : list) {
      if (!v.is_number_unsigned()) s.fail("seeds", "expected a list of non-negative integers");
      c.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  s.string("output_dir", c.output_dir);
  s.finish();
  c.gp.seed = c.seed;
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  json trajectories = json::array();
  for (std::size_t i = 0; i < c.trajectories.size(); ++i) {
    const TrajectorySpec& t = c.trajectories[i];
    json node = {{"kind", to_string(t.kind)}, {"name", trajectory_label(t, i)}};
    switch (t.kind) {
      case TrajectoryKind::kFigure8:
        node["amplitude"] = t.amplitude;
        node["period_steps"] = t.period_steps;
        node["laps"] = t.laps;
        break;
      case TrajectoryKind::kCircle:
        node["radius"] = t.radius;
        node["period_steps"] = t.period_steps;
        node["laps"] = t.laps;
        break;
      case TrajectoryKind::kWaypoints: {
        json wps = json::array();
        for (const auto& p : t.waypoints) wps.push_back(point_json(p));
        node["waypoints"] = wps;
        node["cruise_speed"] = t.cruise_speed;
        node["accel"] = t.accel;
        break;
      }
    }
    trajectories.push_back(node);
  }
  const SlipPlaneWorld& w = c.plant.world;
  return {
      {"trajectories", trajectories},
      {"vehicle",
       {{"tread_d", c.vehicle.tread_d},
        {"chi", c.vehicle.chi},
        {"offset_b", c.vehicle.offset_b},
        {"sample_time", c.vehicle.sample_time},
        {"alpha_filter", c.vehicle.alpha_filter},
        {"v_max", c.vehicle.v_max}}},
      {"world",
       {{"plant", to_string(c.plant.kind)},
        {"alpha", w.slope_alpha},
        {"d_b", w.height_db},
        {"n", w.slip_exponent_n},
        {"base_slip", w.base_slip},
        {"mu", w.friction_mu},
        {"beta0", w.beta0},
        {"omega_ref", w.omega_ref},
        {"noise_sigma", w.noise_sigma},
        {"seed", w.seed},
        {"actuator_lag", c.plant.actuator_lag}}},
      {"gains", {{"kp", point_json(c.gains.kp)}, {"kd", point_json(c.gains.kd)}}},
      {"controller", {{"slot", to_string(c.slot)}}},
      {"rollout", rollout_json(c.rollout)},
      {"collect", rollout_json(c.collect)},
      {"gp",
       {{"max_iterations", c.gp.max_iterations},
        {"gradient_tolerance", c.gp.gradient_tolerance},
        {"restarts", c.gp.restarts},
        {"restart_spread", c.gp.restart_spread},
        {"max_points", c.gp.max_points},
        {"max_opt_points", c.gp.max_opt_points},
        {"standardize", c.gp.standardize},
        {"parallel_outputs", c.gp.parallel_outputs}}},
      {"train_fraction", c.train_fraction},
      {"seed", c.seed},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
  };
}

}  // namespace trackgp::harness
