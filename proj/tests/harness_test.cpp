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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include <gtest/gtest.h>

#include "trackgp/harness.hpp"

namespace trackgp::harness {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("trackgp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

// Short references keep the end-to-end tests fast.
const char* kSmallConfig = R"({
  "trajectories": [
    {"kind": "figure8", "name": "f8", "amplitude": 1.0, "period_steps": 300},
    {"kind": "circle", "name": "circ", "radius": 0.8, "period_steps": 300}
  ],
  "seeds": [1, 2],
  "gp": {"restarts": 1, "max_opt_points": 200}
})";

json slurp_json(const fs::path& p) { return json::parse(read_file(p)); }

TEST(Config, DefaultsAreMaterialized) {
  const ExperimentConfig c = parse_config("{}");
  EXPECT_EQ(c.trajectories.size(), 3u);
  EXPECT_EQ(c.trajectories[2].waypoints.size(), 5u);
  EXPECT_DOUBLE_EQ(c.gains.kp.x(), 0.02);
  EXPECT_DOUBLE_EQ(c.gains.kd.y(), 0.05);
  EXPECT_DOUBLE_EQ(c.vehicle.sample_time, 0.05);
  EXPECT_DOUBLE_EQ(c.vehicle.alpha_filter, 0.1);
  const json j = config_to_json(c);
  for (const char* key : {"trajectories", "vehicle", "world", "gains", "controller", "rollout",
                          "collect", "gp", "train_fraction", "seed", "seeds", "output_dir"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["world"]["mu"], 0.6);
}

TEST(Config, ResolvedConfigReparsesToItself) {
  const ExperimentConfig c = parse_config(R"({"world": {"plant": "slip", "alpha_deg": 35,
      "base_slip": 0.05}, "gains": {"kp": [0.02, 0.03]}, "seed": 9})");
  EXPECT_NEAR(c.plant.world.slope_alpha, 35.0 * std::numbers::pi / 180.0, 1e-15);
  const json once = config_to_json(c);
  const json twice = config_to_json(parse_config(once.dump()));
  EXPECT_EQ(once, twice);
}

TEST(Config, SchemaErrors) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config("[]"), ConfigError);
  EXPECT_THROW(parse_config(R"({"bogus": 1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"world": {"alpha": 0.1, "alpha_deg": 5}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"world": {"plant": "mud"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"vehicle": {"chi": "high"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"vehicle": {"chi": 1.5}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"trajectories": []})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"trajectories": [{"kind": "spiral"}]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"trajectories": [{"kind": "circle", "period_steps": 2}]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"controller": {"slot": "pid"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"seed": -1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"train_fraction": 1.0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"gp": {"restarts": 0}})"), ConfigError);
  try {
    parse_config(R"({"world": {"nosie_sigma": 0.1}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("world.nosie_sigma"), std::string::npos);
    EXPECT_EQ(e.code(), kExitConfig);
  }
}

TEST(ContentHash, MatchesGitBlobIds) {
  EXPECT_EQ(content_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(content_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(AtomicWrite, ReplacesContentWithoutLeftovers) {
  TempDir dir;
  const fs::path target = dir.path() / "a.txt";
  atomic_write(target, "first");
  atomic_write(target, "second");
  EXPECT_EQ(read_file(target), "second");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir.path())) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1u);
}

TEST(GainsCheck, ReportsPoles) {
  const json ok = cmd_gains_check(default_config());
  EXPECT_TRUE(ok["stable"].get<bool>());
  EXPECT_NEAR(ok["pole_magnitudes"][0].get<double>(), 0.9806, 5e-5);
  EXPECT_NEAR(ok["pole_magnitudes"][1].get<double>(), 0.0306, 5e-5);
  const json bad = cmd_gains_check(parse_config(R"({"gains": {"kp": 0, "kd": 0}})"));
  EXPECT_FALSE(bad["stable"].get<bool>());
}

TEST(Simulate, NominalIsExactAndReportsAreAuditable) {
  TempDir dir;
  CommandOptions opt;
  opt.out_dir = dir.path();
  const ExperimentConfig c = parse_config(kSmallConfig);
  const json report = cmd_simulate(c, opt);
  EXPECT_EQ(report["config"], config_to_json(c));
  EXPECT_EQ(report["config_hash"], content_hash(config_to_json(c).dump()));
  for (const auto& row : report["trajectories"]) {
    EXPECT_LT(row["mean_error"].get<double>(), 1e-6);
    const fs::path log = dir.path() / row["log_file"].get<std::string>();
    EXPECT_EQ(row["log_hash"], content_hash(read_file(log)));
  }
  EXPECT_EQ(slurp_json(dir.path() / "metrics.json"), report);
}

TEST(Simulate, SlipOutputsAreByteIdenticalAcrossRuns) {
  TempDir a;
  TempDir b;
  const ExperimentConfig c = parse_config(R"({
    "trajectories": [{"kind": "circle", "period_steps": 200}],
    "world": {"plant": "slip", "alpha_deg": 35, "base_slip": 0.05, "noise_sigma": 0.001},
    "rollout": {"offset_sigma": 0.05}, "seed": 17})");
  CommandOptions oa;
  oa.out_dir = a.path();
  CommandOptions ob;
  ob.out_dir = b.path();
  cmd_simulate(c, oa);
  cmd_simulate(c, ob);
  for (const char* name : {"metrics.json", "simulate_circle_0.csv"}) {
    EXPECT_EQ(read_file(a.path() / name), read_file(b.path() / name)) << name;
  }
}

TEST(Train, RejectsSingleSampleDataset) {
  TempDir dir;
  const fs::path data = dir.path() / "one.csv";
  atomic_write(data, "w1,w2,w3,w4,w5,w6,z1,z2\n1,2,3,4,5,6,7,8\n");
  CommandOptions opt;
  opt.out_dir = dir.path();
  opt.dataset = data;
  try {
    cmd_train(default_config(), opt);
    FAIL();
  } catch (const HarnessError& e) {
    EXPECT_EQ(e.code(), kExitNumeric);
  }
}

TEST(Train, MalformedDatasetIsAnArtifactError) {
  TempDir dir;
  const fs::path data = dir.path() / "bad.csv";
  atomic_write(data, "x,y\n1,2\n");
  CommandOptions opt;
  opt.out_dir = dir.path();
  opt.dataset = data;
  try {
    cmd_train(default_config(), opt);
    FAIL();
  } catch (const HarnessError& e) {
    EXPECT_EQ(e.code(), kExitArtifact);
  }
}

TEST(Evaluate, MissingOrIncompatibleModel) {
  TempDir dir;
  CommandOptions opt;
  opt.out_dir = dir.path();
  opt.model = dir.path() / "absent.json";
  try {
    cmd_evaluate(default_config(), opt);
    FAIL();
  } catch (const HarnessError& e) {
    EXPECT_EQ(e.code(), kExitArtifact);
  }
  // A valid GP with the wrong shape.
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
  const Eigen::MatrixXd z = Eigen::MatrixXd::Random(5, 1);
  gp::OutputHyperparameters h;
  h.kernel.log_lengthscales = Eigen::VectorXd::Zero(3);
  const fs::path wrong = dir.path() / "wrong.json";
  atomic_write(wrong, gp::GpModel::condition(x, z, {h}).to_json());
  opt.model = wrong;
  try {
    cmd_evaluate(default_config(), opt);
    FAIL();
  } catch (const HarnessError& e) {
    EXPECT_EQ(e.code(), kExitArtifact);
  }
}

TEST(Pipeline, NominalPlantCollectTrainEvaluate) {
  TempDir dir;
  CommandOptions opt;
  opt.out_dir = dir.path();
  const ExperimentConfig c = parse_config(kSmallConfig);

  const json collected = cmd_collect(c, opt);
  EXPECT_EQ(collected["samples"]["total"].get<std::size_t>(),
            collected["samples"]["train"].get<std::size_t>() +
                collected["samples"]["test"].get<std::size_t>());

  opt.dataset = dir.path() / "train.csv";
  opt.test = dir.path() / "test.csv";
  const json trained = cmd_train(c, opt);
  const double rel = trained["held_out"]["relative_error"].get<double>();
  EXPECT_LT(rel, 1e-3);
  const std::string first_hash = trained["model_hash"];
  EXPECT_EQ(first_hash, content_hash(read_file(dir.path() / "model.json")));

  // Same seed, same bytes.
  TempDir again;
  CommandOptions opt2 = opt;
  opt2.out_dir = again.path();
  EXPECT_EQ(cmd_train(c, opt2)["model_hash"], first_hash);

  opt.model = dir.path() / "model.json";
  const json report = cmd_evaluate(c, opt);
  const double rmse_scale = trained["held_out"]["max_error"].get<double>();
  for (const auto& row : report["trajectories"]) {
    const double nominal = row["nominal"]["mean_error"].get<double>();
    const double learned = row["gp"]["mean_error"].get<double>();
    EXPECT_LT(nominal, 1e-6);
    EXPECT_LT(std::abs(learned - nominal), 10.0 * rmse_scale);
    EXPECT_EQ(row["seeds"].size(), 2u);
  }
  const std::string errors = read_file(dir.path() / "errors.csv");
  EXPECT_EQ(errors.substr(0, errors.find('\n')), "trajectory,seed,t,err_nominal,err_gp");
  EXPECT_EQ(report["errors_hash"], content_hash(errors));
  EXPECT_EQ(report["inputs"]["model"], content_hash(read_file(dir.path() / "model.json")));
}

#ifdef TRACKGP_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(TRACKGP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const fs::path bad = dir.path() / "bad.json";
  atomic_write(bad, R"({"unknown_key": true})");
  const fs::path unstable = dir.path() / "unstable.json";
  atomic_write(unstable, R"({"gains": {"kp": 0.0, "kd": 0.0}})");
  const fs::path small = dir.path() / "small.json";
  atomic_write(small, R"({"trajectories": [{"kind": "circle", "period_steps": 100}]})");
  const std::string out = " --out " + (dir.path() / "out").string();

  EXPECT_EQ(run_cli("gains-check"), 0);
  EXPECT_EQ(run_cli("gains-check --config " + unstable.string()), 2);
  EXPECT_EQ(run_cli("simulate --config " + bad.string() + out), 2);
  EXPECT_EQ(run_cli("simulate --config " + (dir.path() / "missing.json").string() + out), 2);
  EXPECT_EQ(run_cli("simulate --config " + small.string() + out), 0);
  EXPECT_EQ(run_cli("simulate --config " + unstable.string() + out), 2);
  EXPECT_EQ(run_cli("evaluate --model " + (dir.path() / "none.json").string() + out), 4);
  const fs::path one = dir.path() / "one.csv";
  atomic_write(one, "w1,w2,w3,w4,w5,w6,z1,z2\n1,2,3,4,5,6,7,8\n");
  EXPECT_EQ(run_cli("train --dataset " + one.string() + out), 3);
  EXPECT_EQ(run_cli("nonsense"), 2);
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "metrics.json"));
}
#endif

}  // namespace
}  // namespace trackgp::harness
