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

// trackgp: simulate, collect, train, evaluate, gains-check.
//
// Exit codes: 0 success, 2 config, 3 numeric/training, 4 artifact mismatch,
// 1 anything else.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "trackgp/harness.hpp"

namespace {

using namespace trackgp::harness;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string model;
  std::string dataset;
  std::string test;
};

void add_common(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "Experiment config (JSON); defaults apply when omitted");
  cmd->add_option("--seed", flags.seed, "Override the config seed (and the evaluation seed list)");
  cmd->add_option("--out", flags.out, "Output directory (overrides output_dir)");
}

ExperimentConfig resolve(const Flags& flags) {
  ExperimentConfig config = flags.config.empty() ? default_config() : load_config(flags.config);
  if (flags.seed) {
    config.seed = *flags.seed;
    config.gp.seed = *flags.seed;
    config.seeds = {*flags.seed};
  }
  return config;
}

CommandOptions options_from(const Flags& flags) {
  CommandOptions o;
  o.out_dir = flags.out;
  if (!flags.model.empty()) o.model = flags.model;
  if (!flags.dataset.empty()) o.dataset = flags.dataset;
  if (!flags.test.empty()) o.test = flags.test;
  return o;
}

void print_summary(const nlohmann::json& report) {
  if (report.contains("trajectories")) {
    for (const auto& row : report["trajectories"]) {
      std::cout << row["name"].get<std::string>();
      if (row.contains("mean_error")) std::cout << " mean_error=" << row["mean_error"];
      if (row.contains("nominal")) {
        std::cout << " nominal=" << row["nominal"]["mean_error"]
                  << " gp=" << row["gp"]["mean_error"];
      }
      if (row.contains("samples")) std::cout << " samples=" << row["samples"];
      std::cout << '\n';
    }
  }
  if (report.contains("held_out") && !report["held_out"].is_null()) {
    std::cout << "held_out mean_error=" << report["held_out"]["mean_error"]
              << " relative=" << report["held_out"]["relative_error"] << '\n';
  }
  if (report.contains("config_hash")) std::cout << "config_hash " << report["config_hash"].get<std::string>() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory tracking with learned inverse models for tracked vehicles"};
  app.require_subcommand(1);
  Flags flags;

  auto* simulate = app.add_subcommand("simulate", "Run closed-loop rollouts and write logs");
  add_common(simulate, flags);
  simulate->add_option("--model", flags.model, "GP model for the gp_second slot");

  auto* collect = app.add_subcommand("collect", "Simulate, extract a dataset and split it");
  add_common(collect, flags);

  auto* train = app.add_subcommand("train", "Fit the GP inverse model");
  add_common(train, flags);
  train->add_option("--dataset", flags.dataset, "Training dataset CSV")->required();
  train->add_option("--test", flags.test, "Held-out dataset CSV");
  train->add_option("--model", flags.model, "Model output path (default <out>/model.json)");

  auto* evaluate = app.add_subcommand("evaluate", "Compare nominal and GP slots");
  add_common(evaluate, flags);
  evaluate->add_option("--model", flags.model, "Trained GP model")->required();
  evaluate->add_option("--test", flags.test, "Held-out dataset CSV");

  auto* gains = app.add_subcommand("gains-check", "Report error-dynamics pole magnitudes");
  gains->add_option("--config", flags.config, "Experiment config (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    const ExperimentConfig config = resolve(flags);
    const CommandOptions options = options_from(flags);
    if (gains->parsed()) {
      const nlohmann::json report = cmd_gains_check(config);
      nlohmann::json shown = report;
      shown.erase("config");  // config_hash identifies it
      std::cout << shown.dump(2) << '\n';
      return report["stable"].get<bool>() ? kExitOk : kExitConfig;
    }
    nlohmann::json report;
    if (simulate->parsed()) report = cmd_simulate(config, options);
    if (collect->parsed()) report = cmd_collect(config, options);
    if (train->parsed()) report = cmd_train(config, options);
    if (evaluate->parsed()) report = cmd_evaluate(config, options);
    print_summary(report);
    return kExitOk;
  } catch (const std::exception& e) {
    const ExitCode code = exit_code_for(e);
    std::cerr << "trackgp: " << e.what() << '\n';
    return code;
  }
}
