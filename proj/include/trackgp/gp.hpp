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

// Conditionally independent GP regression: one zero-mean scalar GP with a
// squared-exponential ARD kernel per output, sharing the training inputs.
// Hyperparameters live in log space and, when standardization is enabled,
// refer to the standardized inputs and targets.

#ifndef TRACKGP_GP_HPP_
#define TRACKGP_GP_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace trackgp::gp {

constexpr int kInputDim = 6;
constexpr int kOutputDim = 2;

using Input = Eigen::Matrix<double, kInputDim, 1>;

/// One observation: w = [dx_B(t+1) (2); dq_B(t) (3); phi_t], z = [v_l; v_r].
struct Sample {
  Input w = Input::Zero();
  Eigen::Vector2d z = Eigen::Vector2d::Zero();
};

class CholeskyFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SeArdKernel {
  Eigen::VectorXd log_lengthscales;
  double log_signal_variance = 0.0;

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b) const;
};

/// Entry (u, v) = sf2 * exp(-0.5 * sum_d (A(u,d) - B(v,d))^2 / l_d^2).
/// Rows of `a` and `b` are points.
Eigen::MatrixXd kernel_matrix(const SeArdKernel& kernel, const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b);

struct OutputHyperparameters {
  SeArdKernel kernel;
  double log_noise_variance = 0.0;

  /// Packed as [log l_1..log l_D, log sf2, log sn2].
  Eigen::VectorXd pack() const;
  static OutputHyperparameters unpack(const Eigen::VectorXd& theta);
};

/// Cholesky of K + sn2 I with jitter escalation from 1e-10 to 1e-4 times the
/// mean diagonal. Throws CholeskyFailure when the last level fails.
struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};
Factorization factorize(Eigen::MatrixXd covariance);
/// Same as factorize() but with a fixed, already known jitter.
Factorization factorize_with_jitter(Eigen::MatrixXd covariance, double jitter);

struct LikelihoodResult {
  double value = 0.0;
  Eigen::VectorXd gradient;  // d value / d theta, theta as in pack()
  double jitter = 0.0;
};

/// log p(z | X) = -z'(K+sn2 I)^-1 z / 2 - log|K+sn2 I| / 2 - N log(2 pi) / 2
/// and its gradient with respect to the packed log-space hyperparameters.
LikelihoodResult log_marginal_likelihood(const Eigen::VectorXd& theta,
                                         const Eigen::MatrixXd& inputs,
                                         const Eigen::VectorXd& targets,
                                         bool with_gradient = true);

struct OptimizerConfig {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  int restarts = 3;                    // total starts; the first is the default init
  double restart_spread = 1.0;         // std of log-space perturbations
  std::uint64_t seed = 0;
  std::size_t max_points = 5000;       // uniform subsample above this
  std::size_t max_opt_points = 500;    // subset used for hyperparameter search
  bool standardize = true;
  bool parallel_outputs = true;

  void validate() const;
};

/// Result of maximizing the log-likelihood from one or more starts.
struct OptimizationResult {
  Eigen::VectorXd theta;
  double log_likelihood = 0.0;
  int iterations = 0;      // summed over restarts
  int restarts = 0;
  bool converged = false;  // best start met the gradient or progress test
  /// Log-likelihood after every accepted step of the winning start.
  std::vector<double> trace;
};

/// L-BFGS ascent on the log-likelihood with a backtracking Armijo search.
/// Steps that do not increase the objective are never accepted.
OptimizationResult maximize_likelihood(const Eigen::MatrixXd& inputs,
                                       const Eigen::VectorXd& targets,
                                       const Eigen::VectorXd& initial_theta,
                                       const OptimizerConfig& config,
                                       std::uint64_t stream);

struct OutputReport {
  double log_likelihood = 0.0;  // on the full conditioning set
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
};

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // latent variance plus noise, original units
};

struct HeldOutError {
  std::vector<double> errors;
  double mean = 0.0;
};

class GpModel {
 public:
  GpModel() = default;

  /// Learns hyperparameters per output (independently) and conditions on the
  /// data. `init` overrides the data-driven initialization.
  static GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                     const OptimizerConfig& config,
                     const std::optional<std::vector<OutputHyperparameters>>& init = {});
  static GpModel fit(const std::vector<Sample>& data, const OptimizerConfig& config);

  /// Conditions on the data with fixed hyperparameters.
  static GpModel condition(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                           const std::vector<OutputHyperparameters>& hyper,
                           bool standardize = true);

  bool fitted() const { return !outputs_.empty(); }
  int input_dim() const { return static_cast<int>(input_mean_.size()); }
  int output_dim() const { return static_cast<int>(outputs_.size()); }
  std::size_t num_points() const { return static_cast<std::size_t>(train_inputs_.rows()); }

  Eigen::VectorXd predict_mean(const Eigen::VectorXd& query) const;
  Prediction predict(const Eigen::VectorXd& query) const;
  /// Row-wise mean prediction.
  Eigen::MatrixXd predict_mean_batch(const Eigen::MatrixXd& queries) const;

  const OutputHyperparameters& hyperparameters(int output) const;
  const OutputReport& report(int output) const;
  double jitter(int output) const;
  const Eigen::MatrixXd& train_inputs() const { return train_inputs_; }
  const Eigen::MatrixXd& train_targets() const { return train_targets_; }
  /// (K + sn2 I)^-1 z in standardized units, for consistency checks.
  const Eigen::VectorXd& weights(int output) const;
  const Eigen::VectorXd& input_mean() const { return input_mean_; }
  const Eigen::VectorXd& input_scale() const { return input_scale_; }

  std::string to_json() const;
  static GpModel from_json(const std::string& text);

 private:
  struct Output {
    OutputHyperparameters hyper;
    double target_mean = 0.0;
    double target_scale = 1.0;
    double jitter = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::VectorXd weights;
    OutputReport report;
  };

  void require_fitted() const;
  Eigen::RowVectorXd standardize(const Eigen::VectorXd& query) const;
  void build_output(std::size_t index, bool known_jitter);

  Eigen::MatrixXd train_inputs_;   // raw
  Eigen::MatrixXd train_targets_;  // raw
  Eigen::MatrixXd scaled_inputs_;
  Eigen::VectorXd input_mean_;
  Eigen::VectorXd input_scale_;
  bool standardized_ = true;
  std::vector<Output> outputs_;
};

HeldOutError held_out_error(const GpModel& model, const std::vector<Sample>& test);

Eigen::MatrixXd stack_inputs(const std::vector<Sample>& data);
Eigen::MatrixXd stack_targets(const std::vector<Sample>& data);

}  // namespace trackgp::gp

#endif  // TRACKGP_GP_HPP_
