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

#include "trackgp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <future>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace trackgp::gp {
namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterStop = 1e-4;
// Log-space hyperparameters beyond this magnitude are treated as infeasible.
constexpr double kLogBound = 25.0;

bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto diag = llt.matrixLLT().diagonal();
  return diag.allFinite() && (diag.array() > 0.0).all();
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

// Sorted uniform subset of size k out of n.
std::vector<Eigen::Index> subsample(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  if (k >= n) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Population mean and standard deviation of each column; degenerate columns
// get unit scale.
void column_standardization(const Eigen::MatrixXd& x, bool enabled, Eigen::VectorXd& mean,
                            Eigen::VectorXd& scale) {
  if (!enabled) {
    mean = Eigen::VectorXd::Zero(x.cols());
    scale = Eigen::VectorXd::Ones(x.cols());
    return;
  }
  const double n = static_cast<double>(x.rows());
  mean = x.colwise().mean().transpose();
  scale = ((x.rowwise() - mean.transpose()).array().square().colwise().sum() / n)
              .sqrt()
              .transpose();
  for (Eigen::Index d = 0; d < scale.size(); ++d) {
    if (!(scale(d) > 1e-12)) scale(d) = 1.0;
  }
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

double log_likelihood_from(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& weights) {
  const double n = static_cast<double>(z.size());
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * z.dot(weights) - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

struct Evaluation {
  bool ok = false;
  double f = std::numeric_limits<double>::infinity();  // negative log-likelihood
  Eigen::VectorXd g;
};

Evaluation evaluate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x,
                    const Eigen::VectorXd& z) {
  Evaluation e;
  if (!theta.allFinite() || theta.cwiseAbs().maxCoeff() > kLogBound) return e;
  try {
    const LikelihoodResult r = log_marginal_likelihood(theta, x, z, true);
    if (!std::isfinite(r.value) || !r.gradient.allFinite()) return e;
    e.ok = true;
    e.f = -r.value;
    e.g = -r.gradient;
  } catch (const CholeskyFailure&) {
  }
  return e;
}

struct LbfgsOutcome {
  Eigen::VectorXd theta;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

LbfgsOutcome minimize_lbfgs(Eigen::VectorXd x, Evaluation current, const Eigen::MatrixXd& inputs,
                            const Eigen::VectorXd& targets, const OptimizerConfig& config) {
  constexpr std::size_t kMemory = 10;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 40;
  constexpr double kRelativeProgress = 1e-12;

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  LbfgsOutcome out;
  out.trace.push_back(-current.f);

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    if (current.g.cwiseAbs().maxCoeff() < config.gradient_tolerance) {
      out.converged = true;
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd q = current.g;
    std::vector<double> rho(s_hist.size());
    std::vector<double> a(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      rho[i] = 1.0 / y_hist[i].dot(s_hist[i]);
      a[i] = rho[i] * s_hist[i].dot(q);
      q -= a[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      q /= std::max(1.0, current.g.cwiseAbs().maxCoeff());
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double b = rho[i] * y_hist[i].dot(q);
      q += s_hist[i] * (a[i] - b);
    }
    Eigen::VectorXd direction = -q;
    double slope = current.g.dot(direction);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      direction = -current.g / std::max(1.0, current.g.cwiseAbs().maxCoeff());
      slope = current.g.dot(direction);
    }

    double step = 1.0;
    Evaluation next;
    Eigen::VectorXd candidate;
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      candidate = x + step * direction;
      next = evaluate(candidate, inputs, targets);
      if (next.ok && next.f < current.f && next.f <= current.f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No ascent step found along a descent direction: stationary to
      // working precision.
      out.converged = true;
      break;
    }
    ++out.iterations;
    const Eigen::VectorXd s = candidate - x;
    const Eigen::VectorXd y = next.g - current.g;
    const double progress = current.f - next.f;
    x = candidate;
    current = next;
    out.trace.push_back(-current.f);
    if (s.dot(y) > 1e-12 * y.squaredNorm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      if (s_hist.size() > kMemory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    if (progress < kRelativeProgress * std::max(1.0, std::abs(current.f))) {
      out.converged = true;
      break;
    }
  }
  out.theta = x;
  out.f = current.f;
  return out;
}

}  // namespace

double SeArdKernel::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                               const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double diff = (a(d) - b(d)) / std::exp(log_lengthscales(d));
    r2 += diff * diff;
  }
  return std::exp(log_signal_variance) * std::exp(-0.5 * r2);
}

Eigen::MatrixXd kernel_matrix(const SeArdKernel& kernel, const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b) {
  if (a.cols() != kernel.log_lengthscales.size() || b.cols() != kernel.log_lengthscales.size()) {
    throw std::invalid_argument("kernel_matrix: input dimension mismatch");
  }
  const Eigen::RowVectorXd inv_l = (-kernel.log_lengthscales.array()).exp().matrix().transpose();
  const Eigen::MatrixXd as = a.array().rowwise() * inv_l.array();
  const Eigen::MatrixXd bs = b.array().rowwise() * inv_l.array();
  const double sf2 = std::exp(kernel.log_signal_variance);
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index v = 0; v < b.rows(); ++v) {
    for (Eigen::Index u = 0; u < a.rows(); ++u) {
      k(u, v) = sf2 * std::exp(-0.5 * (as.row(u) - bs.row(v)).squaredNorm());
    }
  }
  return k;
}

Eigen::VectorXd OutputHyperparameters::pack() const {
  const Eigen::Index d = kernel.log_lengthscales.size();
  Eigen::VectorXd theta(d + 2);
  theta.head(d) = kernel.log_lengthscales;
  theta(d) = kernel.log_signal_variance;
  theta(d + 1) = log_noise_variance;
  return theta;
}

OutputHyperparameters OutputHyperparameters::unpack(const Eigen::VectorXd& theta) {
  if (theta.size() < 3) throw std::invalid_argument("hyperparameter vector too short");
  const Eigen::Index d = theta.size() - 2;
  OutputHyperparameters h;
  h.kernel.log_lengthscales = theta.head(d);
  h.kernel.log_signal_variance = theta(d);
  h.log_noise_variance = theta(d + 1);
  return h;
}

Factorization factorize(Eigen::MatrixXd covariance) {
  Factorization f;
  f.llt.compute(covariance);
  if (factor_ok(f.llt)) return f;
  const double mean_diag = covariance.diagonal().mean();
  for (double level = kJitterStart; level <= kJitterStop * (1.0 + 1e-9); level *= 10.0) {
    const double jitter = level * mean_diag;
    covariance.diagonal().array() += jitter - f.jitter;
    f.jitter = jitter;
    f.llt.compute(covariance);
    if (factor_ok(f.llt)) return f;
  }
  throw CholeskyFailure("Cholesky failed after jitter escalation to 1e-4 x mean diagonal");
}

Factorization factorize_with_jitter(Eigen::MatrixXd covariance, double jitter) {
  covariance.diagonal().array() += jitter;
  Factorization f;
  f.jitter = jitter;
  f.llt.compute(covariance);
  if (!factor_ok(f.llt)) throw CholeskyFailure("Cholesky failed with stored jitter");
  return f;
}

LikelihoodResult log_marginal_likelihood(const Eigen::VectorXd& theta,
                                         const Eigen::MatrixXd& inputs,
                                         const Eigen::VectorXd& targets, bool with_gradient) {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index dims = inputs.cols();
  if (theta.size() != dims + 2) throw std::invalid_argument("theta size must be input dim + 2");
  if (targets.size() != n) throw std::invalid_argument("targets size mismatch");

  const OutputHyperparameters h = OutputHyperparameters::unpack(theta);
  const double sn2 = std::exp(h.log_noise_variance);
  const Eigen::MatrixXd kf = kernel_matrix(h.kernel, inputs, inputs);
  Eigen::MatrixXd c = kf;
  c.diagonal().array() += sn2;
  const Factorization fact = factorize(std::move(c));
  const Eigen::VectorXd alpha = fact.llt.solve(targets);

  LikelihoodResult r;
  r.jitter = fact.jitter;
  r.value = log_likelihood_from(fact.llt, targets, alpha);
  if (!with_gradient) return r;

  // d/dtheta = 0.5 tr((alpha alpha' - C^-1) dC/dtheta)
  Eigen::MatrixXd q = -fact.llt.solve(Eigen::MatrixXd::Identity(n, n));
  q.noalias() += alpha * alpha.transpose();
  const Eigen::MatrixXd w = q.cwiseProduct(kf);

  r.gradient.resize(dims + 2);
  for (Eigen::Index d = 0; d < dims; ++d) {
    const double inv_l2 = std::exp(-2.0 * h.kernel.log_lengthscales(d));
    double acc = 0.0;
    for (Eigen::Index v = 0; v < n; ++v) {
      const double xv = inputs(v, d);
      for (Eigen::Index u = v + 1; u < n; ++u) {
        const double diff = inputs(u, d) - xv;
        acc += w(u, v) * diff * diff;
      }
    }
    // Off-diagonal pairs appear twice; the 0.5 prefactor cancels the 2.
    r.gradient(d) = acc * inv_l2;
  }
  r.gradient(dims) = 0.5 * w.sum();
  r.gradient(dims + 1) = 0.5 * sn2 * q.trace();
  return r;
}

void OptimizerConfig::validate() const {
  if (max_iterations < 0) throw std::invalid_argument("max_iterations must be >= 0");
  if (!(gradient_tolerance > 0.0)) throw std::invalid_argument("gradient_tolerance must be > 0");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (!(restart_spread >= 0.0)) throw std::invalid_argument("restart_spread must be >= 0");
  if (max_points < 2) throw std::invalid_argument("max_points must be >= 2");
  if (max_opt_points < 2) throw std::invalid_argument("max_opt_points must be >= 2");
}

OptimizationResult maximize_likelihood(const Eigen::MatrixXd& inputs,
                                       const Eigen::VectorXd& targets,
                                       const Eigen::VectorXd& initial_theta,
                                       const OptimizerConfig& config, std::uint64_t stream) {
  OptimizationResult best;
  bool have_best = false;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < config.restarts; ++r) {
    Eigen::VectorXd start = initial_theta;
    if (r > 0) {
      auto rng = make_rng(config.seed, stream, static_cast<std::uint64_t>(r));
      for (Eigen::Index i = 0; i < start.size(); ++i) start(i) += config.restart_spread * normal(rng);
    }
    const Evaluation first = evaluate(start, inputs, targets);
    if (!first.ok) continue;
    const LbfgsOutcome run = minimize_lbfgs(start, first, inputs, targets, config);
    best.iterations += run.iterations;
    ++best.restarts;
    if (!have_best || -run.f > best.log_likelihood) {
      have_best = true;
      best.theta = run.theta;
      best.log_likelihood = -run.f;
      best.converged = run.converged;
      best.trace = run.trace;
    }
  }
  if (!have_best) {
    throw OptimizationError("log-likelihood not finite at any starting point");
  }
  return best;
}

// ---------------------------------------------------------------------------
// GpModel

void GpModel::require_fitted() const {
  if (!fitted()) throw std::logic_error("GP model is not fitted");
}

Eigen::RowVectorXd GpModel::standardize(const Eigen::VectorXd& query) const {
  if (query.size() != input_dim()) throw std::invalid_argument("query dimension mismatch");
  return ((query - input_mean_).array() / input_scale_.array()).matrix().transpose();
}

void GpModel::build_output(std::size_t index, bool known_jitter) {
  Output& out = outputs_[index];
  const auto j = static_cast<Eigen::Index>(index);
  const Eigen::VectorXd z =
      (train_targets_.col(j).array() - out.target_mean) / out.target_scale;
  Eigen::MatrixXd c = kernel_matrix(out.hyper.kernel, scaled_inputs_, scaled_inputs_);
  c.diagonal().array() += std::exp(out.hyper.log_noise_variance);
  Factorization f = known_jitter ? factorize_with_jitter(std::move(c), out.jitter)
                                 : factorize(std::move(c));
  out.jitter = f.jitter;
  out.llt = std::move(f.llt);
  out.weights = out.llt.solve(z);
  out.report.log_likelihood = log_likelihood_from(out.llt, z, out.weights);
}

GpModel GpModel::condition(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                           const std::vector<OutputHyperparameters>& hyper, bool standardize) {
  if (inputs.rows() < 1 || inputs.rows() != targets.rows()) {
    throw std::invalid_argument("inputs/targets row mismatch or empty");
  }
  if (static_cast<Eigen::Index>(hyper.size()) != targets.cols()) {
    throw std::invalid_argument("one hyperparameter set per output required");
  }
  if (!inputs.allFinite() || !targets.allFinite()) throw std::invalid_argument("non-finite data");
  GpModel m;
  m.train_inputs_ = inputs;
  m.train_targets_ = targets;
  m.standardized_ = standardize;
  column_standardization(inputs, standardize, m.input_mean_, m.input_scale_);
  m.scaled_inputs_ = (inputs.rowwise() - m.input_mean_.transpose()).array().rowwise() /
                     m.input_scale_.transpose().array();
  m.outputs_.resize(hyper.size());
  for (std::size_t j = 0; j < hyper.size(); ++j) {
    Output& out = m.outputs_[j];
    if (hyper[j].kernel.log_lengthscales.size() != inputs.cols()) {
      throw std::invalid_argument("lengthscale count must equal input dimension");
    }
    out.hyper = hyper[j];
    if (standardize) {
      Eigen::VectorXd mean;
      Eigen::VectorXd scale;
      column_standardization(targets.col(static_cast<Eigen::Index>(j)), true, mean, scale);
      out.target_mean = mean(0);
      out.target_scale = scale(0);
    }
    m.build_output(j, false);
  }
  return m;
}

GpModel GpModel::fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                     const OptimizerConfig& config,
                     const std::optional<std::vector<OutputHyperparameters>>& init) {
  config.validate();
  if (inputs.rows() < 2) throw std::invalid_argument("at least 2 samples are required");
  if (inputs.rows() != targets.rows()) throw std::invalid_argument("inputs/targets row mismatch");
  if (!inputs.allFinite() || !targets.allFinite()) throw std::invalid_argument("non-finite data");

  Eigen::MatrixXd x = inputs;
  Eigen::MatrixXd y = targets;
  if (static_cast<std::size_t>(x.rows()) > config.max_points) {
    auto rng = make_rng(config.seed, 0xdada, 0);
    const auto idx = subsample(x.rows(), static_cast<Eigen::Index>(config.max_points), rng);
    x = take_rows(inputs, idx);
    y = take_rows(targets, idx);
  }

  // Initial conditioning fixes the standardization; hyperparameters are
  // replaced below.
  std::vector<OutputHyperparameters> start(static_cast<std::size_t>(y.cols()));
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    OutputHyperparameters& h = start[static_cast<std::size_t>(j)];
    if (init) {
      h = init->at(static_cast<std::size_t>(j));
      continue;
    }
    if (config.standardize) {
      h.kernel.log_lengthscales = Eigen::VectorXd::Zero(x.cols());
      h.kernel.log_signal_variance = 0.0;
      h.log_noise_variance = std::log(0.01);
    } else {
      const double n = static_cast<double>(x.rows());
      h.kernel.log_lengthscales.resize(x.cols());
      for (Eigen::Index d = 0; d < x.cols(); ++d) {
        const auto col = x.col(d).array();
        const double sd = std::sqrt((col - col.mean()).square().sum() / n);
        h.kernel.log_lengthscales(d) = std::log(sd > 1e-12 ? sd : 1.0);
      }
      const auto t = y.col(j).array();
      double var = (t - t.mean()).square().sum() / n;
      if (!(var > 1e-24)) var = 1.0;
      h.kernel.log_signal_variance = std::log(var);
      h.log_noise_variance = std::log(0.01 * var);
    }
  }

  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  column_standardization(x, config.standardize, input_mean, input_scale);
  const Eigen::MatrixXd scaled = (x.rowwise() - input_mean.transpose()).array().rowwise() /
                                 input_scale.transpose().array();

  std::vector<Eigen::Index> opt_idx;
  {
    auto rng = make_rng(config.seed, 0x0b7, 0);
    opt_idx = subsample(x.rows(), static_cast<Eigen::Index>(config.max_opt_points), rng);
  }
  const Eigen::MatrixXd opt_x = take_rows(scaled, opt_idx);

  auto optimize_output = [&](Eigen::Index j) {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    column_standardization(y.col(j), config.standardize, mean, scale);
    const Eigen::VectorXd z_all = (y.col(j).array() - mean(0)) / scale(0);
    Eigen::VectorXd z_opt(static_cast<Eigen::Index>(opt_idx.size()));
    for (std::size_t i = 0; i < opt_idx.size(); ++i) z_opt(static_cast<Eigen::Index>(i)) = z_all(opt_idx[i]);
    return maximize_likelihood(opt_x, z_opt, start[static_cast<std::size_t>(j)].pack(), config,
                               static_cast<std::uint64_t>(j));
  };

  std::vector<OptimizationResult> results(static_cast<std::size_t>(y.cols()));
  if (config.parallel_outputs && y.cols() > 1) {
    std::vector<std::future<OptimizationResult>> jobs;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      jobs.push_back(std::async(std::launch::async, optimize_output, j));
    }
    for (std::size_t j = 0; j < jobs.size(); ++j) results[j] = jobs[j].get();
  } else {
    for (Eigen::Index j = 0; j < y.cols(); ++j) results[static_cast<std::size_t>(j)] = optimize_output(j);
  }

  std::vector<OutputHyperparameters> learned;
  for (const auto& r : results) learned.push_back(OutputHyperparameters::unpack(r.theta));
  GpModel model = condition(x, y, learned, config.standardize);
  for (std::size_t j = 0; j < results.size(); ++j) {
    OutputReport& rep = model.outputs_[j].report;
    rep.iterations = results[j].iterations;
    rep.restarts = results[j].restarts;
    rep.converged = results[j].converged;
  }
  return model;
}

GpModel GpModel::fit(const std::vector<Sample>& data, const OptimizerConfig& config) {
  return fit(stack_inputs(data), stack_targets(data), config);
}

Eigen::VectorXd GpModel::predict_mean(const Eigen::VectorXd& query) const {
  require_fitted();
  const Eigen::RowVectorXd q = standardize(query);
  Eigen::VectorXd mean(output_dim());
  for (std::size_t j = 0; j < outputs_.size(); ++j) {
    const Output& out = outputs_[j];
    const Eigen::VectorXd k = kernel_matrix(out.hyper.kernel, scaled_inputs_, q);
    mean(static_cast<Eigen::Index>(j)) = out.target_mean + out.target_scale * k.dot(out.weights);
  }
  return mean;
}

Prediction GpModel::predict(const Eigen::VectorXd& query) const {
  require_fitted();
  const Eigen::RowVectorXd q = standardize(query);
  Prediction p;
  p.mean.resize(output_dim());
  p.variance.resize(output_dim());
  for (std::size_t j = 0; j < outputs_.size(); ++j) {
    const Output& out = outputs_[j];
    const Eigen::VectorXd k = kernel_matrix(out.hyper.kernel, scaled_inputs_, q);
    const Eigen::VectorXd v = out.llt.matrixL().solve(k);
    const double latent =
        std::max(0.0, std::exp(out.hyper.kernel.log_signal_variance) - v.squaredNorm());
    const auto jj = static_cast<Eigen::Index>(j);
    p.mean(jj) = out.target_mean + out.target_scale * k.dot(out.weights);
    p.variance(jj) = out.target_scale * out.target_scale *
                     (latent + std::exp(out.hyper.log_noise_variance));
  }
  return p;
}

Eigen::MatrixXd GpModel::predict_mean_batch(const Eigen::MatrixXd& queries) const {
  require_fitted();
  if (queries.cols() != input_dim()) throw std::invalid_argument("query dimension mismatch");
  const Eigen::MatrixXd q = (queries.rowwise() - input_mean_.transpose()).array().rowwise() /
                            input_scale_.transpose().array();
  Eigen::MatrixXd out(queries.rows(), output_dim());
  for (std::size_t j = 0; j < outputs_.size(); ++j) {
    const Output& o = outputs_[j];
    const Eigen::MatrixXd k = kernel_matrix(o.hyper.kernel, q, scaled_inputs_);
    out.col(static_cast<Eigen::Index>(j)) =
        (o.target_mean + o.target_scale * (k * o.weights).array()).matrix();
  }
  return out;
}

const OutputHyperparameters& GpModel::hyperparameters(int output) const {
  require_fitted();
  return outputs_.at(static_cast<std::size_t>(output)).hyper;
}

const OutputReport& GpModel::report(int output) const {
  require_fitted();
  return outputs_.at(static_cast<std::size_t>(output)).report;
}

double GpModel::jitter(int output) const {
  require_fitted();
  return outputs_.at(static_cast<std::size_t>(output)).jitter;
}

const Eigen::VectorXd& GpModel::weights(int output) const {
  require_fitted();
  return outputs_.at(static_cast<std::size_t>(output)).weights;
}

HeldOutError held_out_error(const GpModel& model, const std::vector<Sample>& test) {
  if (test.empty()) throw std::invalid_argument("held_out_error: empty test set");
  const Eigen::MatrixXd pred = model.predict_mean_batch(stack_inputs(test));
  HeldOutError e;
  e.errors.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Eigen::Vector2d diff = pred.row(static_cast<Eigen::Index>(i)).transpose() - test[i].z;
    e.errors.push_back(diff.norm());
  }
  e.mean = std::accumulate(e.errors.begin(), e.errors.end(), 0.0) /
           static_cast<double>(e.errors.size());
  return e;
}

Eigen::MatrixXd stack_inputs(const std::vector<Sample>& data) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), kInputDim);
  for (std::size_t i = 0; i < data.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = data[i].w.transpose();
  return x;
}

Eigen::MatrixXd stack_targets(const std::vector<Sample>& data) {
  Eigen::MatrixXd z(static_cast<Eigen::Index>(data.size()), kOutputDim);
  for (std::size_t i = 0; i < data.size(); ++i) z.row(static_cast<Eigen::Index>(i)) = data[i].z.transpose();
  return z;
}

}  // namespace trackgp::gp
