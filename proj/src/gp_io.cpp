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

#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "trackgp/gp.hpp"

namespace trackgp::gp {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "trackgp.cigp";
constexpr int kVersion = 1;

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw std::invalid_argument("matrix dims do not match data length");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

}  // namespace

std::string GpModel::to_json() const {
  require_fitted();
  json outputs = json::array();
  for (const Output& out : outputs_) {
    outputs.push_back({
        {"log_lengthscales", to_vector(out.hyper.kernel.log_lengthscales)},
        {"log_signal_variance", out.hyper.kernel.log_signal_variance},
        {"log_noise_variance", out.hyper.log_noise_variance},
        {"target_mean", out.target_mean},
        {"target_scale", out.target_scale},
        {"jitter", out.jitter},
        {"log_likelihood", out.report.log_likelihood},
        {"iterations", out.report.iterations},
        {"restarts", out.report.restarts},
        {"converged", out.report.converged},
    });
  }
  const json doc = {
      {"format", kFormat},
      {"version", kVersion},
      {"kernel", "squared_exponential_ard"},
      {"standardized", standardized_},
      {"input_dim", input_dim()},
      {"output_dim", output_dim()},
      {"input_mean", to_vector(input_mean_)},
      {"input_scale", to_vector(input_scale_)},
      {"outputs", outputs},
      {"train_inputs", matrix_to_json(train_inputs_)},
      {"train_targets", matrix_to_json(train_targets_)},
  };
  return doc.dump(1) + "\n";
}

GpModel GpModel::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("model is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw std::invalid_argument("unexpected model format");
    }
    if (doc.at("version").get<int>() != kVersion) throw std::invalid_argument("unsupported model version");
    if (doc.at("kernel").get<std::string>() != "squared_exponential_ard") {
      throw std::invalid_argument("unsupported kernel kind");
    }
    GpModel m;
    m.standardized_ = doc.at("standardized").get<bool>();
    m.input_mean_ = from_vector(doc.at("input_mean"));
    m.input_scale_ = from_vector(doc.at("input_scale"));
    m.train_inputs_ = matrix_from_json(doc.at("train_inputs"));
    m.train_targets_ = matrix_from_json(doc.at("train_targets"));
    const auto in_dim = doc.at("input_dim").get<Eigen::Index>();
    const auto out_dim = doc.at("output_dim").get<Eigen::Index>();
    if (m.input_mean_.size() != in_dim || m.input_scale_.size() != in_dim ||
        m.train_inputs_.cols() != in_dim || m.train_targets_.cols() != out_dim ||
        m.train_inputs_.rows() != m.train_targets_.rows() || m.train_inputs_.rows() < 1) {
      throw std::invalid_argument("model dimensions are inconsistent");
    }
    const json& outputs = doc.at("outputs");
    if (static_cast<Eigen::Index>(outputs.size()) != out_dim) {
      throw std::invalid_argument("output count mismatch");
    }
    m.scaled_inputs_ = (m.train_inputs_.rowwise() - m.input_mean_.transpose()).array().rowwise() /
                       m.input_scale_.transpose().array();
    m.outputs_.resize(outputs.size());
    for (std::size_t j = 0; j < outputs.size(); ++j) {
      const json& o = outputs[j];
      Output& out = m.outputs_[j];
      out.hyper.kernel.log_lengthscales = from_vector(o.at("log_lengthscales"));
      if (out.hyper.kernel.log_lengthscales.size() != in_dim) {
        throw std::invalid_argument("lengthscale count mismatch");
      }
      out.hyper.kernel.log_signal_variance = o.at("log_signal_variance").get<double>();
      out.hyper.log_noise_variance = o.at("log_noise_variance").get<double>();
      out.target_mean = o.at("target_mean").get<double>();
      out.target_scale = o.at("target_scale").get<double>();
      out.jitter = o.at("jitter").get<double>();
      out.report.iterations = o.at("iterations").get<int>();
      out.report.restarts = o.at("restarts").get<int>();
      out.report.converged = o.at("converged").get<bool>();
      m.build_output(j, true);
    }
    return m;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed model: ") + e.what());
  }
}

}  // namespace trackgp::gp
