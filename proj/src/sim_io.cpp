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

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trackgp/sim.hpp"

namespace trackgp {
namespace {

constexpr const char* kLogHeader =
    "t,x_d,y_d,x,y,phi,x_B,y_B,dx,dy,dphi,vl_cmd,vr_cmd,vl_real,vr_real,a_l,a_r,beta,err";
constexpr const char* kDatasetHeader = "w1,w2,w3,w4,w5,w6,z1,z2";

// Shortest representation that round-trips.
void put(std::ostream& os, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, res.ptr - buf);
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

void write_log_csv(std::ostream& os, const RolloutLog& log) {
  os << kLogHeader << '\n';
  for (const RolloutStep& s : log.steps) {
    os << s.t;
    for (double v : {s.ref.x_d, s.ref.y_d, s.pose.x, s.pose.y, s.pose.phi, s.offset.x_b,
                     s.offset.y_b, s.delta.dx, s.delta.dy, s.delta.dphi, s.command.v_left,
                     s.command.v_right, s.realized.v_left, s.realized.v_right, s.slip.a_left,
                     s.slip.a_right, s.slip.beta, s.error}) {
      os << ',';
      put(os, v);
    }
    os << '\n';
  }
}

void write_dataset_csv(std::ostream& os, const std::vector<gp::Sample>& samples) {
  os << kDatasetHeader << '\n';
  for (const gp::Sample& s : samples) {
    for (int i = 0; i < gp::kInputDim; ++i) {
      put(os, s.w(i));
      os << ',';
    }
    put(os, s.z(0));
    os << ',';
    put(os, s.z(1));
    os << '\n';
  }
}

std::vector<gp::Sample> read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kDatasetHeader) {
    throw std::invalid_argument(std::string("dataset header must be '") + kDatasetHeader + "'");
  }
  std::vector<gp::Sample> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      const auto res = std::from_chars(begin, end, v);
      if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
        throw std::invalid_argument("dataset line " + std::to_string(line_no) +
                                    ": bad number '" + cell + "'");
      }
      values.push_back(v);
    }
    if (values.size() != gp::kInputDim + gp::kOutputDim) {
      throw std::invalid_argument("dataset line " + std::to_string(line_no) +
                                  ": expected 8 columns");
    }
    gp::Sample s;
    for (int i = 0; i < gp::kInputDim; ++i) s.w(i) = values[static_cast<std::size_t>(i)];
    s.z << values[6], values[7];
    out.push_back(s);
  }
  return out;
}

}  // namespace trackgp
