//
// Copyright 2026 The Fairpremium Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "fairpremium/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "fairpremium/csv.hpp"
#include "fairpremium/errors.hpp"

namespace fairpremium {
namespace {

constexpr double kProbabilityClip = 1e-12;

double sigmoid(double z) {
  // Split on sign so neither branch can overflow exp().
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double apply_link(OutputLink link, double z) {
  return link == OutputLink::kSigmoid ? sigmoid(z) : z;
}

// Sum over values in ascending order: the result depends only on the
// multiset of inputs, never on record order.
double ordered_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

void expect_token(std::istream& in, const std::string& expected) {
  std::string token;
  if (!(in >> token) || token != expected) {
    throw ValidationError("model file: expected '" + expected + "', got '" +
                          token + "'");
  }
}

double read_double(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw ValidationError("model file: truncated");
  double v = 0.0;
  const auto result =
      std::from_chars(token.data(), token.data() + token.size(), v);
  if (result.ec != std::errc{} || result.ptr != token.data() + token.size()) {
    throw ValidationError("model file: bad number '" + token + "'");
  }
  return v;
}

long read_count(std::istream& in, const char* what) {
  long v = 0;
  if (!(in >> v) || v < 0) {
    throw ValidationError(std::string("model file: bad ") + what);
  }
  return v;
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (long i = 0; i < v.size(); ++i) {
    out << ' ' << format_double(v[i]);
  }
  out << '\n';
}

Eigen::VectorXd read_vector(std::istream& in, long size) {
  Eigen::VectorXd v(size);
  for (long i = 0; i < size; ++i) v[i] = read_double(in);
  return v;
}

void write_standardizer(std::ostream& out, const Standardizer& s) {
  out << "standardizer " << s.mean.size() << '\n';
  write_vector(out, s.mean);
  write_vector(out, s.scale);
}

Standardizer read_standardizer(std::istream& in) {
  expect_token(in, "standardizer");
  const long size = read_count(in, "standardizer width");
  Standardizer s;
  s.mean = read_vector(in, size);
  s.scale = read_vector(in, size);
  return s;
}

std::string link_name(OutputLink link) {
  return link == OutputLink::kSigmoid ? "sigmoid" : "identity";
}

OutputLink parse_link(const std::string& name) {
  if (name == "sigmoid") return OutputLink::kSigmoid;
  if (name == "identity") return OutputLink::kIdentity;
  throw ValidationError("model file: unknown link '" + name + "'");
}

}  // namespace

double loss(LossKind kind, double prediction, double target) {
  if (kind == LossKind::kSquaredError) {
    const double diff = prediction - target;
    return diff * diff;
  }
  if (target != 0.0 && target != 1.0) {
    throw ValidationError("cross-entropy target must be 0 or 1");
  }
  const double p = std::clamp(prediction, kProbabilityClip,
                              1.0 - kProbabilityClip);
  return target == 1.0 ? -std::log(p) : -std::log(1.0 - p);
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  if (empty()) return x;
  return (x - mean).cwiseQuotient(scale);
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  if (empty()) return x;
  return (x.rowwise() - mean.transpose())
      .array()
      .rowwise() /
      scale.transpose().array();
}

Standardizer fit_standardizer(const Eigen::MatrixXd& x) {
  const long n = x.rows();
  const long q = x.cols();
  if (n == 0) throw ValidationError("cannot standardize an empty matrix");
  Standardizer s;
  s.mean.resize(q);
  s.scale.resize(q);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (long c = 0; c < q; ++c) {
    for (long i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = x(i, c);
    const double mean = ordered_sum(column) / static_cast<double>(n);
    for (long i = 0; i < n; ++i) {
      const double centered = x(i, c) - mean;
      column[static_cast<std::size_t>(i)] = centered * centered;
    }
    const double var = ordered_sum(column) / static_cast<double>(n);
    const double sd = std::sqrt(var);
    s.mean[c] = mean;
    // Constant columns keep unit scale so they pass through centered.
    s.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

LinearModel make_linear(int input_dim, OutputLink link) {
  if (input_dim < 1) throw ValidationError("model needs at least one input");
  LinearModel m;
  m.w = Eigen::VectorXd::Zero(input_dim);
  m.b = 0.0;
  m.link = link;
  return m;
}

FeedForwardNet make_net(int input_dim, const std::vector<int>& hidden,
                        OutputLink link) {
  if (input_dim < 1) throw ValidationError("model needs at least one input");
  if (hidden.empty()) {
    throw ValidationError("net needs at least one hidden layer");
  }
  for (int width : hidden) {
    if (width < 1) throw ValidationError("hidden width must be positive");
  }
  FeedForwardNet net;
  net.link = link;
  int fan_in = input_dim;
  for (int width : hidden) {
    net.weights.emplace_back(Eigen::MatrixXd::Zero(width, fan_in));
    net.biases.emplace_back(Eigen::VectorXd::Zero(width));
    fan_in = width;
  }
  net.weights.emplace_back(Eigen::MatrixXd::Zero(1, fan_in));
  net.biases.emplace_back(Eigen::VectorXd::Zero(1));
  return net;
}

int FeedForwardNet::input_dim() const {
  if (weights.empty()) throw ValidationError("net has no layers");
  return static_cast<int>(weights.front().cols());
}

int FeedForwardNet::representation_dim() const {
  if (weights.size() < 2) throw ValidationError("net has no hidden layer");
  return static_cast<int>(weights[weights.size() - 2].rows());
}

double forward(const Model& model, const Eigen::VectorXd& x) {
  if (const auto* linear = std::get_if<LinearModel>(&model)) {
    const Eigen::VectorXd z = linear->standardizer.apply(x);
    return apply_link(linear->link, linear->w.dot(z) + linear->b);
  }
  const auto& net = std::get<FeedForwardNet>(model);
  Eigen::VectorXd a = net.standardizer.apply(x);
  for (std::size_t l = 0; l + 1 < net.weights.size(); ++l) {
    a = ((net.weights[l] * a + net.biases[l]).array().max(0.0)).matrix();
  }
  const double z = (net.weights.back() * a + net.biases.back())[0];
  return apply_link(net.link, z);
}

Eigen::VectorXd forward_batch(const Model& model, const Eigen::MatrixXd& x) {
  Eigen::VectorXd out(x.rows());
  if (const auto* linear = std::get_if<LinearModel>(&model)) {
    const Eigen::MatrixXd z = linear->standardizer.apply(x);
    out = (z * linear->w).array() + linear->b;
    if (linear->link == OutputLink::kSigmoid) {
      for (long i = 0; i < out.size(); ++i) out[i] = sigmoid(out[i]);
    }
    return out;
  }
  const auto& net = std::get<FeedForwardNet>(model);
  Eigen::MatrixXd a = net.standardizer.apply(x);
  for (std::size_t l = 0; l + 1 < net.weights.size(); ++l) {
    a = ((a * net.weights[l].transpose()).rowwise() +
         net.biases[l].transpose())
            .array()
            .max(0.0)
            .matrix();
  }
  out = (a * net.weights.back().transpose()).array() + net.biases.back()[0];
  if (net.link == OutputLink::kSigmoid) {
    for (long i = 0; i < out.size(); ++i) out[i] = sigmoid(out[i]);
  }
  return out;
}

Eigen::VectorXd extract_representation(const FeedForwardNet& net,
                                       const Eigen::VectorXd& x) {
  if (net.weights.size() < 2) {
    throw ValidationError("net has no hidden layer to expose");
  }
  Eigen::VectorXd a = net.standardizer.apply(x);
  for (std::size_t l = 0; l + 1 < net.weights.size(); ++l) {
    a = ((net.weights[l] * a + net.biases[l]).array().max(0.0)).matrix();
  }
  return a;
}

Eigen::MatrixXd representation_batch(const FeedForwardNet& net,
                                     const Eigen::MatrixXd& x) {
  if (net.weights.size() < 2) {
    throw ValidationError("net has no hidden layer to expose");
  }
  Eigen::MatrixXd a = net.standardizer.apply(x);
  for (std::size_t l = 0; l + 1 < net.weights.size(); ++l) {
    a = ((a * net.weights[l].transpose()).rowwise() +
         net.biases[l].transpose())
            .array()
            .max(0.0)
            .matrix();
  }
  return a;
}

void save_model(std::ostream& out, const Model& model) {
  out << "fairpremium-model 1\n";
  if (const auto* linear = std::get_if<LinearModel>(&model)) {
    out << "kind linear\n";
    out << "link " << link_name(linear->link) << '\n';
    write_standardizer(out, linear->standardizer);
    out << "inputs " << linear->w.size() << '\n';
    write_vector(out, linear->w);
    out << ' ' << format_double(linear->b) << '\n';
    return;
  }
  const auto& net = std::get<FeedForwardNet>(model);
  out << "kind net\n";
  out << "link " << link_name(net.link) << '\n';
  write_standardizer(out, net.standardizer);
  out << "layers " << net.weights.size() << '\n';
  out << "dims " << net.weights.front().cols();
  for (const auto& w : net.weights) out << ' ' << w.rows();
  out << '\n';
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (long r = 0; r < net.weights[l].rows(); ++r) {
      write_vector(out, net.weights[l].row(r));
    }
    write_vector(out, net.biases[l]);
  }
}

Model load_model(std::istream& in) {
  expect_token(in, "fairpremium-model");
  const long version = read_count(in, "version");
  if (version != 1) {
    throw ValidationError("model file: unsupported version " +
                          std::to_string(version));
  }
  expect_token(in, "kind");
  std::string kind;
  in >> kind;
  expect_token(in, "link");
  std::string link;
  in >> link;

  if (kind == "linear") {
    LinearModel m;
    m.link = parse_link(link);
    m.standardizer = read_standardizer(in);
    expect_token(in, "inputs");
    const long inputs = read_count(in, "input width");
    m.w = read_vector(in, inputs);
    m.b = read_double(in);
    return m;
  }
  if (kind != "net") {
    throw ValidationError("model file: unknown kind '" + kind + "'");
  }
  FeedForwardNet net;
  net.link = parse_link(link);
  net.standardizer = read_standardizer(in);
  expect_token(in, "layers");
  const long layers = read_count(in, "layer count");
  expect_token(in, "dims");
  std::vector<long> dims(static_cast<std::size_t>(layers) + 1);
  for (auto& d : dims) d = read_count(in, "layer width");
  for (long l = 0; l < layers; ++l) {
    const long rows = dims[static_cast<std::size_t>(l) + 1];
    const long cols = dims[static_cast<std::size_t>(l)];
    Eigen::MatrixXd w(rows, cols);
    for (long r = 0; r < rows; ++r) {
      w.row(r) = read_vector(in, cols).transpose();
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(read_vector(in, rows));
  }
  return net;
}

void save_model_file(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write model file: " + path);
  save_model(out, model);
  if (!out) throw ValidationError("failed writing model file: " + path);
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace fairpremium
