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

#include "fairpremium/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "fairpremium/errors.hpp"
#include "fairpremium/rng.hpp"

namespace fairpremium {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_loss_link(LossKind kind, OutputLink link) {
  if (kind == LossKind::kBinaryCrossEntropy && link != OutputLink::kSigmoid) {
    throw ValidationError(
        "cross-entropy training requires a sigmoid output link");
  }
}

// d loss / d pre-link-output for one record.  For sigmoid cross-entropy the
// link and loss derivatives cancel into the residual.
double output_delta(LossKind kind, OutputLink link, double f, double y) {
  if (kind == LossKind::kBinaryCrossEntropy) return f - y;
  const double residual = 2.0 * (f - y);
  if (link == OutputLink::kSigmoid) return residual * f * (1.0 - f);
  return residual;
}

struct LinearGrads {
  Eigen::VectorXd w;
  double b = 0.0;

  double max_abs() const { return std::max(w.cwiseAbs().maxCoeff(), std::abs(b)); }
};

struct NetGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  double max_abs() const {
    double m = 0.0;
    for (const auto& w : weights) m = std::max(m, w.cwiseAbs().maxCoeff());
    for (const auto& b : biases) m = std::max(m, b.cwiseAbs().maxCoeff());
    return m;
  }
};

// Forward activations on standardized inputs.  Row i of every matrix depends
// only on record i, so these are stable under any permutation of other rows.
struct NetForward {
  std::vector<Eigen::MatrixXd> pre;   // pre-activations per layer
  std::vector<Eigen::MatrixXd> act;   // post-ReLU activations (hidden only)
  Eigen::VectorXd output;             // post-link scalar output
};

NetForward net_forward(const FeedForwardNet& net, const Eigen::MatrixXd& z) {
  NetForward fwd;
  const std::size_t layers = net.weights.size();
  Eigen::MatrixXd a = z;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Eigen::MatrixXd p =
        (a * net.weights[l].transpose()).rowwise() + net.biases[l].transpose();
    a = p.array().max(0.0).matrix();
    fwd.pre.push_back(std::move(p));
    fwd.act.push_back(a);
  }
  Eigen::VectorXd out =
      (a * net.weights.back().transpose()).col(0).array() +
      net.biases.back()[0];
  if (net.link == OutputLink::kSigmoid) {
    for (long i = 0; i < out.size(); ++i) out[i] = sigmoid(out[i]);
  }
  fwd.output = std::move(out);
  return fwd;
}

// Gradient of sum_i weight[i] * loss(f(z_i), y_i) for a linear model.
// Accumulation runs strictly in record order; zero-weight records are
// skipped outright so they can never perturb the sum.
Eigen::VectorXd linear_forward(const LinearModel& model,
                               const Eigen::MatrixXd& z) {
  Eigen::VectorXd f = (z * model.w).array() + model.b;
  if (model.link == OutputLink::kSigmoid) {
    for (long i = 0; i < f.size(); ++i) f[i] = sigmoid(f[i]);
  }
  return f;
}

LinearGrads linear_gradient(const LinearModel& model, const Eigen::MatrixXd& z,
                            const Eigen::VectorXd& y,
                            const Eigen::VectorXd& weight, LossKind kind,
                            const Eigen::VectorXd& f) {
  LinearGrads g;
  g.w = Eigen::VectorXd::Zero(model.w.size());
  for (long i = 0; i < z.rows(); ++i) {
    if (weight[i] == 0.0) continue;
    const double delta =
        weight[i] * output_delta(kind, model.link, f[i], y[i]);
    g.w.noalias() += delta * z.row(i).transpose();
    g.b += delta;
  }
  return g;
}

NetGrads net_gradient(const FeedForwardNet& net, const Eigen::MatrixXd& z,
                      const Eigen::VectorXd& y, const Eigen::VectorXd& weight,
                      LossKind kind, const NetForward& fwd) {
  const std::size_t layers = net.weights.size();
  NetGrads g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    g.weights[l] = Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                         net.weights[l].cols());
    g.biases[l] = Eigen::VectorXd::Zero(net.biases[l].size());
  }

  const long n = z.rows();
  Eigen::VectorXd delta_out(n);
  for (long i = 0; i < n; ++i) {
    delta_out[i] =
        weight[i] == 0.0
            ? 0.0
            : weight[i] * output_delta(kind, net.link, fwd.output[i], y[i]);
  }

  // Output layer.
  {
    const Eigen::MatrixXd& a_prev =
        layers >= 2 ? fwd.act[layers - 2] : z;  // layers >= 2 by construction
    for (long i = 0; i < n; ++i) {
      if (delta_out[i] == 0.0) continue;
      g.weights[layers - 1].row(0).noalias() += delta_out[i] * a_prev.row(i);
      g.biases[layers - 1][0] += delta_out[i];
    }
  }

  // Hidden layers, walking backwards.  delta holds n x width errors.
  Eigen::MatrixXd delta =
      delta_out * net.weights[layers - 1];  // n x last-hidden-width
  for (std::size_t l = layers - 1; l-- > 0;) {
    // ReLU mask of this layer's pre-activations.
    delta.array() *= (fwd.pre[l].array() > 0.0).cast<double>();
    const Eigen::MatrixXd& a_prev = l == 0 ? z : fwd.act[l - 1];
    for (long i = 0; i < n; ++i) {
      if (delta_out[i] == 0.0) continue;
      g.weights[l].noalias() += delta.row(i).transpose() * a_prev.row(i);
      g.biases[l].noalias() += delta.row(i).transpose();
    }
    if (l > 0) {
      delta = (delta * net.weights[l]).eval();
    }
  }
  return g;
}

double model_objective(const Model& model, const Eigen::MatrixXd& z_or_x,
                       bool standardized, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& weight, LossKind kind) {
  Eigen::VectorXd f;
  if (standardized) {
    // Score pre-standardized inputs directly.
    if (const auto* linear = std::get_if<LinearModel>(&model)) {
      f = (z_or_x * linear->w).array() + linear->b;
      if (linear->link == OutputLink::kSigmoid) {
        for (long i = 0; i < f.size(); ++i) f[i] = sigmoid(f[i]);
      }
    } else {
      const auto& net = std::get<FeedForwardNet>(model);
      f = net_forward(net, z_or_x).output;
    }
  } else {
    f = forward_batch(model, z_or_x);
  }
  double total = 0.0;
  for (long i = 0; i < f.size(); ++i) {
    if (weight[i] == 0.0) continue;
    total += weight[i] * loss(kind, f[i], y[i]);
  }
  return total;
}

void init_parameters(Model& model, double init_scale, std::uint64_t seed) {
  SplitRng rng(seed);
  const auto uniform_signed = [&rng](double bound) {
    return (2.0 * rng.uniform() - 1.0) * bound;
  };
  if (auto* linear = std::get_if<LinearModel>(&model)) {
    const double bound =
        init_scale / std::sqrt(static_cast<double>(linear->w.size()));
    for (long i = 0; i < linear->w.size(); ++i) {
      linear->w[i] = uniform_signed(bound);
    }
    linear->b = 0.0;
    return;
  }
  auto& net = std::get<FeedForwardNet>(model);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const double bound =
        init_scale / std::sqrt(static_cast<double>(net.weights[l].cols()));
    for (long r = 0; r < net.weights[l].rows(); ++r) {
      for (long c = 0; c < net.weights[l].cols(); ++c) {
        net.weights[l](r, c) = uniform_signed(bound);
      }
    }
    net.biases[l].setZero();
  }
}

OutputLink model_link(const Model& model) {
  if (const auto* linear = std::get_if<LinearModel>(&model)) return linear->link;
  return std::get<FeedForwardNet>(model).link;
}

// Affine outcome normalization used during squared-error training with an
// identity output link.  Optimizing against outcomes of a few hundred units
// forces tiny learning rates; training on standardized outcomes and folding
// the affine map into the output layer afterwards yields the same model
// class with well-conditioned steps.  Statistics are accumulated over sorted
// values (record-order independent); constant outcomes get unit scale.
struct OutcomeScale {
  double mean = 0.0;
  double scale = 1.0;
};

OutcomeScale fit_outcome_scale(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  OutcomeScale out;
  out.mean = sum / static_cast<double>(values.size());
  double squares = 0.0;
  for (double v : values) squares += (v - out.mean) * (v - out.mean);
  const double variance = squares / static_cast<double>(values.size());
  if (variance > 0.0) out.scale = std::sqrt(variance);
  return out;
}

// Rescales a model trained on standardized outcomes so it predicts on the
// original scale: f(x) = scale * f_std(x) + mean, absorbed into the final
// affine layer.
void fold_outcome_scale(Model& model, const OutcomeScale& outcome) {
  if (auto* linear = std::get_if<LinearModel>(&model)) {
    linear->w *= outcome.scale;
    linear->b = linear->b * outcome.scale + outcome.mean;
    return;
  }
  auto& net = std::get<FeedForwardNet>(model);
  net.weights.back() *= outcome.scale;
  net.biases.back()[0] = net.biases.back()[0] * outcome.scale + outcome.mean;
}

long model_inputs(const Model& model) {
  if (const auto* linear = std::get_if<LinearModel>(&model)) {
    return linear->w.size();
  }
  return std::get<FeedForwardNet>(model).input_dim();
}

}  // namespace

double weighted_objective(const std::vector<Model>& models,
                          const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const Eigen::MatrixXd& weights, LossKind kind) {
  if (static_cast<long>(models.size()) != weights.cols()) {
    throw ValidationError("weight matrix must have one column per model");
  }
  if (weights.rows() != x.rows() || y.size() != x.rows()) {
    throw ValidationError("rows of x, y and weights must match");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < models.size(); ++k) {
    total += model_objective(models[k], x, /*standardized=*/false, y,
                             weights.col(static_cast<long>(k)), kind);
  }
  return total;
}

void train_weighted(std::vector<Model>& models, const Eigen::MatrixXd& x,
                    const Eigen::VectorXd& y, const Eigen::MatrixXd& weights,
                    LossKind kind, const TrainConfig& config, TrainTrace* trace,
                    const std::function<void(long, double)>& epoch_hook) {
  if (models.empty()) throw ValidationError("no models to train");
  if (static_cast<long>(models.size()) != weights.cols()) {
    throw ValidationError("weight matrix must have one column per model");
  }
  if (weights.rows() != x.rows() || y.size() != x.rows() || x.rows() == 0) {
    throw ValidationError("rows of x, y and weights must match and be > 0");
  }
  if (!(config.learning_rate > 0.0) || config.epochs < 1) {
    throw ValidationError("learning rate and epochs must be positive");
  }
  for (const auto& model : models) {
    check_loss_link(kind, model_link(model));
    if (model_inputs(model) != x.cols()) {
      throw ValidationError("model input width does not match features");
    }
  }

  const Standardizer standardizer = fit_standardizer(x);
  const Eigen::MatrixXd z = standardizer.apply(x);
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (auto* linear = std::get_if<LinearModel>(&models[k])) {
      linear->standardizer = standardizer;
    } else {
      std::get<FeedForwardNet>(models[k]).standardizer = standardizer;
    }
    init_parameters(models[k], config.init_scale,
                    mix_seed(config.seed, static_cast<std::uint64_t>(k)));
  }

  // Per-model outcome normalization.  Statistics come only from the records
  // carrying nonzero weight for that model, so a model's training remains a
  // function of exactly its weighted records (group decoupling), and a model
  // whose weight column is all zero is left untouched.
  std::vector<OutcomeScale> outcome(models.size());
  std::vector<char> scaled(models.size(), 0);
  std::vector<Eigen::VectorXd> ys(models.size(), y);
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (kind != LossKind::kSquaredError ||
        model_link(models[k]) != OutputLink::kIdentity) {
      continue;
    }
    const long col = static_cast<long>(k);
    std::vector<double> active;
    active.reserve(static_cast<std::size_t>(y.size()));
    for (long i = 0; i < y.size(); ++i) {
      if (weights(i, col) != 0.0) active.push_back(y[i]);
    }
    if (active.empty()) continue;
    outcome[k] = fit_outcome_scale(active);
    scaled[k] = 1;
    ys[k] = ((y.array() - outcome[k].mean) / outcome[k].scale).matrix();
  }

  if (trace) {
    trace->objective.clear();
    trace->objective.reserve(static_cast<std::size_t>(config.epochs));
  }

  for (long epoch = 0; epoch < config.epochs; ++epoch) {
    double objective = 0.0;
    double max_update = 0.0;

    for (std::size_t k = 0; k < models.size(); ++k) {
      const Eigen::VectorXd weight = weights.col(static_cast<long>(k));
      const Eigen::VectorXd& yk = ys[k];
      if (auto* linear = std::get_if<LinearModel>(&models[k])) {
        const Eigen::VectorXd f = linear_forward(*linear, z);
        for (long i = 0; i < z.rows(); ++i) {
          if (weight[i] == 0.0) continue;
          objective += weight[i] * loss(kind, f[i], yk[i]);
        }
        const LinearGrads g = linear_gradient(*linear, z, yk, weight, kind, f);
        linear->w.noalias() -= config.learning_rate * g.w;
        linear->b -= config.learning_rate * g.b;
        max_update = std::max(max_update, config.learning_rate * g.max_abs());
      } else {
        auto& net = std::get<FeedForwardNet>(models[k]);
        const NetForward fwd = net_forward(net, z);
        double model_obj = 0.0;
        for (long i = 0; i < z.rows(); ++i) {
          if (weight[i] == 0.0) continue;
          model_obj += weight[i] * loss(kind, fwd.output[i], yk[i]);
        }
        objective += model_obj;
        const NetGrads g = net_gradient(net, z, yk, weight, kind, fwd);
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
          net.weights[l].noalias() -= config.learning_rate * g.weights[l];
          net.biases[l].noalias() -= config.learning_rate * g.biases[l];
        }
        max_update = std::max(max_update, config.learning_rate * g.max_abs());
      }
    }

    if (!std::isfinite(objective) ||
        std::abs(objective) > config.divergence_limit) {
      throw ComputationError(
          "training diverged at epoch " + std::to_string(epoch) +
          ": objective " + std::to_string(objective) +
          " (lower the learning rate or check the weight table)");
    }
    if (trace) trace->objective.push_back(objective);
    if (epoch_hook) epoch_hook(epoch, objective);
    if (max_update < config.convergence_tol) break;
  }

  for (std::size_t k = 0; k < models.size(); ++k) {
    if (scaled[k]) fold_outcome_scale(models[k], outcome[k]);
  }
}

Eigen::VectorXd objective_gradient(const Model& model, const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& weights,
                                   LossKind kind) {
  check_loss_link(kind, model_link(model));
  if (const auto* linear = std::get_if<LinearModel>(&model)) {
    const Eigen::MatrixXd z = linear->standardizer.apply(x);
    const LinearGrads g =
        linear_gradient(*linear, z, y, weights, kind, linear_forward(*linear, z));
    Eigen::VectorXd flat(g.w.size() + 1);
    flat.head(g.w.size()) = g.w;
    flat[g.w.size()] = g.b;
    return flat;
  }
  const auto& net = std::get<FeedForwardNet>(model);
  const Eigen::MatrixXd z = net.standardizer.apply(x);
  const NetForward fwd = net_forward(net, z);
  const NetGrads g = net_gradient(net, z, y, weights, kind, fwd);
  long total = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    total += g.weights[l].size() + g.biases[l].size();
  }
  Eigen::VectorXd flat(total);
  long at = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (long r = 0; r < g.weights[l].rows(); ++r) {
      for (long c = 0; c < g.weights[l].cols(); ++c) {
        flat[at++] = g.weights[l](r, c);
      }
    }
    for (long i = 0; i < g.biases[l].size(); ++i) flat[at++] = g.biases[l][i];
  }
  return flat;
}

Eigen::VectorXd flatten_parameters(const Model& model) {
  if (const auto* linear = std::get_if<LinearModel>(&model)) {
    Eigen::VectorXd flat(linear->w.size() + 1);
    flat.head(linear->w.size()) = linear->w;
    flat[linear->w.size()] = linear->b;
    return flat;
  }
  const auto& net = std::get<FeedForwardNet>(model);
  long total = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    total += net.weights[l].size() + net.biases[l].size();
  }
  Eigen::VectorXd flat(total);
  long at = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (long r = 0; r < net.weights[l].rows(); ++r) {
      for (long c = 0; c < net.weights[l].cols(); ++c) {
        flat[at++] = net.weights[l](r, c);
      }
    }
    for (long i = 0; i < net.biases[l].size(); ++i) {
      flat[at++] = net.biases[l][i];
    }
  }
  return flat;
}

void unflatten_parameters(Model& model, const Eigen::VectorXd& theta) {
  if (auto* linear = std::get_if<LinearModel>(&model)) {
    if (theta.size() != linear->w.size() + 1) {
      throw ValidationError("parameter vector size mismatch");
    }
    linear->w = theta.head(linear->w.size());
    linear->b = theta[linear->w.size()];
    return;
  }
  auto& net = std::get<FeedForwardNet>(model);
  long at = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (long r = 0; r < net.weights[l].rows(); ++r) {
      for (long c = 0; c < net.weights[l].cols(); ++c) {
        if (at >= theta.size()) {
          throw ValidationError("parameter vector size mismatch");
        }
        net.weights[l](r, c) = theta[at++];
      }
    }
    for (long i = 0; i < net.biases[l].size(); ++i) {
      if (at >= theta.size()) {
        throw ValidationError("parameter vector size mismatch");
      }
      net.biases[l][i] = theta[at++];
    }
  }
  if (at != theta.size()) {
    throw ValidationError("parameter vector size mismatch");
  }
}

}  // namespace fairpremium
