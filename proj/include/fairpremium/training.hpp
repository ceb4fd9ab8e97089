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

#ifndef FAIRPREMIUM_TRAINING_HPP_
#define FAIRPREMIUM_TRAINING_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "fairpremium/models.hpp"

namespace fairpremium {

struct TrainConfig {
  double learning_rate = 1e-2;
  long epochs = 5000;
  // Stop early once the largest parameter update falls below this.
  double convergence_tol = 1e-8;
  // Weights initialize uniformly in +-init_scale/sqrt(fan_in); biases at 0.
  double init_scale = 1.0;
  std::uint64_t seed = 0;
  // Abort when the objective passes this bound; signed weights can make the
  // empirical objective unbounded below, so runaway ascent of the magnitude
  // is treated as divergence rather than progress.
  double divergence_limit = 1e12;
};

struct TrainTrace {
  // Objective evaluated each epoch at the parameters the update was computed
  // from; entry 0 is the value at initialization.
  std::vector<double> objective;
};

// J = sum_i sum_k weights(i, k) * loss(f_k(x_i), y_i), evaluated with each
// model's stored input normalization.  Zero-weight terms are skipped, so
// they can never contribute rounding noise or NaNs from saturated losses.
double weighted_objective(const std::vector<Model>& models,
                          const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const Eigen::MatrixXd& weights, LossKind kind);

// Full-batch gradient descent on the weighted objective above.  The weight
// matrix is n x K for K models; entries may be negative.  Behaviour:
//   - one standardizer is fitted on x and stored into every model;
//   - squared-error training of an identity-link model additionally
//     standardizes the outcomes (statistics computed from that model's
//     nonzero-weight records only) and folds the affine map back into its
//     output layer afterwards, so a single learning rate works across
//     outcome scales while returned models predict in original units; a
//     model whose weight column is all zero is left at initialization;
//   - parameters initialize deterministically from (config.seed, model
//     index), so trajectories are bit-reproducible;
//   - gradient reductions accumulate strictly in record order, so records
//     carrying zero weight for a model cannot change that model's result;
//   - stops after `epochs`, or earlier when the largest parameter update
//     drops below convergence_tol;
//   - throws ComputationError when |objective| exceeds divergence_limit.
// `epoch_hook`, when set, runs after each epoch (loss-curve capture).  Traced
// objectives are reported on the training scale (standardized outcomes when
// outcome standardization is active).
void train_weighted(std::vector<Model>& models, const Eigen::MatrixXd& x,
                    const Eigen::VectorXd& y, const Eigen::MatrixXd& weights,
                    LossKind kind, const TrainConfig& config,
                    TrainTrace* trace = nullptr,
                    const std::function<void(long, double)>& epoch_hook = {});

// Analytic gradient of the weighted objective for one model, flattened in
// serialization order.  Exposed for verification against finite differences.
Eigen::VectorXd objective_gradient(const Model& model, const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& weights,
                                   LossKind kind);

// Parameter vector in the same flattened order (weights then biases, layer
// by layer), with write-back used by the finite-difference tests.
Eigen::VectorXd flatten_parameters(const Model& model);
void unflatten_parameters(Model& model, const Eigen::VectorXd& theta);

}  // namespace fairpremium

#endif  // FAIRPREMIUM_TRAINING_HPP_
