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

#include "fairpremium/pricing.hpp"

#include <cmath>
#include <string>

#include "fairpremium/errors.hpp"

namespace fairpremium {
namespace {

OutputLink link_for(Task task) {
  return task == Task::kClassification ? OutputLink::kSigmoid
                                       : OutputLink::kIdentity;
}

Model blank_model(const HypothesisSpec& hypothesis, int input_dim,
                  OutputLink link) {
  if (hypothesis.kind == HypothesisSpec::Kind::kLinear) {
    return make_linear(input_dim, link);
  }
  return make_net(input_dim, hypothesis.hidden, link);
}

// Joint weighted training on observed levels; the single engine behind both
// the level-aware and the privatized pipelines.  With pi == 1 the weight
// table collapses to the indicator table exactly, so passing true levels and
// pi == 1 *is* the level-aware pipeline.
FairTrainResult train_with_levels(const Dataset& train,
                                  const std::vector<int>& levels, double pi,
                                  const HypothesisSpec& hypothesis,
                                  const TrainConfig& config,
                                  std::optional<Eigen::VectorXd> p_star,
                                  const std::function<void(long, double)>& hook) {
  const int k = train.sensitive_cardinality;
  FairTrainResult result;
  result.weights = corrected_risk_weights(level_counts(levels, k), pi);
  const Eigen::MatrixXd record_weights =
      record_weight_matrix(result.weights, levels);

  result.models.task = train.task;
  result.models.models.reserve(static_cast<std::size_t>(k));
  for (int level = 0; level < k; ++level) {
    result.models.models.push_back(blank_model(
        hypothesis, static_cast<int>(train.cols()), link_for(train.task)));
  }
  train_weighted(result.models.models, train.x, train.y, record_weights,
                 loss_for(train.task), config, &result.trace, hook);

  result.reference = ReferenceWeights::checked(
      p_star ? *p_star : result.weights.matrices.p_d);
  result.pi_used = pi;
  result.report = premium_report(result.models, result.reference.p_star,
                                 train.x, nullptr);
  return result;
}

}  // namespace

LossKind loss_for(Task task) {
  return task == Task::kClassification ? LossKind::kBinaryCrossEntropy
                                       : LossKind::kSquaredError;
}

ReferenceWeights ReferenceWeights::checked(const Eigen::VectorXd& p_star) {
  if (p_star.size() < 2) {
    throw ValidationError("reference weights need at least two levels");
  }
  if ((p_star.array() < 0.0).any() || std::abs(p_star.sum() - 1.0) > 1e-9) {
    throw ValidationError("reference weights must form a probability vector");
  }
  return ReferenceWeights{p_star};
}

Eigen::MatrixXd GroupModelSet::group_scores(const Eigen::MatrixXd& x) const {
  if (models.empty()) throw ValidationError("no group models");
  const Eigen::MatrixXd* inputs = &x;
  Eigen::MatrixXd transformed;
  if (transformation) {
    transformed = representation_batch(*transformation, x);
    inputs = &transformed;
  }
  Eigen::MatrixXd scores(inputs->rows(), static_cast<long>(models.size()));
  for (std::size_t k = 0; k < models.size(); ++k) {
    scores.col(static_cast<long>(k)) = forward_batch(models[k], *inputs);
  }
  return scores;
}

Model unawareness_model(const Dataset& train, const HypothesisSpec& hypothesis,
                        const TrainConfig& config) {
  train.validate();
  std::vector<Model> models;
  models.push_back(blank_model(hypothesis, static_cast<int>(train.cols()),
                               link_for(train.task)));
  const Eigen::MatrixXd weights = Eigen::MatrixXd::Constant(
      train.rows(), 1, 1.0 / static_cast<double>(train.rows()));
  train_weighted(models, train.x, train.y, weights, loss_for(train.task),
                 config);
  return models.front();
}

FeedForwardNet train_transformation(const Dataset& train,
                                    const std::vector<int>& hidden,
                                    const TrainConfig& config) {
  train.validate();
  std::vector<Model> models;
  models.push_back(
      make_net(static_cast<int>(train.cols()), hidden, link_for(train.task)));
  const Eigen::MatrixXd weights = Eigen::MatrixXd::Constant(
      train.rows(), 1, 1.0 / static_cast<double>(train.rows()));
  train_weighted(models, train.x, train.y, weights, loss_for(train.task),
                 config);
  return std::get<FeedForwardNet>(models.front());
}

FairTrainResult mptp(const Dataset& train, const HypothesisSpec& hypothesis,
                     const TrainConfig& config,
                     std::optional<Eigen::VectorXd> p_star,
                     const std::function<void(long, double)>& epoch_hook) {
  train.validate();
  if (!train.has_d()) {
    throw ValidationError("level-aware training requires true levels");
  }
  FairTrainResult result =
      train_with_levels(train, train.d, 1.0, hypothesis, config,
                        std::move(p_star), epoch_hook);
  result.noise_mode = NoiseMode::kKnown;
  return result;
}

FairTrainResult mptp_ldp(const Dataset& train, const NoiseSpec& noise,
                         const HypothesisSpec& hypothesis,
                         const TrainConfig& config,
                         std::optional<Eigen::VectorXd> p_star,
                         const std::function<void(long, double)>& epoch_hook) {
  train.validate();
  if (!train.has_s()) {
    throw ValidationError("privatized training requires privatized levels");
  }

  double pi = 1.0;
  std::optional<AnchorEstimate> anchor;
  NoiseMode mode = NoiseMode::kKnown;
  if (const auto* known = std::get_if<KnownNoise>(&noise)) {
    pi = known->pi;
  } else {
    const auto& spec = std::get<EstimateNoise>(noise);
    const Eigen::MatrixXd& x_star = spec.x_star ? *spec.x_star : train.x;
    if (x_star.rows() != train.rows()) {
      throw ValidationError("noise covariates must align with records");
    }
    anchor = c1_procedure(x_star, train.s, train.sensitive_cardinality,
                          spec.j_star, spec.n1, config, spec.seed,
                          spec.min_group_size);
    pi = anchor->pi_hat;
    mode = NoiseMode::kEstimated;
  }

  FairTrainResult result = train_with_levels(
      train, train.s, pi, hypothesis, config, std::move(p_star), epoch_hook);
  result.noise_mode = mode;
  result.anchor = std::move(anchor);
  return result;
}

PremiumReport premium_report(const GroupModelSet& models,
                             const Eigen::VectorXd& p_star,
                             const Eigen::MatrixXd& x, const Model* unaware) {
  const ReferenceWeights reference = ReferenceWeights::checked(p_star);
  if (static_cast<long>(models.models.size()) != reference.p_star.size()) {
    throw ValidationError("reference weights and model count disagree");
  }
  PremiumReport report;
  report.p_star = reference.p_star;
  report.best_estimate_raw = models.group_scores(x);
  report.dfp_raw = report.best_estimate_raw * reference.p_star;
  report.best_estimate = report.best_estimate_raw.array().max(0.0).matrix();
  report.dfp = report.dfp_raw.array().max(0.0).matrix();
  if (unaware) {
    report.unawareness_raw = forward_batch(*unaware, x);
    report.unawareness = report.unawareness_raw->array().max(0.0).matrix();
  }
  return report;
}

double evaluate_stratified(const GroupModelSet& models, const Dataset& data,
                           LossKind kind) {
  data.validate();
  if (!data.has_d()) {
    throw ValidationError("level-matched evaluation requires true levels");
  }
  if (data.sensitive_cardinality != models.cardinality()) {
    throw ValidationError("model count does not match level cardinality");
  }
  const Eigen::MatrixXd scores = models.group_scores(data.x);
  double total = 0.0;
  for (long i = 0; i < data.rows(); ++i) {
    total += loss(kind, scores(i, data.d[static_cast<std::size_t>(i)]),
                  data.y[i]);
  }
  return total / static_cast<double>(data.rows());
}

double evaluate_dfp(const GroupModelSet& models, const Eigen::VectorXd& p_star,
                    const Dataset& data, LossKind kind) {
  data.validate();
  const Eigen::VectorXd dfp = models.group_scores(data.x) * p_star;
  double total = 0.0;
  for (long i = 0; i < data.rows(); ++i) {
    total += loss(kind, dfp[i], data.y[i]);
  }
  return total / static_cast<double>(data.rows());
}

double evaluate_model(const Model& model, const Dataset& data, LossKind kind) {
  data.validate();
  const Eigen::VectorXd f = forward_batch(model, data.x);
  double total = 0.0;
  for (long i = 0; i < data.rows(); ++i) {
    total += loss(kind, f[i], data.y[i]);
  }
  return total / static_cast<double>(data.rows());
}

}  // namespace fairpremium
