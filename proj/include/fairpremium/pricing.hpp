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
// Multi-party training of group-specific score models and the prices built
// from them.  A set of per-level models f_1..f_K is fitted either on true
// levels (indicator weighting) or on privatized levels (debiased signed
// weighting); the group-blind price of a record is the fixed-weight average
// sum_k p_star[k] * f_k(x), which never reads the record's own level.

#ifndef FAIRPREMIUM_PRICING_HPP_
#define FAIRPREMIUM_PRICING_HPP_

#include <Eigen/Core>
#include <optional>
#include <variant>
#include <vector>

#include "fairpremium/correction.hpp"
#include "fairpremium/data.hpp"
#include "fairpremium/models.hpp"
#include "fairpremium/noise.hpp"
#include "fairpremium/training.hpp"

namespace fairpremium {

enum class NoiseMode { kKnown, kEstimated };
enum class RepresentationMode { kRaw, kTransformed };

struct KnownNoise {
  double pi = 1.0;
};

struct EstimateNoise {
  int n1 = 4;
  std::optional<int> j_star;
  long min_group_size = 50;
  std::uint64_t seed = 0;
  // Covariates for the posterior fit; defaults to the training features.
  std::optional<Eigen::MatrixXd> x_star;
};

using NoiseSpec = std::variant<KnownNoise, EstimateNoise>;

struct HypothesisSpec {
  enum class Kind { kLinear, kNet };
  Kind kind = Kind::kNet;
  std::vector<int> hidden = {5, 5, 5};  // ignored for linear models
};

// Fixed mixing distribution over levels used for group-blind prices;
// validated to be a probability vector.
struct ReferenceWeights {
  Eigen::VectorXd p_star;

  static ReferenceWeights checked(const Eigen::VectorXd& p_star);
};

struct GroupModelSet {
  std::vector<Model> models;  // one per level
  // Present when scores are computed on a learned representation; applied
  // before the group models during scoring.
  std::optional<FeedForwardNet> transformation;
  Task task = Task::kRegression;

  int cardinality() const { return static_cast<int>(models.size()); }
  // n x K matrix of group scores on raw inputs.
  Eigen::MatrixXd group_scores(const Eigen::MatrixXd& x) const;
};

// Per-record prices.  `raw` columns keep the untouched model outputs; the
// reported columns floor negative prices at zero (round-trip of the raw
// values stays available for diagnostics).
struct PremiumReport {
  Eigen::MatrixXd best_estimate_raw;  // n x K
  Eigen::MatrixXd best_estimate;      // floored
  Eigen::VectorXd dfp_raw;            // sum_k p_star[k] * f_k(x)
  Eigen::VectorXd dfp;                // floored
  std::optional<Eigen::VectorXd> unawareness_raw;
  std::optional<Eigen::VectorXd> unawareness;
  Eigen::VectorXd p_star;
};

struct FairTrainResult {
  GroupModelSet models;
  PremiumReport report;  // on the training records
  ReferenceWeights reference;
  RiskWeights weights;
  double pi_used = 1.0;
  NoiseMode noise_mode = NoiseMode::kKnown;
  std::optional<AnchorEstimate> anchor;
  TrainTrace trace;
};

// Trains a scalar model on (x, y) with uniform weights 1/n; the group-blind
// baseline that ignores levels entirely.
Model unawareness_model(const Dataset& train, const HypothesisSpec& hypothesis,
                        const TrainConfig& config);

// Trains a net on (x, y) and returns it for use as a feature transformation;
// downstream consumers score through its last hidden layer.
FeedForwardNet train_transformation(const Dataset& train,
                                    const std::vector<int>& hidden,
                                    const TrainConfig& config);

// Group-decoupled training on true levels: model k sees exactly the records
// with d == k through indicator weights.  Every level must be observed.
// p_star defaults to the empirical level distribution (entries floored at
// 0.1%, matching the privatized pipeline's recovered marginal).
FairTrainResult mptp(const Dataset& train, const HypothesisSpec& hypothesis,
                     const TrainConfig& config,
                     std::optional<Eigen::VectorXd> p_star = std::nullopt,
                     const std::function<void(long, double)>& epoch_hook = {});

// Joint training on privatized levels with the debiased signed weight table.
// The keep probability is either supplied or estimated from the data first.
// p_star defaults to the recovered true-level marginal.  With pi == 1 and
// s == d this reproduces mptp() bit-for-bit: both run the same weighted
// trainer and at pi == 1 the weight table collapses to the indicator table
// exactly.
FairTrainResult mptp_ldp(const Dataset& train, const NoiseSpec& noise,
                         const HypothesisSpec& hypothesis,
                         const TrainConfig& config,
                         std::optional<Eigen::VectorXd> p_star = std::nullopt,
                         const std::function<void(long, double)>& epoch_hook = {});

// Prices for every row of x.  Reads features only: the level fields of the
// scored records never enter.  `unaware`, when given, is scored alongside.
PremiumReport premium_report(const GroupModelSet& models,
                             const Eigen::VectorXd& p_star,
                             const Eigen::MatrixXd& x,
                             const Model* unaware = nullptr);

// Mean loss of the level-matched score: (1/n) sum_i L(f_{d_i}(x_i), y_i).
// Requires true levels on `data`.
double evaluate_stratified(const GroupModelSet& models, const Dataset& data,
                           LossKind kind);

// Mean loss of the group-blind price.
double evaluate_dfp(const GroupModelSet& models, const Eigen::VectorXd& p_star,
                    const Dataset& data, LossKind kind);

// Mean loss of a single model.
double evaluate_model(const Model& model, const Dataset& data, LossKind kind);

// Task-default pointwise loss: squared error for regression, cross-entropy
// for classification.
LossKind loss_for(Task task);

}  // namespace fairpremium

#endif  // FAIRPREMIUM_PRICING_HPP_
