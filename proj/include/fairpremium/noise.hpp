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
// Estimating an unknown keep probability from privatized labels alone.
// If some covariate region pins the true level to j* with certainty, then on
// that region P(S = j* | x) equals the keep probability, and elsewhere it is
// strictly smaller: the supremum of the posterior identifies pi.  The
// estimators below fit a probabilistic classifier for S = j* and read off
// the largest fitted posterior.

#ifndef FAIRPREMIUM_NOISE_HPP_
#define FAIRPREMIUM_NOISE_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "fairpremium/models.hpp"
#include "fairpremium/training.hpp"

namespace fairpremium {

// The level whose posterior is modelled by default: the most frequent
// observed level (ties resolve to the smaller index).
int default_j_star(const std::vector<int>& s, int cardinality);

// Logistic posterior fit for P(S == j_star | x): a linear model with sigmoid
// output trained on the indicator targets with uniform weights.  Requires
// the indicator to vary: at least one record observed at j_star and at least
// one observed elsewhere.
LinearModel fit_posterior(const Eigen::MatrixXd& x_star,
                          const std::vector<int>& s, int cardinality,
                          int j_star, const TrainConfig& config);

// Largest fitted posterior over the sample, with predictions clipped into
// [1e-6, 1 - 1e-6].  Values at or below 1/cardinality mean no informative
// anchor region exists and raise ComputationError; valid estimates are
// clipped into (1/cardinality + 1e-6, 1].
double estimate_pi_anchor(const Eigen::MatrixXd& x_star,
                          const std::vector<int>& s, int cardinality,
                          int j_star, const TrainConfig& config);

struct AnchorEstimate {
  double pi_hat = 0.0;
  double c1_hat = 0.0;
  int j_star = 0;
  int n1 = 0;           // groups requested
  long group_size = 0;  // records per group (remainder dropped)
  std::vector<double> group_pi;   // per-group estimates (kept groups)
  std::vector<double> group_c1;   // matching diagonal factors
  std::vector<char> group_kept;   // n1 flags; 0 = excluded as uninformative
  // Sample variance of the kept per-group factors divided by their count;
  // zero when fewer than two groups were kept.
  double c1_var = 0.0;
};

// Group-averaged estimation of the inverse-correction scale: shuffle, cut
// into n1 equal groups of floor(n / n1) records (remainder dropped), run the
// anchor estimator per group, map each estimate through the diagonal-factor
// curve, average, and map the average back to a keep probability.  The
// factor curve x -> (x + k - 2) / (k x - 1) is its own inverse, so the
// round trip is exact.  Groups without an informative anchor are excluded;
// all-excluded raises ComputationError.  Group sizes below min_group_size
// are rejected up front.  n1 == 1 degenerates to estimate_pi_anchor on the
// unshuffled sample.
AnchorEstimate c1_procedure(const Eigen::MatrixXd& x_star,
                            const std::vector<int>& s, int cardinality,
                            std::optional<int> j_star, int n1,
                            const TrainConfig& config, std::uint64_t seed,
                            long min_group_size = 50);

// Misspecifies a keep probability by an absolute offset or relative factor,
// validating that the result stays in (1/cardinality, 1].
double perturb_pi(double pi, double amount, bool relative, int cardinality);

namespace internal {

// Grouped estimation with caller-supplied index blocks; the seam that the
// public shuffle-based procedure and the exclusion tests share.
AnchorEstimate c1_from_groups(const Eigen::MatrixXd& x_star,
                              const std::vector<int>& s, int cardinality,
                              int j_star,
                              const std::vector<std::vector<int>>& groups,
                              const TrainConfig& config);

}  // namespace internal

}  // namespace fairpremium

#endif  // FAIRPREMIUM_NOISE_HPP_
