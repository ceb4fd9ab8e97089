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
// Debiasing algebra for randomized-response training data.  Level mixing is
// described by the row-stochastic forward matrix
//
//   T[i][j] = pi        if i == j
//             pi_bar    otherwise,      pi_bar = (1 - pi) / (k - 1),
//
// so observed level frequencies are p_s = T * p_d.  Conditioned on an
// observed level, the true level follows the Bayes posterior matrix
//
//   Pi = diag(p_s)^-1 * T * diag(p_d),
//
// and both matrices have closed-form inverses:
//
//   Tinv[i][i] = c1 = (pi + k - 2) / (k*pi - 1)
//   Tinv[i][j] = c2 = (pi - 1)     / (k*pi - 1)   for i != j
//   Piinv      = diag(p_d)^-1 * Tinv * diag(p_s).
//
// Every row of T, Tinv, Pi and Piinv sums to one, and the system becomes
// singular as pi approaches 1/k (a fully uninformative mechanism).

#ifndef FAIRPREMIUM_CORRECTION_HPP_
#define FAIRPREMIUM_CORRECTION_HPP_

#include <Eigen/Core>
#include <vector>

namespace fairpremium {

// Diagonal scale of the inverse mixing matrix; decreasing in pi, equal to 1
// at pi == 1, and diverging as pi approaches 1/cardinality from above.
double c1_factor(double pi, int cardinality);

// Forward mixing matrix T (row-stochastic).  Requires pi in (1/k, 1].
Eigen::MatrixXd forward_t(double pi, int cardinality);

// Closed-form inverse of the mixing matrix.  Requires pi in (1/k, 1];
// pi <= 1/k is rejected as singular.
Eigen::MatrixXd t_inverse(double pi, int cardinality);

struct MarginalRecovery {
  Eigen::VectorXd p_d;
  // Set when the raw solve left the simplex and entries had to be floored.
  bool clamped = false;
};

// Recovers the true-level marginal from an observed marginal: solves
// p_d = Tinv * p_s, then floors entries at 1e-3 and redistributes the excess
// so the result is a strictly positive probability vector.  The flag records
// whether flooring fired (a sampling-noise diagnostic).
MarginalRecovery recover_marginal(const Eigen::VectorXd& p_s, double pi);

// Closed-form inverse of the Bayes posterior matrix for a strictly positive
// true-level marginal p_d.  Matches the numeric inverse of the forward
// posterior matrix to within accumulated rounding.
Eigen::MatrixXd pi_inverse(double pi, const Eigen::VectorXd& p_d);

struct CorrectionMatrices {
  Eigen::MatrixXd t_inv;
  Eigen::MatrixXd pi_inv;
  Eigen::VectorXd p_d;  // recovered true-level marginal (floored if needed)
  Eigen::VectorXd p_s;  // observed-level marginal
  double c1 = 1.0;
  bool marginal_clamped = false;
};

struct RiskWeights {
  CorrectionMatrices matrices;
  // w(k, j): weight on the average loss of group model k over records
  // observed at level j.  Off-diagonal entries are negative for pi < 1; at
  // pi == 1 the table is exactly diag(n_k / n).
  Eigen::MatrixXd w;
};

// Builds the debiased risk weight table from observed level counts.  Row k
// of the table is Piinv[k][j] * (Tinv * p_s)[k] evaluated with empirical
// p_s = counts / n.  All counts must be >= 1: an unobserved level makes the
// group averages undefined (collect more data or merge levels).
RiskWeights corrected_risk_weights(const std::vector<long>& s_counts,
                                   double pi);

// Expands the K x K table into per-record, per-model training weights:
// record i (observed at level j = s[i]) contributes weight
// w(k, j) / n_j to model k.  Summing the expanded weights over records
// reproduces the table row sums up to accumulated rounding.
Eigen::MatrixXd record_weight_matrix(const RiskWeights& weights,
                                     const std::vector<int>& s);

}  // namespace fairpremium

#endif  // FAIRPREMIUM_CORRECTION_HPP_
