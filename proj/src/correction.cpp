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

#include "fairpremium/correction.hpp"

#include <cmath>
#include <string>

#include "fairpremium/data.hpp"
#include "fairpremium/errors.hpp"

namespace fairpremium {
namespace {

constexpr double kMarginalFloor = 1e-3;

void check_pi(double pi, int cardinality) {
  if (cardinality < 2) {
    throw ValidationError("correction needs at least two levels");
  }
  if (!(pi > 1.0 / cardinality && pi <= 1.0)) {
    throw ValidationError(
        "keep probability " + std::to_string(pi) +
        " outside (1/" + std::to_string(cardinality) +
        ", 1]; the mixing system is singular or ill-posed there");
  }
}

}  // namespace

double c1_factor(double pi, int cardinality) {
  check_pi(pi, cardinality);
  return (pi + cardinality - 2) / (cardinality * pi - 1.0);
}

Eigen::MatrixXd forward_t(double pi, int cardinality) {
  check_pi(pi, cardinality);
  const double pi_bar = (1.0 - pi) / (cardinality - 1);
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(cardinality, cardinality, pi_bar);
  t.diagonal().setConstant(pi);
  return t;
}

Eigen::MatrixXd t_inverse(double pi, int cardinality) {
  check_pi(pi, cardinality);
  const double denom = cardinality * pi - 1.0;
  const double c1 = (pi + cardinality - 2) / denom;
  const double c2 = (pi - 1.0) / denom;
  Eigen::MatrixXd inv = Eigen::MatrixXd::Constant(cardinality, cardinality, c2);
  inv.diagonal().setConstant(c1);
  return inv;
}

MarginalRecovery recover_marginal(const Eigen::VectorXd& p_s, double pi) {
  const int k = static_cast<int>(p_s.size());
  check_pi(pi, k);
  if (std::abs(p_s.sum() - 1.0) > 1e-9 || (p_s.array() < 0.0).any()) {
    throw ValidationError("observed marginal is not a probability vector");
  }
  MarginalRecovery out;
  const Eigen::MatrixXd t_inv = t_inverse(pi, k);
  out.p_d = t_inv * p_s;

  if ((out.p_d.array() >= kMarginalFloor).all()) return out;

  // Sampling noise pushed the solve off the simplex.  Pin offending entries
  // to the floor and rescale the rest so the total stays one; repeat in case
  // the rescale drags another entry under.  Terminates: pinned entries only
  // ever grow in number and k is small.
  out.clamped = true;
  Eigen::VectorXd p = out.p_d;
  std::vector<bool> pinned(static_cast<std::size_t>(k), false);
  for (int round = 0; round < k; ++round) {
    bool changed = false;
    double pinned_mass = 0.0;
    double free_mass = 0.0;
    for (int i = 0; i < k; ++i) {
      if (!pinned[static_cast<std::size_t>(i)] && p[i] < kMarginalFloor) {
        pinned[static_cast<std::size_t>(i)] = true;
        changed = true;
      }
      if (pinned[static_cast<std::size_t>(i)]) {
        pinned_mass += kMarginalFloor;
      } else {
        free_mass += p[i];
      }
    }
    if (!changed) break;
    if (free_mass <= 0.0) {
      throw ComputationError(
          "marginal recovery degenerate: no mass left above the floor");
    }
    const double scale = (1.0 - pinned_mass) / free_mass;
    for (int i = 0; i < k; ++i) {
      p[i] = pinned[static_cast<std::size_t>(i)] ? kMarginalFloor : p[i] * scale;
    }
  }
  out.p_d = p;
  return out;
}

Eigen::MatrixXd pi_inverse(double pi, const Eigen::VectorXd& p_d) {
  const int k = static_cast<int>(p_d.size());
  check_pi(pi, k);
  if ((p_d.array() <= 0.0).any()) {
    throw ValidationError("true-level marginal must be strictly positive");
  }
  if (std::abs(p_d.sum() - 1.0) > 1e-9) {
    throw ValidationError("true-level marginal must sum to one");
  }
  const Eigen::VectorXd p_s = forward_t(pi, k) * p_d;
  const Eigen::MatrixXd t_inv = t_inverse(pi, k);
  Eigen::MatrixXd inv(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      inv(i, j) = t_inv(i, j) * p_s[j] / p_d[i];
    }
  }
  return inv;
}

RiskWeights corrected_risk_weights(const std::vector<long>& s_counts,
                                   double pi) {
  const int k = static_cast<int>(s_counts.size());
  check_pi(pi, k);
  long n = 0;
  for (std::size_t j = 0; j < s_counts.size(); ++j) {
    if (s_counts[j] < 1) {
      throw ValidationError(
          "observed level " + std::to_string(j) +
          " has no records; collect a larger sample or merge levels");
    }
    n += s_counts[j];
  }

  RiskWeights out;
  CorrectionMatrices& m = out.matrices;
  m.p_s.resize(k);
  for (int j = 0; j < k; ++j) {
    m.p_s[j] = static_cast<double>(s_counts[static_cast<std::size_t>(j)]) /
               static_cast<double>(n);
  }
  m.t_inv = t_inverse(pi, k);
  m.c1 = c1_factor(pi, k);

  MarginalRecovery recovery = recover_marginal(m.p_s, pi);
  m.p_d = recovery.p_d;
  m.marginal_clamped = recovery.clamped;

  // Posterior inverse evaluated at the observed marginal and the recovered
  // true-level marginal.
  m.pi_inv.resize(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      m.pi_inv(i, j) = m.t_inv(i, j) * m.p_s[j] / m.p_d[i];
    }
  }

  // Row k of the weight table scales the posterior inverse by the raw
  // level-k component of the recovered marginal.
  out.w.resize(k, k);
  for (int row = 0; row < k; ++row) {
    double marginal_term = 0.0;
    for (int l = 0; l < k; ++l) {
      marginal_term += m.t_inv(row, l) * m.p_s[l];
    }
    for (int j = 0; j < k; ++j) {
      out.w(row, j) = m.pi_inv(row, j) * marginal_term;
    }
  }
  return out;
}

Eigen::MatrixXd record_weight_matrix(const RiskWeights& weights,
                                     const std::vector<int>& s) {
  const int k = static_cast<int>(weights.w.rows());
  const long n = static_cast<long>(s.size());
  if (n == 0) throw ValidationError("no records to weight");
  const std::vector<long> counts = level_counts(s, k);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 1) {
      throw ValidationError("observed level " + std::to_string(j) +
                            " has no records");
    }
  }
  Eigen::MatrixXd record_weights(n, k);
  for (long i = 0; i < n; ++i) {
    const int j = s[static_cast<std::size_t>(i)];
    const double denom =
        static_cast<double>(counts[static_cast<std::size_t>(j)]);
    for (int model = 0; model < k; ++model) {
      record_weights(i, model) = weights.w(model, j) / denom;
    }
  }
  return record_weights;
}

}  // namespace fairpremium
