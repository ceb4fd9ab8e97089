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

#include "fairpremium/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fairpremium/correction.hpp"
#include "fairpremium/errors.hpp"
#include "fairpremium/rng.hpp"

namespace fairpremium {
namespace {

constexpr double kPosteriorClip = 1e-6;
constexpr double kPiMargin = 1e-6;

void check_alignment(const Eigen::MatrixXd& x_star, const std::vector<int>& s,
                     int cardinality, int j_star) {
  if (cardinality < 2) {
    throw ValidationError("level cardinality must be at least 2");
  }
  if (j_star < 0 || j_star >= cardinality) {
    throw ValidationError("anchor level out of range");
  }
  if (x_star.rows() == 0) {
    throw ValidationError("posterior fit needs at least one record");
  }
  if (static_cast<long>(s.size()) != x_star.rows()) {
    throw ValidationError("covariates and observed levels must align");
  }
  for (int level : s) {
    if (level < 0 || level >= cardinality) {
      throw ValidationError("observed level out of range");
    }
  }
}

bool indicator_varies(const std::vector<int>& s, int j_star) {
  bool any_hit = false;
  bool any_miss = false;
  for (int level : s) {
    (level == j_star ? any_hit : any_miss) = true;
  }
  return any_hit && any_miss;
}

}  // namespace

int default_j_star(const std::vector<int>& s, int cardinality) {
  if (cardinality < 2) {
    throw ValidationError("level cardinality must be at least 2");
  }
  if (s.empty()) throw ValidationError("no observed levels");
  std::vector<long> counts(static_cast<std::size_t>(cardinality), 0);
  for (int level : s) {
    if (level < 0 || level >= cardinality) {
      throw ValidationError("observed level out of range");
    }
    ++counts[static_cast<std::size_t>(level)];
  }
  return static_cast<int>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
}

LinearModel fit_posterior(const Eigen::MatrixXd& x_star,
                          const std::vector<int>& s, int cardinality,
                          int j_star, const TrainConfig& config) {
  check_alignment(x_star, s, cardinality, j_star);
  if (!indicator_varies(s, j_star)) {
    throw ValidationError("anchor indicator does not vary over the sample");
  }
  const long n = x_star.rows();
  Eigen::VectorXd target(n);
  for (long i = 0; i < n; ++i) {
    target[i] = s[static_cast<std::size_t>(i)] == j_star ? 1.0 : 0.0;
  }
  std::vector<Model> models;
  models.push_back(
      make_linear(static_cast<int>(x_star.cols()), OutputLink::kSigmoid));
  const Eigen::MatrixXd weights =
      Eigen::MatrixXd::Constant(n, 1, 1.0 / static_cast<double>(n));
  train_weighted(models, x_star, target, weights,
                 LossKind::kBinaryCrossEntropy, config);
  return std::get<LinearModel>(models.front());
}

double estimate_pi_anchor(const Eigen::MatrixXd& x_star,
                          const std::vector<int>& s, int cardinality,
                          int j_star, const TrainConfig& config) {
  const LinearModel posterior =
      fit_posterior(x_star, s, cardinality, j_star, config);
  const Eigen::VectorXd predicted = forward_batch(Model{posterior}, x_star);
  const double best = predicted.array()
                          .min(1.0 - kPosteriorClip)
                          .max(kPosteriorClip)
                          .maxCoeff();
  const double floor = 1.0 / static_cast<double>(cardinality);
  if (best <= floor) {
    throw ComputationError(
        "no informative anchor region: the largest fitted posterior does not "
        "exceed the uninformative rate 1/" +
        std::to_string(cardinality));
  }
  return std::clamp(best, floor + kPiMargin, 1.0);
}

AnchorEstimate c1_procedure(const Eigen::MatrixXd& x_star,
                            const std::vector<int>& s, int cardinality,
                            std::optional<int> j_star, int n1,
                            const TrainConfig& config, std::uint64_t seed,
                            long min_group_size) {
  const int anchor_level =
      j_star ? *j_star : default_j_star(s, cardinality);
  check_alignment(x_star, s, cardinality, anchor_level);
  if (n1 < 1) throw ValidationError("group count must be at least 1");
  const long n = x_star.rows();
  const long group_size = n / n1;
  if (group_size < min_group_size) {
    throw ValidationError("groups of " + std::to_string(group_size) +
                          " records are below the minimum of " +
                          std::to_string(min_group_size));
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  if (n1 > 1) {
    SplitRng rng(seed);
    rng.shuffle(order);
  }
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(n1));
  for (int g = 0; g < n1; ++g) {
    auto first = order.begin() + static_cast<long>(g) * group_size;
    groups[static_cast<std::size_t>(g)].assign(first, first + group_size);
  }
  return internal::c1_from_groups(x_star, s, cardinality, anchor_level, groups,
                                  config);
}

double perturb_pi(double pi, double amount, bool relative, int cardinality) {
  if (cardinality < 2) {
    throw ValidationError("level cardinality must be at least 2");
  }
  const double moved = relative ? pi * (1.0 + amount) : pi + amount;
  if (!(moved > 1.0 / static_cast<double>(cardinality)) || moved > 1.0) {
    throw ValidationError("perturbed keep probability leaves (1/k, 1]");
  }
  return moved;
}

namespace internal {

AnchorEstimate c1_from_groups(const Eigen::MatrixXd& x_star,
                              const std::vector<int>& s, int cardinality,
                              int j_star,
                              const std::vector<std::vector<int>>& groups,
                              const TrainConfig& config) {
  check_alignment(x_star, s, cardinality, j_star);
  if (groups.empty()) throw ValidationError("no groups");

  AnchorEstimate estimate;
  estimate.j_star = j_star;
  estimate.n1 = static_cast<int>(groups.size());
  estimate.group_size = static_cast<long>(groups.front().size());
  estimate.group_kept.assign(groups.size(), 0);

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& members = groups[g];
    if (members.empty()) throw ValidationError("empty group");
    Eigen::MatrixXd gx(static_cast<long>(members.size()), x_star.cols());
    std::vector<int> gs(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      const int row = members[i];
      if (row < 0 || row >= x_star.rows()) {
        throw ValidationError("group index out of range");
      }
      gx.row(static_cast<long>(i)) = x_star.row(row);
      gs[i] = s[static_cast<std::size_t>(row)];
    }
    if (!indicator_varies(gs, j_star)) continue;  // degenerate: exclude
    double group_pi = 0.0;
    try {
      group_pi = estimate_pi_anchor(gx, gs, cardinality, j_star, config);
    } catch (const ComputationError&) {
      continue;  // uninformative group: exclude
    }
    estimate.group_kept[g] = 1;
    estimate.group_pi.push_back(group_pi);
    estimate.group_c1.push_back(c1_factor(group_pi, cardinality));
  }

  if (estimate.group_pi.empty()) {
    throw ComputationError("every group lacked an informative anchor region");
  }

  const double kept = static_cast<double>(estimate.group_c1.size());
  estimate.c1_hat =
      std::accumulate(estimate.group_c1.begin(), estimate.group_c1.end(), 0.0) /
      kept;
  if (kept >= 2.0) {
    double ss = 0.0;
    for (double c : estimate.group_c1) {
      ss += (c - estimate.c1_hat) * (c - estimate.c1_hat);
    }
    estimate.c1_var = ss / (kept - 1.0) / kept;
  }
  // The factor curve x -> (x + k - 2) / (k x - 1) is an involution, so the
  // averaged factor maps back to a keep probability through the same formula.
  const double k = static_cast<double>(cardinality);
  estimate.pi_hat = (estimate.c1_hat + k - 2.0) / (k * estimate.c1_hat - 1.0);
  estimate.pi_hat = std::clamp(estimate.pi_hat, 1.0 / k + kPiMargin, 1.0);
  return estimate;
}

}  // namespace internal

}  // namespace fairpremium
