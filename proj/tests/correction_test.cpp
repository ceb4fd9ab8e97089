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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "fairpremium/correction.hpp"
#include "fairpremium/errors.hpp"
#include "fairpremium/privacy.hpp"
#include "fairpremium/rng.hpp"

namespace fp = fairpremium;

namespace {

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("keep probability from a privacy budget") {
  // exp(eps) = 9 makes the binary mechanism keep with probability 0.9.
  const fp::RRParams p2 = fp::rr_params(std::log(9.0), 2);
  CHECK(p2.pi == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(p2.pi_bar == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(p2.cardinality == 2);

  const fp::RRParams p4 = fp::rr_params(std::log(9.0), 4);
  CHECK(p4.pi == 0.75);  // 9 / (3 + 9) is exact in binary floating point
  CHECK(p4.pi_bar == doctest::Approx(1.0 / 12.0).epsilon(1e-15));

  CHECK_THROWS_AS(fp::rr_params(0.0, 2), fp::ValidationError);
  CHECK_THROWS_AS(fp::rr_params(1.0, 1), fp::ValidationError);
}

TEST_CASE("mechanism invariants hold across budgets and cardinalities") {
  fp::SplitRng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform() * 5.0);
    const double epsilon = 0.05 + 4.0 * rng.uniform();
    const fp::RRParams params = fp::rr_params(epsilon, k);
    CHECK(params.pi + (k - 1) * params.pi_bar ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(params.pi / params.pi_bar ==
          doctest::Approx(std::exp(epsilon)).epsilon(1e-12));
    CHECK(params.pi > 1.0 / k);
    CHECK(params.pi < 1.0);
  }
}

TEST_CASE("budget recovered from a target keep probability") {
  const fp::RRParams params = fp::pi_from_target(0.9, 2);
  CHECK(params.epsilon == std::log(9.0));
  CHECK(params.pi == doctest::Approx(0.9).epsilon(1e-15));

  // Round trip both ways across the open interval.
  for (double pi : {0.55, 0.6, 0.75, 0.9, 0.99}) {
    const fp::RRParams p = fp::pi_from_target(pi, 2);
    CHECK(fp::rr_params(p.epsilon, 2).pi == doctest::Approx(pi).epsilon(1e-12));
  }

  CHECK_THROWS_AS(fp::pi_from_target(0.5, 2), fp::ValidationError);
  CHECK_THROWS_AS(fp::pi_from_target(1.0, 2), fp::ValidationError);
  CHECK_THROWS_AS(fp::pi_from_target(0.2, 4), fp::ValidationError);
}

TEST_CASE("identity mechanism keeps every level") {
  const fp::RRParams params = fp::noiseless_params(3);
  CHECK(params.pi == 1.0);
  CHECK(params.pi_bar == 0.0);
  CHECK(params.epsilon == std::numeric_limits<double>::infinity());
  for (int d = 0; d < 3; ++d) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      CHECK(fp::privatize(d, params, seed) == d);
    }
  }
}

TEST_CASE("diagonal inverse factor") {
  CHECK(fp::c1_factor(1.0, 2) == 1.0);
  CHECK(fp::c1_factor(1.0, 5) == 1.0);
  CHECK(fp::c1_factor(0.9, 2) == doctest::Approx(1.125).epsilon(1e-14));
  // Diverges toward the singular mechanism.
  CHECK(fp::c1_factor(0.51, 2) > 20.0);
  CHECK_THROWS_AS(fp::c1_factor(0.5, 2), fp::ValidationError);
  CHECK_THROWS_AS(fp::c1_factor(0.2, 2), fp::ValidationError);
}

TEST_CASE("binary inverse mixing matrix") {
  const Eigen::MatrixXd t_inv = fp::t_inverse(0.9, 2);
  CHECK(t_inv(0, 0) == doctest::Approx(1.125).epsilon(1e-14));
  CHECK(t_inv(0, 1) == doctest::Approx(-0.125).epsilon(1e-12));
  CHECK(t_inv(1, 0) == doctest::Approx(-0.125).epsilon(1e-12));
  CHECK(t_inv(1, 1) == doctest::Approx(1.125).epsilon(1e-14));
}

TEST_CASE("closed-form inverses match the numeric inverse") {
  fp::SplitRng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform() * 5.0);
    const double pi = 1.0 / k + 0.05 + (1.0 - 1.0 / k - 0.05) * rng.uniform();

    const Eigen::MatrixXd t = fp::forward_t(pi, k);
    const Eigen::MatrixXd t_inv = fp::t_inverse(pi, k);
    CHECK(max_abs_diff(t * t_inv, Eigen::MatrixXd::Identity(k, k)) <= 1e-9);
    CHECK(max_abs_diff(t_inv, t.inverse()) <= 1e-9);

    // Strictly positive marginal with entries >= 0.01.
    Eigen::VectorXd p_d(k);
    for (int i = 0; i < k; ++i) p_d[i] = 0.01 + rng.uniform();
    p_d /= p_d.sum();

    const Eigen::VectorXd p_s = t * p_d;
    const Eigen::MatrixXd post =
        p_s.cwiseInverse().asDiagonal() * t * p_d.asDiagonal();
    const Eigen::MatrixXd post_inv = fp::pi_inverse(pi, p_d);
    CHECK(max_abs_diff(post * post_inv, Eigen::MatrixXd::Identity(k, k)) <=
          1e-9);
    CHECK(max_abs_diff(post_inv, post.inverse()) <= 1e-9);

    // Every row of the inverses sums to one.
    for (int r = 0; r < k; ++r) {
      CHECK(t_inv.row(r).sum() == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(post_inv.row(r).sum() == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("posterior inverse against hand-computed entries") {
  Eigen::VectorXd p_d(2);
  p_d << 0.3, 0.7;
  const Eigen::MatrixXd post_inv = fp::pi_inverse(0.9, p_d);
  CHECK(post_inv(0, 0) == doctest::Approx(1.275).epsilon(1e-14));
  CHECK(post_inv(0, 1) == doctest::Approx(-0.275).epsilon(1e-13));
  CHECK(post_inv(1, 0) ==
        doctest::Approx(-0.0607142857142857).epsilon(1e-12));
  CHECK(post_inv(1, 1) == doctest::Approx(1.0607142857142857).epsilon(1e-14));
}

TEST_CASE("forward matrices reject a singular or invalid keep probability") {
  CHECK_THROWS_AS(fp::forward_t(0.5, 2), fp::ValidationError);
  CHECK_THROWS_AS(fp::t_inverse(0.5, 2), fp::ValidationError);
  CHECK_THROWS_AS(fp::forward_t(1.1, 2), fp::ValidationError);
  CHECK_THROWS_AS(fp::forward_t(0.9, 1), fp::ValidationError);
  Eigen::VectorXd p_d(2);
  p_d << 0.3, 0.7;
  CHECK_THROWS_AS(fp::pi_inverse(0.5, p_d), fp::ValidationError);
  Eigen::VectorXd zero(2);
  zero << 0.0, 1.0;
  CHECK_THROWS_AS(fp::pi_inverse(0.9, zero), fp::ValidationError);
}

TEST_CASE("marginal recovery inverts the forward mixture") {
  Eigen::VectorXd p_s(2);
  p_s << 0.58, 0.42;
  const fp::MarginalRecovery rec = fp::recover_marginal(p_s, 0.9);
  CHECK_FALSE(rec.clamped);
  CHECK(rec.p_d[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(rec.p_d[1] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("marginal recovery floors entries that leave the simplex") {
  // An observed marginal more extreme than the mechanism can produce.
  Eigen::VectorXd p_s(2);
  p_s << 0.05, 0.95;
  const fp::MarginalRecovery rec = fp::recover_marginal(p_s, 0.9);
  CHECK(rec.clamped);
  CHECK(rec.p_d[0] == 0.001);
  CHECK(rec.p_d[1] == 0.999);
  CHECK(rec.p_d.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("marginal recovery round-trips random simplex points") {
  fp::SplitRng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform() * 4.0);
    const double pi = 1.0 / k + 0.1 + (0.9 - 1.0 / k) * rng.uniform();
    Eigen::VectorXd p_d(k);
    for (int i = 0; i < k; ++i) p_d[i] = 0.05 + rng.uniform();
    p_d /= p_d.sum();
    const Eigen::VectorXd p_s = fp::forward_t(pi, k) * p_d;
    const fp::MarginalRecovery rec = fp::recover_marginal(p_s, pi);
    CHECK_FALSE(rec.clamped);
    CHECK((rec.p_d - p_d).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("risk weight table at a known keep probability") {
  const fp::RiskWeights weights =
      fp::corrected_risk_weights(std::vector<long>{50, 50}, 0.9);
  CHECK(weights.w(0, 0) == doctest::Approx(0.5625).epsilon(1e-13));
  CHECK(weights.w(0, 1) == doctest::Approx(-0.0625).epsilon(1e-12));
  CHECK(weights.w(1, 0) == doctest::Approx(-0.0625).epsilon(1e-12));
  CHECK(weights.w(1, 1) == doctest::Approx(0.5625).epsilon(1e-13));
  CHECK(weights.matrices.p_s[0] == 0.5);
  CHECK(weights.matrices.c1 == doctest::Approx(1.125).epsilon(1e-14));

  // Row k sums to the recovered marginal of level k.
  for (int k = 0; k < 2; ++k) {
    CHECK(weights.w.row(k).sum() ==
          doctest::Approx(weights.matrices.p_d[k]).epsilon(1e-12));
  }
}

TEST_CASE("risk weight table collapses to the indicator table without noise") {
  const std::vector<long> counts = {131, 69, 300};
  const fp::RiskWeights weights = fp::corrected_risk_weights(counts, 1.0);
  const double n = 500.0;
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 3; ++j) {
      const double expected = k == j ? counts[k] / n : 0.0;
      CHECK(weights.w(k, j) == expected);  // bit-exact
    }
  }
  CHECK(weights.matrices.c1 == 1.0);
}

TEST_CASE("risk weights reject unobserved levels and bad counts") {
  CHECK_THROWS_AS(fp::corrected_risk_weights({100, 0}, 0.9),
                  fp::ValidationError);
  CHECK_THROWS_AS(fp::corrected_risk_weights({100}, 0.9), fp::ValidationError);
  CHECK_THROWS_AS(fp::corrected_risk_weights({100, 100}, 0.5),
                  fp::ValidationError);
}

TEST_CASE("record weights expand the table by observed level") {
  const fp::RiskWeights weights =
      fp::corrected_risk_weights(std::vector<long>{3, 2}, 0.8);
  const std::vector<int> s = {0, 1, 0, 0, 1};
  const Eigen::MatrixXd record = fp::record_weight_matrix(weights, s);
  REQUIRE(record.rows() == 5);
  REQUIRE(record.cols() == 2);
  for (long i = 0; i < 5; ++i) {
    for (int k = 0; k < 2; ++k) {
      const int j = s[static_cast<std::size_t>(i)];
      const double n_j = j == 0 ? 3.0 : 2.0;
      CHECK(record(i, k) == weights.w(k, j) / n_j);
    }
  }
  // Summing over records reproduces the table rows up to rounding.
  for (int k = 0; k < 2; ++k) {
    CHECK(record.col(k).sum() ==
          doctest::Approx(weights.w.row(k).sum()).epsilon(1e-12));
  }
}

TEST_CASE("privatization keep rate matches the mechanism probability") {
  const fp::RRParams params = fp::pi_from_target(0.8, 2);
  fp::Dataset data;
  const long n = 100000;
  data.x = Eigen::MatrixXd::Zero(n, 1);
  data.y = Eigen::VectorXd::Zero(n);
  data.d.assign(n, 0);
  for (long i = n / 2; i < n; ++i) data.d[static_cast<std::size_t>(i)] = 1;
  data.sensitive_cardinality = 2;

  const fp::Dataset out = fp::privatize_dataset(data, params, 99, true);
  long kept = 0;
  for (long i = 0; i < n; ++i) {
    if (out.s[static_cast<std::size_t>(i)] ==
        out.d[static_cast<std::size_t>(i)]) {
      ++kept;
    }
  }
  const double rate = static_cast<double>(kept) / static_cast<double>(n);
  const double se = std::sqrt(0.8 * 0.2 / static_cast<double>(n));
  CHECK(std::abs(rate - 0.8) <= 3.0 * se);
}

TEST_CASE("privatization draws are per-record substreams") {
  const fp::RRParams params = fp::pi_from_target(0.7, 3);
  fp::Dataset data;
  data.x = Eigen::MatrixXd::Zero(50, 1);
  data.y = Eigen::VectorXd::Zero(50);
  data.d.assign(50, 2);
  data.sensitive_cardinality = 3;

  const fp::Dataset a = fp::privatize_dataset(data, params, 5, true);
  const fp::Dataset b = fp::privatize_dataset(data, params, 5, true);
  CHECK(a.s == b.s);  // deterministic for a fixed seed

  const fp::Dataset c = fp::privatize_dataset(data, params, 6, true);
  CHECK(a.s != c.s);  // and seed-sensitive

  // Release path must not carry the truth.
  const fp::Dataset released = fp::privatize_dataset(data, params, 5, false);
  CHECK_FALSE(released.has_d());
  CHECK(released.has_s());
}

TEST_CASE("likelihood ratio of the mechanism is bounded by the budget") {
  const double epsilon = std::log(4.0);
  const fp::RRParams params = fp::rr_params(epsilon, 2);
  const long n = 200000;
  long kept = 0;
  for (long i = 0; i < n; ++i) {
    if (fp::privatize(0, params, static_cast<std::uint64_t>(i)) == 0) ++kept;
  }
  const double p_keep = static_cast<double>(kept) / static_cast<double>(n);
  const double p_flip = 1.0 - p_keep;
  CHECK(p_keep / p_flip ==
        doctest::Approx(std::exp(epsilon)).epsilon(0.05));
}
