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

#include "fairpremium/synth.hpp"

#include <cmath>

#include "fairpremium/errors.hpp"
#include "fairpremium/rng.hpp"

namespace fairpremium {
namespace {

constexpr int kAgeMin = 18;
constexpr int kAgeMax = 80;

// Log-odds of the classification outcome:
//   -1 + 0.04 * (age - 50) + 0.8 * smoker + 1.2 * female.
constexpr double kClassBias = -1.0;
constexpr double kClassAgeSlope = 0.04;
constexpr int kClassAgeCenter = 50;
constexpr double kClassSmokerShift = 0.8;
constexpr double kClassFemaleShift = 1.2;

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError(std::string(what) + " must lie in [0, 1]");
  }
}

// P(female | smoker status) implied by the marginal and the smoker
// conditional: P(F) = P(S) P(F|S) + (1 - P(S)) P(F|NS).
double female_given(bool smoker, double p_smoker, double p_female,
                    double p_female_given_smoker) {
  check_probability(p_smoker, "smoking probability");
  check_probability(p_female, "female probability");
  check_probability(p_female_given_smoker, "female-given-smoker probability");
  if (smoker) return p_female_given_smoker;
  if (p_smoker == 1.0) return 0.0;  // unused branch: no non-smokers exist
  const double implied =
      (p_female - p_smoker * p_female_given_smoker) / (1.0 - p_smoker);
  if (!(implied >= 0.0 && implied <= 1.0)) {
    throw ValidationError(
        "implied female-given-non-smoker probability leaves [0, 1]");
  }
  return implied;
}

void seed_levels(Dataset& data) {
  data.feature_names = {"age", "smoker"};
  data.sensitive_levels = {"M", "F"};
  data.sensitive_cardinality = 2;
}

}  // namespace

double dgp_mean(int age, bool smoker, bool female) {
  if (age < kAgeMin || age > kAgeMax) {
    throw ValidationError("age must lie in [18, 80]");
  }
  const bool young_adult = age >= 20 && age <= 40;
  return 100.0 + 4.0 * age + (smoker ? 100.0 : 0.0) +
         (female ? 120.0 : 0.0) +
         (young_adult && female ? 200.0 : 0.0);
}

Dataset dgp_sample(const SynthConfig& config) {
  if (config.n < 1) throw ValidationError("sample size must be positive");
  if (!(config.sigma >= 0.0)) {
    throw ValidationError("noise scale must be non-negative");
  }
  // Validate the full conditional table up front.
  female_given(false, config.p_smoker, config.p_female,
               config.p_female_given_smoker);

  Dataset data;
  data.x.resize(config.n, 2);
  data.y.resize(config.n);
  data.d.resize(static_cast<std::size_t>(config.n));
  seed_levels(data);
  data.task = Task::kRegression;

  for (long i = 0; i < config.n; ++i) {
    SplitRng rng(mix_seed(config.seed, static_cast<std::uint64_t>(i)));
    const int age = rng.uniform_int(kAgeMin, kAgeMax);
    const bool smoker = rng.uniform() < config.p_smoker;
    const double p_female = female_given(smoker, config.p_smoker,
                                         config.p_female,
                                         config.p_female_given_smoker);
    const bool female = rng.uniform() < p_female;
    data.x(i, 0) = static_cast<double>(age);
    data.x(i, 1) = smoker ? 1.0 : 0.0;
    data.d[static_cast<std::size_t>(i)] = female ? 1 : 0;
    data.y[i] = dgp_mean(age, smoker, female) + config.sigma * rng.normal();
  }
  return data;
}

AnalyticPremiums analytic_premiums(int age, bool smoker,
                                   const SynthConfig& config) {
  AnalyticPremiums out;
  out.best_estimate_male = dgp_mean(age, smoker, false);
  out.best_estimate_female = dgp_mean(age, smoker, true);

  const double p_female_cond = female_given(
      smoker, config.p_smoker, config.p_female, config.p_female_given_smoker);
  out.unawareness = (1.0 - p_female_cond) * out.best_estimate_male +
                    p_female_cond * out.best_estimate_female;
  check_probability(config.p_female, "female probability");
  out.dfp = (1.0 - config.p_female) * out.best_estimate_male +
            config.p_female * out.best_estimate_female;
  return out;
}

double dgp_class_prob(int age, bool smoker, bool female) {
  if (age < kAgeMin || age > kAgeMax) {
    throw ValidationError("age must lie in [18, 80]");
  }
  const double logit = kClassBias +
                       kClassAgeSlope * static_cast<double>(age -
                                                            kClassAgeCenter) +
                       (smoker ? kClassSmokerShift : 0.0) +
                       (female ? kClassFemaleShift : 0.0);
  return 1.0 / (1.0 + std::exp(-logit));
}

Dataset dgp_sample_class(const SynthClassConfig& config) {
  if (config.n < 1) throw ValidationError("sample size must be positive");
  female_given(false, config.p_smoker, config.p_female,
               config.p_female_given_smoker);

  Dataset data;
  data.x.resize(config.n, 2);
  data.y.resize(config.n);
  data.d.resize(static_cast<std::size_t>(config.n));
  seed_levels(data);
  data.task = Task::kClassification;

  for (long i = 0; i < config.n; ++i) {
    SplitRng rng(mix_seed(config.seed, static_cast<std::uint64_t>(i)));
    const int age = rng.uniform_int(kAgeMin, kAgeMax);
    const bool smoker = rng.uniform() < config.p_smoker;
    const double p_female = female_given(smoker, config.p_smoker,
                                         config.p_female,
                                         config.p_female_given_smoker);
    const bool female = rng.uniform() < p_female;
    data.x(i, 0) = static_cast<double>(age);
    data.x(i, 1) = smoker ? 1.0 : 0.0;
    data.d[static_cast<std::size_t>(i)] = female ? 1 : 0;
    data.y[i] =
        rng.uniform() < dgp_class_prob(age, smoker, female) ? 1.0 : 0.0;
  }
  return data;
}

double anchor_posterior(double x, const AnchorConfig& config) {
  if (!(config.anchor_start > 0.0 && config.anchor_start < 1.0)) {
    throw ValidationError("anchor region start must lie in (0, 1)");
  }
  if (!(config.purity > 0.0 && config.purity <= 1.0)) {
    throw ValidationError("anchor purity must lie in (0, 1]");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ValidationError("anchor covariate must lie in [0, 1]");
  }
  if (x >= config.anchor_start) return config.purity;
  return config.purity * x / config.anchor_start;
}

Dataset anchor_sample(const AnchorConfig& config) {
  if (config.n < 1) throw ValidationError("sample size must be positive");
  anchor_posterior(0.0, config);  // validate the shape parameters

  Dataset data;
  data.x.resize(config.n, 1);
  data.y = Eigen::VectorXd::Zero(config.n);
  data.d.resize(static_cast<std::size_t>(config.n));
  data.feature_names = {"x"};
  data.sensitive_levels = {"0", "1"};
  data.sensitive_cardinality = 2;
  data.task = Task::kRegression;

  for (long i = 0; i < config.n; ++i) {
    SplitRng rng(mix_seed(config.seed, static_cast<std::uint64_t>(i)));
    const double x = rng.uniform();
    data.x(i, 0) = x;
    data.d[static_cast<std::size_t>(i)] =
        rng.uniform() < anchor_posterior(x, config) ? 1 : 0;
  }
  return data;
}

}  // namespace fairpremium
