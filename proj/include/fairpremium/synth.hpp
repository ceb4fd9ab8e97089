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
// Synthetic health-premium generators with a known ground truth, used to
// exercise every pipeline against analytic answers.

#ifndef FAIRPREMIUM_SYNTH_HPP_
#define FAIRPREMIUM_SYNTH_HPP_

#include <cstdint>

#include "fairpremium/data.hpp"

namespace fairpremium {

// Two-feature claim-cost population.  Age is uniform on {18..80}, smoking
// has probability p_smoker, and the protected level (0 = male, 1 = female)
// is drawn conditionally on smoking so the two are dependent:
// P(female | smoker) is configured and P(female | non-smoker) follows from
// the fixed overall P(female).  Claims are
//   y = 100 + 4*age + 100*smoker + 120*female
//       + 200*[age in [20, 40]]*female + noise,  noise ~ N(0, sigma^2).
struct SynthConfig {
  long n = 5000;
  std::uint64_t seed = 0;
  double sigma = 40.0;
  double p_smoker = 0.3;
  double p_female = 0.45;
  double p_female_given_smoker = 0.8;
};

// Conditional mean claim cost.  Age must lie in [18, 80].
double dgp_mean(int age, bool smoker, bool female);

// Samples a dataset with features (age, smoker), true level d and exact
// conditional-mean outcomes plus Gaussian noise.  Record i draws from
// substream (seed, i).  Rejects configurations whose implied
// P(female | non-smoker) leaves [0, 1].
Dataset dgp_sample(const SynthConfig& config);

struct AnalyticPremiums {
  double best_estimate_male = 0.0;
  double best_estimate_female = 0.0;
  double unawareness = 0.0;  // mixes with P(level | smoker status)
  double dfp = 0.0;          // mixes with the population marginal
};

// Closed-form prices at a covariate cell under the default configuration.
AnalyticPremiums analytic_premiums(int age, bool smoker,
                                   const SynthConfig& config = SynthConfig{});

// Classification counterpart: same covariate and level structure, binary
// outcome with log-odds linear in age and shifted by smoking and the level.
struct SynthClassConfig {
  long n = 5000;
  std::uint64_t seed = 0;
  double p_smoker = 0.3;
  double p_female = 0.45;
  double p_female_given_smoker = 0.8;
};

// P(y = 1 | age, smoker, level).
double dgp_class_prob(int age, bool smoker, bool female);

Dataset dgp_sample_class(const SynthClassConfig& config);

// One-covariate design with a genuine anchor region for the noise
// estimators: x ~ U(0, 1) and P(level = 1 | x) ramps up and then equals one
// identically on the plateau [anchor_start, 1].
struct AnchorConfig {
  long n = 5000;
  std::uint64_t seed = 0;
  double anchor_start = 0.55;
  // Largest posterior value reached; 1.0 gives a true anchor, smaller
  // values give designs where no covariate cell pins the level.
  double purity = 1.0;
};

double anchor_posterior(double x, const AnchorConfig& config);

Dataset anchor_sample(const AnchorConfig& config);

}  // namespace fairpremium

#endif  // FAIRPREMIUM_SYNTH_HPP_
