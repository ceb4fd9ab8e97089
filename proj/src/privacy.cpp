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

#include "fairpremium/privacy.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fairpremium/errors.hpp"
#include "fairpremium/rng.hpp"

namespace fairpremium {
namespace {

void check_cardinality(int cardinality) {
  if (cardinality < 2) {
    throw ValidationError("mechanism needs at least two levels, got " +
                          std::to_string(cardinality));
  }
}

}  // namespace

RRParams rr_params(double epsilon, int cardinality) {
  check_cardinality(cardinality);
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("privacy budget must be positive and finite");
  }
  RRParams params;
  params.epsilon = epsilon;
  params.cardinality = cardinality;
  const double e = std::exp(epsilon);
  params.pi = e / (cardinality - 1 + e);
  params.pi_bar = 1.0 / (cardinality - 1 + e);
  return params;
}

RRParams pi_from_target(double pi, int cardinality) {
  check_cardinality(cardinality);
  const double lower = 1.0 / cardinality;
  if (!(pi > lower && pi < 1.0)) {
    throw ValidationError("keep probability must lie in (1/cardinality, 1)");
  }
  RRParams params;
  params.cardinality = cardinality;
  params.pi = pi;
  params.pi_bar = (1.0 - pi) / (cardinality - 1);
  params.epsilon = std::log(pi * (cardinality - 1) / (1.0 - pi));
  return params;
}

RRParams noiseless_params(int cardinality) {
  check_cardinality(cardinality);
  RRParams params;
  params.cardinality = cardinality;
  params.pi = 1.0;
  params.pi_bar = 0.0;
  params.epsilon = std::numeric_limits<double>::infinity();
  return params;
}

int privatize(int d, const RRParams& params, std::uint64_t seed) {
  if (d < 0 || d >= params.cardinality) {
    throw ValidationError("level outside [0, cardinality)");
  }
  SplitRng rng(seed);
  const double u = rng.uniform();
  if (u < params.pi) return d;
  // Map the tail mass uniformly over the other levels, skipping d.
  int other = static_cast<int>((u - params.pi) / params.pi_bar);
  if (other > params.cardinality - 2) other = params.cardinality - 2;
  return other < d ? other : other + 1;
}

Dataset privatize_dataset(const Dataset& data, const RRParams& params,
                          std::uint64_t seed, bool keep_truth) {
  data.validate();
  if (!data.has_d()) {
    throw ValidationError("dataset carries no true levels to privatize");
  }
  if (params.cardinality != data.sensitive_cardinality) {
    throw ValidationError("mechanism cardinality does not match dataset");
  }
  Dataset out = data;
  out.s.resize(data.d.size());
  for (long i = 0; i < data.rows(); ++i) {
    // One substream per record index: draws are stable under insertion.
    out.s[static_cast<std::size_t>(i)] =
        privatize(data.d[static_cast<std::size_t>(i)], params,
                  mix_seed(seed, static_cast<std::uint64_t>(i)));
  }
  if (!keep_truth) out.d.clear();
  return out;
}

}  // namespace fairpremium
