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

#ifndef FAIRPREMIUM_PRIVACY_HPP_
#define FAIRPREMIUM_PRIVACY_HPP_

#include <cstdint>

#include "fairpremium/data.hpp"

namespace fairpremium {

// Randomized response over a finite level set of size `cardinality`.
// The true level is kept with probability `pi` and otherwise replaced by a
// level drawn uniformly from the remaining ones, independently of all other
// record fields.  Invariant: pi + (cardinality - 1) * pi_bar == 1 and
// pi / pi_bar == exp(epsilon).
struct RRParams {
  double epsilon = 0.0;
  int cardinality = 0;
  double pi = 0.0;
  double pi_bar = 0.0;
};

// Builds parameters from a privacy budget epsilon > 0.
// pi = exp(epsilon) / (cardinality - 1 + exp(epsilon)).
RRParams rr_params(double epsilon, int cardinality);

// Inverts rr_params: finds the budget whose keep probability is `pi`.
// Requires pi in the open interval (1/cardinality, 1); the endpoints map to
// zero and infinite budgets.
RRParams pi_from_target(double pi, int cardinality);

// Identity mechanism (pi == 1, infinite budget).  Kept separate from
// pi_from_target so the noiseless configuration stays representable.
RRParams noiseless_params(int cardinality);

// Applies the mechanism to one level using a dedicated stream.
int privatize(int d, const RRParams& params, std::uint64_t seed);

// Applies the mechanism record-wise.  Record i draws from substream
// (seed, i), so inserting or removing records leaves all other draws
// untouched.  The result carries `s`; `d` is kept only when `keep_truth`
// is set (evaluation harnesses need the ground truth, release paths must
// not).  Features and outcomes are never read.
Dataset privatize_dataset(const Dataset& data, const RRParams& params,
                          std::uint64_t seed, bool keep_truth);

}  // namespace fairpremium

#endif  // FAIRPREMIUM_PRIVACY_HPP_
