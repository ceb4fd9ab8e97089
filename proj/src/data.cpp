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

#include "fairpremium/data.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "fairpremium/errors.hpp"
#include "fairpremium/rng.hpp"

namespace fairpremium {
namespace {

void check_levels(const std::vector<int>& levels, long n, int cardinality,
                  const char* name) {
  if (levels.empty()) return;
  if (static_cast<long>(levels.size()) != n) {
    throw ValidationError(std::string(name) + " length does not match rows");
  }
  for (int level : levels) {
    if (level < 0 || level >= cardinality) {
      throw ValidationError(std::string(name) + " level " +
                            std::to_string(level) + " outside [0, " +
                            std::to_string(cardinality) + ")");
    }
  }
}

}  // namespace

void Dataset::validate() const {
  const long n = rows();
  if (n == 0) throw ValidationError("dataset is empty");
  if (y.size() != n) throw ValidationError("outcome length does not match rows");
  if (!x.allFinite()) throw ValidationError("non-finite feature value");
  if (!y.allFinite()) throw ValidationError("non-finite outcome value");
  if (!feature_names.empty() &&
      static_cast<long>(feature_names.size()) != cols()) {
    throw ValidationError("feature name count does not match columns");
  }
  if ((has_d() || has_s()) && sensitive_cardinality < 2) {
    throw ValidationError("sensitive levels require cardinality >= 2");
  }
  check_levels(d, n, sensitive_cardinality, "d");
  check_levels(s, n, sensitive_cardinality, "s");
  if (task == Task::kClassification) {
    for (long i = 0; i < n; ++i) {
      if (y[i] != 0.0 && y[i] != 1.0) {
        throw ValidationError("classification outcomes must be 0 or 1");
      }
    }
  }
}

Dataset Dataset::select(const std::vector<int>& indices) const {
  Dataset out;
  const long m = static_cast<long>(indices.size());
  out.x.resize(m, cols());
  out.y.resize(m);
  if (has_d()) out.d.resize(indices.size());
  if (has_s()) out.s.resize(indices.size());
  for (long i = 0; i < m; ++i) {
    const int src = indices[static_cast<std::size_t>(i)];
    out.x.row(i) = x.row(src);
    out.y[i] = y[src];
    if (has_d()) out.d[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(src)];
    if (has_s()) out.s[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(src)];
  }
  out.feature_names = feature_names;
  out.sensitive_levels = sensitive_levels;
  out.sensitive_cardinality = sensitive_cardinality;
  out.task = task;
  return out;
}

Record record_at(const Dataset& data, long i) {
  if (i < 0 || i >= data.rows()) throw ValidationError("record index out of range");
  Record r;
  r.x = data.x.row(i);
  r.y = data.y[i];
  if (data.has_d()) r.d = data.d[static_cast<std::size_t>(i)];
  if (data.has_s()) r.s = data.s[static_cast<std::size_t>(i)];
  return r;
}

SplitResult split(const Dataset& data, const SplitConfig& config) {
  data.validate();
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    throw ValidationError("test_fraction must lie in (0, 1)");
  }
  const long n = data.rows();
  const long test_size =
      std::lround(static_cast<double>(n) * config.test_fraction);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  SplitRng rng(config.seed);
  rng.shuffle(order);

  // Membership mask so both halves preserve the original record order.
  std::vector<char> in_test(static_cast<std::size_t>(n), 0);
  for (long i = 0; i < test_size; ++i) {
    in_test[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
  }
  std::vector<int> train_idx, test_idx;
  train_idx.reserve(static_cast<std::size_t>(n - test_size));
  test_idx.reserve(static_cast<std::size_t>(test_size));
  for (long i = 0; i < n; ++i) {
    (in_test[static_cast<std::size_t>(i)] ? test_idx : train_idx)
        .push_back(static_cast<int>(i));
  }
  return SplitResult{data.select(train_idx), data.select(test_idx)};
}

std::vector<long> level_counts(const std::vector<int>& levels,
                               int cardinality) {
  if (cardinality < 1) throw ValidationError("cardinality must be positive");
  std::vector<long> counts(static_cast<std::size_t>(cardinality), 0);
  for (int level : levels) {
    if (level < 0 || level >= cardinality) {
      throw ValidationError("level outside [0, cardinality)");
    }
    ++counts[static_cast<std::size_t>(level)];
  }
  return counts;
}

Eigen::VectorXd empirical_marginal(const std::vector<int>& levels,
                                   int cardinality) {
  if (levels.empty()) throw ValidationError("no levels to count");
  const std::vector<long> counts = level_counts(levels, cardinality);
  Eigen::VectorXd marginal(cardinality);
  const double n = static_cast<double>(levels.size());
  for (int k = 0; k < cardinality; ++k) {
    marginal[k] = static_cast<double>(counts[static_cast<std::size_t>(k)]) / n;
  }
  return marginal;
}

}  // namespace fairpremium
