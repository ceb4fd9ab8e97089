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

#ifndef FAIRPREMIUM_DATA_HPP_
#define FAIRPREMIUM_DATA_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fairpremium {

enum class Task { kRegression, kClassification };

// Columnar dataset.  `d` holds the true sensitive level per record and `s`
// the privatized level; either may be absent (empty).  Level indices are
// dense in [0, sensitive_cardinality).
struct Dataset {
  Eigen::MatrixXd x;  // n x q feature matrix
  Eigen::VectorXd y;  // n outcomes
  std::vector<int> d;
  std::vector<int> s;
  std::vector<std::string> feature_names;
  std::vector<std::string> sensitive_levels;  // label per level index
  int sensitive_cardinality = 0;
  Task task = Task::kRegression;

  long rows() const { return x.rows(); }
  long cols() const { return x.cols(); }
  bool has_d() const { return !d.empty(); }
  bool has_s() const { return !s.empty(); }

  // Checks structural consistency: matching lengths, finite features and
  // outcomes, level indices in range, {0,1} outcomes for classification.
  // Throws ValidationError.
  void validate() const;

  // Row subset in the given order.
  Dataset select(const std::vector<int>& indices) const;
};

// Single-record view used by record-oriented call sites.
struct Record {
  Eigen::VectorXd x;
  double y = 0.0;
  std::optional<int> d;
  std::optional<int> s;
};

Record record_at(const Dataset& data, long i);

struct SplitConfig {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct SplitResult {
  Dataset train;
  Dataset test;
};

// Seeded disjoint train/test partition.  The test set holds
// round(n * test_fraction) records; both halves keep the original record
// order.  Identical seeds give identical partitions.
SplitResult split(const Dataset& data, const SplitConfig& config);

// Occurrence counts of each level in [0, cardinality).
std::vector<long> level_counts(const std::vector<int>& levels, int cardinality);

// Empirical level frequencies; sums to one.
Eigen::VectorXd empirical_marginal(const std::vector<int>& levels,
                                   int cardinality);

}  // namespace fairpremium

#endif  // FAIRPREMIUM_DATA_HPP_
