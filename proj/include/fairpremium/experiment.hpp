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

#ifndef FAIRPREMIUM_EXPERIMENT_HPP_
#define FAIRPREMIUM_EXPERIMENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fairpremium/csv.hpp"
#include "fairpremium/pricing.hpp"
#include "fairpremium/synth.hpp"

namespace fairpremium {

// Sweep description: the cross product of keep probabilities, sample sizes,
// group counts / perturbations (mode-dependent) and seeds.  Each cell runs
// the full pipeline (sample or subsample, split, privatize, train the
// level-aware benchmark, the debiased model set and the group-blind
// baseline, evaluate on held-out records) and contributes one row per
// metric.
struct ExperimentPlan {
  // Data source: the synthetic generator unless csv_path is set.
  std::string csv_path;
  IngestOptions ingest;
  SynthConfig synth;

  std::vector<double> pi_grid = {0.9};
  std::vector<long> n_grid;  // empty: synth.n or the full CSV
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  NoiseMode noise_mode = NoiseMode::kKnown;
  std::vector<int> n1_grid = {4};  // estimated mode only
  // Offsets applied to the true keep probability (perturbation study);
  // empty means the true value is used.
  std::vector<double> perturbation_grid;
  bool perturbation_relative = false;

  RepresentationMode representation = RepresentationMode::kRaw;
  std::vector<int> transformation_hidden = {5, 5, 5};

  HypothesisSpec hypothesis;
  TrainConfig train;
  double test_fraction = 0.2;

  // Emit every stride-th epoch of the debiased training objective; 0 = off.
  long trace_stride = 0;
};

struct ResultRow {
  std::string mode;  // known | estimated | perturbed
  std::string representation;
  double pi = 1.0;
  long n = 0;
  int n1 = 0;
  double perturbation = 0.0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  std::string status;  // ok | failed:<reason>
};

struct TraceRow {
  double pi = 1.0;
  long n = 0;
  std::uint64_t seed = 0;
  long epoch = 0;
  double objective = 0.0;
};

struct RunOutput {
  std::vector<ResultRow> rows;
  std::vector<TraceRow> traces;
};

// Runs every cell of the plan.  Cells are independent and seeded, so the
// output is reproducible row for row; a failing cell records a failed
// status row instead of aborting the sweep.
RunOutput run_plan(const ExperimentPlan& plan);

void write_results_csv(const std::string& path,
                       const std::vector<ResultRow>& rows);
void write_traces_csv(const std::string& path,
                      const std::vector<TraceRow>& traces);

// Flat key = value plan file (# comments, comma lists, lo:hi seed ranges).
// Unknown keys are rejected.
ExperimentPlan parse_plan_file(const std::string& path);

}  // namespace fairpremium

#endif  // FAIRPREMIUM_EXPERIMENT_HPP_
