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

#include "fairpremium/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "fairpremium/errors.hpp"
#include "fairpremium/privacy.hpp"
#include "fairpremium/rng.hpp"

namespace fairpremium {
namespace {

// Stream labels for the per-cell substreams, so the independent stages of a
// cell never share draws.
enum CellStream : std::uint64_t {
  kStreamSample = 1,
  kStreamSplit = 2,
  kStreamPrivatize = 3,
  kStreamEstimate = 4,
};

RRParams params_for(double pi, int cardinality) {
  return pi >= 1.0 ? noiseless_params(cardinality)
                   : pi_from_target(pi, cardinality);
}

Dataset subsample(const Dataset& data, long n, std::uint64_t seed) {
  if (n > data.rows()) {
    throw ValidationError("requested more records than the source holds");
  }
  if (n == data.rows()) return data;
  std::vector<int> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), 0);
  SplitRng rng(seed);
  rng.shuffle(order);
  order.resize(static_cast<std::size_t>(n));
  std::sort(order.begin(), order.end());  // keep original record order
  return data.select(order);
}

Dataset transformed_copy(const Dataset& data, const FeedForwardNet& net) {
  Dataset out = data;
  out.x = representation_batch(net, data.x);
  out.feature_names.clear();
  for (long j = 0; j < out.x.cols(); ++j) {
    out.feature_names.push_back("rep" + std::to_string(j));
  }
  return out;
}

struct CellSpec {
  double pi = 1.0;
  long n = 0;
  int n1 = 0;
  double perturbation = 0.0;
  std::uint64_t seed = 0;
  std::string mode;
  std::string representation;
};

void push_metric(RunOutput& out, const CellSpec& cell,
                 const std::string& metric, double value) {
  out.rows.push_back(ResultRow{cell.mode, cell.representation, cell.pi, cell.n,
                               cell.n1, cell.perturbation, cell.seed, metric,
                               value, "ok"});
}

void run_cell(const ExperimentPlan& plan, const Dataset& source,
              const CellSpec& cell, RunOutput& out) {
  const Dataset sampled =
      plan.csv_path.empty()
          ? [&] {
              SynthConfig cfg = plan.synth;
              cfg.n = cell.n;
              cfg.seed = mix_seed(plan.synth.seed,
                                  mix_seed(cell.seed, kStreamSample));
              return dgp_sample(cfg);
            }()
          : subsample(source, cell.n, mix_seed(cell.seed, kStreamSample));

  SplitResult parts = split(
      sampled, SplitConfig{plan.test_fraction, mix_seed(cell.seed,
                                                        kStreamSplit)});
  const int k = sampled.sensitive_cardinality;
  Dataset train = privatize_dataset(parts.train, params_for(cell.pi, k),
                                    mix_seed(cell.seed, kStreamPrivatize),
                                    /*keep_truth=*/true);
  Dataset test = std::move(parts.test);

  std::optional<FeedForwardNet> transformation;
  if (plan.representation == RepresentationMode::kTransformed) {
    transformation =
        train_transformation(train, plan.transformation_hidden, plan.train);
    train = transformed_copy(train, *transformation);
    test = transformed_copy(test, *transformation);
  }

  const FairTrainResult benchmark = mptp(train, plan.hypothesis, plan.train);

  NoiseSpec noise = KnownNoise{cell.pi};
  if (plan.noise_mode == NoiseMode::kEstimated) {
    noise = EstimateNoise{cell.n1, std::nullopt, 50,
                          mix_seed(cell.seed, kStreamEstimate), std::nullopt};
  } else if (!plan.perturbation_grid.empty()) {
    noise = KnownNoise{perturb_pi(cell.pi, cell.perturbation,
                                  plan.perturbation_relative, k)};
  }
  const FairTrainResult debiased =
      mptp_ldp(train, noise, plan.hypothesis, plan.train);

  const Model unaware = unawareness_model(train, plan.hypothesis, plan.train);

  const LossKind kind = loss_for(train.task);
  push_metric(out, cell, "test_loss_benchmark",
              evaluate_stratified(benchmark.models, test, kind));
  push_metric(out, cell, "test_loss_debiased",
              evaluate_stratified(debiased.models, test, kind));
  push_metric(out, cell, "test_loss_unaware",
              evaluate_model(unaware, test, kind));
  push_metric(out, cell, "dfp_loss_debiased",
              evaluate_dfp(debiased.models, debiased.reference.p_star, test,
                           kind));

  const Eigen::VectorXd dfp_benchmark =
      benchmark.models.group_scores(test.x) * benchmark.reference.p_star;
  const Eigen::VectorXd dfp_debiased =
      debiased.models.group_scores(test.x) * debiased.reference.p_star;
  const Eigen::VectorXd diff = dfp_debiased - dfp_benchmark;
  push_metric(out, cell, "dfp_mae", diff.array().abs().mean());
  push_metric(out, cell, "dfp_under_share",
              (diff.array() < 0.0).cast<double>().mean());
  push_metric(out, cell, "pi_used", debiased.pi_used);
  if (debiased.anchor) {
    push_metric(out, cell, "pi_hat", debiased.anchor->pi_hat);
  }

  if (plan.trace_stride > 0) {
    const auto& objective = debiased.trace.objective;
    for (std::size_t e = 0; e < objective.size(); ++e) {
      const bool last = e + 1 == objective.size();
      if (last || static_cast<long>(e) % plan.trace_stride == 0) {
        out.traces.push_back(TraceRow{cell.pi, cell.n, cell.seed,
                                      static_cast<long>(e), objective[e]});
      }
    }
  }
}

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

double parse_double(const std::string& text, const std::string& key) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError("plan key '" + key + "': bad number '" + text + "'");
  }
  return value;
}

long parse_long(const std::string& text, const std::string& key) {
  long value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError("plan key '" + key + "': bad integer '" + text +
                          "'");
  }
  return value;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text,
                                       const std::string& key) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      seeds.push_back(static_cast<std::uint64_t>(parse_long(item, key)));
      continue;
    }
    const long lo = parse_long(item.substr(0, colon), key);
    const long hi = parse_long(item.substr(colon + 1), key);
    if (hi < lo) {
      throw ValidationError("plan key '" + key + "': empty range '" + item +
                            "'");
    }
    for (long v = lo; v <= hi; ++v) {
      seeds.push_back(static_cast<std::uint64_t>(v));
    }
  }
  return seeds;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ValidationError("plan key '" + key + "': expected true or false");
}

}  // namespace

RunOutput run_plan(const ExperimentPlan& plan) {
  if (!(plan.test_fraction > 0.0 && plan.test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie in (0, 1)");
  }
  if (plan.pi_grid.empty()) throw ValidationError("empty keep grid");
  if (plan.seeds.empty()) throw ValidationError("empty seed list");
  if (plan.noise_mode == NoiseMode::kEstimated && plan.n1_grid.empty()) {
    throw ValidationError("estimated mode needs a group-count grid");
  }
  if (plan.noise_mode == NoiseMode::kEstimated &&
      !plan.perturbation_grid.empty()) {
    throw ValidationError(
        "perturbations apply to the known-noise mode only");
  }

  Dataset source;
  if (!plan.csv_path.empty()) {
    source = ingest_csv(plan.csv_path, plan.ingest).data;
    source.validate();
    if (!source.has_d()) {
      throw ValidationError("experiment sources need true levels");
    }
  }

  std::vector<long> n_grid = plan.n_grid;
  if (n_grid.empty()) {
    n_grid.push_back(plan.csv_path.empty() ? plan.synth.n : source.rows());
  }

  // Inner grid: group counts (estimated), perturbations (perturbed), or a
  // single pass-through cell (known).
  std::string mode = "known";
  std::vector<std::pair<int, double>> inner = {{0, 0.0}};
  if (plan.noise_mode == NoiseMode::kEstimated) {
    mode = "estimated";
    inner.clear();
    for (int n1 : plan.n1_grid) inner.emplace_back(n1, 0.0);
  } else if (!plan.perturbation_grid.empty()) {
    mode = "perturbed";
    inner.clear();
    for (double p : plan.perturbation_grid) inner.emplace_back(0, p);
  }
  const std::string representation =
      plan.representation == RepresentationMode::kTransformed ? "transformed"
                                                              : "raw";

  RunOutput out;
  for (double pi : plan.pi_grid) {
    for (long n : n_grid) {
      for (const auto& [n1, perturbation] : inner) {
        for (std::uint64_t seed : plan.seeds) {
          CellSpec cell{pi, n, n1, perturbation, seed, mode, representation};
          try {
            run_cell(plan, source, cell, out);
          } catch (const ValidationError& e) {
            out.rows.push_back(ResultRow{mode, representation, pi, n, n1,
                                         perturbation, seed, "error", 0.0,
                                         std::string("failed:") + e.what()});
          } catch (const ComputationError& e) {
            out.rows.push_back(ResultRow{mode, representation, pi, n, n1,
                                         perturbation, seed, "error", 0.0,
                                         std::string("failed:") + e.what()});
          }
        }
      }
    }
  }
  return out;
}

void write_results_csv(const std::string& path,
                       const std::vector<ResultRow>& rows) {
  std::vector<std::vector<std::string>> body;
  body.reserve(rows.size());
  for (const ResultRow& row : rows) {
    body.push_back({row.mode, row.representation, format_double(row.pi),
                    std::to_string(row.n), std::to_string(row.n1),
                    format_double(row.perturbation), std::to_string(row.seed),
                    row.metric, format_double(row.value), row.status});
  }
  write_csv(path,
            {"mode", "representation", "pi", "n", "n1", "perturbation",
             "seed", "metric", "value", "status"},
            body);
}

void write_traces_csv(const std::string& path,
                      const std::vector<TraceRow>& traces) {
  std::vector<std::vector<std::string>> body;
  body.reserve(traces.size());
  for (const TraceRow& row : traces) {
    body.push_back({format_double(row.pi), std::to_string(row.n),
                    std::to_string(row.seed), std::to_string(row.epoch),
                    format_double(row.objective)});
  }
  write_csv(path, {"pi", "n", "seed", "epoch", "objective"}, body);
}

ExperimentPlan parse_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open plan file: " + path);

  ExperimentPlan plan;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("plan line " + std::to_string(line_no) +
                            ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ValidationError("plan line " + std::to_string(line_no) +
                            ": expected key = value");
    }

    if (key == "csv") {
      plan.csv_path = value;
    } else if (key == "outcome") {
      plan.ingest.outcome_column = value;
    } else if (key == "sensitive") {
      plan.ingest.sensitive_column = value;
    } else if (key == "privatized") {
      plan.ingest.privatized_column = value;
    } else if (key == "task") {
      if (value == "regression") {
        plan.ingest.task = Task::kRegression;
      } else if (value == "classification") {
        plan.ingest.task = Task::kClassification;
      } else {
        throw ValidationError("plan key 'task': unknown task '" + value + "'");
      }
    } else if (key == "pi") {
      plan.pi_grid.clear();
      for (const auto& item : split_list(value)) {
        plan.pi_grid.push_back(parse_double(item, key));
      }
    } else if (key == "n") {
      plan.n_grid.clear();
      for (const auto& item : split_list(value)) {
        plan.n_grid.push_back(parse_long(item, key));
      }
    } else if (key == "seeds") {
      plan.seeds = parse_seeds(value, key);
    } else if (key == "noise") {
      if (value == "known") {
        plan.noise_mode = NoiseMode::kKnown;
      } else if (value == "estimated") {
        plan.noise_mode = NoiseMode::kEstimated;
      } else {
        throw ValidationError("plan key 'noise': unknown mode '" + value +
                              "'");
      }
    } else if (key == "n1") {
      plan.n1_grid.clear();
      for (const auto& item : split_list(value)) {
        plan.n1_grid.push_back(static_cast<int>(parse_long(item, key)));
      }
    } else if (key == "perturb") {
      plan.perturbation_grid.clear();
      for (const auto& item : split_list(value)) {
        plan.perturbation_grid.push_back(parse_double(item, key));
      }
    } else if (key == "perturb_relative") {
      plan.perturbation_relative = parse_bool(value, key);
    } else if (key == "representation") {
      if (value == "raw") {
        plan.representation = RepresentationMode::kRaw;
      } else if (value == "transformed") {
        plan.representation = RepresentationMode::kTransformed;
      } else {
        throw ValidationError("plan key 'representation': unknown mode '" +
                              value + "'");
      }
    } else if (key == "transform_hidden") {
      plan.transformation_hidden.clear();
      for (const auto& item : split_list(value)) {
        plan.transformation_hidden.push_back(
            static_cast<int>(parse_long(item, key)));
      }
    } else if (key == "hypothesis") {
      if (value == "linear") {
        plan.hypothesis.kind = HypothesisSpec::Kind::kLinear;
      } else if (value == "net") {
        plan.hypothesis.kind = HypothesisSpec::Kind::kNet;
      } else {
        throw ValidationError("plan key 'hypothesis': unknown kind '" + value +
                              "'");
      }
    } else if (key == "hidden") {
      plan.hypothesis.hidden.clear();
      for (const auto& item : split_list(value)) {
        plan.hypothesis.hidden.push_back(
            static_cast<int>(parse_long(item, key)));
      }
    } else if (key == "lr") {
      plan.train.learning_rate = parse_double(value, key);
    } else if (key == "epochs") {
      plan.train.epochs = parse_long(value, key);
    } else if (key == "tol") {
      plan.train.convergence_tol = parse_double(value, key);
    } else if (key == "init_scale") {
      plan.train.init_scale = parse_double(value, key);
    } else if (key == "train_seed") {
      plan.train.seed = static_cast<std::uint64_t>(parse_long(value, key));
    } else if (key == "test_fraction") {
      plan.test_fraction = parse_double(value, key);
    } else if (key == "trace_stride") {
      plan.trace_stride = parse_long(value, key);
    } else if (key == "synth_n") {
      plan.synth.n = parse_long(value, key);
    } else if (key == "synth_seed") {
      plan.synth.seed = static_cast<std::uint64_t>(parse_long(value, key));
    } else if (key == "sigma") {
      plan.synth.sigma = parse_double(value, key);
    } else if (key == "p_smoker") {
      plan.synth.p_smoker = parse_double(value, key);
    } else if (key == "p_female") {
      plan.synth.p_female = parse_double(value, key);
    } else if (key == "p_female_given_smoker") {
      plan.synth.p_female_given_smoker = parse_double(value, key);
    } else {
      throw ValidationError("plan line " + std::to_string(line_no) +
                            ": unknown key '" + key + "'");
    }
  }
  return plan;
}

}  // namespace fairpremium
