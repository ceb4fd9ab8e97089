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
// Command-line front end.  Every run writes its outputs plus a manifest
// holding the exact arguments, the seeds consumed and a content digest per
// output file, so reruns are comparable byte for byte.
//
// Exit codes: 0 success, 2 invalid inputs or files, 3 failed computation.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "fairpremium/correction.hpp"
#include "fairpremium/csv.hpp"
#include "fairpremium/errors.hpp"
#include "fairpremium/experiment.hpp"
#include "fairpremium/manifest.hpp"
#include "fairpremium/noise.hpp"
#include "fairpremium/pricing.hpp"
#include "fairpremium/privacy.hpp"
#include "fairpremium/protocol.hpp"
#include "fairpremium/rng.hpp"
#include "fairpremium/synth.hpp"

namespace fp = fairpremium;

namespace {

std::vector<std::string> collect_args(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return args;
}

nlohmann::json json_vector(const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (long i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

nlohmann::json json_matrix(const Eigen::MatrixXd& m) {
  nlohmann::json j = nlohmann::json::array();
  for (long i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    j.push_back(std::move(row));
  }
  return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw fp::ValidationError("cannot write file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw fp::ValidationError("failed writing file: " + path);
}

std::string default_manifest(const std::string& primary_output) {
  return primary_output + ".manifest.json";
}

// Options shared by the training-flavoured subcommands.
struct TrainOpts {
  fp::TrainConfig config;
  fp::HypothesisSpec hypothesis;
  std::string hypothesis_kind = "net";

  void attach(CLI::App* cmd) {
    cmd->add_option("--lr", config.learning_rate, "Gradient step size");
    cmd->add_option("--epochs", config.epochs, "Maximum training epochs");
    cmd->add_option("--tol", config.convergence_tol,
                    "Stop when the largest parameter update falls below this");
    cmd->add_option("--init-scale", config.init_scale,
                    "Scale of the uniform parameter initialization");
    cmd->add_option("--train-seed", config.seed, "Parameter init seed");
    cmd->add_option("--hypothesis", hypothesis_kind,
                    "Score model family: linear or net")
        ->check(CLI::IsMember({"linear", "net"}));
    cmd->add_option("--hidden", hypothesis.hidden,
                    "Hidden layer widths for net models")
        ->delimiter(',');
  }

  fp::HypothesisSpec resolved() const {
    fp::HypothesisSpec spec = hypothesis;
    spec.kind = hypothesis_kind == "linear" ? fp::HypothesisSpec::Kind::kLinear
                                            : fp::HypothesisSpec::Kind::kNet;
    return spec;
  }

  nlohmann::json to_json() const {
    return {{"lr", config.learning_rate},
            {"epochs", config.epochs},
            {"tol", config.convergence_tol},
            {"init_scale", config.init_scale},
            {"train_seed", config.seed},
            {"hypothesis", hypothesis_kind},
            {"hidden", hypothesis.hidden}};
  }
};

struct IngestOpts {
  std::string path;
  fp::IngestOptions options;
  std::string task = "regression";

  void attach(CLI::App* cmd, bool need_sensitive, bool need_privatized) {
    cmd->add_option("--in", path, "Input CSV")->required();
    cmd->add_option("--outcome", options.outcome_column, "Outcome column")
        ->required();
    auto* sensitive = cmd->add_option("--sensitive", options.sensitive_column,
                                      "True-level column");
    if (need_sensitive) sensitive->required();
    auto* privatized = cmd->add_option(
        "--privatized", options.privatized_column, "Privatized-level column");
    if (need_privatized) privatized->required();
    cmd->add_option("--task", task, "regression or classification")
        ->check(CLI::IsMember({"regression", "classification"}));
  }

  fp::IngestResult load() {
    options.task = task == "classification" ? fp::Task::kClassification
                                            : fp::Task::kRegression;
    return fp::ingest_csv(path, options);
  }

  nlohmann::json to_json() const {
    return {{"in", path},
            {"outcome", options.outcome_column},
            {"sensitive", options.sensitive_column},
            {"privatized", options.privatized_column},
            {"task", task}};
  }
};

int run_synth(const std::vector<std::string>& args, CLI::App* cmd) {
  auto out = std::make_shared<std::string>();
  auto manifest_path = std::make_shared<std::string>();
  auto cfg = std::make_shared<fp::SynthConfig>();
  auto task = std::make_shared<std::string>("regression");

  cmd->add_option("--out", *out, "Output CSV")->required();
  cmd->add_option("--n", cfg->n, "Records to draw");
  cmd->add_option("--seed", cfg->seed, "Sampling seed");
  cmd->add_option("--sigma", cfg->sigma,
                  "Outcome noise scale (regression only)");
  cmd->add_option("--p-smoker", cfg->p_smoker, "Smoking probability");
  cmd->add_option("--p-female", cfg->p_female, "Overall level-1 probability");
  cmd->add_option("--p-female-given-smoker", cfg->p_female_given_smoker,
                  "Level-1 probability among smokers");
  cmd->add_option("--task", *task, "regression or classification")
      ->check(CLI::IsMember({"regression", "classification"}));
  cmd->add_option("--manifest", *manifest_path, "Manifest path");

  cmd->callback([=]() {
    fp::Dataset data;
    if (*task == "classification") {
      fp::SynthClassConfig cc;
      cc.n = cfg->n;
      cc.seed = cfg->seed;
      cc.p_smoker = cfg->p_smoker;
      cc.p_female = cfg->p_female;
      cc.p_female_given_smoker = cfg->p_female_given_smoker;
      data = fp::dgp_sample_class(cc);
    } else {
      data = fp::dgp_sample(*cfg);
    }
    fp::write_dataset_csv(*out, data, /*include_d=*/true, /*include_s=*/false);

    fp::RunManifest manifest("synth", args);
    manifest.set_config({{"n", cfg->n},
                         {"sigma", cfg->sigma},
                         {"p_smoker", cfg->p_smoker},
                         {"p_female", cfg->p_female},
                         {"p_female_given_smoker", cfg->p_female_given_smoker},
                         {"task", *task},
                         {"out", *out}});
    manifest.add_seed("sample", cfg->seed);
    manifest.add_output(*out);
    manifest.write(manifest_path->empty() ? default_manifest(*out)
                                          : *manifest_path);
  });
  return 0;
}

int run_privatize(const std::vector<std::string>& args, CLI::App* cmd) {
  auto ingest = std::make_shared<IngestOpts>();
  auto out = std::make_shared<std::string>();
  auto manifest_path = std::make_shared<std::string>();
  auto epsilon = std::make_shared<double>(0.0);
  auto pi = std::make_shared<double>(0.0);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto keep_truth = std::make_shared<bool>(false);

  ingest->attach(cmd, /*need_sensitive=*/true, /*need_privatized=*/false);
  cmd->add_option("--out", *out, "Output CSV")->required();
  auto* eps_opt = cmd->add_option("--epsilon", *epsilon, "Privacy budget");
  auto* pi_opt =
      cmd->add_option("--pi", *pi, "Keep probability (alternative to budget)");
  eps_opt->excludes(pi_opt);
  cmd->add_option("--seed", *seed, "Mechanism seed");
  cmd->add_flag("--keep-truth", *keep_truth,
                "Also keep the true levels in the output");
  cmd->add_option("--manifest", *manifest_path, "Manifest path");

  cmd->callback([=]() {
    if (eps_opt->count() == 0 && pi_opt->count() == 0) {
      throw fp::ValidationError("one of --epsilon or --pi is required");
    }
    const fp::Dataset data = ingest->load().data;
    if (!data.has_d()) {
      throw fp::ValidationError("input carries no true levels to privatize");
    }
    fp::RRParams params;
    if (eps_opt->count() > 0) {
      params = fp::rr_params(*epsilon, data.sensitive_cardinality);
    } else if (*pi >= 1.0) {
      params = fp::noiseless_params(data.sensitive_cardinality);
    } else {
      params = fp::pi_from_target(*pi, data.sensitive_cardinality);
    }
    const fp::Dataset released =
        fp::privatize_dataset(data, params, *seed, *keep_truth);
    fp::write_dataset_csv(*out, released, *keep_truth, /*include_s=*/true);

    fp::RunManifest manifest("privatize", args);
    nlohmann::json config = ingest->to_json();
    config["epsilon"] = params.epsilon;
    config["pi"] = params.pi;
    config["keep_truth"] = *keep_truth;
    config["out"] = *out;
    manifest.set_config(config);
    manifest.add_seed("privatize", *seed);
    manifest.add_output(*out);
    manifest.write(manifest_path->empty() ? default_manifest(*out)
                                          : *manifest_path);
  });
  return 0;
}

int run_correction(const std::vector<std::string>& args, CLI::App* cmd) {
  auto pi = std::make_shared<double>(0.0);
  auto counts = std::make_shared<std::vector<long>>();
  auto out = std::make_shared<std::string>();
  auto manifest_path = std::make_shared<std::string>();

  cmd->add_option("--pi", *pi, "Keep probability")->required();
  cmd->add_option("--counts", *counts, "Observed level counts")
      ->required()
      ->delimiter(',');
  cmd->add_option("--out", *out, "Write the tables to this JSON file");
  cmd->add_option("--manifest", *manifest_path, "Manifest path");

  cmd->callback([=]() {
    const fp::RiskWeights weights = fp::corrected_risk_weights(*counts, *pi);
    const int k = static_cast<int>(counts->size());
    nlohmann::json j;
    j["pi"] = *pi;
    j["cardinality"] = k;
    j["c1"] = weights.matrices.c1;
    j["t"] = json_matrix(fp::forward_t(*pi, k));
    j["t_inv"] = json_matrix(weights.matrices.t_inv);
    j["p_s"] = json_vector(weights.matrices.p_s);
    j["p_d"] = json_vector(weights.matrices.p_d);
    j["marginal_clamped"] = weights.matrices.marginal_clamped;
    j["pi_inv"] = json_matrix(weights.matrices.pi_inv);
    j["w"] = json_matrix(weights.w);
    if (out->empty()) {
      std::cout << j.dump(2) << '\n';
      return;
    }
    write_json_file(*out, j);
    fp::RunManifest manifest("correction", args);
    manifest.set_config({{"pi", *pi}, {"counts", *counts}, {"out", *out}});
    manifest.add_output(*out);
    manifest.write(manifest_path->empty() ? default_manifest(*out)
                                          : *manifest_path);
  });
  return 0;
}

int run_estimate_noise(const std::vector<std::string>& args, CLI::App* cmd) {
  auto ingest = std::make_shared<IngestOpts>();
  auto train = std::make_shared<TrainOpts>();
  auto n1 = std::make_shared<int>(4);
  auto j_star = std::make_shared<int>(-1);
  auto min_group = std::make_shared<long>(50);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto out = std::make_shared<std::string>();
  auto manifest_path = std::make_shared<std::string>();

  ingest->attach(cmd, /*need_sensitive=*/false, /*need_privatized=*/true);
  train->attach(cmd);
  cmd->add_option("--n1", *n1, "Number of estimation groups");
  cmd->add_option("--j-star", *j_star,
                  "Anchor level (default: most frequent observed level)");
  cmd->add_option("--min-group-size", *min_group, "Smallest allowed group");
  cmd->add_option("--seed", *seed, "Group shuffle seed");
  cmd->add_option("--out", *out, "Write the estimate to this JSON file");
  cmd->add_option("--manifest", *manifest_path, "Manifest path");

  cmd->callback([=]() {
    const fp::Dataset data = ingest->load().data;
    const std::optional<int> anchor_level =
        *j_star >= 0 ? std::optional<int>(*j_star) : std::nullopt;
    const fp::AnchorEstimate estimate = fp::c1_procedure(
        data.x, data.s, data.sensitive_cardinality, anchor_level, *n1,
        train->config, *seed, *min_group);
    nlohmann::json j;
    j["pi_hat"] = estimate.pi_hat;
    j["c1_hat"] = estimate.c1_hat;
    j["c1_var"] = estimate.c1_var;
    j["j_star"] = estimate.j_star;
    j["n1"] = estimate.n1;
    j["group_size"] = estimate.group_size;
    j["group_pi"] = estimate.group_pi;
    j["groups_kept"] = estimate.group_pi.size();
    if (estimate.pi_hat < 1.0) {
      j["epsilon_hat"] =
          fp::pi_from_target(estimate.pi_hat, data.sensitive_cardinality)
              .epsilon;
    }
    if (out->empty()) {
      std::cout << j.dump(2) << '\n';
      return;
    }
    write_json_file(*out, j);
    fp::RunManifest manifest("estimate-noise", args);
    nlohmann::json config = ingest->to_json();
    config["train"] = train->to_json();
    config["n1"] = *n1;
    config["min_group_size"] = *min_group;
    config["out"] = *out;
    manifest.set_config(config);
    manifest.add_seed("estimate", *seed);
    manifest.add_output(*out);
    manifest.write(manifest_path->empty() ? default_manifest(*out)
                                          : *manifest_path);
  });
  return 0;
}

int run_train(const std::vector<std::string>& args, CLI::App* cmd) {
  auto ingest = std::make_shared<IngestOpts>();
  auto train = std::make_shared<TrainOpts>();
  auto method = std::make_shared<std::string>();
  auto pi = std::make_shared<double>(0.0);
  auto estimate = std::make_shared<bool>(false);
  auto n1 = std::make_shared<int>(4);
  auto estimate_seed = std::make_shared<std::uint64_t>(0);
  auto p_star = std::make_shared<std::vector<double>>();
  auto model_prefix = std::make_shared<std::string>();
  auto summary_out = std::make_shared<std::string>();
  auto manifest_path = std::make_shared<std::string>();

  ingest->attach(cmd, /*need_sensitive=*/false, /*need_privatized=*/false);
  train->attach(cmd);
  cmd->add_option("--method", *method,
                  "mptp (true levels), mptp-ldp (privatized levels) or "
                  "unaware (no levels)")
      ->required()
      ->check(CLI::IsMember({"mptp", "mptp-ldp", "unaware"}));
  auto* pi_opt = cmd->add_option(
      "--pi", *pi, "Known keep probability of the privatized levels");
  auto* est_flag = cmd->add_flag("--estimate", *estimate,
                                 "Estimate the keep probability instead");
  est_flag->excludes(pi_opt);
  cmd->add_option("--n1", *n1, "Estimation groups for --estimate");
  cmd->add_option("--estimate-seed", *estimate_seed,
                  "Group shuffle seed for --estimate");
  cmd->add_option("--p-star", *p_star,
                  "Mixing weights for the group-blind price")
      ->delimiter(',');
  cmd->add_option("--model-out", *model_prefix, "Model file prefix")
      ->required();
  cmd->add_option("--summary-out", *summary_out,
                  "Summary JSON path (default <prefix>.summary.json)");
  cmd->add_option("--manifest", *manifest_path, "Manifest path");

  cmd->callback([=]() {
    const fp::Dataset data = ingest->load().data;
    const fp::HypothesisSpec hypothesis = train->resolved();
    std::optional<Eigen::VectorXd> reference;
    if (!p_star->empty()) {
      reference = Eigen::Map<const Eigen::VectorXd>(
          p_star->data(), static_cast<long>(p_star->size()));
    }

    std::vector<std::string> outputs;
    nlohmann::json summary;
    summary["method"] = *method;

    if (*method == "unaware") {
      const fp::Model model =
          fp::unawareness_model(data, hypothesis, train->config);
      const std::string path = *model_prefix + ".model";
      fp::save_model_file(path, model);
      outputs.push_back(path);
      summary["model"] = path;
    } else {
      fp::FairTrainResult result;
      if (*method == "mptp") {
        result = fp::mptp(data, hypothesis, train->config, reference);
      } else {
        if (!data.has_s()) {
          throw fp::ValidationError(
              "mptp-ldp needs a privatized column (--privatized)");
        }
        fp::NoiseSpec noise = fp::KnownNoise{1.0};
        if (*estimate) {
          noise = fp::EstimateNoise{*n1, std::nullopt, 50, *estimate_seed,
                                    std::nullopt};
        } else if (pi_opt->count() > 0) {
          noise = fp::KnownNoise{*pi};
        } else {
          throw fp::ValidationError(
              "mptp-ldp needs --pi or --estimate");
        }
        result = fp::mptp_ldp(data, noise, hypothesis, train->config,
                              reference);
      }
      summary["pi_used"] = result.pi_used;
      summary["noise_mode"] = result.noise_mode == fp::NoiseMode::kEstimated
                                  ? "estimated"
                                  : "known";
      summary["p_star"] = json_vector(result.reference.p_star);
      summary["weight_table"] = json_matrix(result.weights.w);
      if (!result.trace.objective.empty()) {
        summary["final_objective"] = result.trace.objective.back();
      }
      if (result.anchor) {
        summary["pi_hat"] = result.anchor->pi_hat;
        summary["j_star"] = result.anchor->j_star;
      }
      nlohmann::json model_paths = nlohmann::json::array();
      for (std::size_t k = 0; k < result.models.models.size(); ++k) {
        const std::string path =
            *model_prefix + "_group" + std::to_string(k) + ".model";
        fp::save_model_file(path, result.models.models[k]);
        outputs.push_back(path);
        model_paths.push_back(path);
      }
      summary["models"] = model_paths;
    }

    const std::string summary_path = summary_out->empty()
                                         ? *model_prefix + ".summary.json"
                                         : *summary_out;
    write_json_file(summary_path, summary);
    outputs.push_back(summary_path);

    fp::RunManifest manifest("train", args);
    nlohmann::json config = ingest->to_json();
    config["train"] = train->to_json();
    config["method"] = *method;
    manifest.set_config(config);
    manifest.add_seed("train", train->config.seed);
    if (*estimate) manifest.add_seed("estimate", *estimate_seed);
    for (const std::string& path : outputs) manifest.add_output(path);
    manifest.write(manifest_path->empty()
                       ? default_manifest(summary_path)
                       : *manifest_path);
  });
  return 0;
}

int run_price(const std::vector<std::string>& args, CLI::App* cmd) {
  auto ingest = std::make_shared<IngestOpts>();
  auto model_paths = std::make_shared<std::vector<std::string>>();
  auto unaware_path = std::make_shared<std::string>();
  auto p_star = std::make_shared<std::vector<double>>();
  auto out = std::make_shared<std::string>();
  auto manifest_path = std::make_shared<std::string>();

  ingest->attach(cmd, /*need_sensitive=*/false, /*need_privatized=*/false);
  cmd->add_option("--model", *model_paths,
                  "Group model files, one per level in order")
      ->required();
  cmd->add_option("--unaware-model", *unaware_path,
                  "Optional single-model baseline to score alongside");
  cmd->add_option("--p-star", *p_star,
                  "Mixing weights for the group-blind price")
      ->required()
      ->delimiter(',');
  cmd->add_option("--out", *out, "Output CSV")->required();
  cmd->add_option("--manifest", *manifest_path, "Manifest path");

  cmd->callback([=]() {
    const fp::Dataset data = ingest->load().data;
    fp::GroupModelSet models;
    models.task = data.task;
    for (const std::string& path : *model_paths) {
      models.models.push_back(fp::load_model_file(path));
    }
    const Eigen::VectorXd reference = Eigen::Map<const Eigen::VectorXd>(
        p_star->data(), static_cast<long>(p_star->size()));
    std::optional<fp::Model> unaware;
    if (!unaware_path->empty()) {
      unaware = fp::load_model_file(*unaware_path);
    }
    const fp::PremiumReport report = fp::premium_report(
        models, reference, data.x, unaware ? &*unaware : nullptr);

    std::vector<std::string> header;
    for (long k = 0; k < report.best_estimate.cols(); ++k) {
      header.push_back("best_estimate_" + std::to_string(k));
    }
    header.push_back("dfp");
    header.push_back("dfp_raw");
    if (unaware) header.push_back("unawareness");
    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<std::size_t>(data.rows()));
    for (long i = 0; i < data.rows(); ++i) {
      std::vector<std::string> row;
      for (long k = 0; k < report.best_estimate.cols(); ++k) {
        row.push_back(fp::format_double(report.best_estimate(i, k)));
      }
      row.push_back(fp::format_double(report.dfp[i]));
      row.push_back(fp::format_double(report.dfp_raw[i]));
      if (unaware) {
        row.push_back(fp::format_double((*report.unawareness)[i]));
      }
      rows.push_back(std::move(row));
    }
    fp::write_csv(*out, header, rows);

    fp::RunManifest manifest("price", args);
    nlohmann::json config = ingest->to_json();
    config["models"] = *model_paths;
    config["p_star"] = *p_star;
    config["out"] = *out;
    manifest.set_config(config);
    manifest.add_output(*out);
    manifest.write(manifest_path->empty() ? default_manifest(*out)
                                          : *manifest_path);
  });
  return 0;
}

int run_experiment(const std::vector<std::string>& args, CLI::App* cmd) {
  auto plan_path = std::make_shared<std::string>();
  auto results_path = std::make_shared<std::string>();
  auto traces_path = std::make_shared<std::string>();
  auto manifest_path = std::make_shared<std::string>();

  cmd->add_option("--plan", *plan_path, "Plan file (key = value lines)")
      ->required();
  cmd->add_option("--results", *results_path, "Results CSV")->required();
  cmd->add_option("--traces", *traces_path,
                  "Trace CSV (default <results>.traces.csv when traced)");
  cmd->add_option("--manifest", *manifest_path, "Manifest path");

  cmd->callback([=]() {
    const fp::ExperimentPlan plan = fp::parse_plan_file(*plan_path);
    const fp::RunOutput output = fp::run_plan(plan);
    fp::write_results_csv(*results_path, output.rows);

    fp::RunManifest manifest("experiment", args);
    manifest.set_config({{"plan", *plan_path}});
    for (std::uint64_t seed : plan.seeds) {
      manifest.add_seed("cell", seed);
    }
    manifest.add_output(*results_path);
    if (!output.traces.empty()) {
      const std::string path = traces_path->empty()
                                   ? *results_path + ".traces.csv"
                                   : *traces_path;
      fp::write_traces_csv(path, output.traces);
      manifest.add_output(path);
    }
    manifest.write(manifest_path->empty() ? default_manifest(*results_path)
                                          : *manifest_path);
  });
  return 0;
}

int run_insurer(const std::vector<std::string>& args, CLI::App* cmd) {
  auto ingest = std::make_shared<IngestOpts>();
  auto train = std::make_shared<TrainOpts>();
  auto representation = std::make_shared<std::string>("raw");
  auto include_x_star = std::make_shared<bool>(false);
  auto payload_out = std::make_shared<std::string>();
  auto transformation_out = std::make_shared<std::string>();
  auto manifest_path = std::make_shared<std::string>();

  ingest->attach(cmd, /*need_sensitive=*/false, /*need_privatized=*/false);
  train->attach(cmd);
  cmd->add_option("--representation", *representation,
                  "Ship raw features or a learned representation")
      ->check(CLI::IsMember({"raw", "transformed"}));
  cmd->add_flag("--include-x-star", *include_x_star,
                "Also ship raw features for noise estimation");
  cmd->add_option("--payload-out", *payload_out, "Payload file")->required();
  cmd->add_option("--transformation-out", *transformation_out,
                  "Keep the fitted transformation in this model file");
  cmd->add_option("--manifest", *manifest_path, "Manifest path");

  cmd->callback([=]() {
    const fp::IngestResult loaded = ingest->load();
    // The level columns named on ingest stay with the caller; they are
    // stripped from the feature matrix and must not reappear as columns.
    const fp::PrepareOutput prepared = fp::insurer_prepare(
        loaded.data,
        *representation == "transformed"
            ? fp::RepresentationMode::kTransformed
            : fp::RepresentationMode::kRaw,
        train->hypothesis.hidden, train->config, *include_x_star);
    std::vector<std::string> forbidden;
    if (!ingest->options.sensitive_column.empty()) {
      forbidden.push_back(ingest->options.sensitive_column);
    }
    if (!ingest->options.privatized_column.empty()) {
      forbidden.push_back(ingest->options.privatized_column);
    }
    fp::audit_payload(prepared.payload, forbidden);
    fp::write_payload(*payload_out, prepared.payload);

    fp::RunManifest manifest("insurer", args);
    nlohmann::json config = ingest->to_json();
    config["representation"] = *representation;
    config["include_x_star"] = *include_x_star;
    config["train"] = train->to_json();
    manifest.set_config(config);
    manifest.add_seed("train", train->config.seed);
    manifest.add_output(*payload_out);
    if (prepared.transformation && !transformation_out->empty()) {
      fp::save_model_file(*transformation_out,
                          fp::Model{*prepared.transformation});
      manifest.add_output(*transformation_out);
    }
    manifest.write(manifest_path->empty() ? default_manifest(*payload_out)
                                          : *manifest_path);
  });
  return 0;
}

int run_ttp(const std::vector<std::string>& args, CLI::App* cmd) {
  auto payload_path = std::make_shared<std::string>();
  auto store_path = std::make_shared<std::string>();
  auto store_column = std::make_shared<std::string>("s");
  auto pi = std::make_shared<double>(0.0);
  auto estimate = std::make_shared<bool>(false);
  auto n1 = std::make_shared<int>(4);
  auto estimate_seed = std::make_shared<std::uint64_t>(0);
  auto train = std::make_shared<TrainOpts>();
  auto p_star = std::make_shared<std::vector<double>>();
  auto export_models = std::make_shared<bool>(false);
  auto result_out = std::make_shared<std::string>();
  auto session_out = std::make_shared<std::string>();
  auto manifest_path = std::make_shared<std::string>();

  cmd->add_option("--payload", *payload_path, "Insurer payload file")
      ->required();
  cmd->add_option("--store", *store_path,
                  "CSV holding the (possibly privatized) levels")
      ->required();
  cmd->add_option("--store-column", *store_column, "Level column name");
  auto* pi_opt =
      cmd->add_option("--pi", *pi, "Known keep probability of the levels");
  auto* est_flag = cmd->add_flag("--estimate", *estimate,
                                 "Estimate the keep probability instead");
  est_flag->excludes(pi_opt);
  cmd->add_option("--n1", *n1, "Estimation groups for --estimate");
  cmd->add_option("--estimate-seed", *estimate_seed,
                  "Group shuffle seed for --estimate");
  train->attach(cmd);
  cmd->add_option("--p-star", *p_star,
                  "Mixing weights for the group-blind price")
      ->delimiter(',');
  cmd->add_flag("--export-models", *export_models,
                "Embed the trained group models in the result file");
  cmd->add_option("--result-out", *result_out, "Result file")->required();
  cmd->add_option("--session-out", *session_out,
                  "Session manifest JSON (default <result>.session.json)");
  cmd->add_option("--manifest", *manifest_path, "Manifest path");

  cmd->callback([=]() {
    const fp::InsurerPayload payload = fp::read_payload(*payload_path);

    const fp::CsvTable table = fp::read_csv(*store_path);
    const auto column = std::find(table.header.begin(), table.header.end(),
                                  *store_column);
    if (column == table.header.end()) {
      throw fp::ValidationError("store column '" + *store_column +
                                "' not found");
    }
    const std::size_t col =
        static_cast<std::size_t>(column - table.header.begin());
    fp::SensitiveStore store;
    std::vector<std::string> level_order;
    for (const auto& row : table.rows) {
      const std::string& value = row[col];
      auto it = std::find(level_order.begin(), level_order.end(), value);
      if (it == level_order.end()) {
        level_order.push_back(value);
        it = std::prev(level_order.end());
      }
      store.s.push_back(static_cast<int>(it - level_order.begin()));
    }
    store.cardinality = static_cast<int>(level_order.size());
    if (pi_opt->count() > 0) store.pi = *pi;

    fp::TtpOptions options;
    options.hypothesis = train->resolved();
    options.train = train->config;
    options.export_models = *export_models;
    if (*estimate) {
      options.noise = fp::EstimateNoise{*n1, std::nullopt, 50, *estimate_seed,
                                        std::nullopt};
    } else if (!store.pi) {
      throw fp::ValidationError("ttp needs --pi or --estimate");
    }
    if (!p_star->empty()) {
      options.p_star = Eigen::Map<const Eigen::VectorXd>(
          p_star->data(), static_cast<long>(p_star->size()));
    }

    const fp::TTPResult result = fp::ttp_serve(payload, store, options);
    fp::write_result(*result_out, result);

    const std::string session_path = session_out->empty()
                                         ? *result_out + ".session.json"
                                         : *session_out;
    nlohmann::json session = fp::session_manifest(*payload_path, *result_out);
    session["levels"] = level_order;
    write_json_file(session_path, session);

    fp::RunManifest manifest("ttp", args);
    manifest.set_config({{"payload", *payload_path},
                         {"store", *store_path},
                         {"store_column", *store_column},
                         {"estimate", *estimate},
                         {"export_models", *export_models},
                         {"train", train->to_json()}});
    manifest.add_seed("train", train->config.seed);
    if (*estimate) manifest.add_seed("estimate", *estimate_seed);
    manifest.add_output(*result_out);
    manifest.add_output(session_path);
    manifest.write(manifest_path->empty() ? default_manifest(*result_out)
                                          : *manifest_path);
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Group-blind insurance pricing from privatized sensitive levels"};
  app.require_subcommand(1);
  const std::vector<std::string> args = collect_args(argc, argv);

  run_synth(args, app.add_subcommand("synth", "Draw a synthetic portfolio"));
  run_privatize(args, app.add_subcommand(
                          "privatize",
                          "Apply randomized response to the level column"));
  run_correction(args,
                 app.add_subcommand(
                     "correction",
                     "Print the debiasing tables for a keep probability"));
  run_estimate_noise(args, app.add_subcommand(
                               "estimate-noise",
                               "Estimate the keep probability from data"));
  run_train(args, app.add_subcommand("train", "Fit pricing models"));
  run_price(args,
            app.add_subcommand("price", "Score records with saved models"));
  run_experiment(args, app.add_subcommand("experiment", "Run a sweep plan"));
  run_insurer(args, app.add_subcommand(
                        "insurer", "Prepare the feature payload (no levels)"));
  run_ttp(args, app.add_subcommand(
                    "ttp", "Train on a payload joined with a level store"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const fp::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fp::ComputationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
