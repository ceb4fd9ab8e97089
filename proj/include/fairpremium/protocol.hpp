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
// Two-role exchange.  The insurer never holds sensitive levels; the trusted
// third party holds them (possibly privatized) but no raw covariates.  The
// insurer ships feature representations and outcomes, the third party trains
// the group models and returns scores and group-blind prices.  Files use a
// versioned text format whose numbers round-trip doubles bit-exactly, so a
// round trip through disk reproduces in-process results to the last bit.

#ifndef FAIRPREMIUM_PROTOCOL_HPP_
#define FAIRPREMIUM_PROTOCOL_HPP_

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "fairpremium/data.hpp"
#include "fairpremium/pricing.hpp"

#include <nlohmann/json_fwd.hpp>

namespace fairpremium {

inline constexpr int kProtocolSchemaVersion = 1;

struct InsurerPayload {
  int schema_version = kProtocolSchemaVersion;
  Task task = Task::kRegression;
  std::vector<std::string> columns;   // representation column names
  Eigen::MatrixXd representation;     // n x q
  Eigen::VectorXd outcomes;
  // Optional covariates for noise estimation when they differ from the
  // transmitted representation (e.g. raw features).
  std::vector<std::string> x_star_columns;
  std::optional<Eigen::MatrixXd> x_star;
};

// The third party's share: levels only, plus the mechanism's keep
// probability when it is known.
struct SensitiveStore {
  std::vector<int> s;
  int cardinality = 0;
  std::optional<double> pi;
};

struct PrepareOutput {
  InsurerPayload payload;
  // The fitted transformation stays with the insurer; only its outputs are
  // shipped.
  std::optional<FeedForwardNet> transformation;
};

// Builds the insurer's payload from a dataset: either raw features or the
// last hidden layer of a net fitted to (x, y).  The payload is audited
// before it is returned.  `include_raw_x_star` additionally ships raw
// features for the noise estimators.
PrepareOutput insurer_prepare(const Dataset& data, RepresentationMode mode,
                              const std::vector<int>& hidden,
                              const TrainConfig& config,
                              bool include_raw_x_star = false);

// Static schema audit: column counts match the matrices and no column uses a
// reserved sensitive name ("d", "s", or any caller-supplied alias such as
// the source column the levels came from).  Throws ValidationError.
void audit_payload(const InsurerPayload& payload,
                   const std::vector<std::string>& forbidden = {});

struct TtpOptions {
  // Defaults to KnownNoise{*store.pi} when the store knows the mechanism,
  // otherwise estimation with default settings.
  std::optional<NoiseSpec> noise;
  HypothesisSpec hypothesis;
  TrainConfig train;
  std::optional<Eigen::VectorXd> p_star;
  // Also return the trained group models in the result file.
  bool export_models = false;
};

struct TTPResult {
  int schema_version = kProtocolSchemaVersion;
  std::string noise_mode;  // known | estimated
  double pi_used = 1.0;
  Eigen::VectorXd p_star;
  Eigen::MatrixXd group_scores;  // n x K, unfloored
  Eigen::VectorXd dfp;           // group_scores * p_star
  std::vector<Model> models;     // empty unless export was requested
};

// Runs debiased group training on the payload joined with the store.
// Audits the payload, checks row alignment, never copies per-record levels
// into the result.  Invariant: dfp == group_scores * p_star.
TTPResult ttp_serve(const InsurerPayload& payload, const SensitiveStore& store,
                    const TtpOptions& options);

// File codec.  Encoding is deterministic: equal values produce equal bytes.
// Decoding failures throw CodecError with a fault of kVersionMismatch,
// kTruncated or kCountMismatch.
void write_payload(const std::string& path, const InsurerPayload& payload);
InsurerPayload read_payload(const std::string& path);
void write_result(const std::string& path, const TTPResult& result);
TTPResult read_result(const std::string& path);

// Session manifest describing one exchange: file names, row counts, schema
// version and content hashes.
nlohmann::json session_manifest(const std::string& payload_path,
                                const std::string& result_path);

}  // namespace fairpremium

#endif  // FAIRPREMIUM_PROTOCOL_HPP_
