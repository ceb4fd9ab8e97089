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

#include "fairpremium/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "fairpremium/csv.hpp"
#include "fairpremium/errors.hpp"
#include "fairpremium/manifest.hpp"

namespace fairpremium {
namespace {

std::string lower(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return text;
}

std::string task_name(Task task) {
  return task == Task::kClassification ? "classification" : "regression";
}

Task parse_task(const std::string& name) {
  if (name == "regression") return Task::kRegression;
  if (name == "classification") return Task::kClassification;
  throw CodecError(CodecFault::kCountMismatch,
                   "payload file: unknown task '" + name + "'");
}

// Line-oriented reader for the wire files.  Embedded model blocks are read
// with the token-based model loader; sync_line() flushes the remainder of
// the token line afterwards so line parsing can resume.
class LineReader {
 public:
  explicit LineReader(std::istream& in, std::string label)
      : in_(in), label_(std::move(label)) {}

  std::string line(const char* what) {
    std::string text;
    if (!std::getline(in_, text)) {
      throw CodecError(CodecFault::kTruncated,
                       label_ + ": truncated before " + std::string(what));
    }
    if (!text.empty() && text.back() == '\r') text.pop_back();
    return text;
  }

  bool at_end() {
    return in_.peek() == std::char_traits<char>::eof();
  }

  void sync_line() {
    std::string rest;
    std::getline(in_, rest);
    if (!rest.empty() && rest.back() == '\r') rest.pop_back();
    if (!rest.empty()) {
      throw CodecError(CodecFault::kCountMismatch,
                       label_ + ": unexpected trailing content '" + rest + "'");
    }
  }

  std::istream& stream() { return in_; }
  const std::string& label() const { return label_; }

 private:
  std::istream& in_;
  std::string label_;
};

std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream stream(line);
  std::string field;
  while (stream >> field) fields.push_back(field);
  return fields;
}

double parse_value(const std::string& token, const LineReader& reader) {
  double v = 0.0;
  const char* end = token.data() + token.size();
  const auto result = std::from_chars(token.data(), end, v);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw CodecError(CodecFault::kCountMismatch,
                     reader.label() + ": bad number '" + token + "'");
  }
  return v;
}

long parse_size(const std::string& token, const LineReader& reader) {
  long v = 0;
  const char* end = token.data() + token.size();
  const auto result = std::from_chars(token.data(), end, v);
  if (result.ec != std::errc{} || result.ptr != end || v < 0) {
    throw CodecError(CodecFault::kCountMismatch,
                     reader.label() + ": bad count '" + token + "'");
  }
  return v;
}

// A keyword line "key n0 [n1 ...]" with an exact arity.
std::vector<long> keyword_counts(LineReader& reader, const std::string& key,
                                 std::size_t arity) {
  const std::string text = reader.line(key.c_str());
  const std::vector<std::string> fields = fields_of(text);
  if (fields.empty() || fields[0] != key || fields.size() != arity + 1) {
    throw CodecError(CodecFault::kCountMismatch,
                     reader.label() + ": expected '" + key + "' line, got '" +
                         text + "'");
  }
  std::vector<long> counts;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    counts.push_back(parse_size(fields[i], reader));
  }
  return counts;
}

void check_version(LineReader& reader, const std::string& magic) {
  const std::string text = reader.line("header");
  const std::vector<std::string> fields = fields_of(text);
  if (fields.size() != 2 || fields[0] != magic) {
    throw CodecError(CodecFault::kVersionMismatch,
                     reader.label() + ": not a " + magic + " file");
  }
  if (fields[1] != std::to_string(kProtocolSchemaVersion)) {
    throw CodecError(CodecFault::kVersionMismatch,
                     reader.label() + ": unsupported version " + fields[1]);
  }
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (long i = 0; i < m.rows(); ++i) {
    for (long j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(LineReader& reader, long rows, long cols,
                            const char* what) {
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    const std::vector<std::string> fields = fields_of(reader.line(what));
    if (static_cast<long>(fields.size()) != cols) {
      throw CodecError(CodecFault::kCountMismatch,
                       reader.label() + ": row of " + what + " has " +
                           std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(cols));
    }
    for (long j = 0; j < cols; ++j) {
      m(i, j) = parse_value(fields[static_cast<std::size_t>(j)], reader);
    }
  }
  return m;
}

Eigen::VectorXd read_column(LineReader& reader, long size, const char* what) {
  return read_matrix(reader, size, 1, what).col(0);
}

void expect_end(LineReader& reader) {
  if (reader.line("end marker") != "end") {
    throw CodecError(CodecFault::kCountMismatch,
                     reader.label() + ": missing end marker");
  }
  while (!reader.at_end()) {
    if (!reader.line("trailer").empty()) {
      throw CodecError(CodecFault::kCountMismatch,
                       reader.label() + ": content after end marker");
    }
  }
}

}  // namespace

PrepareOutput insurer_prepare(const Dataset& data, RepresentationMode mode,
                              const std::vector<int>& hidden,
                              const TrainConfig& config,
                              bool include_raw_x_star) {
  data.validate();
  PrepareOutput out;
  out.payload.task = data.task;
  out.payload.outcomes = data.y;

  std::vector<std::string> raw_names = data.feature_names;
  if (raw_names.empty()) {
    for (long j = 0; j < data.cols(); ++j) {
      raw_names.push_back("f" + std::to_string(j));
    }
  }

  if (mode == RepresentationMode::kTransformed) {
    out.transformation = train_transformation(data, hidden, config);
    out.payload.representation =
        representation_batch(*out.transformation, data.x);
    for (long j = 0; j < out.payload.representation.cols(); ++j) {
      out.payload.columns.push_back("rep" + std::to_string(j));
    }
  } else {
    out.payload.representation = data.x;
    out.payload.columns = raw_names;
  }

  if (include_raw_x_star) {
    out.payload.x_star = data.x;
    out.payload.x_star_columns = raw_names;
  }

  audit_payload(out.payload);
  return out;
}

void audit_payload(const InsurerPayload& payload,
                   const std::vector<std::string>& forbidden) {
  if (payload.schema_version != kProtocolSchemaVersion) {
    throw ValidationError("payload schema version " +
                          std::to_string(payload.schema_version) +
                          " is not supported");
  }
  if (payload.representation.rows() == 0) {
    throw ValidationError("payload carries no records");
  }
  if (static_cast<long>(payload.columns.size()) !=
      payload.representation.cols()) {
    throw ValidationError("payload column names do not match the matrix");
  }
  if (payload.outcomes.size() != payload.representation.rows()) {
    throw ValidationError("payload outcomes do not match the records");
  }
  if (payload.x_star.has_value() != !payload.x_star_columns.empty()) {
    throw ValidationError(
        "payload noise covariates and their names must come together");
  }
  if (payload.x_star) {
    if (payload.x_star->rows() != payload.representation.rows()) {
      throw ValidationError("payload noise covariates do not match records");
    }
    if (static_cast<long>(payload.x_star_columns.size()) !=
        payload.x_star->cols()) {
      throw ValidationError(
          "payload noise covariate names do not match the matrix");
    }
  }

  std::vector<std::string> blocked = {"d", "s"};
  for (const std::string& name : forbidden) blocked.push_back(lower(name));
  auto check_names = [&](const std::vector<std::string>& names) {
    for (const std::string& name : names) {
      if (name.find('\n') != std::string::npos ||
          name.find('\r') != std::string::npos) {
        throw ValidationError("payload column names must be single-line");
      }
      const std::string low = lower(name);
      for (const std::string& bad : blocked) {
        // Also reject the "<name>=<category>" columns a one-hot encoding of
        // the sensitive column would produce.
        if (low == bad || low.rfind(bad + "=", 0) == 0) {
          throw ValidationError("payload column '" + name +
                                "' uses a reserved sensitive name");
        }
      }
    }
  };
  check_names(payload.columns);
  check_names(payload.x_star_columns);
}

TTPResult ttp_serve(const InsurerPayload& payload, const SensitiveStore& store,
                    const TtpOptions& options) {
  audit_payload(payload);
  if (store.cardinality < 2) {
    throw ValidationError("sensitive store needs cardinality >= 2");
  }
  if (static_cast<long>(store.s.size()) != payload.representation.rows()) {
    throw ValidationError("sensitive store does not align with the payload");
  }

  Dataset joined;
  joined.x = payload.representation;
  joined.y = payload.outcomes;
  joined.s = store.s;
  joined.sensitive_cardinality = store.cardinality;
  joined.feature_names = payload.columns;
  joined.task = payload.task;
  joined.validate();

  NoiseSpec noise =
      store.pi ? NoiseSpec{KnownNoise{*store.pi}} : NoiseSpec{EstimateNoise{}};
  if (options.noise) noise = *options.noise;
  if (auto* estimate = std::get_if<EstimateNoise>(&noise);
      estimate && !estimate->x_star && payload.x_star) {
    estimate->x_star = *payload.x_star;
  }

  const FairTrainResult trained =
      mptp_ldp(joined, noise, options.hypothesis, options.train,
               options.p_star);

  TTPResult result;
  result.noise_mode =
      trained.noise_mode == NoiseMode::kEstimated ? "estimated" : "known";
  result.pi_used = trained.pi_used;
  result.p_star = trained.reference.p_star;
  result.group_scores = trained.report.best_estimate_raw;
  result.dfp = trained.report.dfp_raw;
  if (options.export_models) result.models = trained.models.models;
  return result;
}

void write_payload(const std::string& path, const InsurerPayload& payload) {
  audit_payload(payload);
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write payload file: " + path);
  out << "fairpremium-payload " << kProtocolSchemaVersion << '\n';
  out << "task " << task_name(payload.task) << '\n';
  out << "columns " << payload.columns.size() << '\n';
  for (const std::string& name : payload.columns) out << name << '\n';
  out << "rows " << payload.representation.rows() << '\n';
  write_matrix(out, payload.representation);
  out << "outcomes " << payload.outcomes.size() << '\n';
  write_matrix(out, payload.outcomes);
  if (payload.x_star) {
    out << "x_star " << payload.x_star->cols() << '\n';
    for (const std::string& name : payload.x_star_columns) out << name << '\n';
    write_matrix(out, *payload.x_star);
  }
  out << "end\n";
  if (!out) throw ValidationError("failed writing payload file: " + path);
}

InsurerPayload read_payload(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open payload file: " + path);
  LineReader reader(in, "payload file");
  check_version(reader, "fairpremium-payload");

  InsurerPayload payload;
  {
    const std::vector<std::string> fields = fields_of(reader.line("task"));
    if (fields.size() != 2 || fields[0] != "task") {
      throw CodecError(CodecFault::kCountMismatch,
                       "payload file: expected task line");
    }
    payload.task = parse_task(fields[1]);
  }
  const long columns = keyword_counts(reader, "columns", 1)[0];
  for (long j = 0; j < columns; ++j) {
    payload.columns.push_back(reader.line("column name"));
  }
  const long rows = keyword_counts(reader, "rows", 1)[0];
  payload.representation = read_matrix(reader, rows, columns, "representation");
  const long outcomes = keyword_counts(reader, "outcomes", 1)[0];
  if (outcomes != rows) {
    throw CodecError(CodecFault::kCountMismatch,
                     "payload file: outcome count does not match rows");
  }
  payload.outcomes = read_column(reader, outcomes, "outcomes");

  std::string tail = reader.line("end marker");
  if (tail.rfind("x_star ", 0) == 0) {
    const std::vector<std::string> fields = fields_of(tail);
    if (fields.size() != 2) {
      throw CodecError(CodecFault::kCountMismatch,
                       "payload file: malformed x_star line");
    }
    const long q = parse_size(fields[1], reader);
    for (long j = 0; j < q; ++j) {
      payload.x_star_columns.push_back(reader.line("x_star column name"));
    }
    payload.x_star = read_matrix(reader, rows, q, "x_star");
    tail = reader.line("end marker");
  }
  if (tail != "end") {
    throw CodecError(CodecFault::kCountMismatch,
                     "payload file: missing end marker");
  }
  while (!reader.at_end()) {
    if (!reader.line("trailer").empty()) {
      throw CodecError(CodecFault::kCountMismatch,
                       "payload file: content after end marker");
    }
  }
  audit_payload(payload);
  return payload;
}

void write_result(const std::string& path, const TTPResult& result) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write result file: " + path);
  out << "fairpremium-result " << kProtocolSchemaVersion << '\n';
  out << "noise " << result.noise_mode << '\n';
  out << "pi_used " << format_double(result.pi_used) << '\n';
  out << "p_star " << result.p_star.size() << '\n';
  write_matrix(out, result.p_star);
  out << "scores " << result.group_scores.rows() << ' '
      << result.group_scores.cols() << '\n';
  write_matrix(out, result.group_scores);
  out << "dfp " << result.dfp.size() << '\n';
  write_matrix(out, result.dfp);
  out << "models " << result.models.size() << '\n';
  for (const Model& model : result.models) save_model(out, model);
  out << "end\n";
  if (!out) throw ValidationError("failed writing result file: " + path);
}

TTPResult read_result(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open result file: " + path);
  LineReader reader(in, "result file");
  check_version(reader, "fairpremium-result");

  TTPResult result;
  {
    const std::vector<std::string> fields = fields_of(reader.line("noise"));
    if (fields.size() != 2 || fields[0] != "noise" ||
        (fields[1] != "known" && fields[1] != "estimated")) {
      throw CodecError(CodecFault::kCountMismatch,
                       "result file: expected noise line");
    }
    result.noise_mode = fields[1];
  }
  {
    const std::vector<std::string> fields = fields_of(reader.line("pi_used"));
    if (fields.size() != 2 || fields[0] != "pi_used") {
      throw CodecError(CodecFault::kCountMismatch,
                       "result file: expected pi_used line");
    }
    result.pi_used = parse_value(fields[1], reader);
  }
  const long groups = keyword_counts(reader, "p_star", 1)[0];
  result.p_star = read_column(reader, groups, "p_star");
  const std::vector<long> score_dims = keyword_counts(reader, "scores", 2);
  if (score_dims[1] != groups) {
    throw CodecError(CodecFault::kCountMismatch,
                     "result file: score columns do not match p_star");
  }
  result.group_scores =
      read_matrix(reader, score_dims[0], score_dims[1], "scores");
  const long dfp_rows = keyword_counts(reader, "dfp", 1)[0];
  if (dfp_rows != score_dims[0]) {
    throw CodecError(CodecFault::kCountMismatch,
                     "result file: dfp rows do not match scores");
  }
  result.dfp = read_column(reader, dfp_rows, "dfp");
  const long models = keyword_counts(reader, "models", 1)[0];
  for (long m = 0; m < models; ++m) {
    try {
      result.models.push_back(load_model(reader.stream()));
    } catch (const ValidationError& e) {
      throw CodecError(CodecFault::kTruncated,
                       std::string("result file: embedded model: ") +
                           e.what());
    }
    reader.sync_line();
  }
  expect_end(reader);
  return result;
}

nlohmann::json session_manifest(const std::string& payload_path,
                                const std::string& result_path) {
  const InsurerPayload payload = read_payload(payload_path);
  const TTPResult result = read_result(result_path);
  if (result.group_scores.rows() != payload.representation.rows()) {
    throw ValidationError("session files disagree on the record count");
  }
  nlohmann::json manifest;
  manifest["schema_version"] = kProtocolSchemaVersion;
  manifest["records"] = payload.representation.rows();
  manifest["payload"] = {{"path", payload_path},
                         {"columns", payload.columns.size()},
                         {"digest", file_digest(payload_path)}};
  manifest["result"] = {{"path", result_path},
                        {"groups", result.p_star.size()},
                        {"noise", result.noise_mode},
                        {"digest", file_digest(result_path)}};
  return manifest;
}

}  // namespace fairpremium
