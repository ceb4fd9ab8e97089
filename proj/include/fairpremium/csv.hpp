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

#ifndef FAIRPREMIUM_CSV_HPP_
#define FAIRPREMIUM_CSV_HPP_

#include <string>
#include <vector>

#include "fairpremium/data.hpp"

#include <nlohmann/json_fwd.hpp>

namespace fairpremium {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Minimal RFC-4180 reader: quoted fields may contain commas, escaped quotes
// and newlines; CRLF and LF line ends are accepted and blank lines skipped.
// Every row must match the header width.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Formats a double with enough digits to round-trip bit-exactly.
std::string format_double(double value);

struct IngestOptions {
  std::string outcome_column;
  std::string sensitive_column;    // empty: dataset carries no d
  std::string privatized_column;   // empty: dataset carries no s
  Task task = Task::kRegression;
};

// How one source column was turned into feature columns.
struct ColumnEncoding {
  std::string source;
  bool one_hot = false;
  std::vector<std::string> categories;  // first-appearance order
  std::vector<std::string> emitted;     // resulting feature names
};

struct EncodingMap {
  std::vector<ColumnEncoding> columns;
  std::vector<std::string> sensitive_levels;  // first-appearance order
  std::string outcome_column;
};

nlohmann::json encoding_to_json(const EncodingMap& encoding);

struct IngestResult {
  Dataset data;
  EncodingMap encoding;
};

// Loads a CSV into a Dataset.  The outcome column must be numeric.  Feature
// columns parse as numeric when every value does; otherwise they are one-hot
// encoded with categories in first-appearance order.  Sensitive columns map
// to dense level indices, also in first-appearance order.  Missing or
// non-finite values are rejected.
IngestResult ingest_csv(const std::string& path, const IngestOptions& options);

// Writes a dataset back out as CSV: features, then d/s (level labels when
// available, indices otherwise), then the outcome column `y`.
void write_dataset_csv(const std::string& path, const Dataset& data,
                       bool include_d, bool include_s);

}  // namespace fairpremium

#endif  // FAIRPREMIUM_CSV_HPP_
