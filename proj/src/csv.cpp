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

#include "fairpremium/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fairpremium/errors.hpp"

#include <nlohmann/json.hpp>

namespace fairpremium {
namespace {

bool parse_numeric(const std::string& text, double* value) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, *value);
  return result.ec == std::errc{} && result.ptr == end;
}

std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

int find_column(const std::vector<std::string>& header,
                const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw ValidationError("column '" + name + "' not found in CSV header");
  }
  return static_cast<int>(it - header.begin());
}

// Dense level index per distinct value, first-appearance order.
int level_index(std::vector<std::string>& levels, const std::string& value) {
  const auto it = std::find(levels.begin(), levels.end(), value);
  if (it != levels.end()) return static_cast<int>(it - levels.begin());
  levels.push_back(value);
  return static_cast<int>(levels.size()) - 1;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open CSV file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  // Character-level scan so quoted fields may contain commas, escaped quotes
  // and newlines.  Blank lines between records are skipped.
  CsvTable table;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool row_started = false;
  bool first = true;

  const auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
  };
  const auto end_row = [&] {
    end_field();
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size()) {
        throw ValidationError(
            "CSV row " + std::to_string(table.rows.size() + 2) + " has " +
            std::to_string(fields.size()) + " fields, expected " +
            std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(fields));
    }
    fields.clear();
    row_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      row_started = true;
    } else if (c == ',') {
      end_field();
      row_started = true;
    } else if (c == '\n') {
      if (row_started || !field.empty() || !fields.empty()) end_row();
    } else if (c == '\r') {
      // CR of a CRLF pair is a line end handled by the following LF; a bare
      // CR is field content.
      if (!(i + 1 < text.size() && text[i + 1] == '\n')) field.push_back(c);
    } else {
      field.push_back(c);
      row_started = true;
    }
  }
  if (quoted) {
    throw ValidationError("unterminated quoted field in CSV file: " + path);
  }
  if (row_started || !field.empty() || !fields.empty()) end_row();
  if (first) throw ValidationError("CSV file has no header: " + path);
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write CSV file: " + path);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out << ',';
    out << quote_if_needed(header[j]);
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << quote_if_needed(row[j]);
    }
    out << '\n';
  }
  if (!out) throw ValidationError("failed writing CSV file: " + path);
}

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

IngestResult ingest_csv(const std::string& path, const IngestOptions& options) {
  if (options.outcome_column.empty()) {
    throw ValidationError("outcome column must be named");
  }
  const CsvTable table = read_csv(path);
  if (table.rows.empty()) throw ValidationError("CSV has no data rows: " + path);

  const int outcome_col = find_column(table.header, options.outcome_column);
  int sensitive_col = -1, privatized_col = -1;
  if (!options.sensitive_column.empty()) {
    sensitive_col = find_column(table.header, options.sensitive_column);
  }
  if (!options.privatized_column.empty()) {
    privatized_col = find_column(table.header, options.privatized_column);
  }

  const long n = static_cast<long>(table.rows.size());
  const int width = static_cast<int>(table.header.size());

  // Feature columns keep header order; a column is numeric only when every
  // value parses.
  std::vector<int> feature_cols;
  std::vector<bool> numeric(static_cast<std::size_t>(width), true);
  for (int c = 0; c < width; ++c) {
    if (c == outcome_col || c == sensitive_col || c == privatized_col) continue;
    feature_cols.push_back(c);
    for (const auto& row : table.rows) {
      double ignored;
      if (!parse_numeric(row[static_cast<std::size_t>(c)], &ignored)) {
        numeric[static_cast<std::size_t>(c)] = false;
        break;
      }
    }
  }

  IngestResult result;
  EncodingMap& encoding = result.encoding;
  encoding.outcome_column = options.outcome_column;

  // First pass: category discovery per one-hot column.
  for (int c : feature_cols) {
    ColumnEncoding col;
    col.source = table.header[static_cast<std::size_t>(c)];
    if (numeric[static_cast<std::size_t>(c)]) {
      col.one_hot = false;
      col.emitted = {col.source};
    } else {
      col.one_hot = true;
      for (const auto& row : table.rows) {
        level_index(col.categories, row[static_cast<std::size_t>(c)]);
      }
      for (const auto& category : col.categories) {
        col.emitted.push_back(col.source + "=" + category);
      }
    }
    encoding.columns.push_back(std::move(col));
  }

  long total_features = 0;
  for (const auto& col : encoding.columns) {
    total_features += static_cast<long>(col.emitted.size());
  }

  Dataset& data = result.data;
  data.task = options.task;
  data.x.setZero(n, total_features);
  data.y.resize(n);
  for (const auto& col : encoding.columns) {
    data.feature_names.insert(data.feature_names.end(), col.emitted.begin(),
                              col.emitted.end());
  }

  std::vector<std::string> sensitive_levels;
  if (sensitive_col >= 0) data.d.resize(static_cast<std::size_t>(n));
  if (privatized_col >= 0) data.s.resize(static_cast<std::size_t>(n));

  for (long i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    double y;
    if (!parse_numeric(row[static_cast<std::size_t>(outcome_col)], &y) ||
        !std::isfinite(y)) {
      throw ValidationError("row " + std::to_string(i + 2) +
                            ": outcome is missing or not numeric");
    }
    data.y[i] = y;

    long offset = 0;
    std::size_t encoded = 0;
    for (int c : feature_cols) {
      const ColumnEncoding& col = encoding.columns[encoded++];
      const std::string& cell = row[static_cast<std::size_t>(c)];
      if (!col.one_hot) {
        double v;
        if (!parse_numeric(cell, &v) || !std::isfinite(v)) {
          throw ValidationError("row " + std::to_string(i + 2) + ", column '" +
                                col.source + "': missing or non-finite value");
        }
        data.x(i, offset) = v;
        offset += 1;
      } else {
        const auto it =
            std::find(col.categories.begin(), col.categories.end(), cell);
        data.x(i, offset + (it - col.categories.begin())) = 1.0;
        offset += static_cast<long>(col.categories.size());
      }
    }

    if (sensitive_col >= 0) {
      data.d[static_cast<std::size_t>(i)] = level_index(
          sensitive_levels, row[static_cast<std::size_t>(sensitive_col)]);
    }
    if (privatized_col >= 0) {
      data.s[static_cast<std::size_t>(i)] = level_index(
          sensitive_levels, row[static_cast<std::size_t>(privatized_col)]);
    }
  }

  if (sensitive_col >= 0 || privatized_col >= 0) {
    data.sensitive_levels = sensitive_levels;
    data.sensitive_cardinality = static_cast<int>(sensitive_levels.size());
    if (data.sensitive_cardinality < 2) {
      throw ValidationError("sensitive column has fewer than two levels");
    }
  }
  encoding.sensitive_levels = sensitive_levels;
  data.validate();
  return result;
}

nlohmann::json encoding_to_json(const EncodingMap& encoding) {
  nlohmann::json j;
  j["outcome_column"] = encoding.outcome_column;
  j["sensitive_levels"] = encoding.sensitive_levels;
  j["columns"] = nlohmann::json::array();
  for (const auto& col : encoding.columns) {
    nlohmann::json c;
    c["source"] = col.source;
    c["one_hot"] = col.one_hot;
    if (col.one_hot) c["categories"] = col.categories;
    c["emitted"] = col.emitted;
    j["columns"].push_back(std::move(c));
  }
  return j;
}

void write_dataset_csv(const std::string& path, const Dataset& data,
                       bool include_d, bool include_s) {
  data.validate();
  std::vector<std::string> header = data.feature_names;
  if (header.empty()) {
    for (long c = 0; c < data.cols(); ++c) {
      header.push_back("x" + std::to_string(c));
    }
  }
  const auto level_label = [&](int level) {
    if (level < static_cast<int>(data.sensitive_levels.size())) {
      return data.sensitive_levels[static_cast<std::size_t>(level)];
    }
    return std::to_string(level);
  };
  if (include_d && data.has_d()) header.push_back("d");
  if (include_s && data.has_s()) header.push_back("s");
  header.push_back("y");

  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(data.rows()));
  for (long i = 0; i < data.rows(); ++i) {
    std::vector<std::string> row;
    for (long c = 0; c < data.cols(); ++c) {
      row.push_back(format_double(data.x(i, c)));
    }
    if (include_d && data.has_d()) {
      row.push_back(level_label(data.d[static_cast<std::size_t>(i)]));
    }
    if (include_s && data.has_s()) {
      row.push_back(level_label(data.s[static_cast<std::size_t>(i)]));
    }
    row.push_back(format_double(data.y[i]));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

}  // namespace fairpremium
