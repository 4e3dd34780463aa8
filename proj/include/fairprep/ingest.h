// Copyright 2026 The fairprep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// Delimiter-separated input: raw tables, row filters, mapping rows onto a
// schema, and the categorical format used for transformed data.

#ifndef FAIRPREP_INGEST_H_
#define FAIRPREP_INGEST_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "fairprep/domain.h"

namespace fairprep {

struct SourceSpec {
  std::vector<std::string> paths;  // concatenated in order
  char delimiter = ',';
  bool header = true;
  // Column names when the files have no header row.
  std::vector<std::string> column_names;
  bool trim = false;        // strip blanks around unquoted fields
  std::string skip_prefix;  // lines starting with it are ignored
  // Rows holding this value in a column the schema reads are dropped.
  std::string missing_marker;

  bool operator==(const SourceSpec&) const = default;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::optional<int> ColumnIndex(std::string_view name) const;
};

// Quoted fields may hold delimiters, doubled quotes and newlines. Blank
// lines are skipped. Every row must have as many fields as there are
// columns.
absl::StatusOr<Table> ParseDelimited(std::string_view text,
                                     const SourceSpec& spec);

// Reads and concatenates spec.paths. NotFound when a file cannot be opened.
absl::StatusOr<Table> ReadTable(const SourceSpec& spec);

struct RowFilter {
  enum class Op { kRange, kIn, kNotIn };

  std::string column;
  Op op = Op::kIn;
  std::optional<double> min;  // kRange, inclusive
  std::optional<double> max;
  std::vector<std::string> values;  // kIn, kNotIn

  bool operator==(const RowFilter&) const = default;
};

std::string_view RowFilterOpName(RowFilter::Op op);
absl::StatusOr<RowFilter::Op> ParseRowFilterOp(std::string_view name);

struct IngestReport {
  int64_t rows_read = 0;
  int64_t rows_filtered = 0;  // removed by filters
  int64_t rows_missing = 0;   // removed for a missing marker
  int64_t rows_kept = 0;
};

// Keeps the rows passing every filter. A range filter drops rows whose
// value is not numeric.
absl::StatusOr<Table> ApplyFilters(const Table& table,
                                   const std::vector<RowFilter>& filters,
                                   IngestReport* report);

// Maps each row onto (d, x, y) through the schema's source columns and
// quantizers. A missing outcome column is allowed unless `require_outcome`.
// Values without a category fail with InvalidArgument naming the row.
absl::StatusOr<Dataset> BuildDataset(const Table& table, const Schema& schema,
                                     const SourceSpec& spec,
                                     bool require_outcome,
                                     IngestReport* report);

// Categorical files: one column per variable holding category labels, an
// optional "stream_index" column and optional "# fairprep-..." provenance
// lines before the header.
struct CategoricalFile {
  Dataset data;
  std::optional<std::vector<uint64_t>> stream_index;
  std::vector<std::string> comment_lines;
};

struct WriteOptions {
  bool stream_index = false;
  uint64_t first_index = 0;
  std::vector<std::string> comment_lines;  // written as "# <line>"
  char delimiter = ',';
};

std::string WriteCategorical(const Dataset& data, const WriteOptions& options);
absl::StatusOr<CategoricalFile> ParseCategorical(std::string_view text,
                                                 const Schema& schema,
                                                 char delimiter = ',');

absl::StatusOr<std::string> ReadFileToString(const std::string& path);
absl::Status WriteStringToFile(const std::string& path, std::string_view text);

}  // namespace fairprep

#endif  // FAIRPREP_INGEST_H_
