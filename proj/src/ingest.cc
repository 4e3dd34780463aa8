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
#include "fairprep/ingest.h"

#include <fstream>
#include <sstream>

#include "fairprep/status_macros.h"
#include "fairprep/strings.h"
#include "fmt/format.h"

namespace fairprep {

std::optional<int> Table::ColumnIndex(std::string_view name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

namespace {

bool StartsWith(std::string_view text, std::string_view prefix) {
  return !prefix.empty() && text.substr(0, prefix.size()) == prefix;
}

// Splits `text` into records of fields. Line numbers are 1-based and refer
// to the first line of each record.
absl::StatusOr<std::vector<std::pair<int, std::vector<std::string>>>> Tokenize(
    std::string_view text, const SourceSpec& spec) {
  std::vector<std::pair<int, std::vector<std::string>>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;      // inside quotes
  bool was_quoted = false;  // current field started with a quote
  int line = 1, record_line = 1;
  size_t i = 0;
  auto end_field = [&] {
    fields.push_back(spec.trim && !was_quoted ? std::string(Trim(field))
                                              : field);
    field.clear();
    was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = fields.size() == 1 && Trim(fields[0]).empty();
    if (!blank) records.emplace_back(record_line, std::move(fields));
    fields.clear();
  };
  bool at_line_start = true;
  while (i < text.size()) {
    if (at_line_start && !quoted) {
      record_line = line;
      if (StartsWith(text.substr(i), spec.skip_prefix)) {
        const size_t eol = text.find('\n', i);
        i = eol == std::string_view::npos ? text.size() : eol + 1;
        ++line;
        continue;
      }
      at_line_start = false;
    }
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
        if (c == '\n') ++line;
        field.push_back(c);
      }
    } else if (c == '"' && Trim(field).empty()) {
      field.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == spec.delimiter) {
      end_field();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
      ++line;
      at_line_start = true;
    } else {
      field.push_back(c);
    }
    ++i;
  }
  if (quoted) {
    return absl::InvalidArgumentError(
        fmt::format("unterminated quote starting on line {}", record_line));
  }
  if (!at_line_start) end_record();
  return records;
}

}  // namespace

absl::StatusOr<Table> ParseDelimited(std::string_view text,
                                     const SourceSpec& spec) {
  FAIRPREP_ASSIGN_OR_RETURN(auto records, Tokenize(text, spec));
  Table table;
  size_t first = 0;
  if (spec.header) {
    if (records.empty()) {
      return absl::InvalidArgumentError("missing header row");
    }
    table.columns = records[0].second;
    first = 1;
  } else {
    table.columns = spec.column_names;
  }
  if (table.columns.empty()) {
    return absl::InvalidArgumentError("no column names");
  }
  for (size_t r = first; r < records.size(); ++r) {
    auto& [line, fields] = records[r];
    if (fields.size() != table.columns.size()) {
      return absl::InvalidArgumentError(
          fmt::format("line {}: {} fields, expected {}", line, fields.size(),
                      table.columns.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

absl::StatusOr<std::string> ReadFileToString(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(fmt::format("cannot open '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

absl::Status WriteStringToFile(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) {
    return absl::UnavailableError(fmt::format("cannot write '{}'", path));
  }
  return absl::OkStatus();
}

absl::StatusOr<Table> ReadTable(const SourceSpec& spec) {
  if (spec.paths.empty()) {
    return absl::InvalidArgumentError("no input paths");
  }
  Table all;
  for (const std::string& path : spec.paths) {
    FAIRPREP_ASSIGN_OR_RETURN(const std::string text, ReadFileToString(path));
    absl::StatusOr<Table> t = ParseDelimited(text, spec);
    if (!t.ok()) {
      return absl::InvalidArgumentError(
          fmt::format("{}: {}", path, std::string(t.status().message())));
    }
    if (all.columns.empty()) {
      all.columns = t->columns;
    } else if (t->columns != all.columns) {
      return absl::InvalidArgumentError(
          fmt::format("{}: columns differ from '{}'", path, spec.paths[0]));
    }
    for (auto& row : t->rows) all.rows.push_back(std::move(row));
  }
  return all;
}

std::string_view RowFilterOpName(RowFilter::Op op) {
  switch (op) {
    case RowFilter::Op::kRange:
      return "range";
    case RowFilter::Op::kIn:
      return "in";
    case RowFilter::Op::kNotIn:
      return "not_in";
  }
  return "";
}

absl::StatusOr<RowFilter::Op> ParseRowFilterOp(std::string_view name) {
  if (name == "range") return RowFilter::Op::kRange;
  if (name == "in") return RowFilter::Op::kIn;
  if (name == "not_in") return RowFilter::Op::kNotIn;
  return absl::InvalidArgumentError(
      fmt::format("unknown filter '{}' (expected range, in or not_in)", name));
}

absl::StatusOr<Table> ApplyFilters(const Table& table,
                                   const std::vector<RowFilter>& filters,
                                   IngestReport* report) {
  std::vector<int> index;
  for (const RowFilter& f : filters) {
    const std::optional<int> i = table.ColumnIndex(f.column);
    if (!i.has_value()) {
      return absl::InvalidArgumentError(
          fmt::format("filter column '{}' not in the input", f.column));
    }
    index.push_back(*i);
  }
  Table out;
  out.columns = table.columns;
  for (const auto& row : table.rows) {
    bool keep = true;
    for (size_t k = 0; k < filters.size() && keep; ++k) {
      const RowFilter& f = filters[k];
      const std::string_view value = Trim(row[index[k]]);
      switch (f.op) {
        case RowFilter::Op::kRange: {
          const std::optional<double> v = ParseDouble(value);
          keep = v.has_value() && (!f.min.has_value() || *v >= *f.min) &&
                 (!f.max.has_value() || *v <= *f.max);
          break;
        }
        case RowFilter::Op::kIn:
        case RowFilter::Op::kNotIn: {
          bool found = false;
          for (const std::string& s : f.values) found = found || s == value;
          keep = found == (f.op == RowFilter::Op::kIn);
          break;
        }
      }
    }
    if (keep) {
      out.rows.push_back(row);
    } else if (report != nullptr) {
      ++report->rows_filtered;
    }
  }
  return out;
}

absl::StatusOr<Dataset> BuildDataset(const Table& table, const Schema& schema,
                                     const SourceSpec& spec,
                                     bool require_outcome,
                                     IngestReport* report) {
  const auto& vars = schema.variables();
  std::vector<int> column(vars.size(), -1);
  for (size_t v = 0; v < vars.size(); ++v) {
    const std::optional<int> i = table.ColumnIndex(vars[v].source_column());
    if (i.has_value()) {
      column[v] = *i;
      continue;
    }
    if (vars[v].role == Role::kOutcome && !require_outcome) continue;
    if (vars[v].role == Role::kOutcome) {
      return absl::FailedPreconditionError(
          fmt::format("MissingOutcome: outcome column '{}' not in the input",
                      vars[v].source_column()));
    }
    return absl::InvalidArgumentError(
        fmt::format("column '{}' for variable '{}' not in the input",
                    vars[v].source_column(), vars[v].name()));
  }
  const int nd = schema.num_protected_variables();
  const int nf = schema.num_feature_variables();
  std::vector<Record> records;
  records.reserve(table.rows.size());
  std::vector<int> group_idx(nd), feature_idx(nf);
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    bool missing = false;
    if (!spec.missing_marker.empty()) {
      for (int c : column) {
        if (c >= 0 && Trim(row[c]) == spec.missing_marker) missing = true;
      }
    }
    if (missing) {
      if (report != nullptr) ++report->rows_missing;
      continue;
    }
    Record rec;
    for (size_t v = 0; v < vars.size(); ++v) {
      if (column[v] < 0) continue;
      const std::string& raw = row[column[v]];
      std::string label = raw;
      if (vars[v].quantizer.has_value()) {
        absl::StatusOr<std::string> q = vars[v].quantizer->Apply(raw);
        if (!q.ok()) {
          return absl::InvalidArgumentError(
              fmt::format("row {}, variable '{}': {}", r + 1, vars[v].name(),
                          std::string(q.status().message())));
        }
        label = *std::move(q);
      }
      const std::optional<int> index = vars[v].alphabet.IndexOf(label);
      if (!index.has_value()) {
        return absl::InvalidArgumentError(
            fmt::format("row {}, variable '{}': '{}' is not a category", r + 1,
                        vars[v].name(), label));
      }
      if (static_cast<int>(v) < nd) {
        group_idx[v] = *index;
      } else if (static_cast<int>(v) < nd + nf) {
        feature_idx[v - nd] = *index;
      } else {
        rec.outcome = *index;
      }
    }
    rec.group = schema.EncodeGroup(group_idx);
    rec.feature = schema.EncodeFeature(feature_idx);
    records.push_back(rec);
  }
  if (report != nullptr) report->rows_kept = records.size();
  return Dataset::Create(schema, std::move(records));
}

std::string WriteCategorical(const Dataset& data, const WriteOptions& options) {
  const Schema& schema = data.schema();
  std::string out;
  for (const std::string& line : options.comment_lines) {
    out += "# " + line + "\n";
  }
  const char sep = options.delimiter;
  // A label holding the delimiter, a quote or a line break is quoted.
  auto cell = [&](const std::string& s) {
    if (s.find_first_of(std::string{sep, '"', '\n', '\r'}) ==
        std::string::npos) {
      return s;
    }
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  const bool outcomes = data.has_outcomes();
  std::vector<std::string> header;
  for (const Variable& v : schema.variables()) {
    if (v.role == Role::kOutcome && !outcomes) continue;
    header.push_back(cell(v.name()));
  }
  if (options.stream_index) header.push_back("stream_index");
  out += Join(header, std::string(1, sep)) + "\n";
  const int nd = schema.num_protected_variables();
  std::vector<std::string> fields;
  for (int64_t i = 0; i < data.size(); ++i) {
    const Record& r = data.records()[i];
    fields.clear();
    const std::vector<int> g = schema.DecodeGroup(r.group);
    const std::vector<int> x = schema.DecodeFeature(r.feature);
    for (int k = 0; k < nd; ++k) {
      fields.push_back(cell(schema.variables()[k].alphabet.Label(g[k])));
    }
    for (size_t k = 0; k < x.size(); ++k) {
      fields.push_back(cell(schema.variables()[nd + k].alphabet.Label(x[k])));
    }
    if (outcomes) fields.push_back(cell(schema.OutcomeLabel(*r.outcome)));
    if (options.stream_index) {
      fields.push_back(std::to_string(options.first_index + i));
    }
    out += Join(fields, std::string(1, sep)) + "\n";
  }
  return out;
}

absl::StatusOr<CategoricalFile> ParseCategorical(std::string_view text,
                                                 const Schema& schema,
                                                 char delimiter) {
  std::vector<std::string> comments;
  size_t pos = 0;
  while (pos < text.size() && text[pos] == '#') {
    const size_t eol = text.find('\n', pos);
    const size_t end = eol == std::string_view::npos ? text.size() : eol;
    comments.emplace_back(Trim(text.substr(pos + 1, end - pos - 1)));
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
  }
  SourceSpec spec;
  spec.delimiter = delimiter;
  FAIRPREP_ASSIGN_OR_RETURN(Table table,
                            ParseDelimited(text.substr(pos), spec));
  std::optional<std::vector<uint64_t>> index;
  if (const auto c = table.ColumnIndex("stream_index"); c.has_value()) {
    index.emplace();
    for (size_t r = 0; r < table.rows.size(); ++r) {
      const auto v = ParseInt(table.rows[r][*c]);
      if (!v.has_value() || *v < 0) {
        return absl::InvalidArgumentError(
            fmt::format("row {}: bad stream_index", r + 1));
      }
      index->push_back(static_cast<uint64_t>(*v));
    }
  }
  // Columns are the variable names and hold labels.
  std::vector<Variable> plain = schema.variables();
  for (Variable& v : plain) {
    v.column.clear();
    v.quantizer.reset();
  }
  FAIRPREP_ASSIGN_OR_RETURN(const Schema labels, Schema::Create(plain));
  FAIRPREP_ASSIGN_OR_RETURN(Dataset parsed,
                            BuildDataset(table, labels, spec, false, nullptr));
  std::vector<Record> records(parsed.records().begin(), parsed.records().end());
  FAIRPREP_ASSIGN_OR_RETURN(Dataset data,
                            Dataset::Create(schema, std::move(records)));
  return CategoricalFile{std::move(data), std::move(index),
                         std::move(comments)};
}

}  // namespace fairprep
