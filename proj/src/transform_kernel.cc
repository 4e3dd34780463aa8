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
#include "fairprep/transform_kernel.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fairprep/status_macros.h"
#include "fairprep/strings.h"
#include "fmt/format.h"

namespace fairprep {

absl::StatusOr<TransformKernel> TransformKernel::Create(
    Schema schema, std::vector<double> probs) {
  const int num_outputs = schema.num_outputs();
  if (probs.size() != static_cast<size_t>(schema.num_cells()) * num_outputs) {
    return absl::InvalidArgumentError(
        fmt::format("kernel has {} entries, schema needs {}", probs.size(),
                    static_cast<size_t>(schema.num_cells()) * num_outputs));
  }
  for (int cell = 0; cell < schema.num_cells(); ++cell) {
    double total = 0;
    for (int o = 0; o < num_outputs; ++o) {
      const double v = probs[static_cast<size_t>(cell) * num_outputs + o];
      if (!(v >= 0) || !std::isfinite(v)) {
        return absl::InvalidArgumentError(
            fmt::format("kernel row {} has a negative entry", cell));
      }
      total += v;
    }
    if (std::abs(total - 1) > kRowTolerance) {
      return absl::InvalidArgumentError(
          fmt::format("kernel row {} sums to {}", cell, total));
    }
  }
  return TransformKernel(std::move(schema), std::move(probs));
}

TransformKernel TransformKernel::Identity(Schema schema) {
  const int num_outputs = schema.num_outputs();
  std::vector<double> probs(
      static_cast<size_t>(schema.num_cells()) * num_outputs, 0.0);
  for (int d = 0; d < schema.num_groups(); ++d) {
    for (int x = 0; x < schema.num_features(); ++x) {
      for (int y = 0; y < 2; ++y) {
        probs[static_cast<size_t>(schema.CellIndex(d, x, y)) * num_outputs +
              Schema::OutputIndex(x, y)] = 1.0;
      }
    }
  }
  return TransformKernel(std::move(schema), std::move(probs));
}

std::string ProvenanceLine(std::string_view tag,
                           const std::map<std::string, std::string>& values) {
  std::string line = fmt::format("# {}", tag);
  for (const auto& [key, value] : values) {
    line += fmt::format(" {}={}", key, value);
  }
  return line;
}

std::map<std::string, std::string> ParseProvenanceLine(std::string_view line) {
  std::map<std::string, std::string> out;
  for (std::string_view token : Split(line, ' ')) {
    const size_t eq = token.find('=');
    if (eq == std::string_view::npos) continue;
    out[std::string(token.substr(0, eq))] = std::string(token.substr(eq + 1));
  }
  return out;
}

std::string SerializeKernel(const TransformKernel& kernel) {
  const Schema& schema = kernel.schema();
  std::string out = ProvenanceLine("fairprep-kernel", kernel.provenance());
  out += "\nd,x,y,x_hat,y_hat,prob\n";
  for (int d = 0; d < schema.num_groups(); ++d) {
    const std::string group = schema.GroupLabel(d);
    for (int x = 0; x < schema.num_features(); ++x) {
      const std::string feature = schema.FeatureLabel(x);
      for (int y = 0; y < 2; ++y) {
        const int cell = schema.CellIndex(d, x, y);
        for (int xh = 0; xh < schema.num_features(); ++xh) {
          for (int yh = 0; yh < 2; ++yh) {
            const double p = kernel.at(cell, Schema::OutputIndex(xh, yh));
            if (p <= 0) continue;
            out += fmt::format("{},{},{},{},{},{:.17g}\n", group, feature,
                               schema.OutcomeLabel(y), schema.FeatureLabel(xh),
                               schema.OutcomeLabel(yh), p);
          }
        }
      }
    }
  }
  return out;
}

absl::StatusOr<TransformKernel> ParseKernel(const Schema& schema,
                                            std::string_view text) {
  const int num_outputs = schema.num_outputs();
  std::vector<double> probs(
      static_cast<size_t>(schema.num_cells()) * num_outputs, 0.0);
  std::vector<bool> seen(schema.num_cells(), false);
  std::map<std::string, std::string> provenance;
  bool header = false;
  int line_no = 0;
  for (std::string_view line : Split(text, '\n')) {
    ++line_no;
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      for (auto& [k, v] : ParseProvenanceLine(line)) provenance[k] = v;
      continue;
    }
    if (!header) {
      if (line != "d,x,y,x_hat,y_hat,prob") {
        return absl::InvalidArgumentError(fmt::format(
            "kernel line {}: unexpected header '{}'", line_no, line));
      }
      header = true;
      continue;
    }
    const std::vector<std::string_view> f = Split(line, ',');
    if (f.size() != 6) {
      return absl::InvalidArgumentError(
          fmt::format("kernel line {}: expected 6 fields", line_no));
    }
    auto where = [&](const absl::Status& s) {
      return absl::InvalidArgumentError(
          fmt::format("kernel line {}: {}", line_no, std::string(s.message())));
    };
    absl::StatusOr<int> d = schema.ParseGroup(f[0]);
    absl::StatusOr<int> x = schema.ParseFeature(f[1]);
    absl::StatusOr<int> y = schema.ParseOutcome(f[2]);
    absl::StatusOr<int> xh = schema.ParseFeature(f[3]);
    absl::StatusOr<int> yh = schema.ParseOutcome(f[4]);
    for (const absl::Status& s :
         {d.status(), x.status(), y.status(), xh.status(), yh.status()}) {
      if (!s.ok()) return where(s);
    }
    const std::optional<double> p = ParseDouble(f[5]);
    if (!p.has_value()) {
      return absl::InvalidArgumentError(
          fmt::format("kernel line {}: bad probability", line_no));
    }
    const int cell = schema.CellIndex(*d, *x, *y);
    seen[cell] = true;
    probs[static_cast<size_t>(cell) * num_outputs +
          Schema::OutputIndex(*xh, *yh)] = *p;
  }
  for (int cell = 0; cell < schema.num_cells(); ++cell) {
    if (!seen[cell]) {
      return absl::InvalidArgumentError(
          fmt::format("kernel has no row for cell {}", cell));
    }
  }
  FAIRPREP_ASSIGN_OR_RETURN(TransformKernel kernel,
                            TransformKernel::Create(schema, std::move(probs)));
  for (auto& [k, v] : provenance) kernel.set_provenance(k, v);
  return kernel;
}

absl::Status WriteKernelFile(const TransformKernel& kernel,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  out << SerializeKernel(kernel);
  out.close();
  if (!out) {
    return absl::UnavailableError(fmt::format("cannot write '{}'", path));
  }
  return absl::OkStatus();
}

absl::StatusOr<TransformKernel> ReadKernelFile(const Schema& schema,
                                               const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(fmt::format("cannot open '{}'", path));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseKernel(schema, buffer.str());
}

}  // namespace fairprep
