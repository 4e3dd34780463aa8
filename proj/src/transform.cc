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
#include "fairprep/transform.h"

#include <algorithm>
#include <cmath>

#include "fairprep/kernels.h"
#include "fairprep/status_macros.h"
#include "fmt/format.h"

namespace fairprep {

absl::StatusOr<ApplyMapper> ApplyMapper::Derive(const TransformKernel& kernel,
                                                const JointPmf& pmf) {
  const Schema& schema = kernel.schema();
  if (!(pmf.schema() == schema)) {
    return absl::InvalidArgumentError("kernel and pmf schemas differ");
  }
  const int nx = schema.num_features();
  std::vector<double> probs(static_cast<size_t>(schema.num_groups()) * nx * nx,
                            0.0);
  std::vector<std::string> warnings;
  for (int d = 0; d < schema.num_groups(); ++d) {
    for (int x = 0; x < nx; ++x) {
      double* row = &probs[static_cast<size_t>(d * nx + x) * nx];
      const double mass = pmf.at(d, x, 0) + pmf.at(d, x, 1);
      if (!(mass > 0)) {
        row[x] = 1.0;
        warnings.push_back(
            fmt::format("no training mass at (D={}, X={}); identity row used",
                        schema.GroupLabel(d), schema.FeatureLabel(x)));
        continue;
      }
      for (int y = 0; y < 2; ++y) {
        const double w = pmf.at(d, x, y) / mass;
        if (w == 0) continue;
        const auto k = kernel.row(schema.CellIndex(d, x, y));
        for (int xh = 0; xh < nx; ++xh) {
          row[xh] += w * (k[xh * 2] + k[xh * 2 + 1]);
        }
      }
      double total = 0;
      for (int xh = 0; xh < nx; ++xh) total += row[xh];
      for (int xh = 0; xh < nx; ++xh) row[xh] /= total;
    }
  }
  ApplyMapper mapper(schema, std::move(probs));
  mapper.warnings_ = std::move(warnings);
  mapper.provenance_ = kernel.provenance();
  if (pmf.sample_count().has_value()) {
    mapper.provenance_["training_samples"] =
        std::to_string(*pmf.sample_count());
  }
  return mapper;
}

absl::StatusOr<Dataset> TransformTrain(const Dataset& data,
                                       const TransformKernel& kernel,
                                       const SeedSpec& seed,
                                       const TransformOptions& options) {
  const Schema& schema = kernel.schema();
  if (!(data.schema() == schema)) {
    return absl::InvalidArgumentError("dataset and kernel schemas differ");
  }
  const auto records = data.records();
  std::vector<int> rows(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    if (!records[i].outcome.has_value()) {
      return absl::FailedPreconditionError(fmt::format(
          "record {} has no outcome; train mode needs y (use apply mode)", i));
    }
    rows[i] = schema.CellIndex(records[i].group, records[i].feature,
                               *records[i].outcome);
  }
  std::vector<int> drawn(records.size());
  const int n = schema.num_outputs();
  if (options.parallel) {
    parallel::SampleRows(kernel.probs(), n, rows, seed.seed, seed.first_index,
                         drawn);
  } else {
    serial::SampleRows(kernel.probs(), n, rows, seed.seed, seed.first_index,
                       drawn);
  }
  std::vector<Record> out(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    out[i] = {records[i].group, drawn[i] / 2, drawn[i] % 2};
  }
  return Dataset::Create(schema, std::move(out));
}

absl::StatusOr<Dataset> TransformApply(const Dataset& data,
                                       const ApplyMapper& mapper,
                                       const SeedSpec& seed,
                                       const TransformOptions& options) {
  const Schema& schema = mapper.schema();
  if (!(data.schema() == schema)) {
    return absl::InvalidArgumentError("dataset and mapper schemas differ");
  }
  const auto records = data.records();
  const int nx = schema.num_features();
  std::vector<int> rows(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    rows[i] = records[i].group * nx + records[i].feature;
  }
  std::vector<int> drawn(records.size());
  if (options.parallel) {
    parallel::SampleRows(mapper.probs(), nx, rows, seed.seed, seed.first_index,
                         drawn);
  } else {
    serial::SampleRows(mapper.probs(), nx, rows, seed.seed, seed.first_index,
                       drawn);
  }
  std::vector<Record> out(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    out[i] = {records[i].group, drawn[i], std::nullopt};
  }
  return Dataset::Create(schema, std::move(out));
}

absl::StatusOr<ApplyBudget> ApplyDistortionBound(const DistortionBudget& budget,
                                                 const JointPmf& pmf) {
  const Schema& schema = pmf.schema();
  FAIRPREP_ASSIGN_OR_RETURN(const auto per_cell,
                            ResolveBudgets(budget, schema));
  const int nx = schema.num_features();
  ApplyBudget out;
  out.derived = budget.mode == BudgetMode::kThresholded;
  out.values.resize(static_cast<size_t>(schema.num_groups()) * nx);
  for (int d = 0; d < schema.num_groups(); ++d) {
    for (int x = 0; x < nx; ++x) {
      const auto& c0 = per_cell[schema.CellIndex(d, x, 0)];
      const auto& c1 = per_cell[schema.CellIndex(d, x, 1)];
      const double mass = pmf.at(d, x, 0) + pmf.at(d, x, 1);
      std::vector<double>& v = out.values[d * nx + x];
      v.resize(c0.size());
      if (!(mass > 0)) {
        for (size_t l = 0; l < c0.size(); ++l) v[l] = std::max(c0[l], c1[l]);
        out.warnings.push_back(fmt::format(
            "no training mass at (D={}, X={}); larger y budget used",
            schema.GroupLabel(d), schema.FeatureLabel(x)));
        continue;
      }
      const double w1 = pmf.at(d, x, 1) / mass;
      for (size_t l = 0; l < c0.size(); ++l) {
        v[l] = w1 == 0   ? c0[l]
               : w1 == 1 ? c1[l]
                         : (1 - w1) * c0[l] + w1 * c1[l];
      }
    }
  }
  return out;
}

}  // namespace fairprep
