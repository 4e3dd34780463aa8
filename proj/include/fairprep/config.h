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
// Pipeline configuration: a YAML document describing the input, schema,
// constraints, solver and outputs of a run. See docs/config.md for the
// grammar.

#ifndef FAIRPREP_CONFIG_H_
#define FAIRPREP_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "fairprep/constraints.h"
#include "fairprep/domain.h"
#include "fairprep/ingest.h"
#include "fairprep/optimizer.h"

namespace fairprep {

struct SuppressConfig {
  SofStrategy strategy = SofStrategy::kFixConditional;
  int max_outer = 50;

  bool operator==(const SuppressConfig&) const = default;
};

struct AuditConfig {
  double beta = 0.05;
  // Distortion exceedance thresholds; empty means the budget levels.
  std::vector<double> thresholds;
  int min_cohort_samples = 20;

  bool operator==(const AuditConfig&) const = default;
};

struct PipelineConfig {
  std::string name;
  SourceSpec input;
  std::vector<RowFilter> filters;
  std::vector<Variable> variables;
  DiscriminationSpec discrimination;
  std::optional<DistortionControl> distortion;
  AssembleOptions assemble;
  Objective objective = Objective::kKl;
  SolverSettings solver;
  std::optional<SuppressConfig> suppress;
  uint64_t seed = 0;
  AuditConfig audit;
  std::string output_dir = "out";
  // Grid for the sweep command when none is given on the command line.
  std::vector<double> sweep_grid;

  bool operator==(const PipelineConfig&) const = default;
};

// Parses and validates. Errors are InvalidArgument with the offending key.
absl::StatusOr<PipelineConfig> ParseConfig(std::string_view yaml);
absl::StatusOr<PipelineConfig> LoadConfigFile(const std::string& path);

// Canonical YAML; ParseConfig(DumpConfig(c)) == c.
std::string DumpConfig(const PipelineConfig& config);

// Schema, constraint and budget checks on an already parsed config.
absl::Status ValidateConfig(const PipelineConfig& config);

absl::StatusOr<Schema> ConfigSchema(const PipelineConfig& config);

// SHA-256 (hex) of the canonical config without seed and output settings.
std::string ConfigFingerprint(const PipelineConfig& config);

}  // namespace fairprep

#endif  // FAIRPREP_CONFIG_H_
