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
//
// Discrimination measures and the linear constraints they induce on a
// transformation kernel.
//
// A kernel is stored densely as kernel[cell * num_outputs + output], where
// cell = Schema::CellIndex(d, x, y) and output = Schema::OutputIndex(x̂, ŷ).
// Every constraint is kept in the form sum(coef * k) <= rhs.

#ifndef FAIRPREP_CONSTRAINTS_H_
#define FAIRPREP_CONSTRAINTS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fairprep/domain.h"

namespace fairprep {

// |p / q - 1|. Fails when q <= 0.
absl::StatusOr<double> RatioDistance(double p, double q);

enum class DiscriminationMode {
  kTargetDistance,
  kPairwiseDistance,
  kConditionalTargetDistance,
};

std::string_view DiscriminationModeName(DiscriminationMode mode);
absl::StatusOr<DiscriminationMode> ParseDiscriminationMode(
    std::string_view name);

// Per-index epsilon. Empty label fields match every value.
struct EpsilonOverride {
  std::string outcome;
  std::string group;
  std::string group2;   // pairwise mode
  std::string segment;  // conditional mode, composite label over B
  double value = 0;

  bool operator==(const EpsilonOverride&) const = default;
};

struct DiscriminationSpec {
  DiscriminationMode mode = DiscriminationMode::kTargetDistance;
  // Target outcome distribution. Defaults to p_Y, or p_{Y|B} in conditional
  // mode.
  std::optional<std::vector<double>> target;
  double epsilon = 0;
  std::vector<EpsilonOverride> epsilon_overrides;  // last match wins
  std::vector<std::string> conditioning;           // B, conditional mode only
  int min_segment_samples = 20;

  bool operator==(const DiscriminationSpec&) const = default;
};

absl::Status ValidateDiscriminationSpec(const DiscriminationSpec& spec,
                                        const Schema& schema);

// Resolves epsilon for one index; unused label arguments may be empty.
double ResolveEpsilon(const DiscriminationSpec& spec, std::string_view outcome,
                      std::string_view group, std::string_view group2 = {},
                      std::string_view segment = {});

enum class ConstraintKind { kDiscrimination, kDistortion };

struct KernelTerm {
  int cell = 0;
  int output = 0;
  double coef = 0;
};

struct LinearConstraint {
  std::vector<KernelTerm> terms;
  double rhs = 0;
  ConstraintKind kind = ConstraintKind::kDiscrimination;
  std::string label;

  double Lhs(std::span<const double> kernel, int num_outputs) const;
  // max(0, lhs - rhs).
  double Residual(std::span<const double> kernel, int num_outputs) const;
};

// A kernel entry pinned to zero. `exact` is false when the pin is an
// approximation of a very large distortion penalty.
struct FixedEntry {
  int cell = 0;
  int output = 0;
  bool exact = true;
};

struct LinearConstraintSet {
  std::vector<LinearConstraint> constraints;
  std::vector<FixedEntry> fixed;
  std::vector<std::string> warnings;

  void Append(LinearConstraintSet other);
  double MaxResidual(std::span<const double> kernel, int num_outputs) const;
};

// Per (d, y) rate Σ_{x,y'} p(x,y'|d) Σ_{x̂} k(x̂,y|d,x,y') as terms. Groups with
// zero mass get an empty term list.
std::vector<std::vector<KernelTerm>> OutcomeRateTerms(const JointPmf& pmf);

absl::StatusOr<LinearConstraintSet> BuildDiscriminationConstraints(
    const DiscriminationSpec& spec, const JointPmf& pmf);

// Target distribution used by TargetDistance and pairwise reports.
absl::StatusOr<std::vector<double>> ResolveTarget(
    const DiscriminationSpec& spec, const JointPmf& pmf);

}  // namespace fairprep

#endif  // FAIRPREP_CONSTRAINTS_H_
