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
// Assembly and solution of the kernel optimization problem
//
//   minimize    Δ(p_{X,Y}, p_{X̂,Ŷ})
//   subject to  discrimination and distortion constraints on the kernel,
//               one probability simplex per positive-mass input cell,
//
// where p_{X̂,Ŷ}(o) = Σ_c p(c) k(o|c) and Δ is KL(p_{X,Y} ‖ p_{X̂,Ŷ}) or the
// l1 distance. A phase-1 program certifies feasibility before the main solve.

#ifndef FAIRPREP_OPTIMIZER_H_
#define FAIRPREP_OPTIMIZER_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fairprep/constraints.h"
#include "fairprep/distortion.h"
#include "fairprep/domain.h"
#include "fairprep/transform_kernel.h"

namespace fairprep {

enum class Objective { kKl, kL1 };

std::string_view ObjectiveName(Objective objective);
absl::StatusOr<Objective> ParseObjective(std::string_view name);

// Δ between two distributions over the same support.
double UtilityLoss(Objective objective, std::span<const double> p,
                   std::span<const double> q);

struct DistortionControl {
  DistortionMetric metric;
  DistortionBudget budget;

  bool operator==(const DistortionControl&) const = default;
};

struct AssembleOptions {
  bool fix_forbidden = true;

  bool operator==(const AssembleOptions&) const = default;
};

class Problem {
 public:
  // From explicit constraint sets. Fixed entries of both sets are pinned.
  static absl::StatusOr<Problem> FromConstraints(
      JointPmf pmf, Objective objective, LinearConstraintSet discrimination,
      LinearConstraintSet distortion);

  const JointPmf& pmf() const { return pmf_; }
  const Schema& schema() const { return pmf_.schema(); }
  Objective objective() const { return objective_; }
  const LinearConstraintSet& discrimination() const { return discrimination_; }
  const LinearConstraintSet& distortion() const { return distortion_; }

  // Positive-mass input cells, ascending.
  const std::vector<int>& active_cells() const { return active_cells_; }
  int num_variables() const {
    return static_cast<int>(active_cells_.size()) * schema().num_outputs();
  }
  // p_{X,Y}, indexed by Schema::OutputIndex.
  const std::vector<double>& source_marginal() const { return source_; }

  // Pinned entries as a dense mask over the full kernel. Exact pins only
  // when `exact_only` is set.
  std::vector<bool> FixedMask(bool exact_only) const;

  // p_{X̂,Ŷ} of a kernel.
  std::vector<double> Image(std::span<const double> kernel) const;
  double ObjectiveValue(std::span<const double> kernel) const;
  // Largest residual over all discrimination and distortion constraints.
  double MaxResidual(std::span<const double> kernel) const;
  // Index into AllConstraints() of the most violated constraint.
  int WorstConstraint(std::span<const double> kernel, double* residual) const;
  std::vector<const LinearConstraint*> AllConstraints() const;
  std::vector<std::string> Warnings() const;

 private:
  Problem(JointPmf pmf, Objective objective, LinearConstraintSet disc,
          LinearConstraintSet dist);

  JointPmf pmf_;
  Objective objective_;
  LinearConstraintSet discrimination_;
  LinearConstraintSet distortion_;
  std::vector<int> active_cells_;
  std::vector<double> source_;
};

absl::StatusOr<Problem> Assemble(
    const JointPmf& pmf, const DiscriminationSpec& discrimination,
    const std::optional<DistortionControl>& distortion, Objective objective,
    const AssembleOptions& options = {});

struct SolverSettings {
  double tol = 1e-6;
  int max_iters = 50000;
  bool parallel = true;

  bool operator==(const SolverSettings&) const = default;
};

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kIterationLimit,
  kNumericalBreakdown,
};

std::string_view SolveStatusName(SolveStatus status);

struct Solution {
  explicit Solution(TransformKernel k) : kernel(std::move(k)) {}

  SolveStatus status = SolveStatus::kIterationLimit;
  TransformKernel kernel;
  double objective = 0;
  double max_residual = 0;
  // Complementarity x^T s of the final interior-point iterate.
  double gap = 0;
  int iterations = 0;
  // Infeasible: minimum total constraint violation and the most violated
  // constraint (index into Problem::AllConstraints()).
  double phase1_violation = 0;
  int worst_constraint = -1;
  std::string worst_label;
  double worst_residual = 0;

  // Suppressed solves only.
  std::optional<KernelFactors> factors;
  std::vector<double> objective_history;
  std::optional<double> lower_bound;

  std::vector<std::string> warnings;
};

absl::StatusOr<Solution> Solve(const Problem& problem,
                               const SolverSettings& settings = {});

struct SweepPoint {
  double epsilon = 0;
  SolveStatus status = SolveStatus::kIterationLimit;
  double objective = 0;
  double max_residual = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  // Objective non-increasing (within tol) over the grid, with no feasible
  // point followed by an infeasible one.
  bool monotone = true;
  std::optional<double> first_feasible;
  std::optional<double> first_zero;  // first ε with objective <= tol
};

// Solves one problem per grid value with the scalar ε replaced. Grid values
// must be ascending; solves run concurrently.
absl::StatusOr<SweepResult> SweepEpsilon(
    const JointPmf& pmf, const DiscriminationSpec& discrimination,
    const std::optional<DistortionControl>& distortion, Objective objective,
    std::span<const double> grid, const SolverSettings& settings = {},
    const AssembleOptions& options = {});

enum class SofStrategy { kFixConditional, kAlternating };

std::string_view SofStrategyName(SofStrategy strategy);
absl::StatusOr<SofStrategy> ParseSofStrategy(std::string_view name);

// Solves over kernels of the form p(ŷ|x̂) q(x̂|d,x,y). Only exact pins of the
// problem are used. FixConditional sets p(ŷ|x̂) = p_{Y|X} (p_Y where p_X is
// zero) and records the lower bound Δ(p_X, p_X̂). Alternating starts there
// and alternates exact solves in each factor, accepting only non-increasing
// objectives.
absl::StatusOr<Solution> SolveSuppressed(const Problem& problem,
                                         SofStrategy strategy,
                                         const SolverSettings& settings = {},
                                         int max_outer = 50);

}  // namespace fairprep

#endif  // FAIRPREP_OPTIMIZER_H_
