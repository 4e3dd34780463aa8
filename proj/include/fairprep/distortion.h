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
// Distortion metrics over ((x, y), (x̂, ŷ)) pairs, distortion budgets, and the
// per-cell linear constraints they induce.

#ifndef FAIRPREP_DISTORTION_H_
#define FAIRPREP_DISTORTION_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fairprep/constraints.h"
#include "fairprep/domain.h"

namespace fairprep {

inline constexpr double kForbidden = 1e4;

// Penalty for changing one attribute (an X variable or Y).
struct AttributePenalty {
  enum class Kind { kMatrix, kOrdinal };

  std::string variable;
  Kind kind = Kind::kOrdinal;
  // kMatrix: matrix[from][to].
  std::vector<std::vector<double>> matrix;
  // kOrdinal: step_penalty * |to - from|, or the forbidden level when the
  // jump exceeds max_jump (max_jump < 0 means unlimited).
  double step_penalty = 1;
  int max_jump = -1;

  bool operator==(const AttributePenalty&) const = default;
};

// One conjunct of a rule. delta = index(to) - index(from) on an ordinal
// alphabet; `from` / `to` restrict the labels when non-empty.
struct RuleClause {
  std::string variable;
  std::optional<int> min_delta;
  std::optional<int> max_delta;
  std::vector<std::string> from;
  std::vector<std::string> to;

  bool operator==(const RuleClause&) const = default;
};

struct DistortionRule {
  std::vector<RuleClause> clauses;
  double value = 0;

  bool operator==(const DistortionRule&) const = default;
};

enum class Combiner { kSumOfSquares, kSum, kRuleTable };

std::string_view CombinerName(Combiner combiner);
absl::StatusOr<Combiner> ParseCombiner(std::string_view name);

struct DistortionMetric {
  Combiner combiner = Combiner::kSumOfSquares;
  // kSumOfSquares / kSum. An attribute without an entry may not change.
  std::vector<AttributePenalty> penalties;
  // kRuleTable. First matching rule wins; no match means 0.
  std::vector<DistortionRule> rules;
  double forbidden = kForbidden;

  bool operator==(const DistortionMetric&) const = default;
};

// Dense δ over (x, y) -> (x̂, ŷ), indexed by Schema::OutputIndex on both sides.
class DistortionTable {
 public:
  // Validates the metric against the schema and checks δ >= 0 and
  // δ(identity) = 0 everywhere.
  static absl::StatusOr<DistortionTable> Build(const DistortionMetric& metric,
                                               const Schema& schema);

  double at(int x, int y, int x_hat, int y_hat) const {
    return values_[static_cast<size_t>(Schema::OutputIndex(x, y)) * size_ +
                   Schema::OutputIndex(x_hat, y_hat)];
  }
  // Row over all (x̂, ŷ) for a source (x, y).
  std::span<const double> row(int x, int y) const {
    return std::span(values_).subspan(
        static_cast<size_t>(Schema::OutputIndex(x, y)) * size_, size_);
  }
  int size() const { return size_; }
  double forbidden() const { return forbidden_; }

 private:
  DistortionTable() = default;

  int size_ = 0;
  double forbidden_ = kForbidden;
  std::vector<double> values_;
};

absl::StatusOr<double> EvaluateDistortion(const DistortionMetric& metric,
                                          const Schema& schema, int x, int y,
                                          int x_hat, int y_hat);

enum class BudgetMode { kExpected, kThresholded };

struct ThresholdLevel {
  double threshold = 0;
  double budget = 0;

  bool operator==(const ThresholdLevel&) const = default;
};

// Per-cell budget replacement. Empty label fields match every value; the
// last matching override wins. `values` has one entry in expected mode and
// one per threshold level otherwise.
struct BudgetOverride {
  std::string group;
  std::string feature;
  std::string outcome;
  std::vector<double> values;

  bool operator==(const BudgetOverride&) const = default;
};

struct DistortionBudget {
  BudgetMode mode = BudgetMode::kExpected;
  double expected = 0;
  std::vector<ThresholdLevel> levels;
  std::vector<BudgetOverride> overrides;

  bool operator==(const DistortionBudget&) const = default;
};

absl::Status ValidateBudget(const DistortionBudget& budget,
                            const Schema& schema);

// Budget values for every cell: [cell][level], one level in expected mode.
absl::StatusOr<std::vector<std::vector<double>>> ResolveBudgets(
    const DistortionBudget& budget, const Schema& schema);

struct DistortionConstraintOptions {
  // Pin entries with δ >= forbidden to zero when the budget is below the
  // forbidden level.
  bool fix_forbidden = true;
};

// One expected-distortion row per positive-mass cell, or one row per
// positive-mass cell and threshold level. Entries that a zero budget (or the
// forbidden level) rules out are reported in `fixed`.
absl::StatusOr<LinearConstraintSet> BuildDistortionConstraints(
    const DistortionTable& table, const DistortionBudget& budget,
    const JointPmf& pmf, const DistortionConstraintOptions& options = {});

}  // namespace fairprep

#endif  // FAIRPREP_DISTORTION_H_
