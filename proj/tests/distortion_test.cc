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
#include "fairprep/distortion.h"

#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace fairprep {
namespace {

using ::fairprep::testing::MakeSchema;
using ::fairprep::testing::RandomPmf;

// Y flip costs 1, X0 ordinal steps of 1 up to one jump.
DistortionMetric SimpleMetric() {
  DistortionMetric m;
  m.combiner = Combiner::kSumOfSquares;
  AttributePenalty x;
  x.variable = "X0";
  x.kind = AttributePenalty::Kind::kOrdinal;
  x.step_penalty = 1;
  x.max_jump = 1;
  AttributePenalty y;
  y.variable = "Y";
  y.kind = AttributePenalty::Kind::kMatrix;
  y.matrix = {{0, kForbidden}, {2, 0}};
  m.penalties = {x, y};
  return m;
}

TEST(DistortionTest, SumOfSquaresRules) {
  const Schema schema = MakeSchema(1, {3});
  const DistortionMetric m = SimpleMetric();
  EXPECT_EQ(*EvaluateDistortion(m, schema, 1, 1, 1, 1), 0);
  EXPECT_GE(*EvaluateDistortion(m, schema, 1, 0, 1, 1), kForbidden);
  EXPECT_EQ(*EvaluateDistortion(m, schema, 0, 1, 1, 0), 1 + 4);
  EXPECT_GE(*EvaluateDistortion(m, schema, 0, 1, 2, 1), kForbidden);
  DistortionMetric sum = m;
  sum.combiner = Combiner::kSum;
  EXPECT_EQ(*EvaluateDistortion(sum, schema, 0, 1, 1, 0), 1 + 2);
}

TEST(DistortionTest, UnlistedAttributeMayNotChange) {
  const Schema schema = MakeSchema(1, {2, 2});
  const DistortionMetric m = SimpleMetric();
  // X1 has no penalty.
  EXPECT_EQ(*EvaluateDistortion(m, schema, 0, 0, 1, 0), kForbidden);
  EXPECT_EQ(*EvaluateDistortion(m, schema, 0, 0, 2, 0), 1);
}

TEST(DistortionTest, RuleTableFirstMatchWins) {
  const Schema schema = MakeSchema(1, {4});
  DistortionMetric m;
  m.combiner = Combiner::kRuleTable;
  m.rules = {{{{"X0", 2, std::nullopt, {}, {}}}, 3},
             {{{"X0", 1, 1, {}, {}}}, 2},
             {{{"Y", std::nullopt, -1, {}, {}}}, 1}};
  const DistortionTable t = *DistortionTable::Build(m, schema);
  EXPECT_EQ(t.at(0, 0, 2, 0), 3);
  EXPECT_EQ(t.at(0, 1, 1, 0), 2);
  EXPECT_EQ(t.at(1, 1, 1, 0), 1);
  EXPECT_EQ(t.at(1, 0, 0, 1), 0);
}

TEST(DistortionTest, ValidationRejectsBadMetrics) {
  const Schema schema = MakeSchema(1, {2});
  DistortionMetric nonzero_identity;
  nonzero_identity.penalties = {
      {"Y", AttributePenalty::Kind::kMatrix, {{1, 0}, {0, 0}}}};
  EXPECT_FALSE(DistortionTable::Build(nonzero_identity, schema).ok());
  DistortionMetric negative;
  negative.combiner = Combiner::kSum;
  negative.penalties = {
      {"Y", AttributePenalty::Kind::kMatrix, {{0, -1}, {0, 0}}}};
  EXPECT_FALSE(DistortionTable::Build(negative, schema).ok());
  DistortionMetric unknown;
  unknown.penalties = {{"Z", AttributePenalty::Kind::kOrdinal}};
  EXPECT_FALSE(DistortionTable::Build(unknown, schema).ok());
}

TEST(DistortionConstraintsTest, ExpectedModeOneRowPerPositiveCell) {
  const Schema schema = MakeSchema(2, {3});
  std::mt19937_64 rng(1);
  std::vector<double> mass(schema.num_cells(), 1.0 / 11);
  mass[0] = 0;
  const JointPmf pmf = *JointPmf::FromMass(schema, mass);
  const DistortionTable t = *DistortionTable::Build(SimpleMetric(), schema);
  DistortionBudget b;
  b.expected = 0.5;
  LinearConstraintSet set = *BuildDistortionConstraints(t, b, pmf);
  EXPECT_EQ(set.constraints.size(), 11u);
  for (const FixedEntry& f : set.fixed) EXPECT_FALSE(f.exact);
}

TEST(DistortionConstraintsTest, ZeroBudgetPinsEveryMove) {
  const Schema schema = MakeSchema(2, {2});
  std::mt19937_64 rng(2);
  const JointPmf pmf = RandomPmf(schema, rng);
  const DistortionTable t = *DistortionTable::Build(SimpleMetric(), schema);
  DistortionBudget b;
  b.expected = 0;
  LinearConstraintSet set = *BuildDistortionConstraints(t, b, pmf);
  // Every cell keeps only its identity entry.
  EXPECT_EQ(set.fixed.size(), static_cast<size_t>(schema.num_cells()) * 3);
}

TEST(DistortionConstraintsTest, ThresholdedRowsAndSingleThresholdReduction) {
  const Schema schema = MakeSchema(1, {4});
  DistortionMetric m;
  m.combiner = Combiner::kRuleTable;
  m.rules = {{{{"X0", 2, std::nullopt, {}, {}}}, 3},
             {{{"X0", 1, 1, {}, {}}}, 2},
             {{{"Y", std::nullopt, -1, {}, {}}}, 1}};
  const DistortionTable t = *DistortionTable::Build(m, schema);
  std::mt19937_64 rng(3);
  const JointPmf pmf = RandomPmf(schema, rng);
  DistortionBudget b;
  b.mode = BudgetMode::kThresholded;
  b.levels = {{0.9, 0.1}, {1.9, 0.05}, {2.9, 0}};
  LinearConstraintSet set = *BuildDistortionConstraints(t, b, pmf);
  EXPECT_EQ(set.constraints.size(), 3u * schema.num_cells());

  // With a 0/1 metric and one threshold the row is P(δ = 1 | cell) <= c.
  DistortionMetric flip;
  flip.combiner = Combiner::kSum;
  flip.penalties = {{"Y", AttributePenalty::Kind::kMatrix, {{0, 1}, {1, 0}}},
                    {"X0",
                     AttributePenalty::Kind::kMatrix,
                     {{0, 1, 1, 1}, {1, 0, 1, 1}, {1, 1, 0, 1}, {1, 1, 1, 0}}}};
  const DistortionTable ft = *DistortionTable::Build(flip, schema);
  DistortionBudget single;
  single.mode = BudgetMode::kThresholded;
  single.levels = {{0.5, 0.2}};
  LinearConstraintSet s1 = *BuildDistortionConstraints(ft, single, pmf);
  for (const LinearConstraint& c : s1.constraints) {
    EXPECT_EQ(c.rhs, 0.2);
    for (const KernelTerm& term : c.terms) EXPECT_EQ(term.coef, 1.0);
    // Every entry other than identity, including ŷ changes with x̂ = x.
    EXPECT_EQ(c.terms.size(), static_cast<size_t>(schema.num_outputs() - 1));
  }
}

TEST(DistortionBudgetTest, Validation) {
  const Schema schema = MakeSchema(1, {2});
  DistortionBudget b;
  b.mode = BudgetMode::kThresholded;
  EXPECT_FALSE(ValidateBudget(b, schema).ok());
  b.levels = {{1, 0.1}, {0.5, 0.05}};
  EXPECT_FALSE(ValidateBudget(b, schema).ok());
  b.levels = {{0.5, 0.05}, {1, 0.1}};
  EXPECT_FALSE(ValidateBudget(b, schema).ok());
  b.levels = {{0.5, 0.1}, {1, 0.05}};
  EXPECT_TRUE(ValidateBudget(b, schema).ok());
  b.overrides = {{"g0", "", "", {0.2}}};
  EXPECT_FALSE(ValidateBudget(b, schema).ok());
}

TEST(DistortionBudgetTest, OverridesResolvePerCell) {
  const Schema schema = MakeSchema(2, {2});
  DistortionBudget b;
  b.expected = 0.5;
  b.overrides = {{"g1", "", "1", {0.1}}};
  const auto budgets = *ResolveBudgets(b, schema);
  EXPECT_EQ(budgets[schema.CellIndex(1, 0, 1)][0], 0.1);
  EXPECT_EQ(budgets[schema.CellIndex(1, 0, 0)][0], 0.5);
  EXPECT_EQ(budgets[schema.CellIndex(0, 1, 1)][0], 0.5);
}

}  // namespace
}  // namespace fairprep
