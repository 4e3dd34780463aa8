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
#include "fairprep/optimizer.h"

#include <algorithm>
#include <random>

#include "grid_oracle.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace fairprep {
namespace {

using ::fairprep::testing::GridInstance;
using ::fairprep::testing::MakeSchema;
using ::fairprep::testing::RandomPmf;

// Two equally likely groups, one x, p(Y=1|g0) = 0.8, p(Y=1|g1) = 0.2.
JointPmf ToyPmf() {
  return *JointPmf::FromMass(MakeSchema(2, {1}), {0.1, 0.4, 0.4, 0.1});
}

DistortionControl FlipCost(double budget) {
  DistortionControl control;
  control.metric.penalties = {
      {"Y", AttributePenalty::Kind::kMatrix, {{0, 1}, {1, 0}}}};
  control.budget.expected = budget;
  return control;
}

DistortionControl OrdinalCost(double budget) {
  DistortionControl control = FlipCost(budget);
  AttributePenalty x;
  x.variable = "X0";
  x.kind = AttributePenalty::Kind::kOrdinal;
  x.step_penalty = 1;
  control.metric.penalties.push_back(x);
  return control;
}

double FlipProbability(const TransformKernel& k, int cell) {
  return k.at(cell, (cell % k.schema().num_outputs()) ^ 1);
}

TEST(OptimizerTest, ToyInstanceMatchesExhaustiveSearch) {
  const JointPmf pmf = ToyPmf();
  DiscriminationSpec spec;
  spec.epsilon = 0.1;
  const Problem problem = *Assemble(pmf, spec, FlipCost(1.0), Objective::kL1);
  EXPECT_EQ(problem.num_variables(), 8);
  const Solution sol = *Solve(problem);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_LE(sol.max_residual, 1e-6);

  // Four flip probabilities on a 0.02 grid.
  double best = 1e9;
  const double s = 0.02;
  for (int a = 0; a <= 50; ++a) {
    for (int b = 0; b <= 50; ++b) {
      for (int c = 0; c <= 50; ++c) {
        for (int d = 0; d <= 50; ++d) {
          // p(ŷ=1 | g): y=1 mass kept plus y=0 mass flipped.
          const double rate0 = 0.8 * (1 - b * s) + 0.2 * a * s;
          const double rate1 = 0.2 * (1 - d * s) + 0.8 * c * s;
          bool ok = true;
          for (double r : {rate0, rate1}) {
            if (std::abs(r / 0.5 - 1) > 0.1 ||
                std::abs((1 - r) / 0.5 - 1) > 0.1) {
              ok = false;
            }
          }
          if (!ok) continue;
          const double image1 = 0.5 * (rate0 + rate1);
          best = std::min(best, 2 * std::abs(image1 - 0.5));
        }
      }
    }
  }
  EXPECT_NEAR(sol.objective, best, 1e-6);
  EXPECT_NEAR(sol.objective, 0, 1e-6);
}

TEST(OptimizerTest, TwoCellProgramsMatchGridSearch) {
  std::mt19937_64 rng(20);
  int compared = 0, infeasible = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Objective objective = trial % 2 ? Objective::kKl : Objective::kL1;
    const GridInstance inst = testing::RandomGridInstance(rng, objective);
    const Problem problem =
        *Assemble(inst.pmf, testing::GridDiscrimination(inst),
                  testing::GridDistortion(inst), objective);
    const Solution sol = *Solve(problem);
    const auto grid = testing::GridMinimum(inst, 1e-3);
    if (sol.status == SolveStatus::kInfeasible) {
      ++infeasible;
      EXPECT_FALSE(grid.has_value()) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(sol.status, SolveStatus::kOptimal) << "trial " << trial;
    const double t1 = FlipProbability(sol.kernel, inst.free_cell[0]);
    const double t2 = FlipProbability(sol.kernel, inst.free_cell[1]);
    const auto direct = testing::GridEvaluate(inst, t1, t2, 1e-6);
    ASSERT_TRUE(direct.has_value()) << "trial " << trial;
    EXPECT_NEAR(*direct, sol.objective, 1e-6);
    if (grid.has_value()) {
      ++compared;
      EXPECT_GE(*grid, sol.objective - 1e-6) << "trial " << trial;
      EXPECT_LE(*grid, sol.objective + 4e-3) << "trial " << trial;
    }
  }
  EXPECT_GT(compared, 10);
  EXPECT_GT(infeasible, 0);
}

TEST(OptimizerTest, VariableCountAndIdentityObjective) {
  const Schema schema = MakeSchema(2, {2, 2});
  std::mt19937_64 rng(1);
  const JointPmf pmf = RandomPmf(schema, rng);
  DiscriminationSpec spec;
  const Problem problem = *Assemble(pmf, spec, std::nullopt, Objective::kKl);
  EXPECT_EQ(problem.num_variables(), 16 * 8);
  const TransformKernel id = TransformKernel::Identity(schema);
  EXPECT_EQ(problem.ObjectiveValue(id.probs()), 0);
  const Problem l1 = *Assemble(pmf, spec, std::nullopt, Objective::kL1);
  EXPECT_EQ(l1.ObjectiveValue(id.probs()), 0);
}

TEST(OptimizerTest, RandomReplacementWithZeroEpsilonIsZeroCostWithoutBudget) {
  // Replacing y by a draw from p_Y for every record satisfies ε = 0 when D
  // and X are independent, and costs nothing in p_{X,Y} terms only if X is
  // independent of Y. Here the instance is built so both hold.
  const Schema schema = MakeSchema(2, {2});
  std::vector<double> mass;
  for (double pd : {0.3, 0.7}) {
    for (double px : {0.4, 0.6}) {
      for (double py : {0.25, 0.75}) mass.push_back(pd * px * py);
    }
  }
  const JointPmf pmf = *JointPmf::FromMass(schema, mass);
  DiscriminationSpec spec;
  spec.epsilon = 0;
  const Solution sol =
      *Solve(*Assemble(pmf, spec, std::nullopt, Objective::kKl));
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.objective, 0, 1e-6);
}

TEST(OptimizerTest, ZeroBudgetGivesIdentity) {
  const Schema schema = MakeSchema(2, {3});
  std::mt19937_64 rng(3);
  const JointPmf pmf = RandomPmf(schema, rng);
  DiscriminationSpec spec;
  spec.epsilon = 10;
  const Solution sol =
      *Solve(*Assemble(pmf, spec, OrdinalCost(0), Objective::kKl));
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  const TransformKernel id = TransformKernel::Identity(schema);
  for (size_t i = 0; i < id.probs().size(); ++i) {
    EXPECT_NEAR(sol.kernel.probs()[i], id.probs()[i], 1e-6);
  }
}

TEST(OptimizerTest, LooseEpsilonGivesZeroObjective) {
  const Schema schema = MakeSchema(3, {2});
  std::mt19937_64 rng(4);
  const JointPmf pmf = RandomPmf(schema, rng);
  DiscriminationSpec spec;
  spec.mode = DiscriminationMode::kPairwiseDistance;
  spec.epsilon = 1e3;
  const Solution sol =
      *Solve(*Assemble(pmf, spec, OrdinalCost(0.5), Objective::kKl));
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.objective, 0, 1e-6);
}

TEST(OptimizerTest, InfeasibleReportsWorstConstraint) {
  const JointPmf pmf = ToyPmf();
  DiscriminationSpec spec;
  spec.epsilon = 0.01;
  const Problem problem = *Assemble(pmf, spec, FlipCost(0.05), Objective::kKl);
  const Solution sol = *Solve(problem);
  EXPECT_EQ(sol.status, SolveStatus::kInfeasible);
  EXPECT_GT(sol.phase1_violation, 0);
  EXPECT_GE(sol.worst_constraint, 0);
  EXPECT_FALSE(sol.worst_label.empty());
}

TEST(OptimizerTest, DeterministicAndSerialMatchesParallel) {
  const Schema schema = MakeSchema(2, {3, 2});
  std::mt19937_64 rng(5);
  const JointPmf pmf = RandomPmf(schema, rng);
  DiscriminationSpec spec;
  spec.epsilon = 0.05;
  const Problem problem =
      *Assemble(pmf, spec, OrdinalCost(0.6), Objective::kKl);
  const Solution a = *Solve(problem);
  const Solution b = *Solve(problem);
  SolverSettings serial;
  serial.parallel = false;
  const Solution c = *Solve(problem, serial);
  ASSERT_EQ(a.status, SolveStatus::kOptimal);
  EXPECT_TRUE(std::ranges::equal(a.kernel.probs(), b.kernel.probs()));
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_NEAR(a.objective, c.objective, 1e-7);
}

TEST(OptimizerTest, ObjectiveIsConvexInKernel) {
  const Schema schema = MakeSchema(2, {2});
  std::mt19937_64 rng(6);
  const JointPmf pmf = RandomPmf(schema, rng);
  DiscriminationSpec spec;
  for (Objective obj : {Objective::kKl, Objective::kL1}) {
    const Problem p = *Assemble(pmf, spec, std::nullopt, obj);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> k1, k2, mid;
      for (int c = 0; c < schema.num_cells(); ++c) {
        for (double v : testing::RandomMass(4, rng)) k1.push_back(v);
        for (double v : testing::RandomMass(4, rng)) k2.push_back(v);
      }
      for (size_t i = 0; i < k1.size(); ++i) mid.push_back((k1[i] + k2[i]) / 2);
      EXPECT_LE(p.ObjectiveValue(mid),
                (p.ObjectiveValue(k1) + p.ObjectiveValue(k2)) / 2 + 1e-12);
    }
  }
}

TEST(OptimizerTest, OptimumIsBelowRandomFeasibleKernels) {
  const JointPmf pmf = ToyPmf();
  DiscriminationSpec spec;
  spec.epsilon = 0.2;
  const Problem problem = *Assemble(pmf, spec, FlipCost(0.6), Objective::kKl);
  const Solution sol = *Solve(problem);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  std::mt19937_64 rng(7);
  int feasible = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    std::vector<double> k;
    for (int c = 0; c < 4; ++c) {
      for (double v : testing::RandomMass(2, rng)) k.push_back(v);
    }
    if (problem.MaxResidual(k) > 0) continue;
    ++feasible;
    EXPECT_GE(problem.ObjectiveValue(k), sol.objective - 1e-7);
  }
  EXPECT_GT(feasible, 10);
}

TEST(SweepTest, ObjectiveIsMonotoneInEpsilon) {
  const Schema schema = MakeSchema(2, {3});
  std::mt19937_64 rng(8);
  const JointPmf pmf = RandomPmf(schema, rng);
  DiscriminationSpec spec;
  const std::vector<double> grid = {0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6};
  const SweepResult r =
      *SweepEpsilon(pmf, spec, OrdinalCost(0.3), Objective::kKl, grid);
  ASSERT_EQ(r.points.size(), grid.size());
  EXPECT_TRUE(r.monotone);
  for (size_t i = 1; i < r.points.size(); ++i) {
    if (r.points[i - 1].status == SolveStatus::kOptimal) {
      EXPECT_EQ(r.points[i].status, SolveStatus::kOptimal);
      EXPECT_LE(r.points[i].objective, r.points[i - 1].objective + 1e-6);
    }
  }
}

class SuppressedTest : public ::testing::TestWithParam<SofStrategy> {};

TEST_P(SuppressedTest, FactorizedKernelIsFeasibleAndAboveLowerBound) {
  const Schema schema = MakeSchema(2, {3});
  std::mt19937_64 rng(9);
  const JointPmf pmf = RandomPmf(schema, rng);
  DiscriminationSpec spec;
  spec.epsilon = 0.3;
  const Problem problem =
      *Assemble(pmf, spec, OrdinalCost(1.5), Objective::kKl);
  const Solution full = *Solve(problem);
  const Solution sol = *SolveSuppressed(problem, GetParam());
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  ASSERT_TRUE(sol.factors.has_value());
  ASSERT_TRUE(sol.lower_bound.has_value());
  EXPECT_GE(sol.objective, *sol.lower_bound - 1e-7);
  EXPECT_GE(sol.objective, full.objective - 1e-7);
  EXPECT_LE(sol.max_residual, 1e-6);
  // k(x̂, ŷ | c) = q(x̂ | c) p(ŷ | x̂) exactly.
  const int nx = schema.num_features();
  for (int c = 0; c < schema.num_cells(); ++c) {
    for (int xh = 0; xh < nx; ++xh) {
      for (int yh = 0; yh < 2; ++yh) {
        EXPECT_DOUBLE_EQ(sol.kernel.at(c, xh * 2 + yh),
                         sol.factors->feature_map[c * nx + xh] *
                             sol.factors->outcome_given[xh * 2 + yh]);
      }
    }
  }
  for (size_t i = 1; i < sol.objective_history.size(); ++i) {
    EXPECT_LE(sol.objective_history[i], sol.objective_history[i - 1] + 1e-12);
  }
}

TEST(SuppressedAlternatingTest, NeverWorseThanFixedConditional) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const JointPmf pmf = RandomPmf(MakeSchema(2, {2, 2}), rng);
    DiscriminationSpec spec;
    spec.epsilon = 0.25;
    const Problem problem =
        *Assemble(pmf, spec, OrdinalCost(2.0), Objective::kKl);
    const Solution fixed =
        *SolveSuppressed(problem, SofStrategy::kFixConditional);
    const Solution alt = *SolveSuppressed(problem, SofStrategy::kAlternating);
    if (fixed.status != SolveStatus::kOptimal) continue;
    ASSERT_EQ(alt.status, SolveStatus::kOptimal);
    EXPECT_LE(alt.objective, fixed.objective + 1e-9);
    ASSERT_FALSE(alt.objective_history.empty());
    EXPECT_NEAR(alt.objective_history.front(), fixed.objective, 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Strategies, SuppressedTest,
                         ::testing::Values(SofStrategy::kFixConditional,
                                           SofStrategy::kAlternating));

}  // namespace
}  // namespace fairprep
