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
#include "fairprep/audit.h"

#include <cmath>
#include <random>

#include "fairprep/transform.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace fairprep {
namespace {

using ::fairprep::testing::MakeSchema;
using ::fairprep::testing::RandomMass;
using ::fairprep::testing::RandomPmf;
using V = std::vector<double>;

// Best deterministic estimator of D from Y by enumeration.
double BruteForceMap(const std::vector<double>& joint, int groups,
                     int outcomes) {
  int estimators = 1;
  for (int y = 0; y < outcomes; ++y) estimators *= groups;
  double best = 0;
  for (int e = 0; e < estimators; ++e) {
    int code = e;
    double correct = 0;
    for (int y = 0; y < outcomes; ++y) {
      const int guess = code % groups;
      code /= groups;
      correct += joint[guess * outcomes + y];
    }
    best = std::max(best, correct);
  }
  return best;
}

TEST(DiscriminationAuditTest, IndependentJointHasZeroJ) {
  const Schema schema = MakeSchema(3, {1});
  const std::vector<double> joint = {0.06, 0.14, 0.15, 0.35, 0.09, 0.21};
  DiscriminationSpec spec;
  const DiscriminationReport r =
      *AuditDiscrimination(schema, joint, V{0.3, 0.7}, spec);
  EXPECT_NEAR(r.max_target_j, 0, 1e-14);
  EXPECT_NEAR(r.max_pairwise_j, 0, 1e-14);
  EXPECT_EQ(r.target_j.size(), 6u);
  EXPECT_EQ(r.pairwise_j.size(), 12u);
  EXPECT_LE(r.max_excess, 1e-14);
}

TEST(DiscriminationAuditTest, ValuesAndExcess) {
  const Schema schema = MakeSchema(2, {1});
  // p(Y=1|g0) = 0.6, p(Y=1|g1) = 0.4.
  const std::vector<double> joint = {0.2, 0.3, 0.3, 0.2};
  DiscriminationSpec spec;
  spec.epsilon = 0.1;
  const DiscriminationReport r =
      *AuditDiscrimination(schema, joint, V{0.5, 0.5}, spec);
  EXPECT_NEAR(r.max_target_j, 0.2, 1e-12);
  EXPECT_NEAR(r.max_pairwise_j, 0.5, 1e-12);  // 0.6 / 0.4 - 1
  EXPECT_NEAR(r.max_excess, 0.1, 1e-12);
  spec.mode = DiscriminationMode::kPairwiseDistance;
  const DiscriminationReport p =
      *AuditDiscrimination(schema, joint, V{0.5, 0.5}, spec);
  EXPECT_NEAR(p.max_excess, 0.4, 1e-12);
  EXPECT_FALSE(AuditDiscrimination(schema, joint, V{1, 0}, spec).ok());
}

TEST(MapAdvantageTest, Examples) {
  const AdvantageReport indep = *MapAdvantage(V{0.12, 0.28, 0.18, 0.42}, 2, 2);
  EXPECT_NEAR(indep.map_probability, 0.6, 1e-15);
  EXPECT_NEAR(indep.advantage, 1.0, 1e-15);
  const AdvantageReport equal = *MapAdvantage(V{0.5, 0, 0, 0.5}, 2, 2);
  EXPECT_EQ(equal.map_probability, 1.0);
  EXPECT_EQ(equal.advantage, 2.0);
  const AdvantageReport derived = *MapAdvantage(V{0.4, 0.1, 0.2, 0.3}, 2, 2);
  EXPECT_NEAR(derived.map_probability, 0.7, 1e-15);
  EXPECT_NEAR(derived.advantage, 1.4, 1e-15);
  EXPECT_FALSE(MapAdvantage(V{0.5, 0.4}, 1, 2).ok());
}

TEST(MapAdvantageTest, MatchesEstimatorEnumeration) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const int groups = 1 + rng() % 4;
    const int outcomes = 1 + rng() % (12 / groups);
    std::vector<double> joint = RandomMass(groups * outcomes, rng, 0.5);
    const AdvantageReport r = *MapAdvantage(joint, groups, outcomes);
    EXPECT_DOUBLE_EQ(r.map_probability, BruteForceMap(joint, groups, outcomes));
    EXPECT_GE(r.map_probability, r.blind_probability - 1e-15);
    EXPECT_GE(r.advantage, 1 - 1e-15);
  }
}

TEST(EstimationVerdictTest, IdentityOutcomeWitness) {
  const std::vector<double> joint = {0.5, 0, 0, 0.5};
  const AdvantageReport adv = *MapAdvantage(joint, 2, 2);
  const EstimationVerdict v =
      *CheckEstimationDiscrimination(adv, 0.5, joint, V{0.5, 0.5});
  EXPECT_FALSE(v.advantage_within);
  ASSERT_TRUE(v.witness.has_value());
  EXPECT_EQ(v.witness->j, 1.0);
  EXPECT_TRUE(v.consistent);
  const std::vector<double> indep = {0.25, 0.25, 0.25, 0.25};
  const EstimationVerdict z = *CheckEstimationDiscrimination(
      *MapAdvantage(indep, 2, 2), 0, indep, V{0.5, 0.5});
  EXPECT_TRUE(z.all_within);
  EXPECT_EQ(z.advantage, 1.0);
  EXPECT_TRUE(z.consistent);
}

TEST(EstimationVerdictTest, ImplicationHoldsOnRandomJoints) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  int within = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::vector<double> joint = RandomMass(6, rng, 5.0);
    const double t1 = 0.2 + 0.6 * u(rng);
    const AdvantageReport adv = *MapAdvantage(joint, 3, 2);
    const EstimationVerdict v =
        *CheckEstimationDiscrimination(adv, u(rng) * 0.5, joint, V{1 - t1, t1});
    EXPECT_TRUE(v.consistent);
    within += v.all_within;
  }
  EXPECT_GT(within, 100);
}

TEST(RobustnessTest, FrozenValues) {
  // High-precision evaluations at beta 0.05, m 8, c_m 0.1, eps 0.1, mu 0.02.
  struct Row {
    int64_t n;
    double tau, h, eps_drift, mu_drift;
  };
  const Row rows[] = {
      {1000, 0.049685987529165815, 1.2208929624971120, 2.7292350876896402,
       1.2809328296675069},
      {10000, 0.0068049320357289280, 0.45182735759565051, 0.72829874002770161,
       0.48664528835436204},
      {100000, 0.00086464243634278496, 0.16105673872981394, 0.29222678292157046,
       0.18633868450534626},
  };
  double previous_h = 1e9;
  for (const Row& row : rows) {
    const RobustnessBound b =
        *RobustnessBounds({row.n, 0.05, 8, 0.1, 0.1, 0.02});
    EXPECT_NEAR(b.tau, row.tau, 1e-15 + 1e-13 * row.tau);
    EXPECT_NEAR(b.h, row.h, 1e-13);
    EXPECT_NEAR(b.epsilon_drift, row.eps_drift, 1e-12);
    EXPECT_NEAR(b.mu_drift, row.mu_drift, 1e-12);
    EXPECT_LT(b.h, previous_h);
    previous_h = b.h;
    EXPECT_TRUE(b.linearization_loose);
  }
}

TEST(RobustnessTest, LargeSampleLimit) {
  const RobustnessBound b =
      *RobustnessBounds({int64_t{1} << 50, 0.05, 8, 0.1, 0.1, 0.02});
  EXPECT_LT(b.tau, 1e-12);
  EXPECT_NEAR(b.epsilon_drift, 0.1, 1e-5);
  EXPECT_NEAR(b.mu_drift, 0.02, 1e-5);
  EXPECT_FALSE(b.linearization_loose);
  EXPECT_FALSE(RobustnessBounds({0, 0.05, 8, 0.1, 0.1, 0.02}).ok());
  EXPECT_FALSE(RobustnessBounds({10, 1.0, 8, 0.1, 0.1, 0.02}).ok());
  EXPECT_FALSE(RobustnessBounds({10, 0.05, 1, 0.1, 0.1, 0.02}).ok());
}

TEST(RobustnessTest, ValidityFlag) {
  const std::vector<double> joint = {0.2, 0.3, 0.3, 0.2};
  const double limit = RobustnessTauLimit(joint);
  EXPECT_NEAR(limit, 0.3 * 0.4 / (3 * 1.6 * 1.6), 1e-15);
  RobustnessParams p{1000, 0.05, 8, 0.2, 0.1, 0.0, limit};
  EXPECT_FALSE(RobustnessBounds(p)->valid);
  p.n = 100000000;
  EXPECT_TRUE(RobustnessBounds(p)->valid);
}

TEST(RatioDriftBoundsTest, Examples) {
  const RatioInterval zero = *RatioDriftBounds(0, 0.2, 0.5, 2);
  EXPECT_EQ(zero.lower, 0.5);
  EXPECT_EQ(zero.upper, 2);
  EXPECT_NEAR(RatioDriftBounds(0.03, 0.1, 1, 1)->g, 0.94868329805051380, 1e-15);
  EXPECT_FALSE(RatioDriftBounds(-1, 0.1, 1, 1).ok());
}

TEST(RatioDriftBoundsTest, RejectionSampledPmfsStayInside) {
  std::mt19937_64 rng(3);
  const std::vector<double> p = {0.3, 0.25, 0.2, 0.15, 0.1};
  const double c1 = RatioTauLimit(p);
  const double tau = c1;
  int accepted = 0;
  while (accepted < 1000) {
    // Perturb p by a small Dirichlet step.
    std::vector<double> q = RandomMass(5, rng, 1.0);
    const double w = std::uniform_real_distribution<double>(0, 0.05)(rng);
    for (int i = 0; i < 5; ++i) q[i] = (1 - w) * p[i] + w * q[i];
    if (*KlDivergence(p, q) > tau) continue;
    ++accepted;
    // With r = p, γ1 = γ2 = 1.
    const RatioInterval iv = *RatioDriftBounds(tau, 0.1, 1, 1);
    for (int i = 0; i < 5; ++i) {
      EXPECT_GE(q[i] / p[i], iv.lower);
      EXPECT_LE(q[i] / p[i], iv.upper);
    }
  }
}

TEST(DistortionAuditTest, IdentityIsZero) {
  const Schema schema = MakeSchema(2, {3});
  DistortionMetric m;
  m.penalties = {{"Y", AttributePenalty::Kind::kMatrix, {{0, 1}, {1, 0}}}};
  const DistortionTable table = *DistortionTable::Build(m, schema);
  std::vector<Record> records;
  for (int i = 0; i < 60; ++i) records.push_back({i % 2, i % 3, i % 2});
  const Dataset data = *Dataset::Create(schema, records);
  const DistortionSummary s =
      *AuditDistortion(data, data, table, std::vector<double>{0.5});
  EXPECT_EQ(s.mean, 0);
  EXPECT_EQ(s.max, 0);
  EXPECT_EQ(s.exceedance[0], 0);
  EXPECT_EQ(s.count, 60);
  const Dataset shorter = *Dataset::Create(schema, {records[0]});
  EXPECT_FALSE(AuditDistortion(data, shorter, table, {}).ok());
}

TEST(DistortionAuditTest, EmpiricalMeanTracksAnalytic) {
  const Schema schema = MakeSchema(2, {3});
  std::mt19937_64 rng(4);
  const JointPmf pmf = RandomPmf(schema, rng);
  DistortionMetric m;
  m.combiner = Combiner::kSum;
  m.penalties = {{"Y", AttributePenalty::Kind::kMatrix, {{0, 1}, {2, 0}}},
                 {"X0", AttributePenalty::Kind::kOrdinal, {}, 1.0}};
  const DistortionTable table = *DistortionTable::Build(m, schema);
  std::vector<double> probs;
  for (int c = 0; c < schema.num_cells(); ++c) {
    for (double v : RandomMass(6, rng)) probs.push_back(v);
  }
  const TransformKernel k = *TransformKernel::Create(schema, probs);
  std::discrete_distribution<int> pick(pmf.mass().begin(), pmf.mass().end());
  std::vector<Record> records(50000);
  for (Record& r : records) {
    const int c = pick(rng);
    r = {c / 6, (c / 2) % 3, c % 2};
  }
  const Dataset data = *Dataset::Create(schema, records);
  const Dataset out = *TransformTrain(data, k, {8});
  const std::vector<double> thresholds = {0.5, 1.5};
  const DistortionSummary emp = *AuditDistortion(data, out, table, thresholds);
  const DistortionSummary ana =
      *AnalyticDistortion(*EstimateEmpirical(data), k, table, thresholds);
  ASSERT_EQ(emp.cells.size(), ana.cells.size());
  for (size_t i = 0; i < emp.cells.size(); ++i) {
    const double n = emp.cells[i].count;
    // δ is at most 3 here, so Var <= 9 / 4.
    EXPECT_NEAR(emp.cells[i].mean, ana.cells[i].mean, 3 * 1.5 / std::sqrt(n));
  }
  EXPECT_NEAR(emp.mean, ana.mean, 0.05);
}

TEST(CohortDeltaTest, IdentityGivesZeroAndFilters) {
  const Schema schema = MakeSchema(2, {2});
  const JointPmf pmf = *JointPmf::FromMass(
      schema, {0.3, 0.2, 0.005, 0.005, 0.2, 0.1, 0.1, 0.09}, 1000);
  const JointPmf after =
      *PushforwardJoint(pmf, TransformKernel::Identity(schema));
  const auto rows = *CohortDeltas(pmf, after);
  ASSERT_EQ(rows.size(), 4u);
  for (const CohortDelta& c : rows) EXPECT_NEAR(c.delta, 0, 1e-15);
  EXPECT_TRUE(rows[0].shown);
  EXPECT_FALSE(rows[1].shown);  // 10 samples
  EXPECT_NEAR(rows[0].before, 0.4, 1e-15);
}

}  // namespace
}  // namespace fairprep
