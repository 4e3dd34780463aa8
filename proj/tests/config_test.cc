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
#include "fairprep/config.h"

#include <string>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace fairprep {
namespace {

using ::testing::HasSubstr;

constexpr char kConfig[] = R"(
name: small
input:
  paths: [data.csv]
filters:
  - column: age
    range: [18, null]
  - column: group
    not_in: [unknown]
schema:
  - name: group
    role: D
    categories: [a, b]
  - name: age
    role: X
    categories: [young, old]
    ordinal: true
    bins: {edges: [40], labels: [young, old]}
  - name: y
    role: Y
    categories: ['0', '1']
    map: [[no, '0'], [yes, '1']]
discrimination:
  mode: pairwise
  epsilon: 0.1
  overrides:
    - {outcome: '1', group: a, epsilon: 0.2}
distortion:
  combiner: sum_of_squares
  penalties:
    - variable: age
      ordinal: {step: 1, max_jump: 1}
    - variable: y
      matrix: [[0, 1], [1, 0]]
  budget:
    mode: expected
    expected: 0.5
objective: l1
solver: {tol: 1.0e-9, max_iters: 80}
seed: 17
audit: {beta: 0.1}
output: {dir: results}
sweep: {epsilons: [0.05, 0.1, 0.3]}
)";

TEST(ConfigTest, ParsesAllSections) {
  absl::StatusOr<PipelineConfig> c = ParseConfig(kConfig);
  ASSERT_TRUE(c.ok()) << c.status();
  EXPECT_EQ(c->name, "small");
  ASSERT_EQ(c->filters.size(), 2u);
  EXPECT_EQ(c->filters[0].op, RowFilter::Op::kRange);
  EXPECT_EQ(c->filters[0].min, 18.0);
  EXPECT_FALSE(c->filters[0].max.has_value());
  ASSERT_EQ(c->variables.size(), 3u);
  EXPECT_TRUE(c->variables[1].alphabet.ordinal());
  ASSERT_TRUE(c->variables[2].quantizer.has_value());
  EXPECT_EQ(c->variables[2].quantizer->map.size(), 2u);
  EXPECT_EQ(c->discrimination.mode, DiscriminationMode::kPairwiseDistance);
  ASSERT_EQ(c->discrimination.epsilon_overrides.size(), 1u);
  EXPECT_DOUBLE_EQ(c->discrimination.epsilon_overrides[0].value, 0.2);
  ASSERT_TRUE(c->distortion.has_value());
  EXPECT_DOUBLE_EQ(c->distortion->budget.expected, 0.5);
  EXPECT_EQ(c->objective, Objective::kL1);
  EXPECT_DOUBLE_EQ(c->solver.tol, 1e-9);
  EXPECT_EQ(c->solver.max_iters, 80);
  EXPECT_EQ(c->seed, 17u);
  EXPECT_EQ(c->output_dir, "results");
  EXPECT_EQ(c->sweep_grid.size(), 3u);
}

TEST(ConfigTest, RoundTripIsIdentity) {
  absl::StatusOr<PipelineConfig> c = ParseConfig(kConfig);
  ASSERT_TRUE(c.ok()) << c.status();
  const std::string dumped = DumpConfig(*c);
  absl::StatusOr<PipelineConfig> again = ParseConfig(dumped);
  ASSERT_TRUE(again.ok()) << again.status() << "\n" << dumped;
  EXPECT_TRUE(*again == *c) << dumped;
  EXPECT_EQ(DumpConfig(*again), dumped);
}

TEST(ConfigTest, RoundTripKeepsAwkwardDoubles) {
  PipelineConfig c = *ParseConfig(kConfig);
  c.discrimination.epsilon = 0.1 + 0.2;
  c.distortion->budget.expected = 1.0 / 3.0;
  c.solver.tol = 3e-11;
  absl::StatusOr<PipelineConfig> again = ParseConfig(DumpConfig(c));
  ASSERT_TRUE(again.ok()) << again.status();
  EXPECT_EQ(again->discrimination.epsilon, c.discrimination.epsilon);
  EXPECT_EQ(again->distortion->budget.expected, 1.0 / 3.0);
  EXPECT_TRUE(*again == c);
}

TEST(ConfigTest, FingerprintIgnoresSeedAndOutput) {
  PipelineConfig c = *ParseConfig(kConfig);
  const std::string base = ConfigFingerprint(c);
  EXPECT_EQ(base.size(), 64u);
  PipelineConfig other = c;
  other.seed = 99;
  other.output_dir = "elsewhere";
  other.audit.beta = 0.01;
  EXPECT_EQ(ConfigFingerprint(other), base);
  other.discrimination.epsilon = 0.11;
  EXPECT_NE(ConfigFingerprint(other), base);
  other = c;
  other.distortion->budget.expected = 0.25;
  EXPECT_NE(ConfigFingerprint(other), base);
}

std::string Replace(std::string text, const std::string& from,
                    const std::string& to) {
  const size_t at = text.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return text.replace(at, from.size(), to);
}

TEST(ConfigTest, ErrorsNameTheKey) {
  struct Case {
    std::string from, to, expect;
  };
  const Case cases[] = {
      {"objective: l1", "objectiv: l1", "objectiv: unknown key"},
      {"objective: l1", "objective: hinge", "objective"},
      {"epsilon: 0.1\n", "epsilon: lots\n", "discrimination.epsilon"},
      {"expected: 0.5", "expected: -1", "distortion.budget"},
      {"role: D", "role: Q", "schema[0].role"},
      {"range: [18, null]", "range: [18]", "filters[0].range"},
      {"tol: 1.0e-9", "tol: 0", "solver.tol"},
      {"[0.05, 0.1, 0.3]", "[0.3, 0.1]", "sweep.epsilons"},
      {"matrix: [[0, 1], [1, 0]]", "matrix: [[1, 1], [1, 0]]", "zero diagonal"},
      {"name: y\n", "name: age\n", "schema"},
  };
  for (const Case& c : cases) {
    absl::StatusOr<PipelineConfig> r =
        ParseConfig(Replace(kConfig, c.from, c.to));
    ASSERT_FALSE(r.ok()) << c.to;
    EXPECT_EQ(r.status().code(), absl::StatusCode::kInvalidArgument);
    EXPECT_THAT(std::string(r.status().message()), HasSubstr(c.expect)) << c.to;
  }
}

TEST(ConfigTest, MalformedYamlIsAConfigError) {
  absl::StatusOr<PipelineConfig> r = ParseConfig("input: [unclosed");
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(std::string(r.status().message()), HasSubstr("YAML"));
}

TEST(ConfigTest, SchemaComesFromVariables) {
  PipelineConfig c = *ParseConfig(kConfig);
  absl::StatusOr<Schema> s = ConfigSchema(c);
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s->num_groups(), 2);
  EXPECT_EQ(s->num_features(), 2);
}

}  // namespace
}  // namespace fairprep
