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
#include "fairprep/interior_point.h"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"

namespace fairprep {
namespace {

RowSparse Dense(int rows, int cols, const std::vector<double>& values) {
  RowSparse a(rows, cols);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (values[i * cols + j] != 0) t.emplace_back(i, j, values[i * cols + j]);
    }
  }
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

TEST(InteriorPointTest, SmallLinearProgram) {
  // min -x1 - 2 x2  s.t. x1 + x2 + s1 = 4, x2 + s2 = 3.  Optimum (1, 3).
  SeparableProgram p;
  p.a = Dense(2, 4, {1, 1, 1, 0, 0, 1, 0, 1});
  p.b = Eigen::Vector2d(4, 3);
  p.c = Eigen::Vector4d(-1, -2, 0, 0);
  p.q = Eigen::VectorXd::Zero(4);
  p.w = Eigen::VectorXd::Zero(4);
  const IpmResult r = SolveSeparable(p, {});
  ASSERT_EQ(r.status, IpmStatus::kConverged);
  EXPECT_NEAR(r.x[0], 1, 1e-7);
  EXPECT_NEAR(r.x[1], 3, 1e-7);
  EXPECT_LT(r.iterations, 40);
}

TEST(InteriorPointTest, LogObjectiveMatchesClosedForm) {
  // min -sum w_j log x_j on the simplex: x = w / sum(w).
  SeparableProgram p;
  p.a = Dense(1, 3, {1, 1, 1});
  p.b = Eigen::VectorXd::Ones(1);
  p.c = Eigen::VectorXd::Zero(3);
  p.q = Eigen::VectorXd::Zero(3);
  p.w = Eigen::Vector3d(0.2, 0.3, 0.5);
  const IpmResult r = SolveSeparable(p, {});
  ASSERT_EQ(r.status, IpmStatus::kConverged);
  EXPECT_NEAR(r.x[0], 0.2, 1e-8);
  EXPECT_NEAR(r.x[2], 0.5, 1e-8);
}

TEST(InteriorPointTest, QuadraticTermBreaksTies) {
  // min x1 + x2 + q/2 (x1^2 + x2^2) s.t. x1 + x2 = 1: the tie resolves to 1/2.
  SeparableProgram p;
  p.a = Dense(1, 2, {1, 1});
  p.b = Eigen::VectorXd::Ones(1);
  p.c = Eigen::Vector2d(1, 1);
  p.q = Eigen::Vector2d(1e-3, 1e-3);
  p.w = Eigen::VectorXd::Zero(2);
  const IpmResult r = SolveSeparable(p, {});
  ASSERT_EQ(r.status, IpmStatus::kConverged);
  EXPECT_NEAR(r.x[0], 0.5, 1e-6);
}

TEST(InteriorPointTest, SerialAndParallelAgree) {
  SeparableProgram p;
  p.a = Dense(2, 4, {1, 1, 1, 0, 0, 1, 0, 1});
  p.b = Eigen::Vector2d(4, 3);
  p.c = Eigen::Vector4d(-1, -2, 0, 0);
  p.q = Eigen::VectorXd::Constant(4, 1e-9);
  p.w = Eigen::VectorXd::Zero(4);
  IpmOptions serial;
  serial.parallel = false;
  const IpmResult a = SolveSeparable(p, {});
  const IpmResult b = SolveSeparable(p, serial);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_NEAR((a.x - b.x).cwiseAbs().maxCoeff(), 0, 1e-12);
}

}  // namespace
}  // namespace fairprep
