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
// Primal-dual interior-point method for separable convex programs
//
//   minimize    sum_j c_j x_j + q_j x_j^2 / 2 - w_j log x_j
//   subject to  A x = b,  x >= 0
//
// with q, w >= 0. Newton systems are reduced to the normal equations
// A D A^T and factored densely.

#ifndef FAIRPREP_INTERIOR_POINT_H_
#define FAIRPREP_INTERIOR_POINT_H_

#include "Eigen/Core"
#include "fairprep/kernels.h"

namespace fairprep {

struct SeparableProgram {
  RowSparse a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  Eigen::VectorXd q;
  Eigen::VectorXd w;
  // Strictly positive starting point; empty means all ones.
  Eigen::VectorXd x0;
};

struct IpmOptions {
  double primal_tol = 1e-9;  // max |A x - b|
  double dual_tol = 1e-9;    // max |grad - A^T y - s|
  double gap_tol = 1e-9;     // x^T s
  int max_iters = 500;
  bool parallel = true;
};

enum class IpmStatus { kConverged, kIterationLimit, kNumericalBreakdown };

struct IpmResult {
  IpmStatus status = IpmStatus::kIterationLimit;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd s;
  int iterations = 0;
  double primal_residual = 0;
  double dual_residual = 0;
  double gap = 0;
};

IpmResult SolveSeparable(const SeparableProgram& program,
                         const IpmOptions& options);

}  // namespace fairprep

#endif  // FAIRPREP_INTERIOR_POINT_H_
