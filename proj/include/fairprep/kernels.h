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
// Hot loops with an OpenMP implementation and a plain serial reference.
// Both produce the same values up to floating-point summation order; the
// parallel versions are deterministic for any thread count.

#ifndef FAIRPREP_KERNELS_H_
#define FAIRPREP_KERNELS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "Eigen/Core"
#include "Eigen/SparseCore"

namespace fairprep {

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using ColSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// Per-record uniform draw in [0, 1) from the stream keyed by (seed, index).
double StreamUniform(uint64_t seed, uint64_t index);

// Index into `probs` chosen by inverse CDF at u. Trailing zero-probability
// entries are never chosen.
int InverseCdf(std::span<const double> probs, double u);

namespace parallel {

// A * diag(d) * A^T, dense. `a_cols` is the same matrix as `a_rows` in
// column-major storage.
void NormalMatrix(const RowSparse& a_rows, const ColSparse& a_cols,
                  const Eigen::VectorXd& d, Eigen::MatrixXd* out);

// out[g * num_outputs + o] = sum over the cells c of group g of
// mass[c] * kernel[c * num_outputs + o], with cells_per_group consecutive
// cells per group.
void Pushforward(std::span<const double> mass, std::span<const double> kernel,
                 int cells_per_group, int num_outputs, std::span<double> out);

// For record i, draws an entry of the row rows[i] of a row-major
// (num_rows x row_size) table from stream (seed, first_index + i).
void SampleRows(std::span<const double> table, int row_size,
                std::span<const int> rows, uint64_t seed, uint64_t first_index,
                std::span<int> out);

}  // namespace parallel

namespace serial {

void NormalMatrix(const RowSparse& a_rows, const ColSparse& a_cols,
                  const Eigen::VectorXd& d, Eigen::MatrixXd* out);
void Pushforward(std::span<const double> mass, std::span<const double> kernel,
                 int cells_per_group, int num_outputs, std::span<double> out);
void SampleRows(std::span<const double> table, int row_size,
                std::span<const int> rows, uint64_t seed, uint64_t first_index,
                std::span<int> out);

}  // namespace serial
}  // namespace fairprep

#endif  // FAIRPREP_KERNELS_H_
