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
#include "fairprep/kernels.h"

#include <omp.h>

#include <array>
#include <random>

namespace fairprep {

double StreamUniform(uint64_t seed, uint64_t index) {
  std::seed_seq seq{
      static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
      static_cast<uint32_t>(index), static_cast<uint32_t>(index >> 32)};
  // Eight output words get three mixing rounds; the last two are used.
  std::array<uint32_t, 8> words;
  seq.generate(words.begin(), words.end());
  const uint64_t bits = (static_cast<uint64_t>(words[6]) << 32) | words[7];
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

int InverseCdf(std::span<const double> probs, double u) {
  double cumulative = 0;
  int last_positive = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0) continue;
    last_positive = static_cast<int>(i);
    cumulative += probs[i];
    if (u < cumulative) return last_positive;
  }
  // Rounding left the total slightly below 1.
  return last_positive;
}

namespace parallel {

void NormalMatrix(const RowSparse& a_rows, const ColSparse& a_cols,
                  const Eigen::VectorXd& d, Eigen::MatrixXd* out) {
  const int m = static_cast<int>(a_rows.rows());
  out->setZero(m, m);
  // Each thread owns whole rows of the output, so the per-entry summation
  // order is fixed.
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < m; ++i) {
    for (RowSparse::InnerIterator ik(a_rows, i); ik; ++ik) {
      const int k = static_cast<int>(ik.col());
      const double scaled = ik.value() * d[k];
      for (ColSparse::InnerIterator jk(a_cols, k); jk; ++jk) {
        (*out)(i, jk.row()) += scaled * jk.value();
      }
    }
  }
}

void Pushforward(std::span<const double> mass, std::span<const double> kernel,
                 int cells_per_group, int num_outputs, std::span<double> out) {
  const int num_groups =
      static_cast<int>(mass.size()) / std::max(cells_per_group, 1);
  const int64_t total = static_cast<int64_t>(num_groups) * num_outputs;
#pragma omp parallel for schedule(static)
  for (int64_t go = 0; go < total; ++go) {
    const int64_t g = go / num_outputs;
    const int64_t o = go % num_outputs;
    double sum = 0;
    for (int64_t c = g * cells_per_group; c < (g + 1) * cells_per_group; ++c) {
      sum += mass[c] * kernel[c * num_outputs + o];
    }
    out[go] = sum;
  }
}

void SampleRows(std::span<const double> table, int row_size,
                std::span<const int> rows, uint64_t seed, uint64_t first_index,
                std::span<int> out) {
  const int64_t n = static_cast<int64_t>(rows.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const double u = StreamUniform(seed, first_index + i);
    out[i] = InverseCdf(
        table.subspan(static_cast<size_t>(rows[i]) * row_size, row_size), u);
  }
}

}  // namespace parallel

namespace serial {

void NormalMatrix(const RowSparse& a_rows, const ColSparse& a_cols,
                  const Eigen::VectorXd& d, Eigen::MatrixXd* out) {
  const int m = static_cast<int>(a_rows.rows());
  out->setZero(m, m);
  // Column outer products: sum_k d_k a_k a_k^T.
  for (int k = 0; k < a_cols.outerSize(); ++k) {
    for (ColSparse::InnerIterator ik(a_cols, k); ik; ++ik) {
      const double scaled = ik.value() * d[k];
      for (ColSparse::InnerIterator jk(a_cols, k); jk; ++jk) {
        (*out)(ik.row(), jk.row()) += scaled * jk.value();
      }
    }
  }
}

void Pushforward(std::span<const double> mass, std::span<const double> kernel,
                 int cells_per_group, int num_outputs, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (size_t c = 0; c < mass.size(); ++c) {
    const size_t g = c / cells_per_group;
    for (int o = 0; o < num_outputs; ++o) {
      out[g * num_outputs + o] += mass[c] * kernel[c * num_outputs + o];
    }
  }
}

void SampleRows(std::span<const double> table, int row_size,
                std::span<const int> rows, uint64_t seed, uint64_t first_index,
                std::span<int> out) {
  for (size_t i = 0; i < rows.size(); ++i) {
    out[i] = InverseCdf(
        table.subspan(static_cast<size_t>(rows[i]) * row_size, row_size),
        StreamUniform(seed, first_index + i));
  }
}

}  // namespace serial
}  // namespace fairprep
