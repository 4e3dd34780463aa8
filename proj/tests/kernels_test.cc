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

#include <random>

#include "fairprep/transform_kernel.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace fairprep {
namespace {

using ::fairprep::testing::MakeSchema;
using ::fairprep::testing::RandomMass;

RowSparse RandomSparse(int rows, int cols, std::mt19937_64& rng) {
  std::vector<Eigen::Triplet<double>> t;
  std::uniform_real_distribution<double> u(-1, 1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (rng() % 3 == 0) t.emplace_back(r, c, u(rng));
    }
  }
  RowSparse a(rows, cols);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

TEST(KernelsTest, NormalMatrixSerialMatchesParallel) {
  std::mt19937_64 rng(1);
  const RowSparse a = RandomSparse(40, 90, rng);
  const ColSparse ac = a;
  Eigen::VectorXd d = Eigen::VectorXd::Random(90).cwiseAbs();
  Eigen::MatrixXd p, s;
  parallel::NormalMatrix(a, ac, d, &p);
  serial::NormalMatrix(a, ac, d, &s);
  const Eigen::MatrixXd dense =
      Eigen::MatrixXd(a) * d.asDiagonal() * Eigen::MatrixXd(a).transpose();
  EXPECT_LE((p - s).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((p - dense).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KernelsTest, PushforwardSerialMatchesParallel) {
  std::mt19937_64 rng(2);
  const int cells = 60, outputs = 10;
  const std::vector<double> mass = RandomMass(cells, rng);
  std::vector<double> kernel;
  for (int c = 0; c < cells; ++c) {
    for (double v : RandomMass(outputs, rng)) kernel.push_back(v);
  }
  std::vector<double> p(outputs), s(outputs);
  parallel::Pushforward(mass, kernel, cells, outputs, p);
  serial::Pushforward(mass, kernel, cells, outputs, s);
  double total = 0;
  for (int o = 0; o < outputs; ++o) {
    EXPECT_NEAR(p[o], s[o], 1e-14);
    total += p[o];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(KernelsTest, SamplingIsReproducibleAndOrderIndependent) {
  std::mt19937_64 rng(3);
  const int rows = 5, size = 6;
  std::vector<double> table;
  for (int r = 0; r < rows; ++r) {
    for (double v : RandomMass(size, rng)) table.push_back(v);
  }
  std::vector<int> which(5000);
  for (int& w : which) w = static_cast<int>(rng() % rows);
  std::vector<int> p(which.size()), s(which.size());
  parallel::SampleRows(table, size, which, 42, 0, p);
  serial::SampleRows(table, size, which, 42, 0, s);
  EXPECT_EQ(p, s);
  // A record's draw depends only on (seed, its index).
  std::vector<int> tail(100);
  serial::SampleRows(table, size,
                     std::span<const int>(which).subspan(4900, 100), 42, 4900,
                     tail);
  EXPECT_TRUE(std::equal(tail.begin(), tail.end(), s.begin() + 4900));
  std::vector<int> other(which.size());
  serial::SampleRows(table, size, which, 43, 0, other);
  EXPECT_NE(other, s);
}

TEST(KernelsTest, SampleFrequenciesMatchProbabilities) {
  const std::vector<double> table = {0.1, 0.2, 0.7};
  std::vector<int> rows(200000, 0), out(rows.size());
  parallel::SampleRows(table, 3, rows, 7, 0, out);
  std::vector<double> freq(3, 0);
  for (int o : out) freq[o] += 1.0 / out.size();
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(freq[i], table[i], 0.004);
}

TEST(KernelsTest, InverseCdfEdges) {
  const std::vector<double> probs = {0.0, 0.5, 0.0, 0.5};
  EXPECT_EQ(InverseCdf(probs, 0.0), 1);
  EXPECT_EQ(InverseCdf(probs, 0.49), 1);
  EXPECT_EQ(InverseCdf(probs, 0.5), 3);
  EXPECT_EQ(InverseCdf(probs, 0.999999), 3);
}

TEST(TransformKernelTest, SerializationRoundTrips) {
  const Schema schema = MakeSchema(2, {3});
  std::mt19937_64 rng(4);
  std::vector<double> probs;
  for (int c = 0; c < schema.num_cells(); ++c) {
    for (double v : RandomMass(schema.num_outputs(), rng, 0.3)) {
      probs.push_back(v);
    }
  }
  TransformKernel k = *TransformKernel::Create(schema, probs);
  k.set_provenance("fingerprint", "abc");
  k.set_provenance("epsilon", "0.1");
  const std::string text = SerializeKernel(k);
  const TransformKernel back = *ParseKernel(schema, text);
  EXPECT_TRUE(std::ranges::equal(back.probs(), k.probs()));
  EXPECT_EQ(back.provenance(), k.provenance());
  EXPECT_EQ(SerializeKernel(back), text);
}

TEST(TransformKernelTest, RejectsBadRows) {
  const Schema schema = MakeSchema(1, {1});
  EXPECT_FALSE(TransformKernel::Create(schema, {0.5, 0.4, 0, 1}).ok());
  EXPECT_FALSE(TransformKernel::Create(schema, {1.1, -0.1, 0, 1}).ok());
  EXPECT_FALSE(TransformKernel::Create(schema, {1, 0}).ok());
  EXPECT_FALSE(
      ParseKernel(schema, "d,x,y,x_hat,y_hat,prob\ng9,a0,0,a0,0,1\n").ok());
}

}  // namespace
}  // namespace fairprep
