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
#ifndef FAIRPREP_TESTS_TEST_UTIL_H_
#define FAIRPREP_TESTS_TEST_UTIL_H_

#include <random>
#include <string>
#include <vector>

#include "fairprep/domain.h"

namespace fairprep::testing {

// Schema with one D variable "D" of `groups` categories (g0, g1, ...), one
// ordinal X variable per entry of `feature_sizes` (X0, X1, ... with labels
// a0, a1, ...) and Y = {0, 1}.
inline Schema MakeSchema(int groups, const std::vector<int>& feature_sizes) {
  std::vector<Variable> vars;
  std::vector<std::string> g;
  for (int i = 0; i < groups; ++i) g.push_back("g" + std::to_string(i));
  vars.push_back({*Alphabet::Create("D", g), Role::kProtected, "", {}});
  for (size_t f = 0; f < feature_sizes.size(); ++f) {
    std::vector<std::string> labels;
    for (int i = 0; i < feature_sizes[f]; ++i) {
      labels.push_back("a" + std::to_string(i));
    }
    vars.push_back({*Alphabet::Create("X" + std::to_string(f), labels, true),
                    Role::kFeature,
                    "",
                    {}});
  }
  vars.push_back(
      {*Alphabet::Create("Y", {"0", "1"}, true), Role::kOutcome, "", {}});
  return *Schema::Create(vars);
}

// Dirichlet(alpha) mass over all cells.
inline std::vector<double> RandomMass(int size, std::mt19937_64& rng,
                                      double alpha = 1.0) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> mass(size);
  double total = 0;
  for (double& m : mass) {
    m = gamma(rng) + 1e-12;
    total += m;
  }
  for (double& m : mass) m /= total;
  return mass;
}

inline JointPmf RandomPmf(const Schema& schema, std::mt19937_64& rng,
                          double alpha = 1.0) {
  return *JointPmf::FromMass(schema,
                             RandomMass(schema.num_cells(), rng, alpha));
}

}  // namespace fairprep::testing

#endif  // FAIRPREP_TESTS_TEST_UTIL_H_
