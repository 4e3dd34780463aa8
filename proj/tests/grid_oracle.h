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
// Brute-force oracle for small kernel programs with two free input cells.
// Every other cell keeps its value; the free cells may only flip y, each
// with its own expected-distortion budget, so the kernel is a point (t1, t2)
// in a box and the optimum can be found by exhaustive grid search with
// constraints evaluated directly from their definitions.

#ifndef FAIRPREP_TESTS_GRID_ORACLE_H_
#define FAIRPREP_TESTS_GRID_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fairprep/constraints.h"
#include "fairprep/distortion.h"
#include "fairprep/domain.h"
#include "fairprep/optimizer.h"
#include "test_util.h"

namespace fairprep::testing {

struct GridInstance {
  JointPmf pmf;
  DiscriminationMode mode = DiscriminationMode::kTargetDistance;
  double epsilon = 0.1;
  std::vector<double> target;  // p_T over Y
  bool target_is_py = false;
  int free_cell[2] = {0, 0};
  double budget[2] = {0, 0};
  Objective objective = Objective::kL1;
};

inline GridInstance RandomGridInstance(std::mt19937_64& rng,
                                       Objective objective) {
  std::uniform_real_distribution<double> u(0, 1);
  const int nx = 1 + static_cast<int>(rng() % 2);
  const Schema schema = MakeSchema(2, {nx});
  GridInstance inst{RandomPmf(schema, rng, 2.0)};
  inst.objective = objective;
  inst.mode = rng() % 2 == 0 ? DiscriminationMode::kTargetDistance
                             : DiscriminationMode::kPairwiseDistance;
  inst.epsilon = 0.05 + 0.45 * u(rng);
  inst.target_is_py = rng() % 2 == 0;
  if (inst.target_is_py) {
    inst.target = inst.pmf.OutcomeMarginal();
  } else {
    const double t1 = 0.1 + 0.8 * u(rng);
    inst.target = {1 - t1, t1};
  }
  inst.free_cell[0] = static_cast<int>(rng() % schema.num_cells());
  do {
    inst.free_cell[1] = static_cast<int>(rng() % schema.num_cells());
  } while (inst.free_cell[1] == inst.free_cell[0]);
  inst.budget[0] = u(rng);
  inst.budget[1] = u(rng);
  return inst;
}

inline DiscriminationSpec GridDiscrimination(const GridInstance& inst) {
  DiscriminationSpec spec;
  spec.mode = inst.mode;
  spec.epsilon = inst.epsilon;
  if (inst.mode == DiscriminationMode::kTargetDistance && !inst.target_is_py) {
    spec.target = inst.target;
  }
  return spec;
}

inline DistortionControl GridDistortion(const GridInstance& inst) {
  const Schema& schema = inst.pmf.schema();
  DistortionControl control;
  control.metric.combiner = Combiner::kSum;
  control.metric.penalties = {
      {"Y", AttributePenalty::Kind::kMatrix, {{0, 1}, {1, 0}}}};
  control.budget.expected = 0;
  for (int i = 0; i < 2; ++i) {
    const int cell = inst.free_cell[i];
    const int y = cell % 2;
    const int x = (cell / 2) % schema.num_features();
    const int d = cell / 2 / schema.num_features();
    control.budget.overrides.push_back({schema.GroupLabel(d),
                                        schema.FeatureLabel(x),
                                        schema.OutcomeLabel(y),
                                        {inst.budget[i]}});
  }
  return control;
}

// Objective at (t1, t2), or nullopt when a constraint fails by more than
// `slack`.
inline std::optional<double> GridEvaluate(const GridInstance& inst, double t1,
                                          double t2, double slack) {
  const Schema& schema = inst.pmf.schema();
  const int nx = schema.num_features();
  std::vector<double> flip(schema.num_cells(), 0.0);
  flip[inst.free_cell[0]] = t1;
  flip[inst.free_cell[1]] = t2;
  double pd[2] = {0, 0};
  double rate[2][2] = {{0, 0}, {0, 0}};  // unnormalized p(d, ŷ)
  std::vector<double> image(nx * 2, 0.0), source(nx * 2, 0.0);
  for (int d = 0; d < 2; ++d) {
    for (int x = 0; x < nx; ++x) {
      for (int y = 0; y < 2; ++y) {
        const double p = inst.pmf.at(d, x, y);
        const double f = flip[schema.CellIndex(d, x, y)];
        pd[d] += p;
        rate[d][y] += p * (1 - f);
        rate[d][1 - y] += p * f;
        image[x * 2 + y] += p * (1 - f);
        image[x * 2 + 1 - y] += p * f;
        source[x * 2 + y] += p;
      }
    }
  }
  for (int y = 0; y < 2; ++y) {
    const double r0 = rate[0][y] / pd[0], r1 = rate[1][y] / pd[1];
    if (inst.mode == DiscriminationMode::kTargetDistance) {
      for (double r : {r0, r1}) {
        if (std::abs(r / inst.target[y] - 1) > inst.epsilon + slack) {
          return std::nullopt;
        }
      }
    } else {
      if (r0 > (1 + inst.epsilon) * r1 + slack ||
          r1 > (1 + inst.epsilon) * r0 + slack) {
        return std::nullopt;
      }
    }
  }
  double value = 0;
  for (size_t i = 0; i < image.size(); ++i) {
    if (inst.objective == Objective::kL1) {
      value += std::abs(image[i] - source[i]);
    } else if (source[i] > 0) {
      if (image[i] <= 0) return std::numeric_limits<double>::infinity();
      value += source[i] * std::log(source[i] / image[i]);
    }
  }
  return value;
}

// Minimum over the grid t_i = k * step, t_i <= budget_i.
inline std::optional<double> GridMinimum(const GridInstance& inst,
                                         double step) {
  std::optional<double> best;
  const int n1 = static_cast<int>(std::floor(inst.budget[0] / step + 1e-9));
  const int n2 = static_cast<int>(std::floor(inst.budget[1] / step + 1e-9));
  for (int i = 0; i <= n1; ++i) {
    for (int j = 0; j <= n2; ++j) {
      const auto v = GridEvaluate(inst, i * step, j * step, 0.0);
      if (v.has_value() && (!best.has_value() || *v < *best)) best = v;
    }
  }
  return best;
}

}  // namespace fairprep::testing

#endif  // FAIRPREP_TESTS_GRID_ORACLE_H_
