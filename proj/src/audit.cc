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

#include <algorithm>
#include <cmath>
#include <limits>

#include "fairprep/status_macros.h"
#include "fmt/format.h"

namespace fairprep {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double J(double rate, double reference) {
  if (reference > 0) return std::abs(rate / reference - 1);
  return rate > 0 ? kInf : 0.0;
}

}  // namespace

absl::StatusOr<JointPmf> PushforwardJoint(const JointPmf& pmf,
                                          const TransformKernel& kernel) {
  const Schema& schema = pmf.schema();
  if (!(kernel.schema() == schema)) {
    return absl::InvalidArgumentError("kernel and pmf schemas differ");
  }
  const int n = schema.num_outputs();
  std::vector<double> mass(schema.num_cells(), 0.0);
  for (int cell = 0; cell < schema.num_cells(); ++cell) {
    const double p = pmf.mass()[cell];
    if (p == 0) continue;
    const int d = cell / n;
    const auto row = kernel.row(cell);
    for (int o = 0; o < n; ++o) mass[d * n + o] += p * row[o];
  }
  return JointPmf::FromMass(schema, std::move(mass), pmf.sample_count());
}

absl::StatusOr<DiscriminationReport> AuditDiscrimination(
    const Schema& schema, std::span<const double> joint,
    std::span<const double> target, const DiscriminationSpec& spec) {
  const int groups = schema.num_groups();
  if (static_cast<int>(joint.size()) != groups * 2 || target.size() != 2) {
    return absl::InvalidArgumentError("joint or target has the wrong size");
  }
  for (int y = 0; y < 2; ++y) {
    if (!(target[y] > 0)) {
      return absl::InvalidArgumentError(
          fmt::format("ZeroReference: target probability of Y={} is 0",
                      schema.OutcomeLabel(y)));
    }
  }
  DiscriminationReport r;
  r.mode = spec.mode;
  r.target.assign(target.begin(), target.end());
  r.group_mass.resize(groups);
  r.rates.assign(groups * 2, 0.0);
  for (int d = 0; d < groups; ++d) {
    r.group_mass[d] = joint[d * 2] + joint[d * 2 + 1];
    if (r.group_mass[d] > 0) {
      for (int y = 0; y < 2; ++y) {
        r.rates[d * 2 + y] = joint[d * 2 + y] / r.group_mass[d];
      }
    }
  }
  r.max_excess = -kInf;
  const bool pairwise_mode = spec.mode == DiscriminationMode::kPairwiseDistance;
  for (int y = 0; y < 2; ++y) {
    const std::string& outcome = schema.OutcomeLabel(y);
    for (int d = 0; d < groups; ++d) {
      if (!(r.group_mass[d] > 0)) continue;
      JValue v{y, d, -1, r.rates[d * 2 + y], target[y]};
      v.j = J(v.rate, v.reference);
      v.epsilon = ResolveEpsilon(spec, outcome, schema.GroupLabel(d));
      r.max_target_j = std::max(r.max_target_j, v.j);
      if (!pairwise_mode)
        r.max_excess = std::max(r.max_excess, v.j - v.epsilon);
      r.target_j.push_back(v);
      for (int d2 = 0; d2 < groups; ++d2) {
        if (d2 == d || !(r.group_mass[d2] > 0)) continue;
        JValue p{y, d, d2, r.rates[d * 2 + y], r.rates[d2 * 2 + y]};
        p.j = J(p.rate, p.reference);
        // Pairwise ε is looked up with the ordered pair first.
        const int lo = std::min(d, d2), hi = std::max(d, d2);
        p.epsilon = ResolveEpsilon(spec, outcome, schema.GroupLabel(lo),
                                   schema.GroupLabel(hi));
        r.max_pairwise_j = std::max(r.max_pairwise_j, p.j);
        // The constraint bounds rate(d) <= (1+ε) rate(d2) in both orders.
        const double ratio_excess = p.reference > 0
                                        ? p.rate / p.reference - 1 - p.epsilon
                                        : (p.rate > 0 ? kInf : -p.epsilon);
        if (pairwise_mode) r.max_excess = std::max(r.max_excess, ratio_excess);
        r.pairwise_j.push_back(p);
      }
    }
  }
  if (r.max_excess == -kInf) r.max_excess = 0;
  return r;
}

absl::StatusOr<AdvantageReport> MapAdvantage(std::span<const double> joint,
                                             int num_groups, int num_outcomes) {
  if (num_groups < 1 || num_outcomes < 1 ||
      static_cast<int>(joint.size()) != num_groups * num_outcomes) {
    return absl::InvalidArgumentError("joint has the wrong size");
  }
  double total = 0;
  for (double p : joint) {
    if (!(p >= 0)) return absl::InvalidArgumentError("negative probability");
    total += p;
  }
  if (std::abs(total - 1) > 1e-9) {
    return absl::InvalidArgumentError(
        fmt::format("joint sums to {}, not 1", total));
  }
  AdvantageReport r;
  for (int y = 0; y < num_outcomes; ++y) {
    double best = 0;
    for (int d = 0; d < num_groups; ++d) {
      best = std::max(best, joint[d * num_outcomes + y]);
    }
    r.map_probability += best;
  }
  for (int d = 0; d < num_groups; ++d) {
    double pd = 0;
    for (int y = 0; y < num_outcomes; ++y) pd += joint[d * num_outcomes + y];
    r.blind_probability = std::max(r.blind_probability, pd);
  }
  r.advantage = r.map_probability / r.blind_probability;
  return r;
}

absl::StatusOr<EstimationVerdict> CheckEstimationDiscrimination(
    const AdvantageReport& advantage, double epsilon,
    std::span<const double> joint, std::span<const double> target) {
  if (joint.size() % 2 != 0 || target.size() != 2) {
    return absl::InvalidArgumentError("joint or target has the wrong size");
  }
  if (!(epsilon >= 0))
    return absl::InvalidArgumentError("epsilon must be >= 0");
  EstimationVerdict v;
  v.advantage = advantage.advantage;
  v.epsilon = epsilon;
  const int groups = static_cast<int>(joint.size() / 2);
  std::optional<JValue> worst;
  for (int d = 0; d < groups; ++d) {
    const double pd = joint[d * 2] + joint[d * 2 + 1];
    if (!(pd > 0)) continue;
    for (int y = 0; y < 2; ++y) {
      JValue j{y, d, -1, joint[d * 2 + y] / pd, target[y]};
      j.j = J(j.rate, j.reference);
      j.epsilon = epsilon;
      if (!worst.has_value() || j.j > worst->j) worst = j;
    }
  }
  v.max_j = worst.has_value() ? worst->j : 0;
  v.all_within = v.max_j <= epsilon;
  v.advantage_within = v.advantage <= 1 + epsilon;
  v.consistent = !(v.all_within && !v.advantage_within);
  if (!v.advantage_within) v.witness = worst;
  return v;
}

absl::StatusOr<RobustnessBound> RobustnessBounds(
    const RobustnessParams& params) {
  if (params.n < 1 || !(params.beta > 0 && params.beta < 1) || params.m < 2 ||
      !(params.c_m > 0 && params.c_m <= 1) || !(params.epsilon >= 0) ||
      !(params.mu >= 0)) {
    return absl::InvalidArgumentError(
        "InvalidParams: need n >= 1, 0 < beta < 1, m >= 2, 0 < c_m <= 1, "
        "epsilon >= 0 and mu >= 0");
  }
  RobustnessBound b;
  b.params = params;
  const double n = static_cast<double>(params.n);
  const double m = params.m;
  b.tau = (std::log(1 / params.beta) + m * (1 + std::log((n + m) / m))) / n;
  b.h = std::sqrt(3 * b.tau / params.c_m);
  const double eps = params.epsilon;
  b.ratio_lower = std::max(0.0, (1 - eps) * std::exp(-b.h));
  b.ratio_upper = (1 + eps) * std::exp(b.h);
  b.epsilon_drift = std::max(b.ratio_upper - 1, 1 - b.ratio_lower);
  b.epsilon_linearized = eps + (1 + eps) * b.h;
  b.linearization_loose =
      std::abs(b.epsilon_linearized - b.epsilon_drift) > 0.01 * b.epsilon_drift;
  b.mu_drift = params.mu + 4 * std::sqrt(2 * b.tau);
  b.rate = std::sqrt(std::log(n / params.beta) / n);
  if (params.tau_limit.has_value()) b.valid = b.tau <= *params.tau_limit;
  return b;
}

double RobustnessTauLimit(std::span<const double> joint) {
  double limit = kInf;
  for (size_t d = 0; d + 1 < joint.size(); d += 2) {
    const double pd = joint[d] + joint[d + 1];
    if (!(pd > 0)) continue;
    for (int y = 0; y < 2; ++y) {
      const double c = joint[d + y] / pd;
      limit = std::min(limit, joint[d + y] * (1 - c) / (3 * (1 + c) * (1 + c)));
    }
  }
  return limit;
}

double RatioTauLimit(std::span<const double> pmf) {
  double limit = kInf;
  for (double p : pmf) {
    limit = std::min(limit, p * (1 - p) / (3 * (1 + p) * (1 + p)));
  }
  return limit;
}

absl::StatusOr<RatioInterval> RatioDriftBounds(double tau, double p_m,
                                               double gamma1, double gamma2) {
  if (!(tau >= 0) || !(p_m > 0 && p_m <= 1) || !(gamma1 >= 0) ||
      !(gamma2 >= gamma1)) {
    return absl::InvalidArgumentError(
        "InvalidParams: need tau >= 0, 0 < p_m <= 1, 0 <= gamma1 <= gamma2");
  }
  RatioInterval r;
  r.g = std::sqrt(3 * tau / p_m);
  r.lower = gamma1 * std::exp(-r.g);
  r.upper = gamma2 * std::exp(r.g);
  return r;
}

namespace {

void Finish(DistortionSummary* s, std::vector<CellDistortion>* cells,
            std::vector<double>* weights) {
  for (size_t c = 0; c < cells->size(); ++c) {
    CellDistortion& cell = (*cells)[c];
    const double w = (*weights)[c];
    if (!(w > 0)) continue;
    cell.mean /= w;
    for (double& e : cell.exceedance) e /= w;
    s->cells.push_back(cell);
  }
}

}  // namespace

absl::StatusOr<DistortionSummary> AuditDistortion(
    const Dataset& original, const Dataset& transformed,
    const DistortionTable& table, std::span<const double> thresholds) {
  if (original.size() != transformed.size()) {
    return absl::InvalidArgumentError(
        fmt::format("LengthMismatch: {} original and {} transformed records",
                    original.size(), transformed.size()));
  }
  const Schema& schema = original.schema();
  if (!(transformed.schema() == schema) ||
      table.size() != schema.num_outputs()) {
    return absl::InvalidArgumentError("datasets or table do not match");
  }
  const size_t levels = thresholds.size();
  DistortionSummary s;
  s.thresholds.assign(thresholds.begin(), thresholds.end());
  s.exceedance.assign(levels, 0.0);
  std::vector<CellDistortion> cells(schema.num_cells());
  std::vector<double> counts(schema.num_cells(), 0.0);
  for (int c = 0; c < schema.num_cells(); ++c) {
    cells[c].cell = c;
    cells[c].exceedance.assign(levels, 0.0);
  }
  for (int64_t i = 0; i < original.size(); ++i) {
    const Record& a = original.records()[i];
    const Record& b = transformed.records()[i];
    if (a.group != b.group) {
      return absl::InvalidArgumentError(
          fmt::format("record {} changed its group", i));
    }
    if (!a.outcome.has_value() || !b.outcome.has_value()) {
      return absl::InvalidArgumentError(
          fmt::format("record {} lacks an outcome", i));
    }
    const double delta = table.at(a.feature, *a.outcome, b.feature, *b.outcome);
    const int cell = schema.CellIndex(a.group, a.feature, *a.outcome);
    CellDistortion& cd = cells[cell];
    ++cd.count;
    counts[cell] += 1;
    cd.mean += delta;
    cd.max = std::max(cd.max, delta);
    s.mean += delta;
    s.max = std::max(s.max, delta);
    for (size_t l = 0; l < levels; ++l) {
      if (delta > thresholds[l]) {
        cd.exceedance[l] += 1;
        s.exceedance[l] += 1;
      }
    }
  }
  s.count = original.size();
  if (s.count > 0) {
    s.mean /= s.count;
    for (double& e : s.exceedance) e /= s.count;
  }
  Finish(&s, &cells, &counts);
  return s;
}

absl::StatusOr<DistortionSummary> AnalyticDistortion(
    const JointPmf& pmf, const TransformKernel& kernel,
    const DistortionTable& table, std::span<const double> thresholds) {
  const Schema& schema = pmf.schema();
  if (!(kernel.schema() == schema) || table.size() != schema.num_outputs()) {
    return absl::InvalidArgumentError("pmf, kernel or table do not match");
  }
  const size_t levels = thresholds.size();
  const int n = schema.num_outputs();
  DistortionSummary s;
  s.thresholds.assign(thresholds.begin(), thresholds.end());
  s.exceedance.assign(levels, 0.0);
  std::vector<CellDistortion> cells(schema.num_cells());
  std::vector<double> weights(schema.num_cells(), 0.0);
  for (int c = 0; c < schema.num_cells(); ++c) {
    const double p = pmf.mass()[c];
    CellDistortion& cd = cells[c];
    cd.cell = c;
    cd.exceedance.assign(levels, 0.0);
    if (!(p > 0)) continue;
    weights[c] = 1;
    if (pmf.sample_count().has_value()) {
      cd.count = std::llround(p * *pmf.sample_count());
    }
    const auto row = kernel.row(c);
    const auto deltas = table.row(c % n / 2, c % 2);
    for (int o = 0; o < n; ++o) {
      if (row[o] == 0) continue;
      cd.mean += row[o] * deltas[o];
      cd.max = std::max(cd.max, deltas[o]);
      for (size_t l = 0; l < levels; ++l) {
        if (deltas[o] > thresholds[l]) cd.exceedance[l] += row[o];
      }
    }
    s.mean += p * cd.mean;
    s.max = std::max(s.max, cd.max);
    for (size_t l = 0; l < levels; ++l) s.exceedance[l] += p * cd.exceedance[l];
  }
  s.count = pmf.sample_count().value_or(0);
  Finish(&s, &cells, &weights);
  return s;
}

absl::StatusOr<std::vector<CohortDelta>> CohortDeltas(const JointPmf& before,
                                                      const JointPmf& after,
                                                      int min_samples) {
  if (!(before.schema() == after.schema())) {
    return absl::InvalidArgumentError("pmf schemas differ");
  }
  if (!before.sample_count().has_value()) {
    return absl::FailedPreconditionError("cohort deltas need a sample count");
  }
  const Schema& schema = before.schema();
  const double n_before = static_cast<double>(*before.sample_count());
  const double n_after = static_cast<double>(
      after.sample_count().value_or(*before.sample_count()));
  std::vector<CohortDelta> out;
  for (int d = 0; d < schema.num_groups(); ++d) {
    for (int x = 0; x < schema.num_features(); ++x) {
      CohortDelta c;
      c.d = d;
      c.x = x;
      const double mb = before.at(d, x, 0) + before.at(d, x, 1);
      const double ma = after.at(d, x, 0) + after.at(d, x, 1);
      c.samples = n_before * mb;
      c.before = mb > 0 ? before.at(d, x, 1) / mb : 0;
      c.after = ma > 0 ? after.at(d, x, 1) / ma : 0;
      c.delta = c.after - c.before;
      c.shown =
          c.samples >= min_samples - 1e-9 && n_after * ma >= min_samples - 1e-9;
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace fairprep
