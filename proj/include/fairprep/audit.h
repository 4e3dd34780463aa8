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
// Before/after measurements of a transformation: discrimination, MAP
// advantage of guessing D from the outcome, finite-sample robustness
// bounds, distortion summaries and per-cohort outcome changes.

#ifndef FAIRPREP_AUDIT_H_
#define FAIRPREP_AUDIT_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fairprep/constraints.h"
#include "fairprep/distortion.h"
#include "fairprep/domain.h"
#include "fairprep/transform_kernel.h"

namespace fairprep {

// p_{D,X̂,Ŷ} of a kernel applied to `pmf`, as a pmf over the same schema.
absl::StatusOr<JointPmf> PushforwardJoint(const JointPmf& pmf,
                                          const TransformKernel& kernel);

struct JValue {
  int y = 0;
  int d = 0;
  int d2 = -1;           // pairwise entries only
  double rate = 0;       // p(ŷ=y | d)
  double reference = 0;  // p_T(y), or p(ŷ=y | d2)
  double j = 0;          // |rate / reference - 1|, +inf on a zero reference
  double epsilon = 0;
};

struct DiscriminationReport {
  DiscriminationMode mode = DiscriminationMode::kTargetDistance;
  std::vector<double> group_mass;  // p_D
  std::vector<double> rates;       // p(ŷ|d), d * 2 + y
  std::vector<double> target;      // p_T
  std::vector<JValue> target_j;    // every (y, d)
  std::vector<JValue> pairwise_j;  // every (y, d1, d2), d1 != d2
  double max_target_j = 0;
  double max_pairwise_j = 0;
  // Worst excess of J over its ε in the spec's mode (target entries stand
  // in for the conditional mode). Zero or negative when all hold.
  double max_excess = 0;
};

// `joint` is p_{D,Ŷ} as d * 2 + y. `target` is p_T over Y; groups without
// mass are skipped. Fails with InvalidArgument when a target entry is 0.
absl::StatusOr<DiscriminationReport> AuditDiscrimination(
    const Schema& schema, std::span<const double> joint,
    std::span<const double> target, const DiscriminationSpec& spec);

struct AdvantageReport {
  double map_probability = 0;    // P_c(D|Y) = Σ_y max_d p(d, y)
  double blind_probability = 0;  // max_d p_D(d)
  double advantage = 1;          // P_c / blind
};

// `joint` is p_{D,Y} as d * num_outcomes + y.
absl::StatusOr<AdvantageReport> MapAdvantage(std::span<const double> joint,
                                             int num_groups, int num_outcomes);

struct EstimationVerdict {
  double advantage = 1;
  double epsilon = 0;
  double max_j = 0;               // over (y, d) with positive group mass
  bool all_within = false;        // max_j <= ε
  bool advantage_within = false;  // advantage <= 1 + ε
  // Holds unless all_within and !advantage_within.
  bool consistent = true;
  // The (y, d) with the largest J when advantage > 1 + ε.
  std::optional<JValue> witness;
};

// `joint` is p_{D,Y} over two outcomes, `target` a distribution over Y.
absl::StatusOr<EstimationVerdict> CheckEstimationDiscrimination(
    const AdvantageReport& advantage, double epsilon,
    std::span<const double> joint, std::span<const double> target);

struct RobustnessParams {
  int64_t n = 0;
  double beta = 0.05;
  int m = 0;       // |X| |Y| |D|
  double c_m = 0;  // min p_{D,Ŷ}
  double epsilon = 0;
  double mu = 0;  // utility loss of the fitted kernel
  // Largest τ for which the ratio bounds hold; no check when unset.
  std::optional<double> tau_limit;
};

struct RobustnessBound {
  RobustnessParams params;
  double tau = 0;  // (1/n) log((1/β) (e(n+m)/m)^m)
  double h = 0;    // sqrt(3τ / c_m)
  // (1-ε)e^{-h} <= q(ŷ|d)/p_T(ŷ) <= (1+ε)e^{h}.
  double ratio_lower = 0;
  double ratio_upper = 0;
  double epsilon_drift = 0;          // max J implied by the interval
  double epsilon_linearized = 0;     // ε + (1+ε)h
  bool linearization_loose = false;  // differs from the exact drift by > 1%
  double mu_drift = 0;               // μ + 4 sqrt(2τ)
  double rate = 0;    // sqrt(log(n/β) / n), the asymptotic order of h
  bool valid = true;  // τ within tau_limit
};

absl::StatusOr<RobustnessBound> RobustnessBounds(
    const RobustnessParams& params);

// min over (d, y) of p(d,y) (1 - p(y|d)) / (3 (1 + p(y|d))^2) for a
// p_{D,Ŷ} given as d * 2 + y.
double RobustnessTauLimit(std::span<const double> joint);

// min over x of p(x) (1 - p(x)) / (3 (1 + p(x))^2).
double RatioTauLimit(std::span<const double> pmf);

struct RatioInterval {
  double g = 0;  // sqrt(3τ / p_m)
  double lower = 0;
  double upper = 0;
};

// [γ1 e^{-g}, γ2 e^{g}] bounding q/r when KL(p‖q) <= τ and
// γ1 <= p/r <= γ2, with p_m = min p.
absl::StatusOr<RatioInterval> RatioDriftBounds(double tau, double p_m,
                                               double gamma1, double gamma2);

struct CellDistortion {
  int cell = 0;
  int64_t count = 0;
  double mean = 0;
  double max = 0;
  std::vector<double> exceedance;  // fraction with δ > threshold
};

struct DistortionSummary {
  std::vector<double> thresholds;
  int64_t count = 0;
  double mean = 0;
  double max = 0;
  std::vector<double> exceedance;
  std::vector<CellDistortion> cells;  // cells with records, ascending
};

// Per-record δ between aligned original and transformed records. Fails
// with InvalidArgument on different lengths, groups or missing outcomes.
absl::StatusOr<DistortionSummary> AuditDistortion(
    const Dataset& original, const Dataset& transformed,
    const DistortionTable& table, std::span<const double> thresholds);

// Expected δ and exceedance probabilities of a kernel, per positive-mass
// cell; `count` holds the rounded sample count when known.
absl::StatusOr<DistortionSummary> AnalyticDistortion(
    const JointPmf& pmf, const TransformKernel& kernel,
    const DistortionTable& table, std::span<const double> thresholds);

struct CohortDelta {
  int d = 0;
  int x = 0;
  double samples = 0;  // n p(d, x) before the transformation
  double before = 0;   // p(Y=1 | x, d)
  double after = 0;    // p(Ŷ=1 | X̂=x, d)
  double delta = 0;
  bool shown = false;  // samples >= min_samples on both sides
};

// One row per (d, x). Needs a sample count on `before`; `after` uses its own
// when present and the same n otherwise.
absl::StatusOr<std::vector<CohortDelta>> CohortDeltas(const JointPmf& before,
                                                      const JointPmf& after,
                                                      int min_samples = 20);

}  // namespace fairprep

#endif  // FAIRPREP_AUDIT_H_
