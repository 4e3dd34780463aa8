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
#include "fairprep/constraints.h"

#include <algorithm>
#include <cmath>

#include "fairprep/status_macros.h"
#include "fmt/format.h"

namespace fairprep {

absl::StatusOr<double> RatioDistance(double p, double q) {
  if (!(q > 0)) {
    return absl::InvalidArgumentError(fmt::format(
        "ZeroReference: reference probability {} is not positive", q));
  }
  return std::abs(p / q - 1.0);
}

std::string_view DiscriminationModeName(DiscriminationMode mode) {
  switch (mode) {
    case DiscriminationMode::kTargetDistance:
      return "target";
    case DiscriminationMode::kPairwiseDistance:
      return "pairwise";
    case DiscriminationMode::kConditionalTargetDistance:
      return "conditional";
  }
  return "?";
}

absl::StatusOr<DiscriminationMode> ParseDiscriminationMode(
    std::string_view name) {
  if (name == "target") return DiscriminationMode::kTargetDistance;
  if (name == "pairwise") return DiscriminationMode::kPairwiseDistance;
  if (name == "conditional") {
    return DiscriminationMode::kConditionalTargetDistance;
  }
  return absl::InvalidArgumentError(fmt::format(
      "unknown discrimination mode '{}' (target, pairwise, conditional)",
      name));
}

absl::Status ValidateDiscriminationSpec(const DiscriminationSpec& spec,
                                        const Schema& schema) {
  if (!(spec.epsilon >= 0) || !std::isfinite(spec.epsilon)) {
    return absl::InvalidArgumentError("epsilon must be finite and >= 0");
  }
  for (const EpsilonOverride& o : spec.epsilon_overrides) {
    if (!(o.value >= 0) || !std::isfinite(o.value)) {
      return absl::InvalidArgumentError("epsilon overrides must be >= 0");
    }
    if (!o.outcome.empty()) {
      FAIRPREP_RETURN_IF_ERROR(schema.ParseOutcome(o.outcome).status());
    }
    if (!o.group.empty()) {
      FAIRPREP_RETURN_IF_ERROR(schema.ParseGroup(o.group).status());
    }
    if (!o.group2.empty()) {
      FAIRPREP_RETURN_IF_ERROR(schema.ParseGroup(o.group2).status());
    }
  }
  if (spec.target.has_value()) {
    const std::vector<double>& t = *spec.target;
    if (t.size() != 2) {
      return absl::InvalidArgumentError("target needs two probabilities");
    }
    if (!(t[0] >= 0 && t[1] >= 0) ||
        std::abs(t[0] + t[1] - 1) > kRowTolerance) {
      return absl::InvalidArgumentError("target is not a distribution");
    }
  }
  if (spec.mode == DiscriminationMode::kConditionalTargetDistance) {
    if (spec.conditioning.empty()) {
      return absl::InvalidArgumentError(
          "conditional mode needs at least one conditioning variable");
    }
    for (const std::string& name : spec.conditioning) {
      if (!schema.FeaturePosition(name).has_value()) {
        return absl::InvalidArgumentError(fmt::format(
            "conditioning variable '{}' is not an X variable", name));
      }
    }
    if (spec.min_segment_samples < 0) {
      return absl::InvalidArgumentError("min_segment_samples must be >= 0");
    }
  } else if (!spec.conditioning.empty()) {
    return absl::InvalidArgumentError(
        "conditioning variables are only allowed in conditional mode");
  }
  return absl::OkStatus();
}

double ResolveEpsilon(const DiscriminationSpec& spec, std::string_view outcome,
                      std::string_view group, std::string_view group2,
                      std::string_view segment) {
  double eps = spec.epsilon;
  auto matches = [](const std::string& field, std::string_view value) {
    return field.empty() || field == value;
  };
  for (const EpsilonOverride& o : spec.epsilon_overrides) {
    if (matches(o.outcome, outcome) && matches(o.group, group) &&
        matches(o.group2, group2) && matches(o.segment, segment)) {
      eps = o.value;
    }
  }
  return eps;
}

double LinearConstraint::Lhs(std::span<const double> kernel,
                             int num_outputs) const {
  double total = 0;
  for (const KernelTerm& t : terms) {
    total +=
        t.coef * kernel[static_cast<size_t>(t.cell) * num_outputs + t.output];
  }
  return total;
}

double LinearConstraint::Residual(std::span<const double> kernel,
                                  int num_outputs) const {
  return std::max(0.0, Lhs(kernel, num_outputs) - rhs);
}

void LinearConstraintSet::Append(LinearConstraintSet other) {
  for (auto& c : other.constraints) constraints.push_back(std::move(c));
  for (auto& f : other.fixed) fixed.push_back(f);
  for (auto& w : other.warnings) warnings.push_back(std::move(w));
}

double LinearConstraintSet::MaxResidual(std::span<const double> kernel,
                                        int num_outputs) const {
  double worst = 0;
  for (const LinearConstraint& c : constraints) {
    worst = std::max(worst, c.Residual(kernel, num_outputs));
  }
  return worst;
}

namespace {

// Rate terms restricted to cells whose feature satisfies `keep`, weighted by
// p(d,x,y) / total where total is the kept mass of group d.
template <typename Keep>
std::vector<KernelTerm> RateTerms(const JointPmf& pmf, int d, int y_hat,
                                  Keep keep, double* total_mass) {
  const Schema& schema = pmf.schema();
  double total = 0;
  for (int x = 0; x < schema.num_features(); ++x) {
    if (!keep(x)) continue;
    total += pmf.at(d, x, 0) + pmf.at(d, x, 1);
  }
  *total_mass = total;
  std::vector<KernelTerm> terms;
  if (total <= 0) return terms;
  for (int x = 0; x < schema.num_features(); ++x) {
    if (!keep(x)) continue;
    for (int y = 0; y < 2; ++y) {
      const double mass = pmf.at(d, x, y);
      if (mass <= 0) continue;
      const int cell = schema.CellIndex(d, x, y);
      for (int x_hat = 0; x_hat < schema.num_features(); ++x_hat) {
        terms.push_back(
            {cell, Schema::OutputIndex(x_hat, y_hat), mass / total});
      }
    }
  }
  return terms;
}

std::vector<KernelTerm> Scaled(std::vector<KernelTerm> terms, double factor) {
  for (KernelTerm& t : terms) t.coef *= factor;
  return terms;
}

std::vector<KernelTerm> Combine(const std::vector<KernelTerm>& a, double fa,
                                const std::vector<KernelTerm>& b, double fb) {
  std::vector<KernelTerm> out = Scaled(a, fa);
  for (KernelTerm t : b) {
    t.coef *= fb;
    out.push_back(t);
  }
  return out;
}

// Two-sided band lo <= rate / reference <= hi emitted as two rows.
void EmitBand(const std::vector<KernelTerm>& rate, double reference, double eps,
              const std::string& label, LinearConstraintSet* out) {
  out->constraints.push_back({Scaled(rate, 1.0 / reference), 1.0 + eps,
                              ConstraintKind::kDiscrimination,
                              label + " upper"});
  out->constraints.push_back({Scaled(rate, -1.0 / reference), -(1.0 - eps),
                              ConstraintKind::kDiscrimination,
                              label + " lower"});
}

}  // namespace

std::vector<std::vector<KernelTerm>> OutcomeRateTerms(const JointPmf& pmf) {
  const Schema& schema = pmf.schema();
  std::vector<std::vector<KernelTerm>> out(schema.num_groups() * 2);
  for (int d = 0; d < schema.num_groups(); ++d) {
    for (int y = 0; y < 2; ++y) {
      double total = 0;
      out[d * 2 + y] = RateTerms(pmf, d, y, [](int) { return true; }, &total);
    }
  }
  return out;
}

absl::StatusOr<std::vector<double>> ResolveTarget(
    const DiscriminationSpec& spec, const JointPmf& pmf) {
  std::vector<double> target =
      spec.target.has_value() ? *spec.target : pmf.OutcomeMarginal();
  for (int y = 0; y < 2; ++y) {
    if (!(target[y] > 0)) {
      return absl::InvalidArgumentError(fmt::format(
          "ZeroReference: target probability of outcome '{}' is zero",
          pmf.schema().OutcomeLabel(y)));
    }
  }
  return target;
}

absl::StatusOr<LinearConstraintSet> BuildDiscriminationConstraints(
    const DiscriminationSpec& spec, const JointPmf& pmf) {
  const Schema& schema = pmf.schema();
  FAIRPREP_RETURN_IF_ERROR(ValidateDiscriminationSpec(spec, schema));
  LinearConstraintSet out;
  const std::vector<double> group_mass = pmf.GroupMarginal();
  auto all = [](int) { return true; };

  switch (spec.mode) {
    case DiscriminationMode::kTargetDistance: {
      FAIRPREP_ASSIGN_OR_RETURN(std::vector<double> target,
                                ResolveTarget(spec, pmf));
      for (int d = 0; d < schema.num_groups(); ++d) {
        const std::string group = schema.GroupLabel(d);
        if (group_mass[d] <= 0) {
          out.warnings.push_back(fmt::format(
              "AbsentRow: group '{}' has no mass, constraints skipped", group));
          continue;
        }
        for (int y = 0; y < 2; ++y) {
          double total = 0;
          const std::vector<KernelTerm> rate =
              RateTerms(pmf, d, y, all, &total);
          const std::string& outcome = schema.OutcomeLabel(y);
          EmitBand(rate, target[y], ResolveEpsilon(spec, outcome, group),
                   fmt::format("target y={} d={}", outcome, group), &out);
        }
      }
      break;
    }
    case DiscriminationMode::kPairwiseDistance: {
      for (int d = 0; d < schema.num_groups(); ++d) {
        if (group_mass[d] <= 0) {
          out.warnings.push_back(fmt::format(
              "AbsentRow: group '{}' has no mass, constraints skipped",
              schema.GroupLabel(d)));
        }
      }
      for (int y = 0; y < 2; ++y) {
        const std::string& outcome = schema.OutcomeLabel(y);
        for (int d1 = 0; d1 < schema.num_groups(); ++d1) {
          if (group_mass[d1] <= 0) continue;
          for (int d2 = d1 + 1; d2 < schema.num_groups(); ++d2) {
            if (group_mass[d2] <= 0) continue;
            double total = 0;
            const auto r1 = RateTerms(pmf, d1, y, all, &total);
            const auto r2 = RateTerms(pmf, d2, y, all, &total);
            const std::string g1 = schema.GroupLabel(d1);
            const std::string g2 = schema.GroupLabel(d2);
            const double e12 = ResolveEpsilon(spec, outcome, g1, g2);
            const double e21 = ResolveEpsilon(spec, outcome, g2, g1);
            // r1 <= (1 + e) r2 and r2 <= (1 + e) r1; the lower halves of
            // both ratio bands are implied by the opposite upper half.
            out.constraints.push_back(
                {Combine(r1, 1.0, r2, -(1.0 + e12)), 0.0,
                 ConstraintKind::kDiscrimination,
                 fmt::format("pairwise y={} d1={} d2={}", outcome, g1, g2)});
            out.constraints.push_back(
                {Combine(r2, 1.0, r1, -(1.0 + e21)), 0.0,
                 ConstraintKind::kDiscrimination,
                 fmt::format("pairwise y={} d1={} d2={}", outcome, g2, g1)});
          }
        }
      }
      break;
    }
    case DiscriminationMode::kConditionalTargetDistance: {
      std::vector<int> positions;
      std::vector<int> radices;
      int num_segments = 1;
      const int num_d = schema.num_protected_variables();
      for (const std::string& name : spec.conditioning) {
        const int pos = *schema.FeaturePosition(name);
        positions.push_back(pos);
        radices.push_back(schema.variables()[num_d + pos].alphabet.size());
        num_segments *= radices.back();
      }
      std::vector<int> segment_of(schema.num_features());
      for (int x = 0; x < schema.num_features(); ++x) {
        const std::vector<int> digits = schema.DecodeFeature(x);
        int b = 0;
        for (size_t i = 0; i < positions.size(); ++i) {
          b = b * radices[i] + digits[positions[i]];
        }
        segment_of[x] = b;
      }
      auto segment_label = [&](int b) {
        std::vector<std::string> parts(positions.size());
        for (int i = static_cast<int>(positions.size()) - 1; i >= 0; --i) {
          parts[i] = schema.variables()[num_d + positions[i]].alphabet.Label(
              b % radices[i]);
          b /= radices[i];
        }
        std::string label;
        for (size_t i = 0; i < parts.size(); ++i) {
          if (i > 0) label.push_back(kCompositeSeparator);
          label += parts[i];
        }
        return label;
      };
      // p_{Y|B} for the default per-segment target.
      std::vector<double> segment_outcome(num_segments * 2, 0.0);
      for (int d = 0; d < schema.num_groups(); ++d) {
        for (int x = 0; x < schema.num_features(); ++x) {
          for (int y = 0; y < 2; ++y) {
            segment_outcome[segment_of[x] * 2 + y] += pmf.at(d, x, y);
          }
        }
      }
      if (spec.target.has_value()) {
        FAIRPREP_RETURN_IF_ERROR(ResolveTarget(spec, pmf).status());
      }
      const std::optional<int64_t> n = pmf.sample_count();
      for (int b = 0; b < num_segments; ++b) {
        const std::string segment = segment_label(b);
        const double seg_total =
            segment_outcome[b * 2] + segment_outcome[b * 2 + 1];
        for (int d = 0; d < schema.num_groups(); ++d) {
          const std::string group = schema.GroupLabel(d);
          double cell_mass = 0;
          auto in_segment = [&](int x) { return segment_of[x] == b; };
          RateTerms(pmf, d, 0, in_segment, &cell_mass);
          if (cell_mass <= 0) {
            out.warnings.push_back(
                fmt::format("AbsentRow: segment d={} b={} has no mass, skipped",
                            group, segment));
            continue;
          }
          if (n.has_value() && cell_mass * static_cast<double>(*n) <
                                   spec.min_segment_samples - 1e-9) {
            out.warnings.push_back(fmt::format(
                "segment d={} b={} has fewer than {} samples, skipped", group,
                segment, spec.min_segment_samples));
            continue;
          }
          for (int y = 0; y < 2; ++y) {
            const std::string& outcome = schema.OutcomeLabel(y);
            const double reference =
                spec.target.has_value()
                    ? (*spec.target)[y]
                    : segment_outcome[b * 2 + y] / seg_total;
            if (!(reference > 0)) {
              out.warnings.push_back(fmt::format(
                  "ZeroReference: target for y={} b={} is zero, skipped",
                  outcome, segment));
              continue;
            }
            double total = 0;
            const auto rate = RateTerms(pmf, d, y, in_segment, &total);
            EmitBand(rate, reference,
                     ResolveEpsilon(spec, outcome, group, {}, segment),
                     fmt::format("conditional y={} d={} b={}", outcome, group,
                                 segment),
                     &out);
          }
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace fairprep
