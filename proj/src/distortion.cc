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
#include "fairprep/distortion.h"

#include <algorithm>
#include <cmath>

#include "fairprep/status_macros.h"
#include "fmt/format.h"

namespace fairprep {

std::string_view CombinerName(Combiner combiner) {
  switch (combiner) {
    case Combiner::kSumOfSquares:
      return "sum_of_squares";
    case Combiner::kSum:
      return "sum";
    case Combiner::kRuleTable:
      return "rule_table";
  }
  return "?";
}

absl::StatusOr<Combiner> ParseCombiner(std::string_view name) {
  if (name == "sum_of_squares") return Combiner::kSumOfSquares;
  if (name == "sum") return Combiner::kSum;
  if (name == "rule_table") return Combiner::kRuleTable;
  return absl::InvalidArgumentError(fmt::format(
      "unknown combiner '{}' (sum_of_squares, sum, rule_table)", name));
}

namespace {

// The attributes a metric may refer to: X variables followed by Y.
struct Attributes {
  std::vector<const Variable*> vars;

  explicit Attributes(const Schema& schema) {
    const int num_d = schema.num_protected_variables();
    for (int i = 0; i < schema.num_feature_variables(); ++i) {
      vars.push_back(&schema.variables()[num_d + i]);
    }
    vars.push_back(&schema.outcome());
  }

  std::optional<int> Find(std::string_view name) const {
    for (size_t i = 0; i < vars.size(); ++i) {
      if (vars[i]->name() == name) return static_cast<int>(i);
    }
    return std::nullopt;
  }
};

absl::Status ValidateMetric(const DistortionMetric& metric,
                            const Attributes& attrs) {
  if (!(metric.forbidden > 0)) {
    return absl::InvalidArgumentError("forbidden level must be positive");
  }
  if (metric.combiner == Combiner::kRuleTable) {
    if (!metric.penalties.empty()) {
      return absl::InvalidArgumentError(
          "rule_table metrics take rules, not penalties");
    }
    for (const DistortionRule& rule : metric.rules) {
      if (!(rule.value >= 0) || !std::isfinite(rule.value)) {
        return absl::InvalidArgumentError("rule values must be >= 0");
      }
      for (const RuleClause& clause : rule.clauses) {
        const std::optional<int> a = attrs.Find(clause.variable);
        if (!a.has_value()) {
          return absl::InvalidArgumentError(fmt::format(
              "rule refers to '{}', which is not an X or Y variable",
              clause.variable));
        }
        const Alphabet& alphabet = attrs.vars[*a]->alphabet;
        if ((clause.min_delta.has_value() || clause.max_delta.has_value()) &&
            !alphabet.ordinal()) {
          return absl::InvalidArgumentError(
              fmt::format("delta clause on '{}' needs an ordinal alphabet",
                          clause.variable));
        }
        for (const auto* labels : {&clause.from, &clause.to}) {
          for (const std::string& label : *labels) {
            if (!alphabet.IndexOf(label).has_value()) {
              return absl::InvalidArgumentError(
                  fmt::format("rule label '{}' is not a category of '{}'",
                              label, clause.variable));
            }
          }
        }
      }
    }
    return absl::OkStatus();
  }
  if (!metric.rules.empty()) {
    return absl::InvalidArgumentError(
        "rules are only allowed with the rule_table combiner");
  }
  std::vector<bool> seen(attrs.vars.size(), false);
  for (const AttributePenalty& p : metric.penalties) {
    const std::optional<int> a = attrs.Find(p.variable);
    if (!a.has_value()) {
      return absl::InvalidArgumentError(fmt::format(
          "penalty for '{}', which is not an X or Y variable", p.variable));
    }
    if (seen[*a]) {
      return absl::InvalidArgumentError(
          fmt::format("duplicate penalty for '{}'", p.variable));
    }
    seen[*a] = true;
    const int size = attrs.vars[*a]->alphabet.size();
    if (p.kind == AttributePenalty::Kind::kMatrix) {
      if (static_cast<int>(p.matrix.size()) != size) {
        return absl::InvalidArgumentError(fmt::format(
            "penalty matrix for '{}' needs {} rows", p.variable, size));
      }
      for (int i = 0; i < size; ++i) {
        const auto& row = p.matrix[i];
        if (static_cast<int>(row.size()) != size) {
          return absl::InvalidArgumentError(fmt::format(
              "penalty matrix for '{}' needs {} columns", p.variable, size));
        }
        if (row[i] != 0) {
          return absl::InvalidArgumentError(fmt::format(
              "penalty matrix for '{}' needs a zero diagonal", p.variable));
        }
        for (double v : row) {
          if (!(v >= 0)) {
            return absl::InvalidArgumentError(fmt::format(
                "penalty matrix for '{}' has a negative entry", p.variable));
          }
        }
      }
    } else {
      if (!attrs.vars[*a]->alphabet.ordinal()) {
        return absl::InvalidArgumentError(fmt::format(
            "ordinal penalty on '{}' needs an ordinal alphabet", p.variable));
      }
      if (!(p.step_penalty >= 0)) {
        return absl::InvalidArgumentError("step_penalty must be >= 0");
      }
    }
  }
  return absl::OkStatus();
}

bool ClauseMatches(const RuleClause& clause, const Alphabet& alphabet, int from,
                   int to) {
  const int delta = to - from;
  if (clause.min_delta.has_value() && delta < *clause.min_delta) return false;
  if (clause.max_delta.has_value() && delta > *clause.max_delta) return false;
  auto contains = [&](const std::vector<std::string>& labels, int index) {
    return labels.empty() || std::find(labels.begin(), labels.end(),
                                       alphabet.Label(index)) != labels.end();
  };
  return contains(clause.from, from) && contains(clause.to, to);
}

// δ for one pair given per-attribute category indices.
double Evaluate(const DistortionMetric& metric, const Attributes& attrs,
                const std::vector<int>& from, const std::vector<int>& to) {
  if (metric.combiner == Combiner::kRuleTable) {
    for (const DistortionRule& rule : metric.rules) {
      bool all = true;
      for (const RuleClause& clause : rule.clauses) {
        const int a = *attrs.Find(clause.variable);
        if (!ClauseMatches(clause, attrs.vars[a]->alphabet, from[a], to[a])) {
          all = false;
          break;
        }
      }
      if (all) return rule.value;
    }
    return 0;
  }
  double total = 0;
  for (size_t a = 0; a < attrs.vars.size(); ++a) {
    if (from[a] == to[a]) continue;
    const AttributePenalty* penalty = nullptr;
    for (const AttributePenalty& p : metric.penalties) {
      if (p.variable == attrs.vars[a]->name()) penalty = &p;
    }
    if (penalty == nullptr) return metric.forbidden;
    double component = 0;
    if (penalty->kind == AttributePenalty::Kind::kMatrix) {
      component = penalty->matrix[from[a]][to[a]];
    } else {
      const int jump = std::abs(to[a] - from[a]);
      if (penalty->max_jump >= 0 && jump > penalty->max_jump) {
        return metric.forbidden;
      }
      component = penalty->step_penalty * jump;
    }
    if (component >= metric.forbidden) return metric.forbidden;
    total += metric.combiner == Combiner::kSumOfSquares ? component * component
                                                        : component;
  }
  return total;
}

std::vector<int> AttributeIndices(const Schema& schema, int x, int y) {
  std::vector<int> out = schema.DecodeFeature(x);
  out.push_back(y);
  return out;
}

}  // namespace

absl::StatusOr<DistortionTable> DistortionTable::Build(
    const DistortionMetric& metric, const Schema& schema) {
  const Attributes attrs(schema);
  FAIRPREP_RETURN_IF_ERROR(ValidateMetric(metric, attrs));
  DistortionTable table;
  table.size_ = schema.num_outputs();
  table.forbidden_ = metric.forbidden;
  table.values_.resize(static_cast<size_t>(table.size_) * table.size_);
  for (int x = 0; x < schema.num_features(); ++x) {
    for (int y = 0; y < 2; ++y) {
      const std::vector<int> from = AttributeIndices(schema, x, y);
      for (int xh = 0; xh < schema.num_features(); ++xh) {
        for (int yh = 0; yh < 2; ++yh) {
          const double value =
              Evaluate(metric, attrs, from, AttributeIndices(schema, xh, yh));
          if (!(value >= 0) || !std::isfinite(value)) {
            return absl::InvalidArgumentError(fmt::format(
                "distortion from ({}, {}) to ({}, {}) is {}, must be >= 0",
                schema.FeatureLabel(x), schema.OutcomeLabel(y),
                schema.FeatureLabel(xh), schema.OutcomeLabel(yh), value));
          }
          if (x == xh && y == yh && value != 0) {
            return absl::InvalidArgumentError(fmt::format(
                "distortion of the unchanged cell ({}, {}) is {}, must be 0",
                schema.FeatureLabel(x), schema.OutcomeLabel(y), value));
          }
          table.values_[static_cast<size_t>(Schema::OutputIndex(x, y)) *
                            table.size_ +
                        Schema::OutputIndex(xh, yh)] = value;
        }
      }
    }
  }
  return table;
}

absl::StatusOr<double> EvaluateDistortion(const DistortionMetric& metric,
                                          const Schema& schema, int x, int y,
                                          int x_hat, int y_hat) {
  const Attributes attrs(schema);
  FAIRPREP_RETURN_IF_ERROR(ValidateMetric(metric, attrs));
  return Evaluate(metric, attrs, AttributeIndices(schema, x, y),
                  AttributeIndices(schema, x_hat, y_hat));
}

absl::Status ValidateBudget(const DistortionBudget& budget,
                            const Schema& schema) {
  size_t levels = 1;
  if (budget.mode == BudgetMode::kExpected) {
    if (!(budget.expected >= 0) || !std::isfinite(budget.expected)) {
      return absl::InvalidArgumentError("expected budget must be >= 0");
    }
  } else {
    if (budget.levels.empty()) {
      return absl::InvalidArgumentError(
          "MissingBudget: thresholded mode needs at least one level");
    }
    levels = budget.levels.size();
    for (size_t k = 0; k < budget.levels.size(); ++k) {
      const ThresholdLevel& l = budget.levels[k];
      if (!(l.budget >= 0) || l.budget > 1 || !std::isfinite(l.threshold)) {
        return absl::InvalidArgumentError(
            "threshold budgets must be probabilities");
      }
      if (k > 0 && !(l.threshold > budget.levels[k - 1].threshold)) {
        return absl::InvalidArgumentError(
            "thresholds must be strictly increasing");
      }
      if (k > 0 && l.budget > budget.levels[k - 1].budget) {
        return absl::InvalidArgumentError(
            "threshold budgets must be non-increasing");
      }
    }
  }
  for (const BudgetOverride& o : budget.overrides) {
    if (o.values.size() != levels) {
      return absl::InvalidArgumentError(fmt::format(
          "MissingBudget: budget override needs {} values", levels));
    }
    for (double v : o.values) {
      if (!(v >= 0) || !std::isfinite(v)) {
        return absl::InvalidArgumentError("budget overrides must be >= 0");
      }
    }
    if (!o.group.empty()) {
      FAIRPREP_RETURN_IF_ERROR(schema.ParseGroup(o.group).status());
    }
    if (!o.feature.empty()) {
      FAIRPREP_RETURN_IF_ERROR(schema.ParseFeature(o.feature).status());
    }
    if (!o.outcome.empty()) {
      FAIRPREP_RETURN_IF_ERROR(schema.ParseOutcome(o.outcome).status());
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<std::vector<double>>> ResolveBudgets(
    const DistortionBudget& budget, const Schema& schema) {
  FAIRPREP_RETURN_IF_ERROR(ValidateBudget(budget, schema));
  std::vector<double> base;
  if (budget.mode == BudgetMode::kExpected) {
    base = {budget.expected};
  } else {
    for (const ThresholdLevel& l : budget.levels) base.push_back(l.budget);
  }
  std::vector<std::vector<double>> out(schema.num_cells(), base);
  for (const BudgetOverride& o : budget.overrides) {
    const int g = o.group.empty() ? -1 : *schema.ParseGroup(o.group);
    const int f = o.feature.empty() ? -1 : *schema.ParseFeature(o.feature);
    const int y = o.outcome.empty() ? -1 : *schema.ParseOutcome(o.outcome);
    for (int d = 0; d < schema.num_groups(); ++d) {
      if (g >= 0 && d != g) continue;
      for (int x = 0; x < schema.num_features(); ++x) {
        if (f >= 0 && x != f) continue;
        for (int yy = 0; yy < 2; ++yy) {
          if (y >= 0 && yy != y) continue;
          out[schema.CellIndex(d, x, yy)] = o.values;
        }
      }
    }
  }
  return out;
}

absl::StatusOr<LinearConstraintSet> BuildDistortionConstraints(
    const DistortionTable& table, const DistortionBudget& budget,
    const JointPmf& pmf, const DistortionConstraintOptions& options) {
  const Schema& schema = pmf.schema();
  if (table.size() != schema.num_outputs()) {
    return absl::InvalidArgumentError("distortion table does not fit schema");
  }
  FAIRPREP_ASSIGN_OR_RETURN(auto budgets, ResolveBudgets(budget, schema));
  LinearConstraintSet out;
  const int num_outputs = schema.num_outputs();
  for (int d = 0; d < schema.num_groups(); ++d) {
    for (int x = 0; x < schema.num_features(); ++x) {
      for (int y = 0; y < 2; ++y) {
        if (pmf.at(d, x, y) <= 0) continue;
        const int cell = schema.CellIndex(d, x, y);
        const std::span<const double> delta = table.row(x, y);
        const std::string where =
            fmt::format("d={} x={} y={}", schema.GroupLabel(d),
                        schema.FeatureLabel(x), schema.OutcomeLabel(y));
        if (budget.mode == BudgetMode::kExpected) {
          const double c = budgets[cell][0];
          LinearConstraint row{
              {}, c, ConstraintKind::kDistortion, "expected " + where};
          for (int o = 0; o < num_outputs; ++o) {
            if (delta[o] == 0) continue;
            row.terms.push_back({cell, o, delta[o]});
            if (c == 0) {
              out.fixed.push_back({cell, o, true});
            } else if (options.fix_forbidden && delta[o] >= table.forbidden() &&
                       c < table.forbidden()) {
              out.fixed.push_back({cell, o, false});
            }
          }
          out.constraints.push_back(std::move(row));
        } else {
          std::vector<bool> pinned(num_outputs, false);
          for (size_t k = 0; k < budget.levels.size(); ++k) {
            const double t = budget.levels[k].threshold;
            const double c = budgets[cell][k];
            LinearConstraint row{{},
                                 c,
                                 ConstraintKind::kDistortion,
                                 fmt::format("threshold {} {}", t, where)};
            for (int o = 0; o < num_outputs; ++o) {
              if (!(delta[o] > t)) continue;
              row.terms.push_back({cell, o, 1.0});
              if (c == 0 && !pinned[o]) {
                pinned[o] = true;
                out.fixed.push_back({cell, o, true});
              }
            }
            out.constraints.push_back(std::move(row));
          }
        }
      }
    }
  }
  return out;
}

}  // namespace fairprep
