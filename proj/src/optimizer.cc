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
#include "fairprep/optimizer.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "fairprep/interior_point.h"
#include "fairprep/status_macros.h"
#include "fmt/format.h"

namespace fairprep {

std::string_view ObjectiveName(Objective objective) {
  return objective == Objective::kKl ? "kl" : "l1";
}

absl::StatusOr<Objective> ParseObjective(std::string_view name) {
  if (name == "kl") return Objective::kKl;
  if (name == "l1") return Objective::kL1;
  return absl::InvalidArgumentError(
      fmt::format("unknown objective '{}' (kl, l1)", name));
}

double UtilityLoss(Objective objective, std::span<const double> p,
                   std::span<const double> q) {
  double total = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (objective == Objective::kL1) {
      total += std::abs(p[i] - q[i]);
    } else if (p[i] > 0) {
      if (q[i] <= 0) return std::numeric_limits<double>::infinity();
      total += p[i] * std::log(p[i] / q[i]);
    }
  }
  return std::max(total, 0.0);
}

std::string_view SolveStatusName(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kIterationLimit:
      return "iteration_limit";
    case SolveStatus::kNumericalBreakdown:
      return "numerical_breakdown";
  }
  return "?";
}

std::string_view SofStrategyName(SofStrategy strategy) {
  return strategy == SofStrategy::kFixConditional ? "fix_conditional"
                                                  : "alternating";
}

absl::StatusOr<SofStrategy> ParseSofStrategy(std::string_view name) {
  if (name == "fix_conditional") return SofStrategy::kFixConditional;
  if (name == "alternating") return SofStrategy::kAlternating;
  return absl::InvalidArgumentError(fmt::format(
      "unknown suppressed strategy '{}' (fix_conditional, alternating)", name));
}

Problem::Problem(JointPmf pmf, Objective objective, LinearConstraintSet disc,
                 LinearConstraintSet dist)
    : pmf_(std::move(pmf)),
      objective_(objective),
      discrimination_(std::move(disc)),
      distortion_(std::move(dist)) {
  for (int cell = 0; cell < pmf_.schema().num_cells(); ++cell) {
    if (pmf_.mass()[cell] > 0) active_cells_.push_back(cell);
  }
  source_ = pmf_.FeatureOutcomeMarginal();
}

absl::StatusOr<Problem> Problem::FromConstraints(
    JointPmf pmf, Objective objective, LinearConstraintSet discrimination,
    LinearConstraintSet distortion) {
  const Schema& schema = pmf.schema();
  for (const LinearConstraintSet* set : {&discrimination, &distortion}) {
    for (const LinearConstraint& c : set->constraints) {
      for (const KernelTerm& t : c.terms) {
        if (t.cell < 0 || t.cell >= schema.num_cells() || t.output < 0 ||
            t.output >= schema.num_outputs()) {
          return absl::InvalidArgumentError(
              fmt::format("constraint '{}' refers to an entry outside the "
                          "kernel",
                          c.label));
        }
      }
    }
  }
  return Problem(std::move(pmf), objective, std::move(discrimination),
                 std::move(distortion));
}

std::vector<bool> Problem::FixedMask(bool exact_only) const {
  const int num_outputs = schema().num_outputs();
  std::vector<bool> mask(
      static_cast<size_t>(schema().num_cells()) * num_outputs, false);
  for (const LinearConstraintSet* set : {&discrimination_, &distortion_}) {
    for (const FixedEntry& f : set->fixed) {
      if (exact_only && !f.exact) continue;
      mask[static_cast<size_t>(f.cell) * num_outputs + f.output] = true;
    }
  }
  return mask;
}

std::vector<double> Problem::Image(std::span<const double> kernel) const {
  const int num_outputs = schema().num_outputs();
  std::vector<double> image(num_outputs, 0.0);
  for (int cell : active_cells_) {
    const double mass = pmf_.mass()[cell];
    for (int o = 0; o < num_outputs; ++o) {
      image[o] += mass * kernel[static_cast<size_t>(cell) * num_outputs + o];
    }
  }
  return image;
}

double Problem::ObjectiveValue(std::span<const double> kernel) const {
  return UtilityLoss(objective_, source_, Image(kernel));
}

std::vector<const LinearConstraint*> Problem::AllConstraints() const {
  std::vector<const LinearConstraint*> out;
  for (const LinearConstraintSet* set : {&discrimination_, &distortion_}) {
    for (const LinearConstraint& c : set->constraints) out.push_back(&c);
  }
  return out;
}

double Problem::MaxResidual(std::span<const double> kernel) const {
  double residual = 0;
  WorstConstraint(kernel, &residual);
  return residual;
}

int Problem::WorstConstraint(std::span<const double> kernel,
                             double* residual) const {
  const int num_outputs = schema().num_outputs();
  int worst = -1;
  double value = 0;
  const std::vector<const LinearConstraint*> all = AllConstraints();
  for (size_t i = 0; i < all.size(); ++i) {
    const double r = all[i]->Residual(kernel, num_outputs);
    if (worst < 0 || r > value) {
      worst = static_cast<int>(i);
      value = r;
    }
  }
  *residual = value;
  return worst;
}

std::vector<std::string> Problem::Warnings() const {
  std::vector<std::string> out = discrimination_.warnings;
  out.insert(out.end(), distortion_.warnings.begin(),
             distortion_.warnings.end());
  return out;
}

absl::StatusOr<Problem> Assemble(
    const JointPmf& pmf, const DiscriminationSpec& discrimination,
    const std::optional<DistortionControl>& distortion, Objective objective,
    const AssembleOptions& options) {
  FAIRPREP_ASSIGN_OR_RETURN(
      LinearConstraintSet disc,
      BuildDiscriminationConstraints(discrimination, pmf));
  LinearConstraintSet dist;
  if (distortion.has_value()) {
    FAIRPREP_ASSIGN_OR_RETURN(
        DistortionTable table,
        DistortionTable::Build(distortion->metric, pmf.schema()));
    FAIRPREP_ASSIGN_OR_RETURN(
        dist, BuildDistortionConstraints(table, distortion->budget, pmf,
                                         {options.fix_forbidden}));
  }
  return Problem::FromConstraints(pmf, objective, std::move(disc),
                                  std::move(dist));
}

namespace {

constexpr double kTieBreakWeight = 1e-9;

// Maps decision variables onto kernel entries of the active cells:
// k(slot, o) = coef * x[var] with var = -1 meaning k = 0.
struct Parametrization {
  int num_vars = 0;
  std::vector<int> var_of;  // [slot * num_outputs + o]
  std::vector<double> coef_of;
  std::vector<std::vector<int>> groups;  // each sums to 1
  std::vector<double> reference;         // tie-break target
  // Set when some simplex group has no free variable.
  std::string empty_group;
};

Parametrization StandardParametrization(const Problem& problem,
                                        const std::vector<bool>& mask) {
  const Schema& schema = problem.schema();
  const int num_outputs = schema.num_outputs();
  Parametrization p;
  const int slots = static_cast<int>(problem.active_cells().size());
  p.var_of.assign(static_cast<size_t>(slots) * num_outputs, -1);
  p.coef_of.assign(p.var_of.size(), 1.0);
  for (int slot = 0; slot < slots; ++slot) {
    const int cell = problem.active_cells()[slot];
    const int identity =
        Schema::OutputIndex((cell / 2) % schema.num_features(), cell % 2);
    std::vector<int> group;
    for (int o = 0; o < num_outputs; ++o) {
      if (mask[static_cast<size_t>(cell) * num_outputs + o]) continue;
      p.var_of[static_cast<size_t>(slot) * num_outputs + o] = p.num_vars;
      group.push_back(p.num_vars++);
      p.reference.push_back(o == identity ? 1.0 : 0.0);
    }
    if (group.empty() && p.empty_group.empty()) {
      p.empty_group =
          fmt::format("every entry of cell {} is pinned to zero", cell);
    }
    p.groups.push_back(std::move(group));
  }
  return p;
}

// Variables q(x̂|slot) with p(ŷ|x̂) held fixed.
Parametrization FeatureBlock(const Problem& problem,
                             const std::vector<bool>& mask,
                             const std::vector<double>& outcome_given) {
  const Schema& schema = problem.schema();
  const int num_outputs = schema.num_outputs();
  const int nx = schema.num_features();
  Parametrization p;
  const int slots = static_cast<int>(problem.active_cells().size());
  p.var_of.assign(static_cast<size_t>(slots) * num_outputs, -1);
  p.coef_of.assign(p.var_of.size(), 0.0);
  for (int slot = 0; slot < slots; ++slot) {
    const int cell = problem.active_cells()[slot];
    const int x = (cell / 2) % nx;
    std::vector<int> group;
    for (int xh = 0; xh < nx; ++xh) {
      bool pinned = false;
      for (int yh = 0; yh < 2; ++yh) {
        const int o = Schema::OutputIndex(xh, yh);
        if (outcome_given[o] > 0 &&
            mask[static_cast<size_t>(cell) * num_outputs + o]) {
          pinned = true;
        }
      }
      if (pinned) continue;
      const int var = p.num_vars++;
      group.push_back(var);
      p.reference.push_back(xh == x ? 1.0 : 0.0);
      for (int yh = 0; yh < 2; ++yh) {
        const int o = Schema::OutputIndex(xh, yh);
        if (outcome_given[o] <= 0) continue;
        p.var_of[static_cast<size_t>(slot) * num_outputs + o] = var;
        p.coef_of[static_cast<size_t>(slot) * num_outputs + o] =
            outcome_given[o];
      }
    }
    if (group.empty() && p.empty_group.empty()) {
      p.empty_group =
          fmt::format("every feature value of cell {} is pinned", cell);
    }
    p.groups.push_back(std::move(group));
  }
  return p;
}

// Variables p(ŷ|x̂) shared by all cells, with q(x̂|slot) held fixed. Entry
// var_of[o] for o = (x̂, ŷ) is reported through `output_var`.
Parametrization OutcomeBlock(const Problem& problem,
                             const std::vector<bool>& mask,
                             const std::vector<double>& feature_map,
                             const std::vector<double>& current,
                             std::vector<int>* output_var) {
  const Schema& schema = problem.schema();
  const int num_outputs = schema.num_outputs();
  const int nx = schema.num_features();
  const int slots = static_cast<int>(problem.active_cells().size());
  std::vector<bool> pinned(num_outputs, false);
  std::vector<bool> used(nx, false);
  for (int slot = 0; slot < slots; ++slot) {
    const int cell = problem.active_cells()[slot];
    for (int xh = 0; xh < nx; ++xh) {
      if (feature_map[static_cast<size_t>(cell) * nx + xh] <= 0) continue;
      used[xh] = true;
      for (int yh = 0; yh < 2; ++yh) {
        const int o = Schema::OutputIndex(xh, yh);
        if (mask[static_cast<size_t>(cell) * num_outputs + o]) {
          pinned[o] = true;
        }
      }
    }
  }
  Parametrization p;
  output_var->assign(num_outputs, -1);
  for (int xh = 0; xh < nx; ++xh) {
    std::vector<int> group;
    for (int yh = 0; yh < 2; ++yh) {
      const int o = Schema::OutputIndex(xh, yh);
      if (pinned[o]) continue;
      (*output_var)[o] = p.num_vars;
      group.push_back(p.num_vars++);
      p.reference.push_back(current[o]);
    }
    if (group.empty() && used[xh] && p.empty_group.empty()) {
      p.empty_group = fmt::format("both outcomes of feature {} are pinned",
                                  schema.FeatureLabel(xh));
    }
    if (!group.empty()) p.groups.push_back(std::move(group));
  }
  p.var_of.assign(static_cast<size_t>(slots) * num_outputs, -1);
  p.coef_of.assign(p.var_of.size(), 0.0);
  for (int slot = 0; slot < slots; ++slot) {
    const int cell = problem.active_cells()[slot];
    for (int o = 0; o < num_outputs; ++o) {
      const double q = feature_map[static_cast<size_t>(cell) * nx + o / 2];
      if (q <= 0 || (*output_var)[o] < 0) continue;
      p.var_of[static_cast<size_t>(slot) * num_outputs + o] = (*output_var)[o];
      p.coef_of[static_cast<size_t>(slot) * num_outputs + o] = q;
    }
  }
  return p;
}

struct BlockResult {
  SolveStatus status = SolveStatus::kIterationLimit;
  std::vector<double> vars;
  int iterations = 0;
  double gap = 0;
  double phase1_violation = 0;
  int worst_constraint = -1;
  double worst_residual = 0;
};

using KernelOf = std::function<std::vector<double>(const std::vector<double>&)>;

// Clips to >= 0 and renormalizes every simplex group.
void Normalize(const Parametrization& p, std::vector<double>* vars) {
  for (double& v : *vars) v = std::max(v, 0.0);
  for (const std::vector<int>& group : p.groups) {
    double total = 0;
    for (int v : group) total += (*vars)[v];
    for (int v : group) {
      (*vars)[v] = total > 0 ? (*vars)[v] / total
                             : 1.0 / static_cast<double>(group.size());
    }
  }
}

class ProgramBuilder {
 public:
  ProgramBuilder(const Problem& problem, const Parametrization& param)
      : problem_(problem), param_(param) {}

  // Folds every constraint onto the decision variables. Returns false and
  // sets `witness` when a constraint without free variables is violated.
  bool Fold(double tol, int* witness, double* witness_residual) {
    const int num_outputs = problem_.schema().num_outputs();
    std::vector<int> slot_of(problem_.schema().num_cells(), -1);
    for (size_t s = 0; s < problem_.active_cells().size(); ++s) {
      slot_of[problem_.active_cells()[s]] = static_cast<int>(s);
    }
    std::vector<double> scratch(param_.num_vars, 0.0);
    std::vector<int> touched;
    const std::vector<const LinearConstraint*> all = problem_.AllConstraints();
    for (size_t i = 0; i < all.size(); ++i) {
      touched.clear();
      for (const KernelTerm& t : all[i]->terms) {
        const int slot = slot_of[t.cell];
        if (slot < 0) continue;
        const size_t e = static_cast<size_t>(slot) * num_outputs + t.output;
        const int var = param_.var_of[e];
        if (var < 0) continue;
        if (scratch[var] == 0) touched.push_back(var);
        scratch[var] += t.coef * param_.coef_of[e];
        if (scratch[var] == 0) scratch[var] = 1e-300;
      }
      std::sort(touched.begin(), touched.end());
      Row row;
      double scale = 0;
      for (int var : touched) {
        const double v = scratch[var] == 1e-300 ? 0.0 : scratch[var];
        scratch[var] = 0;
        if (v == 0) continue;
        row.vars.push_back(var);
        row.coefs.push_back(v);
        scale = std::max(scale, std::abs(v));
      }
      if (row.vars.empty()) {
        if (all[i]->rhs < -tol) {
          *witness = static_cast<int>(i);
          *witness_residual = -all[i]->rhs;
          return false;
        }
        continue;
      }
      scale = 1.0 / std::max(scale, 1.0);
      for (double& c : row.coefs) c *= scale;
      row.rhs = all[i]->rhs * scale;
      rows_.push_back(std::move(row));
    }
    return true;
  }

  // Phase 1: min sum(v) s.t. groups, row + slack - v = rhs.
  SeparableProgram Phase1() const {
    const int n_param = param_.num_vars;
    const int n_ineq = static_cast<int>(rows_.size());
    const int n = n_param + 2 * n_ineq;
    const int m = static_cast<int>(param_.groups.size()) + n_ineq;
    std::vector<Eigen::Triplet<double>> t;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    int row = AddGroups(&t, &b);
    for (int i = 0; i < n_ineq; ++i, ++row) {
      AddRow(rows_[i], row, &t, &b);
      t.emplace_back(row, n_param + i, 1.0);
      t.emplace_back(row, n_param + n_ineq + i, -1.0);
    }
    SeparableProgram p = Base(m, n, t, b);
    p.c.tail(n_ineq).setOnes();
    return p;
  }

  // Phase 2 with image rows A_img x - z = 0 (KL) or A_img x - u + v = p (L1).
  SeparableProgram Phase2() const {
    const Schema& schema = problem_.schema();
    const int num_outputs = schema.num_outputs();
    const int n_param = param_.num_vars;
    const int n_ineq = static_cast<int>(rows_.size());
    const bool kl = problem_.objective() == Objective::kKl;
    const int n_aux = kl ? num_outputs : 2 * num_outputs;
    const int n = n_param + n_aux + n_ineq;
    const int m = static_cast<int>(param_.groups.size()) + num_outputs + n_ineq;
    std::vector<Eigen::Triplet<double>> t;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    int row = AddGroups(&t, &b);
    const int image_row = row;
    const std::vector<double>& source = problem_.source_marginal();
    for (size_t s = 0; s < problem_.active_cells().size(); ++s) {
      const double mass = problem_.pmf().mass()[problem_.active_cells()[s]];
      for (int o = 0; o < num_outputs; ++o) {
        const size_t e = s * num_outputs + o;
        if (param_.var_of[e] < 0) continue;
        t.emplace_back(image_row + o, param_.var_of[e],
                       mass * param_.coef_of[e]);
      }
    }
    for (int o = 0; o < num_outputs; ++o) {
      if (kl) {
        t.emplace_back(image_row + o, n_param + o, -1.0);
      } else {
        t.emplace_back(image_row + o, n_param + o, -1.0);
        t.emplace_back(image_row + o, n_param + num_outputs + o, 1.0);
        b[image_row + o] = source[o];
      }
    }
    row += num_outputs;
    for (int i = 0; i < n_ineq; ++i, ++row) {
      AddRow(rows_[i], row, &t, &b);
      t.emplace_back(row, n_param + n_aux + i, 1.0);
    }
    SeparableProgram p = Base(m, n, t, b);
    for (int o = 0; o < num_outputs; ++o) {
      if (kl) {
        p.w[n_param + o] = source[o];
        p.x0[n_param + o] = 1.0 / num_outputs;
      } else {
        p.c[n_param + o] = 1.0;
        p.c[n_param + num_outputs + o] = 1.0;
      }
    }
    for (int j = 0; j < n_param; ++j) {
      p.q[j] = kTieBreakWeight;
      p.c[j] = -kTieBreakWeight * param_.reference[j];
    }
    return p;
  }

  int num_rows() const { return static_cast<int>(rows_.size()); }

 private:
  struct Row {
    std::vector<int> vars;
    std::vector<double> coefs;
    double rhs = 0;
  };

  int AddGroups(std::vector<Eigen::Triplet<double>>* t,
                Eigen::VectorXd* b) const {
    int row = 0;
    for (const std::vector<int>& group : param_.groups) {
      for (int v : group) t->emplace_back(row, v, 1.0);
      (*b)[row++] = 1.0;
    }
    return row;
  }

  static void AddRow(const Row& r, int row,
                     std::vector<Eigen::Triplet<double>>* t,
                     Eigen::VectorXd* b) {
    for (size_t k = 0; k < r.vars.size(); ++k) {
      t->emplace_back(row, r.vars[k], r.coefs[k]);
    }
    (*b)[row] = r.rhs;
  }

  SeparableProgram Base(int m, int n,
                        const std::vector<Eigen::Triplet<double>>& t,
                        const Eigen::VectorXd& b) const {
    SeparableProgram p;
    p.a.resize(m, n);
    p.a.setFromTriplets(t.begin(), t.end());
    p.b = b;
    p.c = Eigen::VectorXd::Zero(n);
    p.q = Eigen::VectorXd::Zero(n);
    p.w = Eigen::VectorXd::Zero(n);
    p.x0 = Eigen::VectorXd::Ones(n);
    for (const std::vector<int>& group : param_.groups) {
      for (int v : group) p.x0[v] = 1.0 / static_cast<double>(group.size());
    }
    return p;
  }

  const Problem& problem_;
  const Parametrization& param_;
  std::vector<Row> rows_;
};

SolveStatus FromIpm(IpmStatus status) {
  switch (status) {
    case IpmStatus::kConverged:
      return SolveStatus::kOptimal;
    case IpmStatus::kIterationLimit:
      return SolveStatus::kIterationLimit;
    case IpmStatus::kNumericalBreakdown:
      return SolveStatus::kNumericalBreakdown;
  }
  return SolveStatus::kNumericalBreakdown;
}

BlockResult SolveParametrized(const Problem& problem,
                              const Parametrization& param,
                              const SolverSettings& settings,
                              const KernelOf& kernel_of) {
  BlockResult result;
  if (!param.empty_group.empty()) {
    result.status = SolveStatus::kInfeasible;
    result.phase1_violation = std::numeric_limits<double>::infinity();
    return result;
  }
  ProgramBuilder builder(problem, param);
  int witness = -1;
  double witness_residual = 0;
  if (!builder.Fold(settings.tol, &witness, &witness_residual)) {
    result.status = SolveStatus::kInfeasible;
    result.phase1_violation = witness_residual;
    result.worst_constraint = witness;
    result.worst_residual = witness_residual;
    return result;
  }
  IpmOptions ipm;
  ipm.primal_tol = 1e-2 * settings.tol;
  ipm.dual_tol = 1e-2 * settings.tol;
  ipm.gap_tol = 1e-2 * settings.tol;
  ipm.max_iters = std::min(settings.max_iters, 1000);
  ipm.parallel = settings.parallel;

  auto extract = [&](const Eigen::VectorXd& x) {
    std::vector<double> vars(x.data(), x.data() + param.num_vars);
    Normalize(param, &vars);
    return vars;
  };

  if (builder.num_rows() > 0) {
    const IpmResult phase1 = SolveSeparable(builder.Phase1(), ipm);
    result.iterations += phase1.iterations;
    const std::vector<double> vars = extract(phase1.x);
    const std::vector<double> kernel = kernel_of(vars);
    result.worst_constraint =
        problem.WorstConstraint(kernel, &result.worst_residual);
    result.phase1_violation = phase1.x.tail(builder.num_rows()).sum();
    if (result.worst_residual > settings.tol) {
      result.vars = vars;
      result.status = phase1.status == IpmStatus::kConverged
                          ? SolveStatus::kInfeasible
                          : FromIpm(phase1.status);
      return result;
    }
  }
  const IpmResult phase2 = SolveSeparable(builder.Phase2(), ipm);
  result.iterations += phase2.iterations;
  result.gap = phase2.gap;
  result.vars = extract(phase2.x);
  result.status = FromIpm(phase2.status);
  const std::vector<double> kernel = kernel_of(result.vars);
  result.worst_constraint =
      problem.WorstConstraint(kernel, &result.worst_residual);
  if (result.status == SolveStatus::kOptimal &&
      (result.worst_residual > settings.tol || result.gap > settings.tol)) {
    result.status = SolveStatus::kNumericalBreakdown;
  }
  return result;
}

std::vector<double> IdentityKernel(const Schema& schema) {
  const TransformKernel identity = TransformKernel::Identity(schema);
  return std::vector<double>(identity.probs().begin(), identity.probs().end());
}

void FillDiagnostics(const Problem& problem, const BlockResult& block,
                     Solution* solution) {
  solution->status = block.status;
  solution->iterations += block.iterations;
  solution->gap = block.gap;
  solution->phase1_violation = block.phase1_violation;
  if (block.status == SolveStatus::kInfeasible) {
    solution->worst_constraint = block.worst_constraint;
    solution->worst_residual = block.worst_residual;
    if (block.worst_constraint >= 0) {
      solution->worst_label =
          problem.AllConstraints()[block.worst_constraint]->label;
    }
  }
}

}  // namespace

absl::StatusOr<Solution> Solve(const Problem& problem,
                               const SolverSettings& settings) {
  if (!(settings.tol > 0)) {
    return absl::InvalidArgumentError("solver tolerance must be positive");
  }
  if (settings.max_iters < 1) {
    return absl::InvalidArgumentError("max_iters must be positive");
  }
  const Schema& schema = problem.schema();
  const int num_outputs = schema.num_outputs();
  const Parametrization param =
      StandardParametrization(problem, problem.FixedMask(false));
  const std::vector<double> identity = IdentityKernel(schema);
  KernelOf kernel_of = [&](const std::vector<double>& vars) {
    std::vector<double> kernel = identity;
    for (size_t s = 0; s < problem.active_cells().size(); ++s) {
      const size_t base =
          static_cast<size_t>(problem.active_cells()[s]) * num_outputs;
      for (int o = 0; o < num_outputs; ++o) {
        const int var = param.var_of[s * num_outputs + o];
        kernel[base + o] = var < 0 ? 0.0 : vars[var];
      }
    }
    return kernel;
  };
  const BlockResult block =
      SolveParametrized(problem, param, settings, kernel_of);
  std::vector<double> probs =
      block.vars.empty() ? identity : kernel_of(block.vars);
  FAIRPREP_ASSIGN_OR_RETURN(TransformKernel kernel,
                            TransformKernel::Create(schema, probs));
  Solution solution(std::move(kernel));
  FillDiagnostics(problem, block, &solution);
  solution.objective = problem.ObjectiveValue(probs);
  solution.max_residual = problem.MaxResidual(probs);
  solution.warnings = problem.Warnings();
  return solution;
}

absl::StatusOr<SweepResult> SweepEpsilon(
    const JointPmf& pmf, const DiscriminationSpec& discrimination,
    const std::optional<DistortionControl>& distortion, Objective objective,
    std::span<const double> grid, const SolverSettings& settings,
    const AssembleOptions& options) {
  for (size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      return absl::InvalidArgumentError("epsilon grid must be ascending");
    }
  }
  const int count = static_cast<int>(grid.size());
  std::vector<SweepPoint> points(count);
  std::vector<absl::Status> errors(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < count; ++i) {
    DiscriminationSpec spec = discrimination;
    spec.epsilon = grid[i];
    absl::StatusOr<Problem> problem =
        Assemble(pmf, spec, distortion, objective, options);
    if (!problem.ok()) {
      errors[i] = problem.status();
      continue;
    }
    absl::StatusOr<Solution> solution = Solve(*problem, settings);
    if (!solution.ok()) {
      errors[i] = solution.status();
      continue;
    }
    points[i] = {grid[i], solution->status, solution->objective,
                 solution->max_residual};
  }
  for (const absl::Status& s : errors) {
    if (!s.ok()) return s;
  }
  SweepResult result;
  result.points = std::move(points);
  const SweepPoint* previous = nullptr;
  for (const SweepPoint& p : result.points) {
    const bool feasible = p.status == SolveStatus::kOptimal;
    if (feasible && !result.first_feasible.has_value()) {
      result.first_feasible = p.epsilon;
    }
    if (feasible && p.objective <= settings.tol &&
        !result.first_zero.has_value()) {
      result.first_zero = p.epsilon;
    }
    if (previous != nullptr && previous->status == SolveStatus::kOptimal) {
      if (!feasible || p.objective > previous->objective + settings.tol) {
        result.monotone = false;
      }
    }
    previous = &p;
  }
  return result;
}

namespace {

// k(x̂,ŷ|c) = p(ŷ|x̂) q(x̂|c) over every cell.
std::vector<double> ProductKernel(const Schema& schema,
                                  const std::vector<double>& feature_map,
                                  const std::vector<double>& outcome_given) {
  const int nx = schema.num_features();
  const int num_outputs = schema.num_outputs();
  std::vector<double> kernel(
      static_cast<size_t>(schema.num_cells()) * num_outputs, 0.0);
  for (int cell = 0; cell < schema.num_cells(); ++cell) {
    for (int xh = 0; xh < nx; ++xh) {
      const double q = feature_map[static_cast<size_t>(cell) * nx + xh];
      for (int yh = 0; yh < 2; ++yh) {
        kernel[static_cast<size_t>(cell) * num_outputs + xh * 2 + yh] =
            q * outcome_given[xh * 2 + yh];
      }
    }
  }
  return kernel;
}

std::vector<double> IdentityFeatureMap(const Schema& schema) {
  const int nx = schema.num_features();
  std::vector<double> q(static_cast<size_t>(schema.num_cells()) * nx, 0.0);
  for (int cell = 0; cell < schema.num_cells(); ++cell) {
    q[static_cast<size_t>(cell) * nx + (cell / 2) % nx] = 1.0;
  }
  return q;
}

struct Factors {
  std::vector<double> feature_map;
  std::vector<double> outcome_given;
};

std::vector<double> FeatureMapFromVars(const Problem& problem,
                                       const Parametrization& param,
                                       const std::vector<double>& vars) {
  const Schema& schema = problem.schema();
  const int nx = schema.num_features();
  std::vector<double> q = IdentityFeatureMap(schema);
  for (size_t s = 0; s < problem.active_cells().size(); ++s) {
    const int cell = problem.active_cells()[s];
    for (int xh = 0; xh < nx; ++xh) q[static_cast<size_t>(cell) * nx + xh] = 0;
  }
  // Each (slot, x̂) variable appears in the entries (x̂, 0) and (x̂, 1).
  const int num_outputs = schema.num_outputs();
  for (size_t s = 0; s < problem.active_cells().size(); ++s) {
    const int cell = problem.active_cells()[s];
    for (int o = 0; o < num_outputs; ++o) {
      const int var = param.var_of[s * num_outputs + o];
      if (var >= 0) q[static_cast<size_t>(cell) * nx + o / 2] = vars[var];
    }
  }
  return q;
}

std::vector<double> FeatureMarginalOf(const std::vector<double>& xy) {
  std::vector<double> x(xy.size() / 2, 0.0);
  for (size_t o = 0; o < xy.size(); ++o) x[o / 2] += xy[o];
  return x;
}

struct BlockOutcome {
  BlockResult block;
  Factors factors;
  std::vector<double> kernel;
  double objective = 0;
};

// Q-step: solves for q(x̂|c) with p(ŷ|x̂) fixed.
BlockOutcome SolveFeatureBlock(const Problem& problem,
                               const std::vector<bool>& mask,
                               const std::vector<double>& outcome_given,
                               const SolverSettings& settings) {
  const Parametrization param = FeatureBlock(problem, mask, outcome_given);
  KernelOf kernel_of = [&](const std::vector<double>& vars) {
    return ProductKernel(problem.schema(),
                         FeatureMapFromVars(problem, param, vars),
                         outcome_given);
  };
  BlockOutcome out;
  out.block = SolveParametrized(problem, param, settings, kernel_of);
  if (!out.block.vars.empty()) {
    out.factors = {FeatureMapFromVars(problem, param, out.block.vars),
                   outcome_given};
    out.kernel = ProductKernel(problem.schema(), out.factors.feature_map,
                               out.factors.outcome_given);
    out.objective = problem.ObjectiveValue(out.kernel);
  }
  return out;
}

// P-step: solves for p(ŷ|x̂) with q(x̂|c) fixed.
BlockOutcome SolveOutcomeBlock(const Problem& problem,
                               const std::vector<bool>& mask,
                               const Factors& current,
                               const SolverSettings& settings) {
  std::vector<int> output_var;
  const Parametrization param = OutcomeBlock(
      problem, mask, current.feature_map, current.outcome_given, &output_var);
  auto outcome_from = [&](const std::vector<double>& vars) {
    std::vector<double> p = current.outcome_given;
    const int nx = problem.schema().num_features();
    for (int xh = 0; xh < nx; ++xh) {
      const int v0 = output_var[xh * 2];
      const int v1 = output_var[xh * 2 + 1];
      if (v0 < 0 && v1 < 0) continue;
      p[xh * 2] = v0 < 0 ? 0.0 : vars[v0];
      p[xh * 2 + 1] = v1 < 0 ? 0.0 : vars[v1];
    }
    return p;
  };
  KernelOf kernel_of = [&](const std::vector<double>& vars) {
    return ProductKernel(problem.schema(), current.feature_map,
                         outcome_from(vars));
  };
  BlockOutcome out;
  out.block = SolveParametrized(problem, param, settings, kernel_of);
  if (!out.block.vars.empty()) {
    out.factors = {current.feature_map, outcome_from(out.block.vars)};
    out.kernel = ProductKernel(problem.schema(), out.factors.feature_map,
                               out.factors.outcome_given);
    out.objective = problem.ObjectiveValue(out.kernel);
  }
  return out;
}

}  // namespace

absl::StatusOr<Solution> SolveSuppressed(const Problem& problem,
                                         SofStrategy strategy,
                                         const SolverSettings& settings,
                                         int max_outer) {
  if (!(settings.tol > 0)) {
    return absl::InvalidArgumentError("solver tolerance must be positive");
  }
  if (max_outer < 1) {
    return absl::InvalidArgumentError("max_outer must be positive");
  }
  const Schema& schema = problem.schema();
  const JointPmf& pmf = problem.pmf();
  const std::vector<bool> mask = problem.FixedMask(true);

  // p_{Y|X}, falling back to p_Y on feature values without mass.
  const std::vector<double> px = pmf.FeatureMarginal();
  const std::vector<double> pxy = pmf.FeatureOutcomeMarginal();
  const std::vector<double> py = pmf.OutcomeMarginal();
  std::vector<double> conditional(schema.num_outputs());
  std::vector<std::string> warnings = problem.Warnings();
  for (int x = 0; x < schema.num_features(); ++x) {
    for (int y = 0; y < 2; ++y) {
      conditional[x * 2 + y] = px[x] > 0 ? pxy[x * 2 + y] / px[x] : py[y];
    }
  }

  BlockOutcome current =
      SolveFeatureBlock(problem, mask, conditional, settings);
  int iterations = current.block.iterations;
  std::optional<double> lower_bound;
  if (current.block.status == SolveStatus::kOptimal) {
    lower_bound = UtilityLoss(problem.objective(), px,
                              FeatureMarginalOf(problem.Image(current.kernel)));
    if (current.objective < *lower_bound - 1e-9) {
      return absl::InternalError(
          fmt::format("suppressed objective {} is below its lower bound {}",
                      current.objective, *lower_bound));
    }
  }
  std::vector<double> history;
  if (strategy == SofStrategy::kAlternating) {
    if (current.block.status != SolveStatus::kOptimal) {
      // Start from the identity feature map instead.
      Factors start{IdentityFeatureMap(schema), conditional};
      current = SolveOutcomeBlock(problem, mask, start, settings);
      iterations += current.block.iterations;
    }
    if (current.block.status == SolveStatus::kOptimal) {
      history.push_back(current.objective);
      for (int outer = 0; outer < max_outer; ++outer) {
        const double before = current.objective;
        for (int step = 0; step < 2; ++step) {
          BlockOutcome next =
              step == 0
                  ? SolveOutcomeBlock(problem, mask, current.factors, settings)
                  : SolveFeatureBlock(problem, mask,
                                      current.factors.outcome_given, settings);
          iterations += next.block.iterations;
          if (next.block.status == SolveStatus::kOptimal &&
              next.objective <= current.objective) {
            current = std::move(next);
          }
        }
        history.push_back(current.objective);
        if (before - current.objective < settings.tol) break;
      }
    }
  }

  std::vector<double> probs = current.kernel;
  if (current.block.status == SolveStatus::kOptimal) {
    lower_bound = UtilityLoss(problem.objective(), px,
                              FeatureMarginalOf(problem.Image(probs)));
  }
  if (probs.empty()) {
    current.factors = {IdentityFeatureMap(schema), conditional};
    probs = ProductKernel(schema, current.factors.feature_map,
                          current.factors.outcome_given);
  }
  FAIRPREP_ASSIGN_OR_RETURN(TransformKernel kernel,
                            TransformKernel::Create(schema, probs));
  Solution solution(std::move(kernel));
  FillDiagnostics(problem, current.block, &solution);
  solution.iterations = iterations;
  solution.objective = problem.ObjectiveValue(probs);
  solution.max_residual = problem.MaxResidual(probs);
  solution.factors =
      KernelFactors{current.factors.feature_map, current.factors.outcome_given};
  solution.objective_history = std::move(history);
  solution.lower_bound = lower_bound;
  solution.warnings = std::move(warnings);
  return solution;
}

}  // namespace fairprep
