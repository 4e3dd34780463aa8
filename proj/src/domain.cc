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
#include "fairprep/domain.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "fairprep/status_macros.h"
#include "fairprep/strings.h"
#include "fmt/format.h"

namespace fairprep {

std::string_view RoleName(Role role) {
  switch (role) {
    case Role::kProtected:
      return "D";
    case Role::kFeature:
      return "X";
    case Role::kOutcome:
      return "Y";
  }
  return "?";
}

absl::StatusOr<Role> ParseRole(std::string_view name) {
  if (name == "D") return Role::kProtected;
  if (name == "X") return Role::kFeature;
  if (name == "Y") return Role::kOutcome;
  return absl::InvalidArgumentError(
      fmt::format("unknown role '{}' (expected D, X or Y)", name));
}

absl::StatusOr<Alphabet> Alphabet::Create(std::string name,
                                          std::vector<std::string> categories,
                                          bool ordinal) {
  if (name.empty()) {
    return absl::InvalidArgumentError("alphabet name must be non-empty");
  }
  if (categories.empty()) {
    return absl::InvalidArgumentError(
        fmt::format("alphabet '{}' has no categories", name));
  }
  std::set<std::string_view> seen;
  for (const std::string& label : categories) {
    if (label.find(kCompositeSeparator) != std::string::npos) {
      return absl::InvalidArgumentError(
          fmt::format("label '{}' of '{}' contains '{}'", label, name,
                      std::string(1, kCompositeSeparator)));
    }
    if (!seen.insert(label).second) {
      return absl::InvalidArgumentError(
          fmt::format("duplicate label '{}' in '{}'", label, name));
    }
  }
  Alphabet alphabet;
  alphabet.name_ = std::move(name);
  alphabet.categories_ = std::move(categories);
  alphabet.ordinal_ = ordinal;
  return alphabet;
}

std::optional<int> Alphabet::IndexOf(std::string_view label) const {
  for (int i = 0; i < size(); ++i) {
    if (categories_[i] == label) return i;
  }
  return std::nullopt;
}

absl::StatusOr<std::string> Quantizer::Apply(std::string_view raw) const {
  switch (kind) {
    case Kind::kMap:
      for (const auto& [from, to] : map) {
        if (from == raw) return to;
      }
      return absl::NotFoundError(
          fmt::format("value '{}' has no quantizer mapping", raw));
    case Kind::kBins: {
      const std::optional<double> value = ParseDouble(Trim(raw));
      if (!value.has_value() || std::isnan(*value)) {
        return absl::InvalidArgumentError(
            fmt::format("value '{}' is not numeric", raw));
      }
      for (size_t i = 0; i < edges.size(); ++i) {
        if (*value < edges[i]) return labels[i];
      }
      return labels.back();
    }
  }
  return absl::InternalError("unreachable");
}

absl::StatusOr<Schema> Schema::Create(std::vector<Variable> variables) {
  std::vector<Variable> ordered;
  ordered.reserve(variables.size());
  std::set<std::string> names;
  for (const Variable& v : variables) {
    if (!names.insert(v.name()).second) {
      return absl::InvalidArgumentError(
          fmt::format("duplicate variable '{}'", v.name()));
    }
    if (v.quantizer.has_value()) {
      const Quantizer& q = *v.quantizer;
      if (q.kind == Quantizer::Kind::kBins) {
        if (q.labels.size() != q.edges.size() + 1) {
          return absl::InvalidArgumentError(fmt::format(
              "bins quantizer of '{}' needs edges+1 labels", v.name()));
        }
        if (!std::is_sorted(q.edges.begin(), q.edges.end()) ||
            std::adjacent_find(q.edges.begin(), q.edges.end()) !=
                q.edges.end()) {
          return absl::InvalidArgumentError(fmt::format(
              "bins quantizer of '{}' needs increasing edges", v.name()));
        }
      }
      const auto& targets = q.kind == Quantizer::Kind::kBins ? q.labels : [&] {
        std::vector<std::string> t;
        for (const auto& kv : q.map) t.push_back(kv.second);
        return t;
      }();
      for (const std::string& label : targets) {
        if (!v.alphabet.IndexOf(label).has_value()) {
          return absl::InvalidArgumentError(fmt::format(
              "quantizer of '{}' produces '{}' which is not a category",
              v.name(), label));
        }
      }
    }
  }
  for (Role role : {Role::kProtected, Role::kFeature, Role::kOutcome}) {
    for (const Variable& v : variables) {
      if (v.role == role) ordered.push_back(v);
    }
  }
  Schema schema;
  for (const Variable& v : ordered) {
    if (v.role == Role::kProtected) {
      ++schema.num_protected_;
      schema.num_groups_ *= v.alphabet.size();
    } else if (v.role == Role::kFeature) {
      ++schema.num_features_vars_;
      schema.num_features_ *= v.alphabet.size();
    }
  }
  const int num_outcome_vars = static_cast<int>(ordered.size()) -
                               schema.num_protected_ -
                               schema.num_features_vars_;
  if (schema.num_protected_ < 1) {
    return absl::InvalidArgumentError("schema needs at least one D variable");
  }
  if (schema.num_features_vars_ < 1) {
    return absl::InvalidArgumentError("schema needs at least one X variable");
  }
  if (num_outcome_vars != 1) {
    return absl::InvalidArgumentError("schema needs exactly one Y variable");
  }
  if (ordered.back().alphabet.size() != 2) {
    return absl::InvalidArgumentError("the Y variable must be binary");
  }
  schema.variables_ = std::move(ordered);
  return schema;
}

namespace {

std::vector<int> DecodeMixedRadix(int flat, std::span<const Variable> vars) {
  std::vector<int> out(vars.size());
  for (int i = static_cast<int>(vars.size()) - 1; i >= 0; --i) {
    const int radix = vars[i].alphabet.size();
    out[i] = flat % radix;
    flat /= radix;
  }
  return out;
}

int EncodeMixedRadix(std::span<const int> indices,
                     std::span<const Variable> vars) {
  int flat = 0;
  for (size_t i = 0; i < vars.size(); ++i) {
    flat = flat * vars[i].alphabet.size() + indices[i];
  }
  return flat;
}

std::string CompositeLabel(std::span<const int> indices,
                           std::span<const Variable> vars) {
  std::string out;
  for (size_t i = 0; i < vars.size(); ++i) {
    if (i > 0) out.push_back(kCompositeSeparator);
    out += vars[i].alphabet.Label(indices[i]);
  }
  return out;
}

absl::StatusOr<int> ParseComposite(std::string_view composite,
                                   std::span<const Variable> vars) {
  const std::vector<std::string_view> parts =
      Split(composite, kCompositeSeparator);
  if (parts.size() != vars.size()) {
    return absl::InvalidArgumentError(fmt::format(
        "composite label '{}' needs {} parts", composite, vars.size()));
  }
  std::vector<int> indices(vars.size());
  for (size_t i = 0; i < vars.size(); ++i) {
    std::optional<int> index = vars[i].alphabet.IndexOf(parts[i]);
    if (!index.has_value()) {
      return absl::InvalidArgumentError(fmt::format(
          "'{}' is not a category of '{}'", parts[i], vars[i].name()));
    }
    indices[i] = *index;
  }
  return EncodeMixedRadix(indices, vars);
}

}  // namespace

std::vector<int> Schema::DecodeGroup(int d) const {
  return DecodeMixedRadix(d, std::span(variables_).subspan(0, num_protected_));
}

std::vector<int> Schema::DecodeFeature(int x) const {
  return DecodeMixedRadix(
      x, std::span(variables_).subspan(num_protected_, num_features_vars_));
}

int Schema::EncodeGroup(std::span<const int> indices) const {
  return EncodeMixedRadix(indices,
                          std::span(variables_).subspan(0, num_protected_));
}

int Schema::EncodeFeature(std::span<const int> indices) const {
  return EncodeMixedRadix(
      indices,
      std::span(variables_).subspan(num_protected_, num_features_vars_));
}

std::string Schema::GroupLabel(int d) const {
  return CompositeLabel(DecodeGroup(d),
                        std::span(variables_).subspan(0, num_protected_));
}

std::string Schema::FeatureLabel(int x) const {
  return CompositeLabel(
      DecodeFeature(x),
      std::span(variables_).subspan(num_protected_, num_features_vars_));
}

absl::StatusOr<int> Schema::ParseGroup(std::string_view composite) const {
  return ParseComposite(composite,
                        std::span(variables_).subspan(0, num_protected_));
}

absl::StatusOr<int> Schema::ParseFeature(std::string_view composite) const {
  return ParseComposite(
      composite,
      std::span(variables_).subspan(num_protected_, num_features_vars_));
}

absl::StatusOr<int> Schema::ParseOutcome(std::string_view label) const {
  std::optional<int> y = outcome().alphabet.IndexOf(label);
  if (!y.has_value()) {
    return absl::InvalidArgumentError(
        fmt::format("'{}' is not an outcome category", label));
  }
  return *y;
}

std::optional<int> Schema::FindVariable(std::string_view name) const {
  for (size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name() == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<int> Schema::FeaturePosition(std::string_view name) const {
  std::optional<int> index = FindVariable(name);
  if (!index.has_value() || variables_[*index].role != Role::kFeature) {
    return std::nullopt;
  }
  return *index - num_protected_;
}

absl::StatusOr<Dataset> Dataset::Create(Schema schema,
                                        std::vector<Record> records) {
  if (records.empty()) {
    return absl::InvalidArgumentError("dataset is empty");
  }
  for (size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    if (r.group < 0 || r.group >= schema.num_groups() || r.feature < 0 ||
        r.feature >= schema.num_features() ||
        (r.outcome.has_value() && (*r.outcome < 0 || *r.outcome > 1))) {
      return absl::InvalidArgumentError(
          fmt::format("record {} has an index out of range", i));
    }
  }
  return Dataset(std::move(schema), std::move(records));
}

bool Dataset::has_outcomes() const {
  return std::all_of(records_.begin(), records_.end(),
                     [](const Record& r) { return r.outcome.has_value(); });
}

absl::StatusOr<Distribution> Distribution::Create(std::vector<Axis> axes,
                                                  std::vector<double> mass) {
  int64_t expected = 1;
  for (const Axis& axis : axes) {
    if (axis.size <= 0) {
      return absl::InvalidArgumentError(
          fmt::format("axis '{}' has non-positive size", axis.name));
    }
    expected *= axis.size;
  }
  if (static_cast<int64_t>(mass.size()) != expected) {
    return absl::InvalidArgumentError(fmt::format(
        "mass has {} entries, axes need {}", mass.size(), expected));
  }
  double total = 0;
  for (double m : mass) {
    if (!(m >= 0) || !std::isfinite(m)) {
      return absl::InvalidArgumentError("mass entries must be finite and >= 0");
    }
    total += m;
  }
  if (std::abs(total - 1.0) > kRowTolerance) {
    return absl::InvalidArgumentError(
        fmt::format("mass sums to {}, not 1", total));
  }
  for (double& m : mass) m /= total;
  return Distribution(std::move(axes), std::move(mass));
}

std::optional<int> Distribution::AxisIndex(std::string_view name) const {
  for (size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

namespace {

// For each flat index of `axes`, the flat index within the sub-product of
// the selected axes (in original order).
std::vector<int64_t> ProjectIndices(const std::vector<Axis>& axes,
                                    const std::vector<bool>& selected) {
  int64_t total = 1;
  for (const Axis& a : axes) total *= a.size;
  std::vector<int64_t> out(total);
  std::vector<int> digits(axes.size(), 0);
  for (int64_t flat = 0; flat < total; ++flat) {
    int64_t projected = 0;
    for (size_t i = 0; i < axes.size(); ++i) {
      if (selected[i]) projected = projected * axes[i].size + digits[i];
    }
    out[flat] = projected;
    for (int i = static_cast<int>(axes.size()) - 1; i >= 0; --i) {
      if (++digits[i] < axes[i].size) break;
      digits[i] = 0;
    }
  }
  return out;
}

absl::StatusOr<std::vector<bool>> SelectAxes(
    const std::vector<Axis>& axes, std::span<const std::string> names) {
  std::vector<bool> selected(axes.size(), false);
  for (const std::string& name : names) {
    auto it = std::find_if(axes.begin(), axes.end(),
                           [&](const Axis& a) { return a.name == name; });
    if (it == axes.end()) {
      return absl::NotFoundError(fmt::format("unknown variable '{}'", name));
    }
    selected[it - axes.begin()] = true;
  }
  return selected;
}

}  // namespace

absl::StatusOr<Distribution> Distribution::Marginalize(
    std::span<const std::string> keep) const {
  FAIRPREP_ASSIGN_OR_RETURN(std::vector<bool> selected,
                            SelectAxes(axes_, keep));
  std::vector<Axis> kept;
  int64_t kept_size = 1;
  for (size_t i = 0; i < axes_.size(); ++i) {
    if (selected[i]) {
      kept.push_back(axes_[i]);
      kept_size *= axes_[i].size;
    }
  }
  const std::vector<int64_t> projection = ProjectIndices(axes_, selected);
  std::vector<double> mass(kept_size, 0.0);
  for (size_t flat = 0; flat < mass_.size(); ++flat) {
    mass[projection[flat]] += mass_[flat];
  }
  return Distribution(std::move(kept), std::move(mass));
}

absl::StatusOr<ConditionalPmf> Distribution::Condition(
    std::span<const std::string> given) const {
  FAIRPREP_ASSIGN_OR_RETURN(std::vector<bool> selected,
                            SelectAxes(axes_, given));
  std::vector<bool> target(selected.size());
  ConditionalPmf out;
  int64_t num_given = 1;
  int64_t row_size = 1;
  for (size_t i = 0; i < axes_.size(); ++i) {
    target[i] = !selected[i];
    if (selected[i]) {
      out.given_axes_.push_back(axes_[i]);
      num_given *= axes_[i].size;
    } else {
      out.target_axes_.push_back(axes_[i]);
      row_size *= axes_[i].size;
    }
  }
  const std::vector<int64_t> given_index = ProjectIndices(axes_, selected);
  const std::vector<int64_t> target_index = ProjectIndices(axes_, target);
  std::vector<std::vector<double>> rows(num_given,
                                        std::vector<double>(row_size, 0.0));
  out.given_mass_.assign(num_given, 0.0);
  for (size_t flat = 0; flat < mass_.size(); ++flat) {
    rows[given_index[flat]][target_index[flat]] += mass_[flat];
    out.given_mass_[given_index[flat]] += mass_[flat];
  }
  out.row_size_ = static_cast<int>(row_size);
  out.rows_.resize(num_given);
  for (int64_t g = 0; g < num_given; ++g) {
    const double total = out.given_mass_[g];
    if (total <= 0) continue;
    for (double& v : rows[g]) v /= total;
    out.rows_[g] = std::move(rows[g]);
  }
  return out;
}

int ConditionalPmf::num_absent() const {
  return static_cast<int>(
      std::count_if(rows_.begin(), rows_.end(),
                    [](const auto& r) { return !r.has_value(); }));
}

absl::StatusOr<JointPmf> JointPmf::FromMass(
    Schema schema, std::vector<double> mass,
    std::optional<int64_t> sample_count) {
  std::vector<Axis> axes;
  for (const Variable& v : schema.variables()) {
    axes.push_back({v.name(), v.alphabet.size()});
  }
  FAIRPREP_ASSIGN_OR_RETURN(
      Distribution distribution,
      Distribution::Create(std::move(axes), std::move(mass)));
  return JointPmf(std::move(schema), std::move(distribution), sample_count);
}

std::vector<double> JointPmf::GroupMarginal() const {
  std::vector<double> out(schema_.num_groups(), 0.0);
  for (int d = 0; d < schema_.num_groups(); ++d)
    for (int x = 0; x < schema_.num_features(); ++x)
      for (int y = 0; y < 2; ++y) out[d] += at(d, x, y);
  return out;
}

std::vector<double> JointPmf::OutcomeMarginal() const {
  std::vector<double> out(2, 0.0);
  for (int d = 0; d < schema_.num_groups(); ++d)
    for (int x = 0; x < schema_.num_features(); ++x)
      for (int y = 0; y < 2; ++y) out[y] += at(d, x, y);
  return out;
}

std::vector<double> JointPmf::FeatureMarginal() const {
  std::vector<double> out(schema_.num_features(), 0.0);
  for (int d = 0; d < schema_.num_groups(); ++d)
    for (int x = 0; x < schema_.num_features(); ++x)
      for (int y = 0; y < 2; ++y) out[x] += at(d, x, y);
  return out;
}

std::vector<double> JointPmf::FeatureOutcomeMarginal() const {
  std::vector<double> out(schema_.num_outputs(), 0.0);
  for (int d = 0; d < schema_.num_groups(); ++d)
    for (int x = 0; x < schema_.num_features(); ++x)
      for (int y = 0; y < 2; ++y) out[Schema::OutputIndex(x, y)] += at(d, x, y);
  return out;
}

std::vector<double> JointPmf::GroupOutcomeJoint() const {
  std::vector<double> out(schema_.num_groups() * 2, 0.0);
  for (int d = 0; d < schema_.num_groups(); ++d)
    for (int x = 0; x < schema_.num_features(); ++x)
      for (int y = 0; y < 2; ++y) out[d * 2 + y] += at(d, x, y);
  return out;
}

absl::StatusOr<JointPmf> EstimateEmpirical(const Dataset& dataset) {
  if (dataset.size() == 0) {
    return absl::InvalidArgumentError("dataset is empty");
  }
  const Schema& schema = dataset.schema();
  std::vector<double> counts(schema.num_cells(), 0.0);
  for (const Record& r : dataset.records()) {
    if (!r.outcome.has_value()) {
      return absl::FailedPreconditionError(
          "MissingOutcome: a record lacks its outcome value");
    }
    counts[schema.CellIndex(r.group, r.feature, *r.outcome)] += 1.0;
  }
  const double n = static_cast<double>(dataset.size());
  for (double& c : counts) c /= n;
  return JointPmf::FromMass(schema, std::move(counts), dataset.size());
}

namespace {

std::vector<std::string> ExpandRoles(const Schema& schema,
                                     std::span<const std::string> names) {
  std::vector<std::string> out;
  for (const std::string& name : names) {
    absl::StatusOr<Role> role = ParseRole(name);
    if (role.ok() && !schema.FindVariable(name).has_value()) {
      for (const Variable& v : schema.variables()) {
        if (v.role == *role) out.push_back(v.name());
      }
    } else {
      out.push_back(name);
    }
  }
  return out;
}

}  // namespace

absl::StatusOr<Distribution> Marginalize(const JointPmf& pmf,
                                         std::span<const std::string> keep) {
  return pmf.distribution().Marginalize(ExpandRoles(pmf.schema(), keep));
}

absl::StatusOr<ConditionalPmf> Condition(const JointPmf& pmf,
                                         std::span<const std::string> given) {
  return pmf.distribution().Condition(ExpandRoles(pmf.schema(), given));
}

absl::StatusOr<double> KlDivergence(std::span<const double> p,
                                    std::span<const double> q) {
  if (p.size() != q.size()) {
    return absl::InvalidArgumentError("SupportMismatch: sizes differ");
  }
  double total = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) continue;
    if (q[i] <= 0) return std::numeric_limits<double>::infinity();
    total += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(total, 0.0);
}

absl::StatusOr<double> L1Distance(std::span<const double> p,
                                  std::span<const double> q) {
  if (p.size() != q.size()) {
    return absl::InvalidArgumentError("SupportMismatch: sizes differ");
  }
  double total = 0;
  for (size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return total;
}

}  // namespace fairprep
