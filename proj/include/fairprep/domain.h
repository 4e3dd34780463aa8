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
//
// Finite categorical domains, datasets over them, and exact algebra on
// discrete distributions (estimation, marginalization, conditioning,
// divergences).
//
// A schema has one or more protected variables (role D), one or more feature
// variables (role X) and exactly one binary outcome (role Y). Multi-variable
// D and X are flattened to a single product index, first variable most
// significant, so the joint mass over (d, x, y) is stored row-major at
// (d * |X| + x) * 2 + y. The same array is also the row-major layout over the
// individual schema variables in canonical order (D..., X..., Y).

#ifndef FAIRPREP_DOMAIN_H_
#define FAIRPREP_DOMAIN_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace fairprep {

// Tolerance for total mass of stored distributions.
inline constexpr double kStorageTolerance = 1e-12;
// Tolerance for row sums of conditional distributions and kernels.
inline constexpr double kRowTolerance = 1e-9;

// Separator used for composite labels of multi-variable D and X.
inline constexpr char kCompositeSeparator = '|';

enum class Role { kProtected, kFeature, kOutcome };

std::string_view RoleName(Role role);  // "D", "X" or "Y".
absl::StatusOr<Role> ParseRole(std::string_view name);

class Alphabet {
 public:
  static absl::StatusOr<Alphabet> Create(std::string name,
                                         std::vector<std::string> categories,
                                         bool ordinal = false);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& categories() const { return categories_; }
  bool ordinal() const { return ordinal_; }
  int size() const { return static_cast<int>(categories_.size()); }

  std::optional<int> IndexOf(std::string_view label) const;
  const std::string& Label(int index) const { return categories_[index]; }

  bool operator==(const Alphabet&) const = default;

 private:
  Alphabet() = default;

  std::string name_;
  std::vector<std::string> categories_;
  bool ordinal_ = false;
};

// Maps raw text values of a source column onto category labels. Applied at
// ingestion only.
struct Quantizer {
  enum class Kind { kMap, kBins };

  Kind kind = Kind::kMap;
  // kMap: raw value -> category label, in declaration order.
  std::vector<std::pair<std::string, std::string>> map;
  // kBins: numeric value v gets labels[i] for the first i with v < edges[i],
  // and labels.back() otherwise. labels.size() == edges.size() + 1.
  std::vector<double> edges;
  std::vector<std::string> labels;

  absl::StatusOr<std::string> Apply(std::string_view raw) const;
  bool operator==(const Quantizer&) const = default;
};

struct Variable {
  Alphabet alphabet;
  Role role = Role::kFeature;
  // Source column in the input file; empty means the alphabet name.
  std::string column;
  std::optional<Quantizer> quantizer;

  const std::string& name() const { return alphabet.name(); }
  const std::string& source_column() const {
    return column.empty() ? alphabet.name() : column;
  }
  bool operator==(const Variable&) const = default;
};

class Schema {
 public:
  // Variables are reordered canonically (D..., X..., Y) keeping the relative
  // order within each role.
  static absl::StatusOr<Schema> Create(std::vector<Variable> variables);

  const std::vector<Variable>& variables() const { return variables_; }
  int num_protected_variables() const { return num_protected_; }
  int num_feature_variables() const { return num_features_vars_; }
  const Variable& outcome() const { return variables_.back(); }

  int num_groups() const { return num_groups_; }
  int num_features() const { return num_features_; }
  static constexpr int num_outcomes() { return 2; }
  int num_cells() const { return num_groups_ * num_features_ * 2; }
  int num_outputs() const { return num_features_ * 2; }

  int CellIndex(int d, int x, int y) const {
    return (d * num_features_ + x) * 2 + y;
  }
  static constexpr int OutputIndex(int x, int y) { return x * 2 + y; }

  // Per-variable category indices for a flattened group / feature index.
  std::vector<int> DecodeGroup(int d) const;
  std::vector<int> DecodeFeature(int x) const;
  int EncodeGroup(std::span<const int> indices) const;
  int EncodeFeature(std::span<const int> indices) const;

  std::string GroupLabel(int d) const;
  std::string FeatureLabel(int x) const;
  const std::string& OutcomeLabel(int y) const {
    return outcome().alphabet.Label(y);
  }
  absl::StatusOr<int> ParseGroup(std::string_view composite) const;
  absl::StatusOr<int> ParseFeature(std::string_view composite) const;
  absl::StatusOr<int> ParseOutcome(std::string_view label) const;

  // Index into variables(), or nullopt.
  std::optional<int> FindVariable(std::string_view name) const;
  // Position of a feature variable among the X variables, or nullopt.
  std::optional<int> FeaturePosition(std::string_view name) const;

  bool operator==(const Schema&) const = default;

 private:
  Schema() = default;

  std::vector<Variable> variables_;
  int num_protected_ = 0;
  int num_features_vars_ = 0;
  int num_groups_ = 1;
  int num_features_ = 1;
};

struct Record {
  int group = 0;
  int feature = 0;
  std::optional<int> outcome;

  bool operator==(const Record&) const = default;
};

class Dataset {
 public:
  static absl::StatusOr<Dataset> Create(Schema schema,
                                        std::vector<Record> records);

  const Schema& schema() const { return schema_; }
  std::span<const Record> records() const { return records_; }
  int64_t size() const { return static_cast<int64_t>(records_.size()); }
  bool has_outcomes() const;

 private:
  Dataset(Schema schema, std::vector<Record> records)
      : schema_(std::move(schema)), records_(std::move(records)) {}

  Schema schema_;
  std::vector<Record> records_;
};

struct Axis {
  std::string name;
  int size = 0;
  bool operator==(const Axis&) const = default;
};

class ConditionalPmf;

// Dense distribution over the product of named finite axes, row-major.
class Distribution {
 public:
  // Requires nonnegative entries summing to 1 within kRowTolerance; the
  // stored mass is renormalized so it sums to 1 within kStorageTolerance.
  static absl::StatusOr<Distribution> Create(std::vector<Axis> axes,
                                             std::vector<double> mass);

  const std::vector<Axis>& axes() const { return axes_; }
  std::span<const double> mass() const { return mass_; }
  int64_t size() const { return static_cast<int64_t>(mass_.size()); }
  std::optional<int> AxisIndex(std::string_view name) const;

  // Sums out every axis not in `keep`. Kept axes stay in their original
  // order.
  absl::StatusOr<Distribution> Marginalize(
      std::span<const std::string> keep) const;

  // Conditional of the remaining axes given `given`. Given-cells with zero
  // mass are reported as absent rows.
  absl::StatusOr<ConditionalPmf> Condition(
      std::span<const std::string> given) const;

 private:
  Distribution(std::vector<Axis> axes, std::vector<double> mass)
      : axes_(std::move(axes)), mass_(std::move(mass)) {}

  std::vector<Axis> axes_;
  std::vector<double> mass_;
};

class ConditionalPmf {
 public:
  const std::vector<Axis>& given_axes() const { return given_axes_; }
  const std::vector<Axis>& target_axes() const { return target_axes_; }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  int row_size() const { return row_size_; }

  bool absent(int given) const { return !rows_[given].has_value(); }
  // Requires !absent(given).
  std::span<const double> row(int given) const { return *rows_[given]; }
  double given_mass(int given) const { return given_mass_[given]; }
  int num_absent() const;

 private:
  friend class Distribution;

  std::vector<Axis> given_axes_;
  std::vector<Axis> target_axes_;
  int row_size_ = 0;
  std::vector<std::optional<std::vector<double>>> rows_;
  std::vector<double> given_mass_;
};

// Joint distribution p_{D,X,Y} over a schema.
class JointPmf {
 public:
  // `mass` is indexed by Schema::CellIndex.
  static absl::StatusOr<JointPmf> FromMass(
      Schema schema, std::vector<double> mass,
      std::optional<int64_t> sample_count = std::nullopt);

  const Schema& schema() const { return schema_; }
  const Distribution& distribution() const { return distribution_; }
  std::span<const double> mass() const { return distribution_.mass(); }
  std::optional<int64_t> sample_count() const { return sample_count_; }

  double at(int d, int x, int y) const {
    return distribution_.mass()[schema_.CellIndex(d, x, y)];
  }

  std::vector<double> GroupMarginal() const;           // p_D
  std::vector<double> OutcomeMarginal() const;         // p_Y
  std::vector<double> FeatureMarginal() const;         // p_X
  std::vector<double> FeatureOutcomeMarginal() const;  // p_{X,Y}, x * 2 + y
  std::vector<double> GroupOutcomeJoint() const;       // p_{D,Y}, d * 2 + y

 private:
  JointPmf(Schema schema, Distribution distribution,
           std::optional<int64_t> sample_count)
      : schema_(std::move(schema)),
        distribution_(std::move(distribution)),
        sample_count_(sample_count) {}

  Schema schema_;
  Distribution distribution_;
  std::optional<int64_t> sample_count_;
};

// Empirical distribution count(d, x, y) / n. Fails with InvalidArgument on an
// empty dataset and FailedPrecondition when a record lacks its outcome.
absl::StatusOr<JointPmf> EstimateEmpirical(const Dataset& dataset);

// Role names "D", "X" and "Y" expand to every variable with that role.
absl::StatusOr<Distribution> Marginalize(const JointPmf& pmf,
                                         std::span<const std::string> keep);
absl::StatusOr<ConditionalPmf> Condition(const JointPmf& pmf,
                                         std::span<const std::string> given);

// Sum p log(p / q) in nats, +infinity when q(i) = 0 < p(i).
absl::StatusOr<double> KlDivergence(std::span<const double> p,
                                    std::span<const double> q);
// Sum |p - q|.
absl::StatusOr<double> L1Distance(std::span<const double> p,
                                  std::span<const double> q);

}  // namespace fairprep

#endif  // FAIRPREP_DOMAIN_H_
