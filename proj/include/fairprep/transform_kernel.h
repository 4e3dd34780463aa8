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
// The learned randomized mapping p_{X̂,Ŷ|D,X,Y} and its text serialization.
//
// File format (comma-separated):
//
//   # fairprep-kernel fingerprint=<hex> <key>=<value> ...
//   d,x,y,x_hat,y_hat,prob
//   <group>,<feature>,<outcome>,<feature>,<outcome>,<probability>
//
// Labels of multi-variable D and X are "|"-joined. Rows are grouped by
// (d, x, y); zero-probability entries are omitted and every input cell
// appears at least once.

#ifndef FAIRPREP_TRANSFORM_KERNEL_H_
#define FAIRPREP_TRANSFORM_KERNEL_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fairprep/domain.h"

namespace fairprep {

// Factorized form k(x̂,ŷ|c) = p(ŷ|x̂) q(x̂|c).
struct KernelFactors {
  std::vector<double> feature_map;    // q, [cell * |X| + x̂]
  std::vector<double> outcome_given;  // p, [x̂ * 2 + ŷ]
};

class TransformKernel {
 public:
  // `probs` is [cell * num_outputs + output]; rows must be nonnegative and
  // sum to 1 within kRowTolerance.
  static absl::StatusOr<TransformKernel> Create(Schema schema,
                                                std::vector<double> probs);
  static TransformKernel Identity(Schema schema);

  const Schema& schema() const { return schema_; }
  std::span<const double> probs() const { return probs_; }
  std::span<const double> row(int cell) const {
    return std::span(probs_).subspan(
        static_cast<size_t>(cell) * schema_.num_outputs(),
        schema_.num_outputs());
  }
  double at(int cell, int output) const {
    return probs_[static_cast<size_t>(cell) * schema_.num_outputs() + output];
  }

  // Provenance key/value pairs, e.g. "fingerprint" and solver settings.
  const std::map<std::string, std::string>& provenance() const {
    return provenance_;
  }
  void set_provenance(std::string key, std::string value) {
    provenance_[std::move(key)] = std::move(value);
  }

 private:
  TransformKernel(Schema schema, std::vector<double> probs)
      : schema_(std::move(schema)), probs_(std::move(probs)) {}

  Schema schema_;
  std::vector<double> probs_;
  std::map<std::string, std::string> provenance_;
};

std::string SerializeKernel(const TransformKernel& kernel);
absl::StatusOr<TransformKernel> ParseKernel(const Schema& schema,
                                            std::string_view text);

absl::Status WriteKernelFile(const TransformKernel& kernel,
                             const std::string& path);
absl::StatusOr<TransformKernel> ReadKernelFile(const Schema& schema,
                                               const std::string& path);

// "# <tag> k1=v1 k2=v2" provenance line and its parser. Values may not
// contain whitespace.
std::string ProvenanceLine(std::string_view tag,
                           const std::map<std::string, std::string>& values);
std::map<std::string, std::string> ParseProvenanceLine(std::string_view line);

}  // namespace fairprep

#endif  // FAIRPREP_TRANSFORM_KERNEL_H_
