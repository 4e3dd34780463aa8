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
// Applying a learned kernel to records. Train mode samples (x̂, ŷ) from the
// full kernel row of (d, x, y). Apply mode has no y and samples x̂ from the
// kernel marginalized over y and ŷ with the training p_{Y|X,D}.

#ifndef FAIRPREP_TRANSFORM_H_
#define FAIRPREP_TRANSFORM_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fairprep/distortion.h"
#include "fairprep/domain.h"
#include "fairprep/transform_kernel.h"

namespace fairprep {

// p_{X̂|D,X}, one row over x̂ per (d, x).
class ApplyMapper {
 public:
  // (d, x) without training mass get the identity row and a warning.
  static absl::StatusOr<ApplyMapper> Derive(const TransformKernel& kernel,
                                            const JointPmf& pmf);

  const Schema& schema() const { return schema_; }
  std::span<const double> probs() const { return probs_; }
  std::span<const double> row(int d, int x) const {
    const int nx = schema_.num_features();
    return std::span(probs_).subspan(static_cast<size_t>(d * nx + x) * nx, nx);
  }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::map<std::string, std::string>& provenance() const {
    return provenance_;
  }

 private:
  ApplyMapper(Schema schema, std::vector<double> probs)
      : schema_(std::move(schema)), probs_(std::move(probs)) {}

  Schema schema_;
  std::vector<double> probs_;
  std::vector<std::string> warnings_;
  std::map<std::string, std::string> provenance_;
};

struct SeedSpec {
  uint64_t seed = 0;
  // Stream index of the first record; record i uses first_index + i.
  uint64_t first_index = 0;
};

struct TransformOptions {
  bool parallel = true;
};

// Requires every record to carry y. D is kept as is.
absl::StatusOr<Dataset> TransformTrain(const Dataset& data,
                                       const TransformKernel& kernel,
                                       const SeedSpec& seed,
                                       const TransformOptions& options = {});

// Outcomes in the input are ignored and absent in the output.
absl::StatusOr<Dataset> TransformApply(const Dataset& data,
                                       const ApplyMapper& mapper,
                                       const SeedSpec& seed,
                                       const TransformOptions& options = {});

// Per-(d, x) budgets c_{x,d} = Σ_y p_{Y|X,D}(y|x,d) c_{x,y,d}, one value per
// level. For thresholded budgets each level is averaged the same way and
// `derived` is set: the result bounds each exceedance probability at apply
// time but has no counterpart in the training program. (d, x) without
// training mass take the larger of the two y budgets.
struct ApplyBudget {
  std::vector<std::vector<double>> values;  // [d * |X| + x][level]
  bool derived = false;
  std::vector<std::string> warnings;
};

absl::StatusOr<ApplyBudget> ApplyDistortionBound(const DistortionBudget& budget,
                                                 const JointPmf& pmf);

}  // namespace fairprep

#endif  // FAIRPREP_TRANSFORM_H_
