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
// Built-in configurations for the COMPAS and UCI Adult experiments. Input
// paths are bare file names, resolved against a data directory at run time.

#ifndef FAIRPREP_PRESETS_H_
#define FAIRPREP_PRESETS_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "fairprep/config.h"

namespace fairprep {

struct PresetInfo {
  std::string_view name;
  std::string_view summary;
  std::string_view yaml;
};

const std::vector<PresetInfo>& Presets();

absl::StatusOr<PipelineConfig> LoadPreset(std::string_view name);

// Prefixes relative input paths with `base_dir` (no-op when empty).
void ResolveInputPaths(const std::string& base_dir, PipelineConfig* config);

}  // namespace fairprep

#endif  // FAIRPREP_PRESETS_H_
