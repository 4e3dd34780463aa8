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
#include "fairprep/presets.h"

#include <filesystem>

#include "fmt/format.h"

namespace fairprep {
namespace {

// Shared by compas and compas-literal; {recid_drop} is the 1 -> 0 cost.
constexpr char kCompasTemplate[] = R"(name: {name}
input:
  paths: [compas-scores-two-years.csv]
filters:
  - column: days_b_screening_arrest
    range: [-30, 30]
  - column: is_recid
    not_in: ['-1']
  - column: c_charge_degree
    not_in: [O]
  - column: score_text
    not_in: [N/A]
  - column: race
    in: [African-American, Caucasian]
schema:
  - name: sex
    role: D
    categories: [Female, Male]
  - name: race
    role: D
    categories: [African-American, Caucasian]
  - name: age_cat
    role: X
    categories: [Less than 25, 25 - 45, Greater than 45]
    ordinal: true
  - name: c_charge_degree
    role: X
    categories: [F, M]
  - name: priors_count
    role: X
    categories: ['0', 1-3, '>3']
    ordinal: true
    bins: {{edges: [0.5, 3.5], labels: ['0', 1-3, '>3']}}
  - name: is_recid
    role: Y
    categories: ['0', '1']
discrimination:
  mode: pairwise
  epsilon: 0.1
distortion:
  combiner: sum_of_squares
  penalties:
    - variable: age_cat
      ordinal: {{step: 1, max_jump: 1}}
    - variable: c_charge_degree
      matrix: [[0, 2], [2, 0]]
    - variable: priors_count
      ordinal: {{step: 1, max_jump: 1}}
    - variable: is_recid
      matrix: [[0, 10000], [{recid_drop}, 0]]
  budget:
    mode: expected
    expected: 0.5
objective: kl
seed: 20170601
audit:
  thresholds: [0.5, 1, 4]
sweep:
  epsilons: [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7]
)";

constexpr char kAdult[] = R"(name: adult
input:
  paths: [adult.data, adult.test]
  header: false
  columns: [age, workclass, fnlwgt, education, education-num, marital-status,
            occupation, relationship, race, sex, capital-gain, capital-loss,
            hours-per-week, native-country, income]
  trim: true
  skip_prefix: '|'
  missing: '?'
schema:
  - name: race
    role: D
    categories: [White, Minority]
    map: [[White, White], [Black, Minority], [Asian-Pac-Islander, Minority],
          [Amer-Indian-Eskimo, Minority], [Other, Minority]]
  - name: sex
    role: D
    categories: [Female, Male]
  - name: age
    role: X
    categories: ['<20', 20-29, 30-39, 40-49, 50-59, 60-69, '70+']
    ordinal: true
    bins:
      edges: [20, 30, 40, 50, 60, 70]
      labels: ['<20', 20-29, 30-39, 40-49, 50-59, 60-69, '70+']
  - name: education
    role: X
    column: education-num
    categories: ['<=5', '6', '7', '8', '9', '10', '11', '12', '>=13']
    ordinal: true
    bins:
      edges: [6, 7, 8, 9, 10, 11, 12, 13]
      labels: ['<=5', '6', '7', '8', '9', '10', '11', '12', '>=13']
  - name: income
    role: Y
    categories: ['<=50K', '>50K']
    map: [['<=50K', '<=50K'], ['<=50K.', '<=50K'], ['>50K', '>50K'],
          ['>50K.', '>50K']]
discrimination:
  mode: target
  epsilon: 0.15
distortion:
  combiner: rule_table
  rules:
    - value: 3
      when: [{variable: age, min_delta: 2}]
    - value: 3
      when: [{variable: age, max_delta: -2}]
    - value: 3
      when: [{variable: education, max_delta: -1}]
    - value: 3
      when: [{variable: education, min_delta: 2}]
    - value: 2
      when: [{variable: age, min_delta: 1}]
    - value: 2
      when: [{variable: age, max_delta: -1}]
    - value: 1
      when: [{variable: income, from: ['>50K'], to: ['<=50K']}]
  budget:
    mode: thresholded
    levels:
      - {threshold: 0.9, budget: 0.1}
      - {threshold: 1.9, budget: 0.05}
      - {threshold: 2.9, budget: 0}
objective: l1
seed: 20170601
sweep:
  epsilons: [0.05, 0.1, 0.15, 0.2, 0.25, 0.3]
)";

std::string Compas(std::string_view name, int recid_drop) {
  return fmt::format(kCompasTemplate, fmt::arg("name", name),
                     fmt::arg("recid_drop", recid_drop));
}

}  // namespace

const std::vector<PresetInfo>& Presets() {
  static const auto* presets = [] {
    static const std::string compas = Compas("compas", 1);
    static const std::string literal = Compas("compas-literal", 2);
    return new std::vector<PresetInfo>{
        {"compas",
         "ProPublica recidivism, pairwise eps 0.1, c 0.5, KL (recid 1->0 "
         "cost 1)",
         compas},
        {"compas-literal",
         "as compas with recid 1->0 cost 2 (infeasible at eps 0.1)", literal},
        {"adult", "UCI Adult, target eps 0.15, thresholded budget, L1", kAdult},
    };
  }();
  return *presets;
}

absl::StatusOr<PipelineConfig> LoadPreset(std::string_view name) {
  std::string known;
  for (const PresetInfo& p : Presets()) {
    if (p.name == name) return ParseConfig(p.yaml);
    known += fmt::format("{}{}", known.empty() ? "" : ", ", p.name);
  }
  return absl::NotFoundError(
      fmt::format("unknown preset '{}' (known: {})", name, known));
}

void ResolveInputPaths(const std::string& base_dir, PipelineConfig* config) {
  if (base_dir.empty()) return;
  for (std::string& path : config->input.paths) {
    if (std::filesystem::path(path).is_relative()) {
      path = (std::filesystem::path(base_dir) / path).string();
    }
  }
}

}  // namespace fairprep
