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
#include "commands.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "fairprep/audit.h"
#include "fairprep/config.h"
#include "fairprep/distortion.h"
#include "fairprep/domain.h"
#include "fairprep/ingest.h"
#include "fairprep/optimizer.h"
#include "fairprep/presets.h"
#include "fairprep/strings.h"
#include "fairprep/transform.h"
#include "fairprep/transform_kernel.h"
#include "fmt/format.h"
#include "json.hpp"

namespace fairprep::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::string preset;
  std::string data_dir;
  std::string out_dir;
  std::string mode = "train";
  std::string kernel;
  std::string transformed;
  std::string input;
  std::string eps_grid;
  std::optional<uint64_t> seed_override;
  bool allow_mismatch = false;
  bool serial = false;
};

class Command {
 public:
  Command(std::string name, const Options& options, std::ostream& out,
          std::ostream& err)
      : name_(std::move(name)), options_(options), out_(out), err_(err) {}

  int Fit();
  int Transform();
  int Audit();
  int Sweep();
  int Validate();

 private:
  int Fail(int code, std::string_view kind, std::string_view message);
  int Fail(int code, std::string_view kind, const absl::Status& status) {
    return Fail(code, kind, std::string(status.message()));
  }
  int DataFail(const absl::Status& status);

  // Loads the config and derived state; nonzero on failure.
  int Load();
  absl::StatusOr<Dataset> ReadData(const std::string& input_override,
                                   bool require_outcome, IngestReport* report);
  absl::StatusOr<TransformKernel> ReadKernel(const std::string& path);
  // Nonzero when `provenance` names another config and no override is set.
  int CheckFingerprint(const std::map<std::string, std::string>& provenance,
                       std::string_view what);
  SolverSettings Settings() const {
    SolverSettings s = config_.solver;
    if (options_.serial) s.parallel = false;
    return s;
  }

  fs::path OutPath(std::string_view file) const {
    return fs::path(out_dir_) / std::string(file);
  }
  int Write(std::string_view file, std::string_view text);
  int WriteJson(std::string_view file, json doc);

  std::string name_;
  const Options& options_;
  std::ostream& out_;
  std::ostream& err_;

  PipelineConfig config_;
  std::optional<Schema> schema_;
  std::string fingerprint_;
  std::string out_dir_ = "out";
};

int Command::Fail(int code, std::string_view kind, std::string_view message) {
  err_ << fmt::format("fairprep {}: {}: {}\n", name_, kind, message);
  json doc;
  doc["command"] = name_;
  doc["error"] = std::string(kind);
  doc["message"] = std::string(message);
  doc["exit_code"] = code;
  if (!fingerprint_.empty()) doc["fingerprint"] = fingerprint_;
  std::error_code ec;
  fs::create_directories(out_dir_, ec);
  std::ofstream file(OutPath("error.json"));
  if (file) file << doc.dump(2) << "\n";
  return code;
}

int Command::DataFail(const absl::Status& status) {
  const std::string message(status.message());
  std::string_view kind = "DataError";
  if (status.code() == absl::StatusCode::kNotFound) kind = "IoError";
  if (message.find("MissingOutcome") != std::string::npos) {
    kind = "MissingOutcome";
  }
  return Fail(kExitIo, kind, message);
}

int Command::Write(std::string_view file, std::string_view text) {
  std::error_code ec;
  fs::create_directories(out_dir_, ec);
  const absl::Status s = WriteStringToFile(OutPath(file).string(), text);
  if (!s.ok()) return Fail(kExitIo, "IoError", s);
  return kExitOk;
}

int Command::WriteJson(std::string_view file, json doc) {
  json wrapped;
  wrapped["fingerprint"] = fingerprint_;
  wrapped["config"] = config_.name;
  for (auto& [key, value] : doc.items()) wrapped[key] = value;
  return Write(file, wrapped.dump(2) + "\n");
}

int Command::Load() {
  if (!options_.out_dir.empty()) out_dir_ = options_.out_dir;
  if (options_.config_path.empty() == options_.preset.empty()) {
    return Fail(kExitConfig, "ConfigError",
                "give exactly one of --config and --preset");
  }
  absl::StatusOr<PipelineConfig> config =
      options_.preset.empty() ? LoadConfigFile(options_.config_path)
                              : LoadPreset(options_.preset);
  if (!config.ok()) {
    const int code = config.status().code() == absl::StatusCode::kNotFound &&
                             options_.preset.empty()
                         ? kExitIo
                         : kExitConfig;
    return Fail(code, code == kExitIo ? "IoError" : "ConfigError",
                config.status());
  }
  config_ = *std::move(config);
  // Taken before path resolution so the data location does not matter.
  fingerprint_ = ConfigFingerprint(config_);
  std::string base = options_.data_dir;
  if (base.empty()) {
    if (const char* env = std::getenv("FAIRPREP_DATA_DIR")) base = env;
  }
  if (base.empty() && !options_.config_path.empty()) {
    base = fs::path(options_.config_path).parent_path().string();
  }
  ResolveInputPaths(base, &config_);
  if (options_.seed_override.has_value())
    config_.seed = *options_.seed_override;
  if (options_.out_dir.empty()) out_dir_ = config_.output_dir;
  absl::StatusOr<Schema> schema = ConfigSchema(config_);
  if (!schema.ok()) return Fail(kExitConfig, "ConfigError", schema.status());
  schema_ = *std::move(schema);
  return kExitOk;
}

absl::StatusOr<Dataset> Command::ReadData(const std::string& input_override,
                                          bool require_outcome,
                                          IngestReport* report) {
  SourceSpec spec = config_.input;
  if (!input_override.empty()) spec.paths = {input_override};
  absl::StatusOr<Table> table = ReadTable(spec);
  if (!table.ok()) return table.status();
  absl::StatusOr<Table> kept = ApplyFilters(*table, config_.filters, report);
  if (!kept.ok()) return kept.status();
  return BuildDataset(*kept, *schema_, spec, require_outcome, report);
}

absl::StatusOr<TransformKernel> Command::ReadKernel(const std::string& path) {
  return ReadKernelFile(*schema_, path);
}

int Command::CheckFingerprint(
    const std::map<std::string, std::string>& provenance,
    std::string_view what) {
  const auto it = provenance.find("fingerprint");
  const std::string found = it == provenance.end() ? "none" : it->second;
  if (found == fingerprint_) return kExitOk;
  const std::string message =
      fmt::format("{} was produced by config {} but the current config is {}",
                  what, found, fingerprint_);
  if (options_.allow_mismatch) {
    err_ << "warning: " << message << "\n";
    return kExitOk;
  }
  return Fail(kExitIo, "ProvenanceMismatch",
              message + " (pass --allow-provenance-mismatch to proceed)");
}

json IngestJson(const IngestReport& r) {
  return {{"rows_read", r.rows_read},
          {"rows_filtered", r.rows_filtered},
          {"rows_missing", r.rows_missing},
          {"rows_kept", r.rows_kept}};
}

// Left-aligned first column, right-aligned others.
std::string TextTable(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> width(header.size());
  for (size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size() && c < width.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) s += "  ";
      s += c == 0 ? fmt::format("{:<{}}", cells[c], width[c])
                  : fmt::format("{:>{}}", cells[c], width[c]);
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out = line(header);
  size_t total = 0;
  for (size_t w : width) total += w + 2;
  out += std::string(total - 2, '-') + "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

std::string F(double v, int digits = 6) {
  return fmt::format("{:.{}f}", v, digits);
}

std::string TextHeader(std::string_view title, std::string_view fingerprint) {
  return fmt::format("# {}\n# fingerprint {}\n\n", title, fingerprint);
}

// Per-group outcome rates before and after as a text table and JSON.
void RatesSection(const Schema& schema, std::span<const double> before,
                  std::span<const double> after, std::string* text, json* doc) {
  std::vector<std::vector<std::string>> rows;
  json groups = json::array();
  for (int d = 0; d < schema.num_groups(); ++d) {
    const double mb = before[d * 2] + before[d * 2 + 1];
    const double ma = after[d * 2] + after[d * 2 + 1];
    const double rb = mb > 0 ? before[d * 2 + 1] / mb : 0;
    const double ra = ma > 0 ? after[d * 2 + 1] / ma : 0;
    rows.push_back({schema.GroupLabel(d), F(mb, 4), F(rb, 4), F(ra, 4)});
    groups.push_back({{"group", schema.GroupLabel(d)},
                      {"mass", mb},
                      {"rate_before", rb},
                      {"rate_after", ra}});
  }
  *text += TextTable(
      {"group", "p(d)", fmt::format("p(Y={}|d)", schema.OutcomeLabel(1)),
       fmt::format("p(Yhat={}|d)", schema.OutcomeLabel(1))},
      rows);
  (*doc)["rates"] = groups;
}

int Command::Fit() {
  if (int rc = Load(); rc != kExitOk) return rc;
  IngestReport ingest;
  absl::StatusOr<Dataset> data = ReadData("", true, &ingest);
  if (!data.ok()) return DataFail(data.status());
  absl::StatusOr<JointPmf> pmf = EstimateEmpirical(*data);
  if (!pmf.ok()) return DataFail(pmf.status());
  absl::StatusOr<Problem> problem =
      Assemble(*pmf, config_.discrimination, config_.distortion,
               config_.objective, config_.assemble);
  if (!problem.ok()) return Fail(kExitConfig, "ConfigError", problem.status());
  absl::StatusOr<Solution> solution =
      config_.suppress.has_value()
          ? SolveSuppressed(*problem, config_.suppress->strategy, Settings(),
                            config_.suppress->max_outer)
          : Solve(*problem, Settings());
  if (!solution.ok())
    return Fail(kExitInfeasible, "SolverError", solution.status());

  const Solution& sol = *solution;
  const bool optimal = sol.status == SolveStatus::kOptimal;
  const TransformKernel identity = TransformKernel::Identity(*schema_);
  const int nout = schema_->num_outputs();

  json doc;
  doc["status"] = std::string(SolveStatusName(sol.status));
  doc["objective_kind"] = std::string(ObjectiveName(config_.objective));
  doc["samples"] = data->size();
  doc["ingest"] = IngestJson(ingest);
  doc["variables"] = problem->num_variables();
  doc["discrimination_constraints"] =
      problem->discrimination().constraints.size();
  doc["distortion_constraints"] = problem->distortion().constraints.size();
  doc["identity_objective"] = problem->ObjectiveValue(identity.probs());
  doc["iterations"] = sol.iterations;
  std::string text =
      TextHeader(fmt::format("fit {}", config_.name), fingerprint_);
  text += fmt::format("status      {}\n", SolveStatusName(sol.status));
  text += fmt::format("samples     {}\n", data->size());
  text += fmt::format("variables   {}\n", problem->num_variables());
  if (optimal) {
    const double disc =
        problem->discrimination().MaxResidual(sol.kernel.probs(), nout);
    const double dist =
        problem->distortion().MaxResidual(sol.kernel.probs(), nout);
    doc["objective"] = sol.objective;
    doc["max_residual"] = sol.max_residual;
    doc["discrimination_residual"] = disc;
    doc["distortion_residual"] = dist;
    doc["gap"] = sol.gap;
    text += fmt::format("objective   {:.6g} ({})\n", sol.objective,
                        ObjectiveName(config_.objective));
    text += fmt::format(
        "residuals   discrimination {:.3g}, distortion {:.3g}\n", disc, dist);
    if (sol.lower_bound.has_value()) {
      doc["lower_bound"] = *sol.lower_bound;
      text += fmt::format("lower bound {:.6g}\n", *sol.lower_bound);
    }
    if (!sol.objective_history.empty()) {
      doc["objective_history"] = sol.objective_history;
    }
    absl::StatusOr<JointPmf> after = PushforwardJoint(*pmf, sol.kernel);
    if (after.ok()) {
      text += "\n";
      RatesSection(*schema_, pmf->GroupOutcomeJoint(),
                   after->GroupOutcomeJoint(), &text, &doc);
    }
  } else {
    doc["phase1_violation"] = sol.phase1_violation;
    doc["worst_constraint"] = sol.worst_label;
    doc["worst_residual"] = sol.worst_residual;
    text += fmt::format("worst       {} (residual {:.3g})\n", sol.worst_label,
                        sol.worst_residual);
  }
  std::vector<std::string> warnings = problem->Warnings();
  warnings.insert(warnings.end(), sol.warnings.begin(), sol.warnings.end());
  doc["warnings"] = warnings;
  for (const std::string& w : warnings) text += fmt::format("warning: {}\n", w);

  if (int rc = WriteJson("fit.json", doc); rc != kExitOk) return rc;
  if (int rc = Write("fit.txt", text); rc != kExitOk) return rc;
  out_ << text;
  if (!optimal) {
    return Fail(kExitInfeasible,
                sol.status == SolveStatus::kInfeasible
                    ? "Infeasible"
                    : SolveStatusName(sol.status),
                fmt::format("no kernel written; worst constraint {} "
                            "(residual {:.3g})",
                            sol.worst_label, sol.worst_residual));
  }
  TransformKernel kernel = sol.kernel;
  kernel.set_provenance("fingerprint", fingerprint_);
  kernel.set_provenance("config", config_.name.empty() ? "-" : config_.name);
  kernel.set_provenance("tol", fmt::format("{}", config_.solver.tol));
  kernel.set_provenance("objective", fmt::format("{}", sol.objective));
  kernel.set_provenance("samples", fmt::format("{}", data->size()));
  return Write("kernel.csv", SerializeKernel(kernel));
}

int Command::Transform() {
  if (int rc = Load(); rc != kExitOk) return rc;
  const bool train = options_.mode == "train";
  if (!train && options_.mode != "apply") {
    return Fail(
        kExitConfig, "ConfigError",
        fmt::format("--mode must be train or apply, not '{}'", options_.mode));
  }
  const std::string kernel_path = options_.kernel.empty()
                                      ? OutPath("kernel.csv").string()
                                      : options_.kernel;
  absl::StatusOr<TransformKernel> kernel = ReadKernel(kernel_path);
  if (!kernel.ok()) {
    return Fail(kExitIo,
                kernel.status().code() == absl::StatusCode::kNotFound
                    ? "IoError"
                    : "SchemaMismatch",
                kernel.status());
  }
  if (int rc = CheckFingerprint(kernel->provenance(), kernel_path);
      rc != kExitOk) {
    return rc;
  }
  IngestReport ingest;
  absl::StatusOr<Dataset> data = ReadData(options_.input, train, &ingest);
  if (!data.ok()) return DataFail(data.status());
  const SeedSpec seed{config_.seed, 0};
  const TransformOptions topts{!options_.serial};
  absl::StatusOr<Dataset> result = absl::InternalError("unset");
  std::vector<std::string> warnings;
  json apply_budget;
  if (train) {
    result = TransformTrain(*data, *kernel, seed, topts);
  } else {
    // The mapper marginalizes Y with the training distribution.
    IngestReport train_ingest;
    absl::StatusOr<Dataset> training = ReadData("", true, &train_ingest);
    if (!training.ok()) return DataFail(training.status());
    absl::StatusOr<JointPmf> pmf = EstimateEmpirical(*training);
    if (!pmf.ok()) return DataFail(pmf.status());
    absl::StatusOr<ApplyMapper> mapper = ApplyMapper::Derive(*kernel, *pmf);
    if (!mapper.ok()) return DataFail(mapper.status());
    warnings = mapper->warnings();
    if (config_.distortion.has_value()) {
      absl::StatusOr<ApplyBudget> bound =
          ApplyDistortionBound(config_.distortion->budget, *pmf);
      if (!bound.ok()) return DataFail(bound.status());
      const Schema& schema = pmf->schema();
      json cells = json::array();
      for (int d = 0; d < schema.num_groups(); ++d) {
        for (int x = 0; x < schema.num_features(); ++x) {
          cells.push_back(
              {{"group", schema.GroupLabel(d)},
               {"feature", schema.FeatureLabel(x)},
               {"budget", bound->values[d * schema.num_features() + x]}});
        }
      }
      apply_budget["derived"] = bound->derived;
      apply_budget["cells"] = std::move(cells);
      for (std::string& w : bound->warnings) warnings.push_back(std::move(w));
    }
    result = TransformApply(*data, *mapper, seed, topts);
  }
  if (!result.ok()) return DataFail(result.status());
  WriteOptions wopts;
  wopts.stream_index = true;
  wopts.comment_lines.push_back(
      ProvenanceLine("fairprep-transform",
                     {{"fingerprint", fingerprint_},
                      {"seed", fmt::format("{}", config_.seed)},
                      {"mode", options_.mode}})
          .substr(2));
  const std::string file =
      train ? "transformed_train.csv" : "transformed_apply.csv";
  if (int rc = Write(file, WriteCategorical(*result, wopts)); rc != kExitOk) {
    return rc;
  }
  json doc;
  doc["mode"] = options_.mode;
  doc["seed"] = config_.seed;
  doc["records"] = result->size();
  doc["ingest"] = IngestJson(ingest);
  doc["output"] = OutPath(file).string();
  if (!apply_budget.is_null()) doc["apply_budget"] = std::move(apply_budget);
  doc["warnings"] = warnings;
  for (const std::string& w : warnings) err_ << "warning: " << w << "\n";
  out_ << fmt::format("transformed {} records ({} mode) -> {}\n",
                      result->size(), options_.mode, OutPath(file).string());
  return WriteJson(fmt::format("transform_{}.json", options_.mode), doc);
}

std::vector<double> AuditThresholds(const PipelineConfig& config) {
  if (!config.audit.thresholds.empty()) return config.audit.thresholds;
  std::vector<double> out;
  if (config.distortion.has_value()) {
    for (const ThresholdLevel& l : config.distortion->budget.levels) {
      out.push_back(l.threshold);
    }
  }
  return out;
}

json DistortionJson(const DistortionSummary& s, const Schema& schema) {
  json cells = json::array();
  for (const CellDistortion& c : s.cells) {
    const int y = c.cell % 2;
    const int x = (c.cell / 2) % schema.num_features();
    const int d = c.cell / 2 / schema.num_features();
    cells.push_back({{"group", schema.GroupLabel(d)},
                     {"feature", schema.FeatureLabel(x)},
                     {"outcome", schema.OutcomeLabel(y)},
                     {"count", c.count},
                     {"mean", c.mean},
                     {"max", c.max},
                     {"exceedance", c.exceedance}});
  }
  return {{"thresholds", s.thresholds},
          {"count", s.count},
          {"mean", s.mean},
          {"max", s.max},
          {"exceedance", s.exceedance},
          {"cells", cells}};
}

int Command::Audit() {
  if (int rc = Load(); rc != kExitOk) return rc;
  if (options_.kernel.empty() == options_.transformed.empty()) {
    return Fail(kExitConfig, "ConfigError",
                "give exactly one of --kernel and --transformed");
  }
  IngestReport ingest;
  absl::StatusOr<Dataset> original = ReadData(options_.input, true, &ingest);
  if (!original.ok()) return DataFail(original.status());
  absl::StatusOr<JointPmf> before = EstimateEmpirical(*original);
  if (!before.ok()) return DataFail(before.status());

  std::optional<JointPmf> after;
  std::optional<TransformKernel> kernel;
  std::optional<Dataset> transformed;
  std::string source;
  if (!options_.kernel.empty()) {
    absl::StatusOr<TransformKernel> k = ReadKernel(options_.kernel);
    if (!k.ok()) return DataFail(k.status());
    if (int rc = CheckFingerprint(k->provenance(), options_.kernel);
        rc != kExitOk) {
      return rc;
    }
    absl::StatusOr<JointPmf> pushed = PushforwardJoint(*before, *k);
    if (!pushed.ok()) return DataFail(pushed.status());
    after = *std::move(pushed);
    kernel = *std::move(k);
    source = "kernel";
  } else {
    absl::StatusOr<std::string> text = ReadFileToString(options_.transformed);
    if (!text.ok()) return DataFail(text.status());
    absl::StatusOr<CategoricalFile> file =
        ParseCategorical(*text, *schema_, config_.input.delimiter);
    if (!file.ok()) return DataFail(file.status());
    std::map<std::string, std::string> provenance;
    for (const std::string& line : file->comment_lines) {
      for (auto& [k, v] : ParseProvenanceLine(line)) provenance[k] = v;
    }
    if (int rc = CheckFingerprint(provenance, options_.transformed);
        rc != kExitOk) {
      return rc;
    }
    if (file->data.size() != original->size()) {
      return Fail(kExitIo, "LengthMismatch",
                  fmt::format("{} has {} records, the original data {}",
                              options_.transformed, file->data.size(),
                              original->size()));
    }
    if (!file->data.has_outcomes()) {
      return Fail(kExitIo, "MissingOutcome",
                  fmt::format("{} has no outcome column (apply-mode output "
                              "cannot be audited against outcomes)",
                              options_.transformed));
    }
    absl::StatusOr<JointPmf> empirical = EstimateEmpirical(file->data);
    if (!empirical.ok()) return DataFail(empirical.status());
    after = *std::move(empirical);
    transformed = std::move(file->data);
    source = "transformed";
  }

  const Schema& schema = *schema_;
  std::string report =
      TextHeader(fmt::format("audit {} ({} vs original)", config_.name, source),
                 fingerprint_);

  // Discrimination.
  absl::StatusOr<std::vector<double>> target =
      ResolveTarget(config_.discrimination, *before);
  if (!target.ok()) return Fail(kExitConfig, "ConfigError", target.status());
  json disc;
  std::string text;
  for (const auto& [label, pmf] :
       {std::pair<std::string, const JointPmf*>{"before", &*before},
        {"after", &*after}}) {
    absl::StatusOr<DiscriminationReport> r = AuditDiscrimination(
        schema, pmf->GroupOutcomeJoint(), *target, config_.discrimination);
    if (!r.ok()) return Fail(kExitIo, "DataError", r.status());
    disc[label] = {{"max_target_j", r->max_target_j},
                   {"max_pairwise_j", r->max_pairwise_j},
                   {"max_excess", r->max_excess},
                   {"within_epsilon", r->max_excess <= 1e-9}};
    text += fmt::format(
        "{:<6} max J target {:.4f}  pairwise {:.4f}  excess {:+.4f}\n", label,
        r->max_target_j, r->max_pairwise_j, r->max_excess);
  }
  disc["target"] = *target;
  disc["epsilon"] = config_.discrimination.epsilon;
  disc["mode"] =
      std::string(DiscriminationModeName(config_.discrimination.mode));
  text += "\n";
  RatesSection(schema, before->GroupOutcomeJoint(), after->GroupOutcomeJoint(),
               &text, &disc);
  if (int rc = WriteJson("audit_discrimination.json", disc); rc != kExitOk) {
    return rc;
  }
  if (int rc = Write("audit_discrimination.txt",
                     TextHeader("discrimination", fingerprint_) + text);
      rc != kExitOk) {
    return rc;
  }
  report += "[discrimination]\n" + text + "\n";

  // Utility.
  const std::vector<double> p = before->FeatureOutcomeMarginal();
  const std::vector<double> q = after->FeatureOutcomeMarginal();
  json util;
  util["l1"] = UtilityLoss(Objective::kL1, p, q);
  util["kl"] = UtilityLoss(Objective::kKl, p, q);
  util["objective_kind"] = std::string(ObjectiveName(config_.objective));
  util["objective"] = UtilityLoss(config_.objective, p, q);
  text = fmt::format(
      "KL(p_XY || p_XhatYhat) {:.6g}\nL1                     {:.6g}\n",
      util["kl"].get<double>(), util["l1"].get<double>());
  if (int rc = WriteJson("audit_utility.json", util); rc != kExitOk) return rc;
  if (int rc = Write("audit_utility.txt",
                     TextHeader("utility", fingerprint_) + text);
      rc != kExitOk) {
    return rc;
  }
  report += "[utility]\n" + text + "\n";

  // Distortion.
  json dist;
  text.clear();
  if (config_.distortion.has_value()) {
    absl::StatusOr<DistortionTable> table =
        DistortionTable::Build(config_.distortion->metric, schema);
    if (!table.ok()) return Fail(kExitConfig, "ConfigError", table.status());
    const std::vector<double> thresholds = AuditThresholds(config_);
    absl::StatusOr<DistortionSummary> s =
        kernel.has_value()
            ? AnalyticDistortion(*before, *kernel, *table, thresholds)
            : AuditDistortion(*original, *transformed, *table, thresholds);
    if (!s.ok()) return Fail(kExitIo, "LengthMismatch", s.status());
    dist = DistortionJson(*s, schema);
    text += fmt::format("mean {:.6g}  max {:.6g}\n", s->mean, s->max);
    for (size_t i = 0; i < thresholds.size(); ++i) {
      text += fmt::format("P(delta > {}) = {:.6g}\n", thresholds[i],
                          s->exceedance[i]);
    }
    double worst = 0;
    for (const CellDistortion& c : s->cells) worst = std::max(worst, c.mean);
    text += fmt::format("largest per-cell mean {:.6g}\n", worst);
  } else {
    dist["configured"] = false;
    text = "no distortion metric configured\n";
  }
  if (int rc = WriteJson("audit_distortion.json", dist); rc != kExitOk) {
    return rc;
  }
  if (int rc = Write("audit_distortion.txt",
                     TextHeader("distortion", fingerprint_) + text);
      rc != kExitOk) {
    return rc;
  }
  report += "[distortion]\n" + text + "\n";

  // Advantage.
  json adv;
  text.clear();
  for (const auto& [label, pmf] :
       {std::pair<std::string, const JointPmf*>{"before", &*before},
        {"after", &*after}}) {
    const std::vector<double> joint = pmf->GroupOutcomeJoint();
    absl::StatusOr<AdvantageReport> a =
        MapAdvantage(joint, schema.num_groups(), 2);
    if (!a.ok()) return Fail(kExitIo, "DataError", a.status());
    absl::StatusOr<EstimationVerdict> v = CheckEstimationDiscrimination(
        *a, config_.discrimination.epsilon, joint, *target);
    if (!v.ok()) return Fail(kExitIo, "DataError", v.status());
    adv[label] = {{"map_probability", a->map_probability},
                  {"blind_probability", a->blind_probability},
                  {"advantage", a->advantage},
                  {"max_j", v->max_j},
                  {"all_within", v->all_within},
                  {"advantage_within", v->advantage_within},
                  {"consistent", v->consistent}};
    text += fmt::format(
        "{:<6} P_c(D|Y) {:.4f}  blind {:.4f}  Adv {:.4f}  (1+eps {:.4f})\n",
        label, a->map_probability, a->blind_probability, a->advantage,
        1 + config_.discrimination.epsilon);
  }
  if (int rc = WriteJson("audit_advantage.json", adv); rc != kExitOk) return rc;
  if (int rc = Write("audit_advantage.txt",
                     TextHeader("advantage", fingerprint_) + text);
      rc != kExitOk) {
    return rc;
  }
  report += "[advantage]\n" + text + "\n";

  // Robustness of the kernel to estimation from n samples.
  json rob;
  text.clear();
  {
    const std::vector<double> joint = after->GroupOutcomeJoint();
    double c_m = std::numeric_limits<double>::infinity();
    for (double v : joint) {
      if (v > 0) c_m = std::min(c_m, v);
    }
    RobustnessParams params;
    params.n = original->size();
    params.beta = config_.audit.beta;
    params.m = schema.num_cells();
    params.c_m = c_m;
    params.epsilon = config_.discrimination.epsilon;
    params.mu = UtilityLoss(config_.objective, p, q);
    params.tau_limit = RobustnessTauLimit(joint);
    absl::StatusOr<RobustnessBound> b = RobustnessBounds(params);
    if (!b.ok()) return Fail(kExitIo, "DataError", b.status());
    rob = {{"n", params.n},
           {"beta", params.beta},
           {"m", params.m},
           {"c_m", params.c_m},
           {"tau", b->tau},
           {"tau_limit", *params.tau_limit},
           {"valid", b->valid},
           {"h", b->h},
           {"ratio_lower", b->ratio_lower},
           {"ratio_upper", b->ratio_upper},
           {"epsilon_drift", b->epsilon_drift},
           {"epsilon_linearized", b->epsilon_linearized},
           {"linearization_loose", b->linearization_loose},
           {"mu", params.mu},
           {"mu_drift", b->mu_drift},
           {"rate", b->rate}};
    text = fmt::format(
        "n {}  beta {}  m {}  c_m {:.4g}\n"
        "tau {:.4g} (limit {:.4g}, {})\n"
        "ratio interval [{:.4f}, {:.4f}]  eps drift {:.4f}  "
        "linearized {:.4f}{}\n"
        "mu {:.4g} -> {:.4g}\n",
        params.n, params.beta, params.m, params.c_m, b->tau, *params.tau_limit,
        b->valid ? "valid" : "bound not valid at this n", b->ratio_lower,
        b->ratio_upper, b->epsilon_drift, b->epsilon_linearized,
        b->linearization_loose ? " (loose)" : "", params.mu, b->mu_drift);
  }
  if (int rc = WriteJson("audit_robustness.json", rob); rc != kExitOk) {
    return rc;
  }
  if (int rc = Write("audit_robustness.txt",
                     TextHeader("robustness", fingerprint_) + text);
      rc != kExitOk) {
    return rc;
  }
  report += "[robustness]\n" + text + "\n";

  // Cohort deltas, one row per (d, x), plot-ready.
  absl::StatusOr<std::vector<CohortDelta>> deltas =
      CohortDeltas(*before, *after, config_.audit.min_cohort_samples);
  if (!deltas.ok()) return Fail(kExitIo, "DataError", deltas.status());
  std::string csv =
      fmt::format("# fairprep-cohorts fingerprint={}\n", fingerprint_);
  csv += "group,feature,samples,before,after,delta,shown\n";
  json cohorts = json::array();
  int shown = 0;
  for (const CohortDelta& c : *deltas) {
    csv += fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{}\n",
                       schema.GroupLabel(c.d), schema.FeatureLabel(c.x),
                       c.samples, c.before, c.after, c.delta, c.shown ? 1 : 0);
    cohorts.push_back({{"group", schema.GroupLabel(c.d)},
                       {"feature", schema.FeatureLabel(c.x)},
                       {"samples", c.samples},
                       {"before", c.before},
                       {"after", c.after},
                       {"delta", c.delta},
                       {"shown", c.shown}});
    shown += c.shown ? 1 : 0;
  }
  if (int rc = Write("cohort_deltas.csv", csv); rc != kExitOk) return rc;
  if (int rc = WriteJson("cohort_deltas.json",
                         {{"min_samples", config_.audit.min_cohort_samples},
                          {"cohorts", cohorts}});
      rc != kExitOk) {
    return rc;
  }
  report +=
      fmt::format("[cohorts]\n{} of {} cohorts shown (>= {} samples)\n", shown,
                  deltas->size(), config_.audit.min_cohort_samples);
  if (int rc = Write("audit.txt", report); rc != kExitOk) return rc;
  out_ << report;
  return kExitOk;
}

absl::StatusOr<std::vector<double>> ParseGrid(std::string_view text) {
  const std::vector<std::string_view> range = Split(text, ':');
  if (range.size() == 3) {
    const auto lo = ParseDouble(range[0]);
    const auto hi = ParseDouble(range[1]);
    const auto step = ParseDouble(range[2]);
    if (!lo || !hi || !step || !(*step > 0) || *hi < *lo) {
      return absl::InvalidArgumentError(
          fmt::format("bad grid '{}' (start:stop:step)", text));
    }
    std::vector<double> out;
    const int n = static_cast<int>(std::floor((*hi - *lo) / *step + 1e-9));
    for (int i = 0; i <= n; ++i) {
      // Round away the accumulated binary noise so 0.17 prints as 0.17.
      out.push_back(*ParseDouble(fmt::format("{:.12g}", *lo + i * *step)));
    }
    return out;
  }
  std::vector<double> out;
  for (std::string_view token : Split(text, ',')) {
    const auto v = ParseDouble(Trim(token));
    if (!v) {
      return absl::InvalidArgumentError(
          fmt::format("bad grid value '{}'", token));
    }
    out.push_back(*v);
  }
  if (!std::is_sorted(out.begin(), out.end())) {
    return absl::InvalidArgumentError("grid must be ascending");
  }
  return out;
}

int Command::Sweep() {
  if (int rc = Load(); rc != kExitOk) return rc;
  std::vector<double> grid = config_.sweep_grid;
  if (!options_.eps_grid.empty()) {
    absl::StatusOr<std::vector<double>> parsed = ParseGrid(options_.eps_grid);
    if (!parsed.ok()) return Fail(kExitConfig, "ConfigError", parsed.status());
    grid = *std::move(parsed);
  }
  if (grid.empty()) {
    return Fail(kExitConfig, "ConfigError",
                "no grid: pass --eps-grid or set sweep.epsilons");
  }
  IngestReport ingest;
  absl::StatusOr<Dataset> data = ReadData("", true, &ingest);
  if (!data.ok()) return DataFail(data.status());
  absl::StatusOr<JointPmf> pmf = EstimateEmpirical(*data);
  if (!pmf.ok()) return DataFail(pmf.status());
  absl::StatusOr<SweepResult> sweep =
      SweepEpsilon(*pmf, config_.discrimination, config_.distortion,
                   config_.objective, grid, Settings(), config_.assemble);
  if (!sweep.ok()) return Fail(kExitConfig, "ConfigError", sweep.status());
  std::string csv =
      fmt::format("# fairprep-sweep fingerprint={}\n", fingerprint_);
  csv += "epsilon,status,objective,max_residual\n";
  std::vector<std::vector<std::string>> rows;
  json points = json::array();
  for (const SweepPoint& p : sweep->points) {
    const bool ok = p.status == SolveStatus::kOptimal;
    csv += fmt::format("{},{},{},{}\n", p.epsilon, SolveStatusName(p.status),
                       ok ? fmt::format("{:.17g}", p.objective) : "",
                       ok ? fmt::format("{:.3g}", p.max_residual) : "");
    rows.push_back({fmt::format("{}", p.epsilon),
                    std::string(SolveStatusName(p.status)),
                    ok ? fmt::format("{:.6g}", p.objective) : "-"});
    json point = {{"epsilon", p.epsilon},
                  {"status", std::string(SolveStatusName(p.status))}};
    if (ok) {
      point["objective"] = p.objective;
      point["max_residual"] = p.max_residual;
    }
    points.push_back(point);
  }
  json doc;
  doc["objective_kind"] = std::string(ObjectiveName(config_.objective));
  doc["monotone"] = sweep->monotone;
  doc["first_feasible"] = sweep->first_feasible.has_value()
                              ? json(*sweep->first_feasible)
                              : json(nullptr);
  doc["first_zero"] =
      sweep->first_zero.has_value() ? json(*sweep->first_zero) : json(nullptr);
  doc["points"] = points;
  if (int rc = Write("sweep.csv", csv); rc != kExitOk) return rc;
  if (int rc = WriteJson("sweep.json", doc); rc != kExitOk) return rc;
  std::string text =
      TextHeader(fmt::format("sweep {}", config_.name), fingerprint_);
  text += TextTable({"epsilon", "status", "objective"}, rows);
  text += fmt::format("monotone {}\n", sweep->monotone ? "yes" : "no");
  if (int rc = Write("sweep.txt", text); rc != kExitOk) return rc;
  out_ << text;
  return kExitOk;
}

int Command::Validate() {
  if (int rc = Load(); rc != kExitOk) return rc;
  const Schema& s = *schema_;
  out_ << fmt::format("config      {}\n",
                      config_.name.empty() ? "-" : config_.name);
  out_ << fmt::format("fingerprint {}\n", fingerprint_);
  out_ << fmt::format("groups      {}\nfeatures    {}\ncells       {}\n",
                      s.num_groups(), s.num_features(), s.num_cells());
  out_ << fmt::format("mode        {} eps {}\n",
                      DiscriminationModeName(config_.discrimination.mode),
                      config_.discrimination.epsilon);
  out_ << fmt::format("objective   {}\n", ObjectiveName(config_.objective));
  for (const std::string& path : config_.input.paths) {
    out_ << fmt::format("input       {}{}\n", path,
                        fs::exists(path) ? "" : " (not found)");
  }
  return kExitOk;
}

int Presets(const std::vector<std::string>& names, bool dump, std::ostream& out,
            std::ostream& err) {
  if (names.empty()) {
    for (const PresetInfo& p : fairprep::Presets()) {
      out << fmt::format("{:<16} {}\n", p.name, p.summary);
    }
    return kExitOk;
  }
  for (const std::string& name : names) {
    absl::StatusOr<PipelineConfig> config = LoadPreset(name);
    if (!config.ok()) {
      err << "fairprep presets: " << config.status().message() << "\n";
      return kExitConfig;
    }
    if (dump) {
      out << DumpConfig(*config);
    } else {
      out << fmt::format("{} {}\n", name, ConfigFingerprint(*config));
    }
  }
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Optimized pre-processing for discrimination prevention"};
  app.name("fairprep");
  app.require_subcommand(1);
  Options o;
  auto add_common = [&o](CLI::App* cmd) {
    cmd->add_option("--config", o.config_path, "Pipeline config (YAML)");
    cmd->add_option("--preset", o.preset,
                    "Built-in config instead of --config");
    cmd->add_option("--data-dir", o.data_dir,
                    "Directory for relative input paths (default "
                    "$FAIRPREP_DATA_DIR, then the config's directory)");
    cmd->add_option("--out-dir", o.out_dir, "Output directory");
    cmd->add_option("--seed-override", o.seed_override,
                    "Replace the config seed");
    cmd->add_flag("--serial", o.serial, "Disable OpenMP kernels");
  };
  CLI::App* fit = app.add_subcommand("fit", "Learn the transformation kernel");
  add_common(fit);
  CLI::App* transform =
      app.add_subcommand("transform", "Randomize records with a kernel");
  add_common(transform);
  transform->add_option("--mode", o.mode, "train or apply")
      ->check(CLI::IsMember({"train", "apply"}));
  transform->add_option("--kernel", o.kernel,
                        "Kernel file (default <out-dir>/kernel.csv)");
  transform->add_option("--input", o.input,
                        "Data file instead of the config input");
  transform->add_flag("--allow-provenance-mismatch", o.allow_mismatch);
  CLI::App* audit =
      app.add_subcommand("audit", "Audit a kernel or transformed data");
  add_common(audit);
  audit->add_option("--kernel", o.kernel, "Audit analytically via the kernel");
  audit->add_option("--transformed", o.transformed, "Audit a transformed file");
  audit->add_option("--input", o.input,
                    "Original data instead of the config input");
  audit->add_flag("--allow-provenance-mismatch", o.allow_mismatch);
  CLI::App* sweep =
      app.add_subcommand("sweep", "Objective over an epsilon grid");
  add_common(sweep);
  sweep->add_option("--eps-grid", o.eps_grid,
                    "Comma list or start:stop:step (default sweep.epsilons)");
  CLI::App* validate = app.add_subcommand("validate", "Check a config");
  add_common(validate);
  CLI::App* presets = app.add_subcommand("presets", "List or dump presets");
  std::vector<std::string> preset_names;
  bool dump = false;
  presets->add_option("names", preset_names, "Presets to show");
  presets->add_flag("--dump", dump, "Print the full YAML");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help, error;
    const int rc = app.exit(e, help, error);
    out << help.str();
    err << error.str();
    return rc == 0 ? kExitOk : kExitConfig;
  }
  if (presets->parsed()) return Presets(preset_names, dump, out, err);
  for (auto [sub, name] : {std::pair{fit, "fit"},
                           {transform, "transform"},
                           {audit, "audit"},
                           {sweep, "sweep"},
                           {validate, "validate"}}) {
    if (!sub->parsed()) continue;
    Command cmd(name, o, out, err);
    if (sub == fit) return cmd.Fit();
    if (sub == transform) return cmd.Transform();
    if (sub == audit) return cmd.Audit();
    if (sub == sweep) return cmd.Sweep();
    return cmd.Validate();
  }
  return kExitConfig;
}

}  // namespace fairprep::cli
