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
#include "fairprep/config.h"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <limits>

#include "fairprep/distortion.h"
#include "fairprep/status_macros.h"
#include "fairprep/strings.h"
#include "fmt/format.h"
#include "yaml-cpp/yaml.h"

namespace fairprep {
namespace {

// Errors while reading a node carry the dotted key path.
class ConfigError {
 public:
  explicit ConfigError(std::string message) : message_(std::move(message)) {}
  const std::string& message() const { return message_; }

 private:
  std::string message_;
};

[[noreturn]] void Fail(const std::string& path, std::string_view what) {
  throw ConfigError(
      fmt::format("{}: {}", path.empty() ? "<root>" : path, what));
}

std::string Child(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
}

std::string Item(const std::string& path, size_t i) {
  return fmt::format("{}[{}]", path, i);
}

void CheckMap(const YAML::Node& node, const std::string& path,
              std::initializer_list<std::string_view> allowed) {
  if (!node.IsMap()) Fail(path, "expected a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    bool ok = false;
    for (std::string_view a : allowed) ok = ok || a == key;
    if (!ok) Fail(Child(path, key), "unknown key");
  }
}

std::string Scalar(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) Fail(path, "expected a scalar");
  return node.Scalar();
}

double Number(const YAML::Node& node, const std::string& path) {
  const std::string s = Scalar(node, path);
  if (s == ".inf" || s == "inf") return std::numeric_limits<double>::infinity();
  const std::optional<double> v = ParseDouble(s);
  if (!v.has_value()) Fail(path, fmt::format("'{}' is not a number", s));
  return *v;
}

long long Integer(const YAML::Node& node, const std::string& path) {
  const std::string s = Scalar(node, path);
  const std::optional<long long> v = ParseInt(s);
  if (!v.has_value()) Fail(path, fmt::format("'{}' is not an integer", s));
  return *v;
}

bool Bool(const YAML::Node& node, const std::string& path) {
  const std::string s = Scalar(node, path);
  if (s == "true") return true;
  if (s == "false") return false;
  Fail(path, fmt::format("'{}' is not true or false", s));
}

std::vector<std::string> Strings(const YAML::Node& node,
                                 const std::string& path) {
  if (!node.IsSequence()) Fail(path, "expected a list");
  std::vector<std::string> out;
  for (size_t i = 0; i < node.size(); ++i) {
    out.push_back(Scalar(node[i], Item(path, i)));
  }
  return out;
}

std::vector<double> Numbers(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) Fail(path, "expected a list");
  std::vector<double> out;
  for (size_t i = 0; i < node.size(); ++i) {
    out.push_back(Number(node[i], Item(path, i)));
  }
  return out;
}

template <typename T>
T Parsed(const absl::StatusOr<T>& v, const std::string& path) {
  if (!v.ok()) Fail(path, std::string(v.status().message()));
  return *v;
}

SourceSpec ParseInput(const YAML::Node& n, const std::string& path) {
  CheckMap(n, path,
           {"paths", "delimiter", "header", "columns", "trim", "skip_prefix",
            "missing"});
  SourceSpec s;
  if (!n["paths"]) Fail(path, "missing 'paths'");
  s.paths = Strings(n["paths"], Child(path, "paths"));
  if (n["delimiter"]) {
    const std::string d = Scalar(n["delimiter"], Child(path, "delimiter"));
    if (d == "\\t" || d == "tab") {
      s.delimiter = '\t';
    } else if (d.size() == 1) {
      s.delimiter = d[0];
    } else {
      Fail(Child(path, "delimiter"), "must be one character");
    }
  }
  if (n["header"]) s.header = Bool(n["header"], Child(path, "header"));
  if (n["columns"]) {
    s.column_names = Strings(n["columns"], Child(path, "columns"));
  }
  if (!s.header && s.column_names.empty()) {
    Fail(path, "'columns' is required when header is false");
  }
  if (n["trim"]) s.trim = Bool(n["trim"], Child(path, "trim"));
  if (n["skip_prefix"]) {
    s.skip_prefix = Scalar(n["skip_prefix"], Child(path, "skip_prefix"));
  }
  if (n["missing"])
    s.missing_marker = Scalar(n["missing"], Child(path, "missing"));
  return s;
}

RowFilter ParseFilter(const YAML::Node& n, const std::string& path) {
  CheckMap(n, path, {"column", "range", "in", "not_in"});
  RowFilter f;
  if (!n["column"]) Fail(path, "missing 'column'");
  f.column = Scalar(n["column"], Child(path, "column"));
  int ops = 0;
  if (n["range"]) {
    ++ops;
    f.op = RowFilter::Op::kRange;
    const YAML::Node r = n["range"];
    const std::string rp = Child(path, "range");
    if (!r.IsSequence() || r.size() != 2) Fail(rp, "expected [min, max]");
    if (!r[0].IsNull()) {
      f.min = Number(r[0], Item(rp, 0));
    }
    if (!r[1].IsNull()) {
      f.max = Number(r[1], Item(rp, 1));
    }
  }
  if (n["in"]) {
    ++ops;
    f.op = RowFilter::Op::kIn;
    f.values = Strings(n["in"], Child(path, "in"));
  }
  if (n["not_in"]) {
    ++ops;
    f.op = RowFilter::Op::kNotIn;
    f.values = Strings(n["not_in"], Child(path, "not_in"));
  }
  if (ops != 1) Fail(path, "needs exactly one of range, in, not_in");
  return f;
}

Role ParseRole(const std::string& s, const std::string& path) {
  if (s == "D" || s == "protected") return Role::kProtected;
  if (s == "X" || s == "feature") return Role::kFeature;
  if (s == "Y" || s == "outcome") return Role::kOutcome;
  Fail(path, fmt::format("unknown role '{}' (expected D, X or Y)", s));
}

Variable ParseVariable(const YAML::Node& n, const std::string& path) {
  CheckMap(n, path,
           {"name", "role", "categories", "ordinal", "column", "map", "bins"});
  for (const char* key : {"name", "role", "categories"}) {
    if (!n[key]) Fail(path, fmt::format("missing '{}'", key));
  }
  const std::string name = Scalar(n["name"], Child(path, "name"));
  const bool ordinal =
      n["ordinal"] ? Bool(n["ordinal"], Child(path, "ordinal")) : false;
  Variable v{
      Parsed(Alphabet::Create(
                 name, Strings(n["categories"], Child(path, "categories")),
                 ordinal),
             path),
      ParseRole(Scalar(n["role"], Child(path, "role")), Child(path, "role")),
      "",
      {}};
  if (n["column"]) v.column = Scalar(n["column"], Child(path, "column"));
  if (n["map"] && n["bins"]) Fail(path, "use either 'map' or 'bins'");
  if (n["map"]) {
    const std::string mp = Child(path, "map");
    if (!n["map"].IsSequence()) Fail(mp, "expected a list of [raw, label]");
    Quantizer q;
    q.kind = Quantizer::Kind::kMap;
    for (size_t i = 0; i < n["map"].size(); ++i) {
      const std::vector<std::string> pair = Strings(n["map"][i], Item(mp, i));
      if (pair.size() != 2) Fail(Item(mp, i), "expected [raw, label]");
      q.map.emplace_back(pair[0], pair[1]);
    }
    v.quantizer = q;
  }
  if (n["bins"]) {
    const std::string bp = Child(path, "bins");
    CheckMap(n["bins"], bp, {"edges", "labels"});
    if (!n["bins"]["edges"] || !n["bins"]["labels"]) {
      Fail(bp, "needs 'edges' and 'labels'");
    }
    Quantizer q;
    q.kind = Quantizer::Kind::kBins;
    q.edges = Numbers(n["bins"]["edges"], Child(bp, "edges"));
    q.labels = Strings(n["bins"]["labels"], Child(bp, "labels"));
    v.quantizer = q;
  }
  return v;
}

DiscriminationSpec ParseDiscrimination(const YAML::Node& n,
                                       const std::string& path) {
  CheckMap(n, path,
           {"mode", "epsilon", "target", "overrides", "conditioning",
            "min_segment_samples"});
  DiscriminationSpec s;
  if (n["mode"]) {
    s.mode =
        Parsed(ParseDiscriminationMode(Scalar(n["mode"], Child(path, "mode"))),
               Child(path, "mode"));
  }
  if (!n["epsilon"]) Fail(path, "missing 'epsilon'");
  s.epsilon = Number(n["epsilon"], Child(path, "epsilon"));
  if (n["target"]) s.target = Numbers(n["target"], Child(path, "target"));
  if (n["overrides"]) {
    const std::string op = Child(path, "overrides");
    if (!n["overrides"].IsSequence()) Fail(op, "expected a list");
    for (size_t i = 0; i < n["overrides"].size(); ++i) {
      const YAML::Node o = n["overrides"][i];
      const std::string ip = Item(op, i);
      CheckMap(o, ip, {"outcome", "group", "group2", "segment", "epsilon"});
      EpsilonOverride e;
      if (o["outcome"]) e.outcome = Scalar(o["outcome"], Child(ip, "outcome"));
      if (o["group"]) e.group = Scalar(o["group"], Child(ip, "group"));
      if (o["group2"]) e.group2 = Scalar(o["group2"], Child(ip, "group2"));
      if (o["segment"]) e.segment = Scalar(o["segment"], Child(ip, "segment"));
      if (!o["epsilon"]) Fail(ip, "missing 'epsilon'");
      e.value = Number(o["epsilon"], Child(ip, "epsilon"));
      s.epsilon_overrides.push_back(e);
    }
  }
  if (n["conditioning"]) {
    s.conditioning = Strings(n["conditioning"], Child(path, "conditioning"));
  }
  if (n["min_segment_samples"]) {
    s.min_segment_samples = static_cast<int>(
        Integer(n["min_segment_samples"], Child(path, "min_segment_samples")));
  }
  return s;
}

AttributePenalty ParsePenalty(const YAML::Node& n, const std::string& path) {
  CheckMap(n, path, {"variable", "matrix", "ordinal"});
  AttributePenalty p;
  if (!n["variable"]) Fail(path, "missing 'variable'");
  p.variable = Scalar(n["variable"], Child(path, "variable"));
  if (!!n["matrix"] == !!n["ordinal"]) {
    Fail(path, "needs exactly one of 'matrix', 'ordinal'");
  }
  if (n["matrix"]) {
    p.kind = AttributePenalty::Kind::kMatrix;
    const std::string mp = Child(path, "matrix");
    if (!n["matrix"].IsSequence()) Fail(mp, "expected a list of rows");
    for (size_t i = 0; i < n["matrix"].size(); ++i) {
      p.matrix.push_back(Numbers(n["matrix"][i], Item(mp, i)));
    }
  } else {
    p.kind = AttributePenalty::Kind::kOrdinal;
    const std::string op = Child(path, "ordinal");
    CheckMap(n["ordinal"], op, {"step", "max_jump"});
    if (n["ordinal"]["step"]) {
      p.step_penalty = Number(n["ordinal"]["step"], Child(op, "step"));
    }
    if (n["ordinal"]["max_jump"]) {
      p.max_jump = static_cast<int>(
          Integer(n["ordinal"]["max_jump"], Child(op, "max_jump")));
    }
  }
  return p;
}

DistortionRule ParseRule(const YAML::Node& n, const std::string& path) {
  CheckMap(n, path, {"value", "when"});
  DistortionRule r;
  if (!n["value"]) Fail(path, "missing 'value'");
  r.value = Number(n["value"], Child(path, "value"));
  if (n["when"]) {
    const std::string wp = Child(path, "when");
    if (!n["when"].IsSequence()) Fail(wp, "expected a list");
    for (size_t i = 0; i < n["when"].size(); ++i) {
      const YAML::Node c = n["when"][i];
      const std::string cp = Item(wp, i);
      CheckMap(c, cp, {"variable", "min_delta", "max_delta", "from", "to"});
      RuleClause clause;
      if (!c["variable"]) Fail(cp, "missing 'variable'");
      clause.variable = Scalar(c["variable"], Child(cp, "variable"));
      if (c["min_delta"]) {
        clause.min_delta =
            static_cast<int>(Integer(c["min_delta"], Child(cp, "min_delta")));
      }
      if (c["max_delta"]) {
        clause.max_delta =
            static_cast<int>(Integer(c["max_delta"], Child(cp, "max_delta")));
      }
      if (c["from"]) clause.from = Strings(c["from"], Child(cp, "from"));
      if (c["to"]) clause.to = Strings(c["to"], Child(cp, "to"));
      r.clauses.push_back(clause);
    }
  }
  return r;
}

DistortionBudget ParseBudget(const YAML::Node& n, const std::string& path) {
  CheckMap(n, path, {"mode", "expected", "levels", "overrides"});
  DistortionBudget b;
  const std::string mode =
      n["mode"] ? Scalar(n["mode"], Child(path, "mode")) : "expected";
  if (mode == "expected") {
    b.mode = BudgetMode::kExpected;
  } else if (mode == "thresholded") {
    b.mode = BudgetMode::kThresholded;
  } else {
    Fail(Child(path, "mode"),
         fmt::format("unknown mode '{}' (expected, thresholded)", mode));
  }
  if (n["expected"])
    b.expected = Number(n["expected"], Child(path, "expected"));
  if (n["levels"]) {
    const std::string lp = Child(path, "levels");
    if (!n["levels"].IsSequence()) Fail(lp, "expected a list");
    for (size_t i = 0; i < n["levels"].size(); ++i) {
      const YAML::Node l = n["levels"][i];
      const std::string ip = Item(lp, i);
      CheckMap(l, ip, {"threshold", "budget"});
      if (!l["threshold"] || !l["budget"]) {
        Fail(ip, "needs 'threshold' and 'budget'");
      }
      b.levels.push_back({Number(l["threshold"], Child(ip, "threshold")),
                          Number(l["budget"], Child(ip, "budget"))});
    }
  }
  if (n["overrides"]) {
    const std::string op = Child(path, "overrides");
    if (!n["overrides"].IsSequence()) Fail(op, "expected a list");
    for (size_t i = 0; i < n["overrides"].size(); ++i) {
      const YAML::Node o = n["overrides"][i];
      const std::string ip = Item(op, i);
      CheckMap(o, ip, {"group", "feature", "outcome", "values"});
      BudgetOverride bo;
      if (o["group"]) bo.group = Scalar(o["group"], Child(ip, "group"));
      if (o["feature"]) bo.feature = Scalar(o["feature"], Child(ip, "feature"));
      if (o["outcome"]) bo.outcome = Scalar(o["outcome"], Child(ip, "outcome"));
      if (!o["values"]) Fail(ip, "missing 'values'");
      bo.values = Numbers(o["values"], Child(ip, "values"));
      b.overrides.push_back(bo);
    }
  }
  return b;
}

void ParseDistortion(const YAML::Node& n, const std::string& path,
                     PipelineConfig* config) {
  CheckMap(n, path,
           {"combiner", "forbidden", "penalties", "rules", "budget",
            "fix_forbidden"});
  DistortionControl d;
  if (n["combiner"]) {
    d.metric.combiner =
        Parsed(ParseCombiner(Scalar(n["combiner"], Child(path, "combiner"))),
               Child(path, "combiner"));
  }
  if (n["forbidden"]) {
    d.metric.forbidden = Number(n["forbidden"], Child(path, "forbidden"));
  }
  if (n["penalties"]) {
    const std::string pp = Child(path, "penalties");
    if (!n["penalties"].IsSequence()) Fail(pp, "expected a list");
    for (size_t i = 0; i < n["penalties"].size(); ++i) {
      d.metric.penalties.push_back(
          ParsePenalty(n["penalties"][i], Item(pp, i)));
    }
  }
  if (n["rules"]) {
    const std::string rp = Child(path, "rules");
    if (!n["rules"].IsSequence()) Fail(rp, "expected a list");
    for (size_t i = 0; i < n["rules"].size(); ++i) {
      d.metric.rules.push_back(ParseRule(n["rules"][i], Item(rp, i)));
    }
  }
  if (!n["budget"]) Fail(path, "missing 'budget'");
  d.budget = ParseBudget(n["budget"], Child(path, "budget"));
  if (n["fix_forbidden"]) {
    config->assemble.fix_forbidden =
        Bool(n["fix_forbidden"], Child(path, "fix_forbidden"));
  }
  config->distortion = d;
}

PipelineConfig ParseRoot(const YAML::Node& root) {
  CheckMap(
      root, "",
      {"name", "input", "filters", "schema", "discrimination", "distortion",
       "objective", "solver", "suppress", "seed", "audit", "output", "sweep"});
  PipelineConfig c;
  if (root["name"]) c.name = Scalar(root["name"], "name");
  if (!root["input"]) Fail("", "missing 'input'");
  c.input = ParseInput(root["input"], "input");
  if (root["filters"]) {
    if (!root["filters"].IsSequence()) Fail("filters", "expected a list");
    for (size_t i = 0; i < root["filters"].size(); ++i) {
      c.filters.push_back(ParseFilter(root["filters"][i], Item("filters", i)));
    }
  }
  if (!root["schema"] || !root["schema"].IsSequence()) {
    Fail("schema", "expected a list of variables");
  }
  for (size_t i = 0; i < root["schema"].size(); ++i) {
    c.variables.push_back(ParseVariable(root["schema"][i], Item("schema", i)));
  }
  if (!root["discrimination"]) Fail("", "missing 'discrimination'");
  c.discrimination =
      ParseDiscrimination(root["discrimination"], "discrimination");
  if (root["distortion"]) ParseDistortion(root["distortion"], "distortion", &c);
  if (root["objective"]) {
    c.objective = Parsed(ParseObjective(Scalar(root["objective"], "objective")),
                         "objective");
  }
  if (root["solver"]) {
    const YAML::Node s = root["solver"];
    CheckMap(s, "solver", {"tol", "max_iters", "parallel"});
    if (s["tol"]) c.solver.tol = Number(s["tol"], "solver.tol");
    if (s["max_iters"]) {
      c.solver.max_iters =
          static_cast<int>(Integer(s["max_iters"], "solver.max_iters"));
    }
    if (s["parallel"])
      c.solver.parallel = Bool(s["parallel"], "solver.parallel");
    if (!(c.solver.tol > 0)) Fail("solver.tol", "must be positive");
    if (c.solver.max_iters < 1) Fail("solver.max_iters", "must be positive");
  }
  if (root["suppress"]) {
    const YAML::Node s = root["suppress"];
    CheckMap(s, "suppress", {"strategy", "max_outer"});
    SuppressConfig sc;
    if (s["strategy"]) {
      sc.strategy =
          Parsed(ParseSofStrategy(Scalar(s["strategy"], "suppress.strategy")),
                 "suppress.strategy");
    }
    if (s["max_outer"]) {
      sc.max_outer =
          static_cast<int>(Integer(s["max_outer"], "suppress.max_outer"));
    }
    if (sc.max_outer < 1) Fail("suppress.max_outer", "must be positive");
    c.suppress = sc;
  }
  if (root["seed"]) {
    const std::string s = Scalar(root["seed"], "seed");
    uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      Fail("seed", "expected an unsigned 64-bit integer");
    }
    c.seed = seed;
  }
  if (root["audit"]) {
    const YAML::Node a = root["audit"];
    CheckMap(a, "audit", {"beta", "thresholds", "min_cohort_samples"});
    if (a["beta"]) c.audit.beta = Number(a["beta"], "audit.beta");
    if (a["thresholds"]) {
      c.audit.thresholds = Numbers(a["thresholds"], "audit.thresholds");
    }
    if (a["min_cohort_samples"]) {
      c.audit.min_cohort_samples = static_cast<int>(
          Integer(a["min_cohort_samples"], "audit.min_cohort_samples"));
    }
    if (!(c.audit.beta > 0 && c.audit.beta < 1)) {
      Fail("audit.beta", "must be in (0, 1)");
    }
  }
  if (root["output"]) {
    CheckMap(root["output"], "output", {"dir"});
    if (root["output"]["dir"]) {
      c.output_dir = Scalar(root["output"]["dir"], "output.dir");
    }
  }
  if (root["sweep"]) {
    CheckMap(root["sweep"], "sweep", {"epsilons"});
    if (root["sweep"]["epsilons"]) {
      c.sweep_grid = Numbers(root["sweep"]["epsilons"], "sweep.epsilons");
    }
  }
  return c;
}

// Shortest text that reads back to the same double.
std::string Num(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  return fmt::format("{}", v);
}

YAML::Node NumList(const std::vector<double>& values) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (double v : values) n.push_back(Num(v));
  n.SetStyle(YAML::EmitterStyle::Flow);
  return n;
}

YAML::Node StrList(const std::vector<std::string>& values) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (const std::string& v : values) n.push_back(v);
  n.SetStyle(YAML::EmitterStyle::Flow);
  return n;
}

YAML::Node BuildTree(const PipelineConfig& c, bool for_fingerprint) {
  YAML::Node root;
  if (!c.name.empty()) root["name"] = c.name;
  YAML::Node in;
  in["paths"] = StrList(c.input.paths);
  in["delimiter"] = c.input.delimiter == '\t'
                        ? std::string("tab")
                        : std::string(1, c.input.delimiter);
  in["header"] = c.input.header;
  if (!c.input.column_names.empty()) {
    in["columns"] = StrList(c.input.column_names);
  }
  in["trim"] = c.input.trim;
  if (!c.input.skip_prefix.empty()) in["skip_prefix"] = c.input.skip_prefix;
  if (!c.input.missing_marker.empty()) in["missing"] = c.input.missing_marker;
  root["input"] = in;
  if (!c.filters.empty()) {
    YAML::Node fs(YAML::NodeType::Sequence);
    for (const RowFilter& f : c.filters) {
      YAML::Node n;
      n["column"] = f.column;
      if (f.op == RowFilter::Op::kRange) {
        YAML::Node r(YAML::NodeType::Sequence);
        r.push_back(f.min.has_value() ? YAML::Node(Num(*f.min)) : YAML::Node());
        r.push_back(f.max.has_value() ? YAML::Node(Num(*f.max)) : YAML::Node());
        r.SetStyle(YAML::EmitterStyle::Flow);
        n["range"] = r;
      } else {
        n[std::string(RowFilterOpName(f.op))] = StrList(f.values);
      }
      fs.push_back(n);
    }
    root["filters"] = fs;
  }
  YAML::Node schema(YAML::NodeType::Sequence);
  for (const Variable& v : c.variables) {
    YAML::Node n;
    n["name"] = v.name();
    n["role"] = std::string(RoleName(v.role));
    n["categories"] = StrList(v.alphabet.categories());
    n["ordinal"] = v.alphabet.ordinal();
    if (!v.column.empty()) n["column"] = v.column;
    if (v.quantizer.has_value()) {
      const Quantizer& q = *v.quantizer;
      if (q.kind == Quantizer::Kind::kMap) {
        YAML::Node m(YAML::NodeType::Sequence);
        for (const auto& [from, to] : q.map) m.push_back(StrList({from, to}));
        n["map"] = m;
      } else {
        n["bins"]["edges"] = NumList(q.edges);
        n["bins"]["labels"] = StrList(q.labels);
      }
    }
    schema.push_back(n);
  }
  root["schema"] = schema;
  const DiscriminationSpec& d = c.discrimination;
  YAML::Node disc;
  disc["mode"] = std::string(DiscriminationModeName(d.mode));
  disc["epsilon"] = Num(d.epsilon);
  if (d.target.has_value()) disc["target"] = NumList(*d.target);
  if (!d.epsilon_overrides.empty()) {
    YAML::Node os(YAML::NodeType::Sequence);
    for (const EpsilonOverride& o : d.epsilon_overrides) {
      YAML::Node n;
      if (!o.outcome.empty()) n["outcome"] = o.outcome;
      if (!o.group.empty()) n["group"] = o.group;
      if (!o.group2.empty()) n["group2"] = o.group2;
      if (!o.segment.empty()) n["segment"] = o.segment;
      n["epsilon"] = Num(o.value);
      os.push_back(n);
    }
    disc["overrides"] = os;
  }
  if (!d.conditioning.empty()) disc["conditioning"] = StrList(d.conditioning);
  disc["min_segment_samples"] = d.min_segment_samples;
  root["discrimination"] = disc;
  if (c.distortion.has_value()) {
    const DistortionMetric& m = c.distortion->metric;
    const DistortionBudget& b = c.distortion->budget;
    YAML::Node dist;
    dist["combiner"] = std::string(CombinerName(m.combiner));
    dist["forbidden"] = Num(m.forbidden);
    dist["fix_forbidden"] = c.assemble.fix_forbidden;
    if (!m.penalties.empty()) {
      YAML::Node ps(YAML::NodeType::Sequence);
      for (const AttributePenalty& p : m.penalties) {
        YAML::Node n;
        n["variable"] = p.variable;
        if (p.kind == AttributePenalty::Kind::kMatrix) {
          YAML::Node rows(YAML::NodeType::Sequence);
          for (const auto& row : p.matrix) rows.push_back(NumList(row));
          n["matrix"] = rows;
        } else {
          n["ordinal"]["step"] = Num(p.step_penalty);
          n["ordinal"]["max_jump"] = p.max_jump;
        }
        ps.push_back(n);
      }
      dist["penalties"] = ps;
    }
    if (!m.rules.empty()) {
      YAML::Node rs(YAML::NodeType::Sequence);
      for (const DistortionRule& r : m.rules) {
        YAML::Node n;
        n["value"] = Num(r.value);
        YAML::Node when(YAML::NodeType::Sequence);
        for (const RuleClause& cl : r.clauses) {
          YAML::Node w;
          w["variable"] = cl.variable;
          if (cl.min_delta.has_value()) w["min_delta"] = *cl.min_delta;
          if (cl.max_delta.has_value()) w["max_delta"] = *cl.max_delta;
          if (!cl.from.empty()) w["from"] = StrList(cl.from);
          if (!cl.to.empty()) w["to"] = StrList(cl.to);
          w.SetStyle(YAML::EmitterStyle::Flow);
          when.push_back(w);
        }
        n["when"] = when;
        rs.push_back(n);
      }
      dist["rules"] = rs;
    }
    YAML::Node budget;
    budget["mode"] =
        b.mode == BudgetMode::kExpected ? "expected" : "thresholded";
    if (b.mode == BudgetMode::kExpected) budget["expected"] = Num(b.expected);
    if (!b.levels.empty()) {
      YAML::Node ls(YAML::NodeType::Sequence);
      for (const ThresholdLevel& l : b.levels) {
        YAML::Node n;
        n["threshold"] = Num(l.threshold);
        n["budget"] = Num(l.budget);
        n.SetStyle(YAML::EmitterStyle::Flow);
        ls.push_back(n);
      }
      budget["levels"] = ls;
    }
    if (!b.overrides.empty()) {
      YAML::Node os(YAML::NodeType::Sequence);
      for (const BudgetOverride& o : b.overrides) {
        YAML::Node n;
        if (!o.group.empty()) n["group"] = o.group;
        if (!o.feature.empty()) n["feature"] = o.feature;
        if (!o.outcome.empty()) n["outcome"] = o.outcome;
        n["values"] = NumList(o.values);
        os.push_back(n);
      }
      budget["overrides"] = os;
    }
    dist["budget"] = budget;
    root["distortion"] = dist;
  }
  root["objective"] = std::string(ObjectiveName(c.objective));
  root["solver"]["tol"] = Num(c.solver.tol);
  root["solver"]["max_iters"] = c.solver.max_iters;
  root["solver"]["parallel"] = c.solver.parallel;
  if (c.suppress.has_value()) {
    root["suppress"]["strategy"] =
        std::string(SofStrategyName(c.suppress->strategy));
    root["suppress"]["max_outer"] = c.suppress->max_outer;
  }
  if (!for_fingerprint) {
    root["seed"] = std::to_string(c.seed);
    root["audit"]["beta"] = Num(c.audit.beta);
    if (!c.audit.thresholds.empty()) {
      root["audit"]["thresholds"] = NumList(c.audit.thresholds);
    }
    root["audit"]["min_cohort_samples"] = c.audit.min_cohort_samples;
    root["output"]["dir"] = c.output_dir;
    if (!c.sweep_grid.empty())
      root["sweep"]["epsilons"] = NumList(c.sweep_grid);
  }
  return root;
}

}  // namespace

absl::StatusOr<PipelineConfig> ParseConfig(std::string_view yaml) {
  PipelineConfig config;
  try {
    const YAML::Node root = YAML::Load(std::string(yaml));
    config = ParseRoot(root);
  } catch (const ConfigError& e) {
    return absl::InvalidArgumentError(e.message());
  } catch (const YAML::Exception& e) {
    return absl::InvalidArgumentError(fmt::format("YAML: {}", e.what()));
  }
  FAIRPREP_RETURN_IF_ERROR(ValidateConfig(config));
  return config;
}

absl::StatusOr<PipelineConfig> LoadConfigFile(const std::string& path) {
  FAIRPREP_ASSIGN_OR_RETURN(const std::string text, ReadFileToString(path));
  absl::StatusOr<PipelineConfig> config = ParseConfig(text);
  if (!config.ok()) {
    return absl::InvalidArgumentError(
        fmt::format("{}: {}", path, std::string(config.status().message())));
  }
  return config;
}

std::string DumpConfig(const PipelineConfig& config) {
  YAML::Emitter out;
  out << BuildTree(config, false);
  return std::string(out.c_str()) + "\n";
}

absl::StatusOr<Schema> ConfigSchema(const PipelineConfig& config) {
  absl::StatusOr<Schema> schema = Schema::Create(config.variables);
  if (!schema.ok()) {
    return absl::InvalidArgumentError(
        fmt::format("schema: {}", std::string(schema.status().message())));
  }
  return schema;
}

absl::Status ValidateConfig(const PipelineConfig& config) {
  FAIRPREP_ASSIGN_OR_RETURN(const Schema schema, ConfigSchema(config));
  auto prefixed = [](std::string_view key, const absl::Status& s) {
    return absl::InvalidArgumentError(
        fmt::format("{}: {}", key, std::string(s.message())));
  };
  if (absl::Status s =
          ValidateDiscriminationSpec(config.discrimination, schema);
      !s.ok()) {
    return prefixed("discrimination", s);
  }
  if (config.distortion.has_value()) {
    if (auto t = DistortionTable::Build(config.distortion->metric, schema);
        !t.ok()) {
      return prefixed("distortion", t.status());
    }
    if (absl::Status s = ValidateBudget(config.distortion->budget, schema);
        !s.ok()) {
      return prefixed("distortion.budget", s);
    }
  }
  if (!std::is_sorted(config.sweep_grid.begin(), config.sweep_grid.end())) {
    return absl::InvalidArgumentError("sweep.epsilons: must be ascending");
  }
  return absl::OkStatus();
}

std::string ConfigFingerprint(const PipelineConfig& config) {
  YAML::Emitter out;
  out << BuildTree(config, true);
  const std::string_view text = out.c_str();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr);
  std::string hex;
  for (unsigned int i = 0; i < length; ++i)
    hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace fairprep
