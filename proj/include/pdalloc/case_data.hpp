#pragma once

// Empirical case inputs: task duration tables, S/M/W dependency tables, the
// duration-to-WTM mapping and case plan defaults.

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdalloc/cost.hpp"
#include "pdalloc/csv.hpp"
#include "pdalloc/solver.hpp"
#include "pdalloc/wtm.hpp"

namespace pdalloc {

struct Task {
  std::string name;
  double t_min = 0.0;  ///< best duration, hours
  double t_max = 0.0;  ///< worst duration, hours
};

struct TaskTable {
  std::vector<Task> tasks;

  std::optional<std::size_t> index(const std::string& name) const {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      if (tasks[i].name == name) return i;
    return std::nullopt;
  }
};

/// `task` depends on `source`: entry (task, source) carries work from
/// source into task.
struct Dependency {
  std::string task;
  std::string source;
  double value = 0.0;
  std::size_t line = 0;  ///< source line, 0 when built in code
};

struct DependencyTable {
  std::vector<Dependency> deps;
};

/// S = 0.5, M = 0.25, W = 0.05.
inline std::optional<double> strength_value(const std::string& cls) {
  if (cls == "S" || cls == "s") return 0.5;
  if (cls == "M" || cls == "m") return 0.25;
  if (cls == "W" || cls == "w") return 0.05;
  return std::nullopt;
}

/// Columns: task, t_min, t_max (header required).
inline TaskTable parse_task_table(std::istream& in, const std::string& name = "tasks") {
  const auto rows = csv::parse(in, name);
  if (rows.empty()) throw ParseError(name + ": empty task table");
  const std::vector<std::string> header{"task", "t_min", "t_max"};
  std::vector<std::string> got;
  for (const auto& f : rows[0].fields) got.push_back(csv::trim(f));
  if (got != header) throw ParseError(name + ":" + std::to_string(rows[0].line) + ": header must be task,t_min,t_max");
  TaskTable t;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = name + ":" + std::to_string(row.line);
    if (row.fields.size() != 3) throw ParseError(where + ": expected 3 fields");
    Task task{csv::trim(row.fields[0]), csv::number(row.fields[1], where), csv::number(row.fields[2], where)};
    if (task.name.empty()) throw ParseError(where + ": empty task name");
    if (t.index(task.name)) throw ParseError(where + ": duplicate task '" + task.name + "'");
    if (!(task.t_min > 0.0) || !(task.t_max > 0.0))
      throw ParseError(where + ": durations must be positive");
    if (task.t_min > task.t_max) throw ParseError(where + ": t_min exceeds t_max");
    t.tasks.push_back(std::move(task));
  }
  if (t.tasks.empty()) throw ParseError(name + ": no tasks");
  return t;
}

/// Columns: task, depends_on, strength (S|M|W or a number in (0,1]).
inline DependencyTable parse_dependency_table(std::istream& in, const std::string& name = "dependencies") {
  const auto rows = csv::parse(in, name);
  if (rows.empty()) throw ParseError(name + ": empty dependency table");
  std::vector<std::string> got;
  for (const auto& f : rows[0].fields) got.push_back(csv::trim(f));
  if (got != std::vector<std::string>{"task", "depends_on", "strength"})
    throw ParseError(name + ":" + std::to_string(rows[0].line) + ": header must be task,depends_on,strength");
  DependencyTable d;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = name + ":" + std::to_string(row.line);
    if (row.fields.size() != 3) throw ParseError(where + ": expected 3 fields");
    Dependency dep{csv::trim(row.fields[0]), csv::trim(row.fields[1]), 0.0, row.line};
    const std::string cls = csv::trim(row.fields[2]);
    if (auto v = strength_value(cls)) {
      dep.value = *v;
    } else if (!csv::try_number(cls, dep.value) || !(dep.value > 0.0 && dep.value <= 1.0)) {
      throw ParseError(where + ": unknown strength class '" + cls + "' (expected S, M, W or a value in (0,1])");
    }
    if (dep.task == dep.source) throw ParseError(where + ": self-dependency of '" + dep.task + "'");
    d.deps.push_back(std::move(dep));
  }
  return d;
}

inline TaskTable load_task_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_task_table(in, path);
}

inline DependencyTable load_dependency_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_dependency_table(in, path);
}

/// Diagonal convention: inverse mean duration, or every phi_init = 1.
enum class DiagonalConvention { duration_inverse, unit_initial };

inline std::string to_string(DiagonalConvention d) {
  return d == DiagonalConvention::duration_inverse ? "duration-inverse" : "unit-initial";
}

inline DiagonalConvention diagonal_convention_from_string(const std::string& s) {
  if (s == "duration-inverse") return DiagonalConvention::duration_inverse;
  if (s == "unit-initial") return DiagonalConvention::unit_initial;
  throw InvalidArgument("unknown diagonal convention '" + s + "' (expected duration-inverse|unit-initial)");
}

/// Architecture from the tables. Under duration-inverse, phi_init =
/// 1 / ((t_min + t_max) / 2), clipped to 1 with a warning for mean
/// durations below one hour.
inline ProductArchitecture wtm_from_durations(const TaskTable& tasks, const DependencyTable& deps,
                                              DiagonalConvention diag = DiagonalConvention::duration_inverse,
                                              std::vector<std::string>* warnings = nullptr) {
  const std::size_t n = tasks.tasks.size();
  if (n == 0) throw InvalidArgument("no tasks");
  std::vector<double> phi(n, 1.0);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) {
    const Task& t = tasks.tasks[i];
    if (!(t.t_min > 0.0) || !(t.t_max >= t.t_min)) throw InvalidArgument("invalid durations for task '" + t.name + "'");
    names.push_back(t.name);
    if (diag == DiagonalConvention::unit_initial) continue;
    const double mean = 0.5 * (t.t_min + t.t_max);
    phi[i] = 1.0 / mean;
    if (phi[i] > 1.0) {
      phi[i] = 1.0;
      if (warnings) warnings->push_back("task '" + t.name + "' has mean duration below 1 hour; diagonal clipped to 1");
    }
  }
  std::map<Edge, double> entries;
  for (const Dependency& d : deps.deps) {
    const std::string where = d.line ? " (line " + std::to_string(d.line) + ")" : "";
    const auto i = tasks.index(d.task);
    const auto j = tasks.index(d.source);
    if (!i) throw InvalidArgument("unknown task '" + d.task + "'" + where);
    if (!j) throw InvalidArgument("unknown task '" + d.source + "'" + where);
    if (*i == *j) throw InvalidArgument("self-dependency of '" + d.task + "'" + where);
    if (!entries.emplace(Edge{*i, *j}, d.value).second)
      throw InvalidArgument("duplicate dependency " + d.task + " <- " + d.source + where);
  }
  std::vector<Edge> edges;
  std::vector<double> gamma;
  for (const auto& [e, v] : entries) {
    edges.push_back(e);
    gamma.push_back(v);
  }
  return ProductArchitecture(n, std::move(edges), std::move(phi), std::move(gamma), std::move(names));
}

enum class CasePreset { manipulator, automotive };

inline std::string to_string(CasePreset c) { return c == CasePreset::manipulator ? "manipulator" : "automotive"; }

inline CasePreset case_preset_from_string(const std::string& s) {
  if (s == "manipulator") return CasePreset::manipulator;
  if (s == "automotive") return CasePreset::automotive;
  throw InvalidArgument("unknown case preset '" + s + "' (expected manipulator|automotive)");
}

/// Caller overrides of the case defaults; unset fields keep the preset.
struct CaseOverrides {
  std::optional<std::size_t> rounds;
  std::optional<std::vector<ProblemKind>> kinds;
  std::optional<std::vector<double>> budgets;
  std::optional<double> target;
  std::optional<double> epsilon;
  std::optional<DiagonalConvention> diagonal;
  std::optional<CostModel> costs;
  std::optional<CumulationMode> mode;
  std::optional<SolverConfig> solver;
};

struct CasePlan {
  CasePreset preset = CasePreset::manipulator;
  ProductArchitecture arch;
  std::size_t rounds = 5;
  std::vector<double> P0;
  double epsilon = 0.1;
  std::vector<ProblemKind> kinds;
  std::vector<double> budgets;
  double target = 0.01;
  DiagonalConvention diagonal = DiagonalConvention::duration_inverse;
  CostModel costs;
  CumulationMode mode = CumulationMode::literal;
  SolverConfig solver;
  std::vector<std::string> warnings;

  RoundBounds bounds() const { return RoundBounds::from_ratio(arch, rounds, epsilon); }
};

/// Case defaults: T = 5, P(0) all ones, bounds [0.1 init, init], c = p = 1,
/// budget 200 per round (manipulator) or final remaining work 0.01
/// (automotive). Budgets longer than T are truncated with a warning.
inline CasePlan load_case_config(const TaskTable& tasks, const DependencyTable& deps, CasePreset preset,
                                 const CaseOverrides& ov = {}) {
  CasePlan p;
  p.preset = preset;
  p.kinds = {preset == CasePreset::manipulator ? ProblemKind::budget : ProblemKind::performance};
  p.diagonal = preset == CasePreset::manipulator ? DiagonalConvention::duration_inverse
                                                 : DiagonalConvention::unit_initial;
  if (ov.rounds) p.rounds = *ov.rounds;
  if (p.rounds < 1) throw InvalidArgument("round count must be positive");
  if (ov.kinds) p.kinds = *ov.kinds;
  if (p.kinds.empty()) throw InvalidArgument("case plan needs at least one problem kind");
  if (ov.epsilon) p.epsilon = *ov.epsilon;
  if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0,1)");
  if (ov.diagonal) p.diagonal = *ov.diagonal;
  if (ov.costs) p.costs = *ov.costs;
  p.costs.default_spec.epsilon = p.epsilon;
  p.costs.validate();
  if (ov.mode) p.mode = *ov.mode;
  if (ov.solver) p.solver = *ov.solver;
  p.solver.validate();
  if (ov.target) p.target = *ov.target;
  if (!(p.target > 0.0)) throw InvalidArgument("remaining-work target must be positive");

  std::vector<double> budgets = ov.budgets ? *ov.budgets : std::vector<double>(5, 200.0);
  if (budgets.size() > p.rounds) {
    p.warnings.push_back("budget list of length " + std::to_string(budgets.size()) + " truncated to " +
                         std::to_string(p.rounds) + " rounds");
    budgets.resize(p.rounds);
  } else if (budgets.size() < p.rounds) {
    if (ov.budgets) throw InvalidArgument("budget list shorter than the round count");
    budgets.resize(p.rounds, 200.0);
  }
  for (double b : budgets)
    if (!(b >= 0.0)) throw InvalidArgument("budgets must be nonnegative");
  p.budgets = std::move(budgets);

  p.arch = wtm_from_durations(tasks, deps, p.diagonal, &p.warnings);
  p.P0 = ones(p.arch.modules());
  return p;
}

}  // namespace pdalloc
