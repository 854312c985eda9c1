#pragma once

// File formats: DSM CSV, JSON plan and case configs (unknown keys are
// rejected with their JSON path), per-instance result documents with CSV
// companions, and resumable study directories.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdalloc/case_data.hpp"
#include "pdalloc/csv.hpp"
#include "pdalloc/experiments.hpp"

namespace pdalloc {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------- DSM files

/// Square CSV: diagonal = phi_init, off-diagonal = gamma_init (0 means no
/// dependency). An optional first row of module names.
inline std::string write_dsm(const ProductArchitecture& arch) {
  const std::size_t n = arch.modules();
  std::ostringstream out;
  if (!arch.names().empty()) {
    for (std::size_t j = 0; j < n; ++j) out << (j ? "," : "") << csv::quote(arch.names()[j]);
    out << '\n';
  }
  Grid M(n, n);
  for (std::size_t i = 0; i < n; ++i) M(i, i) = arch.phi_init()[i];
  for (std::size_t e = 0; e < arch.rule_count(); ++e)
    M(arch.edges()[e].row, arch.edges()[e].col) = arch.gamma_init()[e];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out << (j ? "," : "") << csv::format(M(i, j));
    out << '\n';
  }
  return out.str();
}

inline ProductArchitecture parse_dsm(std::istream& in, const std::string& name = "dsm") {
  auto rows = csv::parse(in, name);
  if (rows.empty()) throw ParseError(name + ": empty DSM file");
  std::vector<std::string> names;
  double probe = 0.0;
  if (!csv::try_number(rows[0].fields[0], probe)) {
    for (const auto& f : rows[0].fields) names.push_back(csv::trim(f));
    rows.erase(rows.begin());
  }
  const std::size_t n = rows.size();
  if (n == 0) throw ParseError(name + ": DSM has no matrix rows");
  if (!names.empty() && names.size() != n)
    throw ParseError(name + ":1: header has " + std::to_string(names.size()) + " names for " +
                     std::to_string(n) + " rows");
  std::vector<double> phi(n);
  std::vector<Edge> edges;
  std::vector<double> gamma;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string where = name + ":" + std::to_string(rows[i].line);
    if (rows[i].fields.size() != n)
      throw ParseError(where + ": expected " + std::to_string(n) + " fields, got " +
                       std::to_string(rows[i].fields.size()) + " (matrix must be square)");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = csv::number(rows[i].fields[j], where);
      if (i == j) {
        if (!(v > 0.0)) throw ParseError(where + ": diagonal entry must be positive");
        phi[i] = v;
      } else if (v < 0.0) {
        throw ParseError(where + ": off-diagonal entry must be nonnegative");
      } else if (v > 0.0) {
        edges.push_back({i, j});
        gamma.push_back(v);
      }
    }
  }
  return ProductArchitecture(n, std::move(edges), std::move(phi), std::move(gamma), std::move(names));
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
  if (!f) throw Error("failed writing " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline void save_dsm(const std::string& path, const ProductArchitecture& arch) {
  write_text(path, write_dsm(arch));
}

inline ProductArchitecture load_dsm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_dsm(in, path);
}

// --------------------------------------------------------- config documents

namespace detail {

/// Typed field access on one JSON object; finish() rejects unused keys.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json* raw(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string child(const std::string& key) const { return path_ + "/" + key; }

  std::optional<double> number(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ParseError(child(key) + ": expected a number");
    return v->get<double>();
  }

  std::optional<std::size_t> count(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number_unsigned()) throw ParseError(child(key) + ": expected a nonnegative integer");
    return v->get<std::size_t>();
  }

  std::optional<int> integer(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) throw ParseError(child(key) + ": expected an integer");
    return v->get<int>();
  }

  std::optional<bool> boolean(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) throw ParseError(child(key) + ": expected true or false");
    return v->get<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ParseError(child(key) + ": expected a string");
    return v->get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) throw ParseError(child(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) throw ParseError(child(key) + "/" + std::to_string(i) + ": expected a number");
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  std::optional<std::vector<std::string>> strings(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) throw ParseError(child(key) + ": expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_string()) throw ParseError(child(key) + "/" + std::to_string(i) + ": expected a string");
      out.push_back((*v)[i].get<std::string>());
    }
    return out;
  }

  /// Convert with a parser that throws InvalidArgument, keeping the path.
  template <class T, class Fn>
  std::optional<T> parsed(const std::string& key, Fn fn) {
    auto s = string(key);
    if (!s) return std::nullopt;
    try {
      return fn(*s);
    } catch (const InvalidArgument& e) {
      throw ParseError(child(key) + ": " + e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ParseError(child(it.key()) + ": unknown key");
  }

  std::string where() const { return path_.empty() ? "/" : path_; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline CostSpec read_cost_spec(ObjectReader& r, CostSpec base) {
  if (auto v = r.number("c")) base.c = *v;
  if (auto v = r.number("p")) base.p = *v;
  if (auto v = r.parsed<CostNormalization>("normalization", cost_normalization_from_string))
    base.normalization = *v;
  return base;
}

inline Json cost_spec_json(const CostSpec& s) {
  return Json{{"c", s.c}, {"p", s.p}, {"normalization", to_string(s.normalization)}};
}

inline CostModel read_cost_model(const Json& j, const std::string& path, double epsilon) {
  ObjectReader r(j, path);
  CostModel m;
  m.default_spec = read_cost_spec(r, m.default_spec);
  for (const char* key : {"module_overrides", "edge_overrides"}) {
    const Json* o = r.raw(key);
    if (!o) continue;
    const std::string opath = r.child(key);
    if (!o->is_object()) throw ParseError(opath + ": expected an object keyed by element index");
    auto& target = std::string(key) == "module_overrides" ? m.module_overrides : m.edge_overrides;
    for (auto it = o->begin(); it != o->end(); ++it) {
      std::size_t idx = 0;
      double d = 0.0;
      if (!csv::try_number(it.key(), d) || d < 0 || d != std::floor(d))
        throw ParseError(opath + "/" + it.key() + ": override keys must be element indices");
      idx = static_cast<std::size_t>(d);
      ObjectReader er(it.value(), opath + "/" + it.key());
      target[idx] = read_cost_spec(er, m.default_spec);
      er.finish();
    }
  }
  r.finish();
  m.default_spec.epsilon = epsilon;
  for (auto& [_, s] : m.module_overrides) s.epsilon = epsilon;
  for (auto& [_, s] : m.edge_overrides) s.epsilon = epsilon;
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(path + ": " + e.what());
  }
  return m;
}

inline Json cost_model_json(const CostModel& m) {
  Json j = cost_spec_json(m.default_spec);
  Json mo = Json::object(), eo = Json::object();
  for (const auto& [i, s] : m.module_overrides) mo[std::to_string(i)] = cost_spec_json(s);
  for (const auto& [i, s] : m.edge_overrides) eo[std::to_string(i)] = cost_spec_json(s);
  j["module_overrides"] = mo;
  j["edge_overrides"] = eo;
  return j;
}

inline SolverConfig read_solver(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  SolverConfig c;
  if (auto v = r.number("t0")) c.t0 = *v;
  if (auto v = r.number("mu")) c.mu = *v;
  if (auto v = r.number("inner_tol")) c.inner_tol = *v;
  if (auto v = r.number("outer_tol")) c.outer_tol = *v;
  if (auto v = r.number("refine_tol")) c.refine_tol = *v;
  if (auto v = r.integer("refine_iterations")) c.refine_iterations = *v;
  if (auto v = r.integer("max_inner_iterations")) c.max_inner_iterations = *v;
  if (auto v = r.integer("max_outer_iterations")) c.max_outer_iterations = *v;
  if (auto v = r.number("alpha")) c.alpha = *v;
  if (auto v = r.number("beta")) c.beta = *v;
  if (auto v = r.number("feasibility_shrink")) c.feasibility_shrink = *v;
  if (auto v = r.integer("memory")) c.memory = *v;
  if (auto v = r.number("curvature_floor")) c.curvature_floor = *v;
  if (auto v = r.integer("newton_after")) c.newton_after = *v;
  if (auto v = r.number("hessian_step")) c.hessian_step = *v;
  r.finish();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(path + ": " + e.what());
  }
  return c;
}

inline Json solver_json(const SolverConfig& c) {
  return Json{{"t0", c.t0},
              {"mu", c.mu},
              {"inner_tol", c.inner_tol},
              {"outer_tol", c.outer_tol},
              {"refine_tol", c.refine_tol},
              {"refine_iterations", c.refine_iterations},
              {"max_inner_iterations", c.max_inner_iterations},
              {"max_outer_iterations", c.max_outer_iterations},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"feasibility_shrink", c.feasibility_shrink},
              {"memory", c.memory},
              {"curvature_floor", c.curvature_floor},
              {"newton_after", c.newton_after},
              {"hessian_step", c.hessian_step}};
}

inline ArchitectureRecipe read_recipe(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  ArchitectureRecipe rec;
  if (auto v = r.parsed<ArchitectureKind>("kind", architecture_kind_from_string)) rec.kind = *v;
  if (auto v = r.count("modules")) rec.n = *v;
  if (auto v = r.count("rules")) rec.target_rules = *v;
  if (auto v = r.count("seed")) rec.seed = *v;
  if (const Json* b = r.raw("block_sizes")) {
    if (!b->is_array()) throw ParseError(r.child("block_sizes") + ": expected an array");
    for (std::size_t i = 0; i < b->size(); ++i) {
      if (!(*b)[i].is_number_unsigned())
        throw ParseError(r.child("block_sizes") + "/" + std::to_string(i) + ": expected a positive integer");
      rec.block_sizes.push_back((*b)[i].get<std::size_t>());
    }
  }
  if (auto v = r.count("neighbors")) rec.neighbors = *v;
  if (auto v = r.number("beta")) rec.rewire_probability = *v;
  if (auto v = r.count("attachments")) rec.attachments = *v;
  if (auto v = r.number("phi_init")) rec.phi_init = *v;
  if (auto v = r.number("gamma_init")) rec.gamma_init = *v;
  r.finish();
  return rec;
}

inline Json recipe_json(const ArchitectureRecipe& r) {
  return Json{{"kind", to_string(r.kind)},       {"modules", r.n},
              {"rules", r.target_rules},         {"seed", r.seed},
              {"block_sizes", r.block_sizes},    {"neighbors", r.neighbors},
              {"beta", r.rewire_probability},    {"attachments", r.attachments},
              {"phi_init", r.phi_init},          {"gamma_init", r.gamma_init}};
}

inline Json parse_json_text(const std::string& text, const std::string& name) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(name + ": " + e.what());
  }
}

}  // namespace detail

/// Study or solve configuration.
struct PlanConfig {
  // model
  std::size_t rounds = 5;
  InitialWork initial = InitialWork::ones;
  std::vector<double> P0;  ///< explicit initial work; overrides `initial` when nonempty
  CumulationMode mode = CumulationMode::literal;
  // bounds
  double epsilon = 0.1;
  // cost
  CostModel costs;
  // problem
  ProblemKind kind = ProblemKind::budget;
  std::vector<double> budgets = std::vector<double>(5, 300.0);
  double target = 0.01;
  // solver
  SolverConfig solver;
  // network
  std::vector<ArchitectureRecipe> recipes;
  std::size_t replications = 1;
  // study
  bool compare = false;
  std::vector<double> sweep_p;
  std::vector<double> sweep_c;
  unsigned threads = 1;
  EdgeCentralityMode edge_mode = EdgeCentralityMode::arithmetic;
  // output
  std::string output_directory = "out";
  std::vector<std::string> formats{"json", "csv"};

  bool wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
  }

  ExperimentPlan experiment_plan() const {
    ExperimentPlan p;
    p.kind = kind;
    p.recipes = recipes;
    p.replications = replications;
    p.rounds = rounds;
    p.initial = initial;
    p.P0 = P0;
    p.epsilon = epsilon;
    p.costs = costs;
    p.mode = mode;
    p.budgets = budgets;
    p.target = target;
    p.solver = solver;
    p.edge_mode = edge_mode;
    p.threads = threads;
    return p;
  }
};

inline PlanConfig parse_plan_config(const Json& j) {
  using detail::ObjectReader;
  PlanConfig c;
  ObjectReader top(j, "");
  if (const Json* m = top.raw("model")) {
    ObjectReader r(*m, "/model");
    if (auto v = r.count("rounds")) c.rounds = *v;
    if (const Json* iw = r.raw("initial_work")) {
      if (iw->is_string()) {
        try {
          c.initial = initial_work_from_string(iw->get<std::string>());
        } catch (const InvalidArgument& e) {
          throw ParseError("/model/initial_work: " + std::string(e.what()));
        }
      } else {
        throw ParseError("/model/initial_work: expected \"ones\" or \"normalized\"");
      }
    }
    if (auto v = r.numbers("P0")) c.P0 = *v;
    if (auto v = r.parsed<CumulationMode>("cumulation", cumulation_mode_from_string)) c.mode = *v;
    r.finish();
  }
  if (c.rounds < 1) throw ParseError("/model/rounds: must be positive");
  for (double v : c.P0)
    if (!(v > 0.0)) throw ParseError("/model/P0: entries must be positive");
  if (const Json* b = top.raw("bounds")) {
    ObjectReader r(*b, "/bounds");
    if (auto v = r.number("epsilon")) c.epsilon = *v;
    r.finish();
  }
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw ParseError("/bounds/epsilon: must lie in (0,1)");
  if (const Json* cj = top.raw("cost")) c.costs = detail::read_cost_model(*cj, "/cost", c.epsilon);
  c.costs.default_spec.epsilon = c.epsilon;
  bool budgets_given = false;
  if (const Json* pj = top.raw("problem")) {
    ObjectReader r(*pj, "/problem");
    if (auto v = r.parsed<ProblemKind>("kind", problem_kind_from_string)) c.kind = *v;
    if (r.has("budget") && r.has("budgets"))
      throw ParseError("/problem: give either budget or budgets, not both");
    if (auto v = r.number("budget")) {
      c.budgets.assign(c.rounds, *v);
      budgets_given = true;
    }
    if (auto v = r.numbers("budgets")) {
      c.budgets = *v;
      budgets_given = true;
    }
    if (auto v = r.number("target")) c.target = *v;
    r.finish();
  }
  if (!budgets_given) c.budgets.assign(c.rounds, 300.0);
  if (c.budgets.size() != c.rounds)
    throw ParseError("/problem/budgets: expected " + std::to_string(c.rounds) + " entries, got " +
                     std::to_string(c.budgets.size()));
  for (double b : c.budgets)
    if (!(b >= 0.0)) throw ParseError("/problem/budgets: entries must be nonnegative");
  if (!(c.target > 0.0)) throw ParseError("/problem/target: must be positive");
  if (const Json* s = top.raw("solver")) c.solver = detail::read_solver(*s, "/solver");
  if (const Json* nj = top.raw("network")) {
    ObjectReader r(*nj, "/network");
    if (const Json* rs = r.raw("recipes")) {
      if (!rs->is_array()) throw ParseError("/network/recipes: expected an array");
      for (std::size_t i = 0; i < rs->size(); ++i)
        c.recipes.push_back(detail::read_recipe((*rs)[i], "/network/recipes/" + std::to_string(i)));
    }
    if (auto v = r.count("replications")) c.replications = *v;
    r.finish();
  }
  if (c.replications < 1) throw ParseError("/network/replications: must be at least 1");
  if (const Json* sj = top.raw("study")) {
    ObjectReader r(*sj, "/study");
    if (auto v = r.boolean("compare")) c.compare = *v;
    if (auto v = r.numbers("sweep_p")) c.sweep_p = *v;
    if (auto v = r.numbers("sweep_c")) c.sweep_c = *v;
    if (auto v = r.count("threads")) c.threads = static_cast<unsigned>(*v);
    if (auto v = r.string("edge_centrality")) {
      if (*v == "arithmetic") c.edge_mode = EdgeCentralityMode::arithmetic;
      else if (*v == "geometric") c.edge_mode = EdgeCentralityMode::geometric;
      else throw ParseError("/study/edge_centrality: expected arithmetic or geometric");
    }
    r.finish();
  }
  if (c.threads < 1) throw ParseError("/study/threads: must be at least 1");
  for (double v : c.sweep_p)
    if (!(v > 0.0)) throw ParseError("/study/sweep_p: entries must be positive");
  for (double v : c.sweep_c)
    if (!(v > 0.0)) throw ParseError("/study/sweep_c: entries must be positive");
  if (const Json* oj = top.raw("output")) {
    ObjectReader r(*oj, "/output");
    if (auto v = r.string("directory")) c.output_directory = *v;
    if (auto v = r.strings("formats")) c.formats = *v;
    r.finish();
  }
  for (const auto& f : c.formats)
    if (f != "json" && f != "csv") throw ParseError("/output/formats: unknown format '" + f + "'");
  top.finish();
  return c;
}

/// Normalized document: every key explicit.
inline Json plan_config_json(const PlanConfig& c) {
  Json recipes = Json::array();
  for (const auto& r : c.recipes) recipes.push_back(detail::recipe_json(r));
  return Json{
      {"model",
       {{"rounds", c.rounds}, {"initial_work", to_string(c.initial)}, {"P0", c.P0}, {"cumulation", to_string(c.mode)}}},
      {"bounds", {{"epsilon", c.epsilon}}},
      {"cost", detail::cost_model_json(c.costs)},
      {"problem", {{"kind", to_string(c.kind)}, {"budgets", c.budgets}, {"target", c.target}}},
      {"solver", detail::solver_json(c.solver)},
      {"network", {{"recipes", recipes}, {"replications", c.replications}}},
      {"study",
       {{"compare", c.compare},
        {"sweep_p", c.sweep_p},
        {"sweep_c", c.sweep_c},
        {"threads", c.threads},
        {"edge_centrality", c.edge_mode == EdgeCentralityMode::arithmetic ? "arithmetic" : "geometric"}}},
      {"output", {{"directory", c.output_directory}, {"formats", c.formats}}}};
}

inline PlanConfig parse_plan_config_text(const std::string& text, const std::string& name = "config") {
  return parse_plan_config(detail::parse_json_text(text, name));
}

inline PlanConfig load_plan_config(const std::string& path) {
  try {
    return parse_plan_config_text(read_text(path), path);
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw ParseError(path + ": " + msg);
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

/// Case configuration: preset plus optional overrides.
struct CaseConfig {
  CasePreset preset = CasePreset::manipulator;
  CaseOverrides overrides;
  std::string output_directory = "out";
};

inline CaseConfig parse_case_config(const Json& j) {
  using detail::ObjectReader;
  CaseConfig c;
  ObjectReader r(j, "");
  if (auto v = r.parsed<CasePreset>("preset", case_preset_from_string)) c.preset = *v;
  if (auto v = r.count("rounds")) c.overrides.rounds = *v;
  if (auto v = r.strings("problems")) {
    std::vector<ProblemKind> kinds;
    for (const auto& s : *v) {
      try {
        kinds.push_back(problem_kind_from_string(s));
      } catch (const InvalidArgument& e) {
        throw ParseError("/problems: " + std::string(e.what()));
      }
    }
    c.overrides.kinds = kinds;
  }
  if (auto v = r.numbers("budgets")) c.overrides.budgets = *v;
  if (auto v = r.number("target")) c.overrides.target = *v;
  if (auto v = r.number("epsilon")) c.overrides.epsilon = *v;
  if (auto v = r.parsed<DiagonalConvention>("diagonal", diagonal_convention_from_string)) c.overrides.diagonal = *v;
  if (auto v = r.parsed<CumulationMode>("cumulation", cumulation_mode_from_string)) c.overrides.mode = *v;
  const double eps = c.overrides.epsilon.value_or(0.1);
  if (const Json* cj = r.raw("cost")) c.overrides.costs = detail::read_cost_model(*cj, "/cost", eps);
  if (const Json* s = r.raw("solver")) c.overrides.solver = detail::read_solver(*s, "/solver");
  if (const Json* o = r.raw("output")) {
    ObjectReader orr(*o, "/output");
    if (auto v = orr.string("directory")) c.output_directory = *v;
    orr.finish();
  }
  r.finish();
  return c;
}

inline CaseConfig load_case_config_file(const std::string& path) {
  try {
    return parse_case_config(detail::parse_json_text(read_text(path), path));
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw ParseError(path + ": " + msg);
  }
}

// ------------------------------------------------------------ result files

namespace detail {

inline Json optional_json(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? Json(*v) : Json(nullptr);
}

inline std::string optional_csv(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? csv::format(*v) : "";
}

inline std::optional<double> optional_from_json(const Json& j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

inline Json grid_rows(const Grid& g) {
  Json out = Json::array();
  for (std::size_t r = 0; r < g.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < g.cols(); ++c) row.push_back(g(r, c));
    out.push_back(row);
  }
  return out;
}

}  // namespace detail

/// Scalar summary sufficient to rebuild study tables.
inline Json summary_json(const InstanceResult& row) {
  Json corr = Json::array();
  for (const auto& c : row.correlations)
    corr.push_back({{"response", to_string(c.response)}, {"metric", to_string(c.metric)}, {"r", detail::optional_json(c.r)}});
  return Json{{"kind", row.kind},
              {"seed", row.seed},
              {"recipe_index", row.recipe_index},
              {"rules", row.rules},
              {"status", row.status},
              {"message", row.message},
              {"total_remaining", row.total_remaining},
              {"total_cost", row.total_cost},
              {"module_investment", row.module_investment},
              {"rule_investment", row.rule_investment},
              {"xi", row.xi},
              {"baseline_xi", row.baseline_xi},
              {"module_round", row.module_round},
              {"rule_round", row.rule_round},
              {"total_round", row.total_round},
              {"module_trend_up", row.module_trend_up},
              {"rule_trend_down", row.rule_trend_down},
              {"total_trend_down", row.total_trend_down},
              {"mu_rho_r", detail::optional_json(row.mu_rho_r)},
              {"correlations", corr}};
}

inline InstanceResult summary_from_json(const Json& j) {
  InstanceResult r;
  r.kind = j.at("kind").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.recipe_index = j.at("recipe_index").get<std::size_t>();
  r.rules = j.at("rules").get<std::size_t>();
  r.status = j.at("status").get<std::string>();
  r.message = j.at("message").get<std::string>();
  r.total_remaining = j.at("total_remaining").get<double>();
  r.total_cost = j.at("total_cost").get<double>();
  r.module_investment = j.at("module_investment").get<double>();
  r.rule_investment = j.at("rule_investment").get<double>();
  r.xi = j.at("xi").get<std::vector<double>>();
  r.baseline_xi = j.at("baseline_xi").get<std::vector<double>>();
  r.module_round = j.at("module_round").get<std::vector<double>>();
  r.rule_round = j.at("rule_round").get<std::vector<double>>();
  r.total_round = j.at("total_round").get<std::vector<double>>();
  r.module_trend_up = j.at("module_trend_up").get<bool>();
  r.rule_trend_down = j.at("rule_trend_down").get<bool>();
  r.total_trend_down = j.at("total_trend_down").get<bool>();
  r.mu_rho_r = detail::optional_from_json(j.at("mu_rho_r"));
  for (const auto& c : j.at("correlations")) {
    CorrelationCell cell;
    const std::string resp = c.at("response").get<std::string>();
    for (Response x : kAllResponses)
      if (to_string(x) == resp) cell.response = x;
    cell.metric = centrality_metric_from_string(c.at("metric").get<std::string>());
    cell.r = detail::optional_from_json(c.at("r"));
    r.correlations.push_back(cell);
  }
  return r;
}

/// Full result document for one solved instance (no timing data).
inline Json result_json(const InstanceResult& row, const Json& plan_echo) {
  Json j{{"schema_version", kSchemaVersion}, {"tool_version", kToolVersion}, {"plan", plan_echo},
         {"summary", summary_json(row)}};
  if (!row.report || !row.architecture) return j;
  const SolutionReport& rep = *row.report;
  const ProductArchitecture& arch = *row.architecture;
  const auto& d = rep.diagnostics;
  j["diagnostics"] = {{"outer_iterations", d.outer_iterations},
                      {"inner_iterations", d.inner_iterations},
                      {"kkt_residual", d.kkt_residual},
                      {"gap_bound", d.gap_bound},
                      {"constraint_values", d.constraint_values},
                      {"constraint_active", d.constraint_active},
                      {"barrier_status", d.barrier_status}};
  j["problem"] = to_string(rep.kind);
  j["objective"] = rep.objective;
  j["epigraph"] = rep.epigraph;
  j["decision_count"] = rep.decisions.phi.size() + rep.decisions.gamma.size();
  j["phi"] = detail::grid_rows(rep.decisions.phi);
  Json gamma = Json::array();
  for (std::size_t e = 0; e < arch.rule_count(); ++e) {
    std::vector<double> vals;
    for (std::size_t k = 0; k < rep.decisions.gamma.cols(); ++k) vals.push_back(rep.decisions.gamma(e, k));
    gamma.push_back({{"row", arch.edges()[e].row}, {"col", arch.edges()[e].col}, {"values", vals}});
  }
  j["gamma"] = gamma;
  j["trajectory"] = rep.trajectory.P;
  Json rounds = Json::array();
  for (const auto& rc : rep.round_costs)
    rounds.push_back({{"total", rc.total}, {"positive", rc.positive}, {"constant", rc.constant}});
  j["round_costs"] = rounds;
  Json pairs = Json::array();
  for (std::size_t p = 0; p < row.aggregates.pairs.size(); ++p)
    pairs.push_back({{"i", row.aggregates.pairs[p].first},
                     {"j", row.aggregates.pairs[p].second},
                     {"rho", row.aggregates.rho_edge[p]}});
  j["aggregates"] = {{"mu", row.aggregates.mu}, {"rho", row.aggregates.rho}, {"rho_edge", pairs}};
  Json cent = Json::object();
  for (const auto& s : row.centralities) cent[to_string(s.metric)] = {{"node", s.node}, {"edge", s.edge}};
  j["centrality"] = cent;
  return j;
}

/// CSV companions of a result document, keyed by file name.
inline std::vector<std::pair<std::string, std::string>> result_csvs(const InstanceResult& row) {
  std::vector<std::pair<std::string, std::string>> out;
  {
    csv::Writer w({"response", "metric", "pearson_r"});
    for (const auto& c : row.correlations) w.row({to_string(c.response), to_string(c.metric), detail::optional_csv(c.r)});
    out.emplace_back("correlations.csv", w.str());
  }
  {
    csv::Writer w({"round", "module_investment", "rule_investment", "total_investment", "xi", "baseline_xi"});
    for (std::size_t k = 0; k < row.total_round.size(); ++k)
      w.row({std::to_string(k + 1), csv::format(row.module_round[k]), csv::format(row.rule_round[k]),
             csv::format(row.total_round[k]), k < row.xi.size() ? csv::format(row.xi[k]) : "",
             k < row.baseline_xi.size() ? csv::format(row.baseline_xi[k]) : ""});
    out.emplace_back("rounds.csv", w.str());
  }
  if (!row.report || !row.architecture) return out;
  const SolutionReport& rep = *row.report;
  const ProductArchitecture& arch = *row.architecture;
  const std::size_t T = rep.decisions.rounds();
  {
    csv::Writer w({"variable", "row", "col", "round", "value"});
    for (std::size_t i = 0; i < arch.modules(); ++i)
      for (std::size_t k = 0; k < T; ++k)
        w.row({"phi", std::to_string(i), std::to_string(i), std::to_string(k + 1), csv::format(rep.decisions.phi(i, k))});
    for (std::size_t e = 0; e < arch.rule_count(); ++e)
      for (std::size_t k = 0; k < T; ++k)
        w.row({"gamma", std::to_string(arch.edges()[e].row), std::to_string(arch.edges()[e].col),
               std::to_string(k + 1), csv::format(rep.decisions.gamma(e, k))});
    out.emplace_back("decisions.csv", w.str());
  }
  {
    csv::Writer w({"round", "module", "remaining"});
    for (std::size_t k = 0; k < rep.trajectory.P.size(); ++k)
      for (std::size_t i = 0; i < arch.modules(); ++i)
        w.row({std::to_string(k), std::to_string(i), csv::format(rep.trajectory.P[k][i])});
    out.emplace_back("trajectory.csv", w.str());
  }
  {
    std::vector<std::string> header{"module", "remaining_final", "mu", "rho"};
    for (const auto& s : row.centralities) header.push_back("r_" + to_string(s.metric));
    csv::Writer w(header);
    for (std::size_t i = 0; i < arch.modules(); ++i) {
      std::vector<std::string> f{std::to_string(i), csv::format(rep.trajectory.P.back()[i]),
                                 csv::format(row.aggregates.mu[i]), csv::format(row.aggregates.rho[i])};
      for (const auto& s : row.centralities) f.push_back(s.node.empty() ? "" : csv::format(s.node[i]));
      w.row(f);
    }
    out.emplace_back("modules.csv", w.str());
  }
  {
    std::vector<std::string> header{"i", "j", "rho_ij"};
    for (const auto& s : row.centralities) header.push_back("r_" + to_string(s.metric));
    csv::Writer w(header);
    std::vector<Edge> pe;
    for (const auto& [a, b] : row.aggregates.pairs) pe.push_back({a, b});
    std::vector<std::vector<double>> scores;
    for (const auto& s : row.centralities)
      scores.push_back(s.node.empty() ? std::vector<double>{} : edge_centrality(s.node, pe));
    for (std::size_t p = 0; p < pe.size(); ++p) {
      std::vector<std::string> f{std::to_string(pe[p].row), std::to_string(pe[p].col), csv::format(row.aggregates.rho_edge[p])};
      for (const auto& sc : scores) f.push_back(sc.empty() ? "" : csv::format(sc[p]));
      w.row(f);
    }
    out.emplace_back("rules.csv", w.str());
  }
  return out;
}

/// Write result.json (and CSV companions when requested) into `dir`.
inline void write_result(const std::filesystem::path& dir, const InstanceResult& row, const Json& plan_echo,
                         bool with_csv) {
  std::filesystem::create_directories(dir);
  if (with_csv)
    for (const auto& [name, text] : result_csvs(row)) write_text((dir / name).string(), text);
  // result.json last: its presence marks the instance complete.
  write_text((dir / "result.json").string(), dump(result_json(row, plan_echo)));
}

// ------------------------------------------------------------ study output

struct StudyRunSummary {
  std::size_t total = 0;
  std::size_t computed = 0;
  std::size_t reused = 0;
  std::size_t failed = 0;  ///< rows whose status is not optimal
  std::vector<std::string> failures;  ///< "<id>: <status> <message>"
};

namespace detail {

inline std::string table_study(const StudyTable& t, const std::vector<StudyJob>& jobs) {
  csv::Writer w({"id", "kind", "seed", "rules", "status", "total_remaining", "total_cost", "module_investment",
                 "rule_investment", "module_trend_up", "rule_trend_down", "total_trend_down", "mu_rho_r"});
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    w.row({jobs[i].id(), r.kind, std::to_string(r.seed), std::to_string(r.rules), r.status,
           csv::format(r.total_remaining), csv::format(r.total_cost), csv::format(r.module_investment),
           csv::format(r.rule_investment), r.module_trend_up ? "1" : "0", r.rule_trend_down ? "1" : "0",
           r.total_trend_down ? "1" : "0", optional_csv(r.mu_rho_r)});
  }
  return w.str();
}

inline std::string table_rounds(const StudyTable& t, const std::vector<StudyJob>& jobs) {
  csv::Writer w({"id", "round", "module_investment", "rule_investment", "total_investment", "xi", "baseline_xi"});
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    for (std::size_t k = 0; k < r.total_round.size(); ++k)
      w.row({jobs[i].id(), std::to_string(k + 1), csv::format(r.module_round[k]), csv::format(r.rule_round[k]),
             csv::format(r.total_round[k]), k < r.xi.size() ? csv::format(r.xi[k]) : "",
             k < r.baseline_xi.size() ? csv::format(r.baseline_xi[k]) : ""});
  }
  return w.str();
}

inline std::string table_correlations(const StudyTable& t, const std::vector<StudyJob>& jobs) {
  csv::Writer w({"id", "kind", "seed", "response", "metric", "pearson_r"});
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (const auto& c : t.rows[i].correlations)
      w.row({jobs[i].id(), t.rows[i].kind, std::to_string(t.rows[i].seed), to_string(c.response),
             to_string(c.metric), optional_csv(c.r)});
  return w.str();
}

/// Mean Pearson r per (recipe, response, metric) over successful runs.
inline std::string table_correlation_summary(const ExperimentPlan& plan, const StudyTable& t) {
  csv::Writer w({"recipe", "kind", "response", "metric", "runs", "mean_pearson_r"});
  for (std::size_t g = 0; g < plan.recipes.size(); ++g)
    for (Response resp : kAllResponses)
      for (CentralityMetric m : kAllMetrics) {
        double sum = 0.0;
        std::size_t cnt = 0;
        for (const auto& r : t.rows) {
          if (r.recipe_index != g || !r.ok()) continue;
          if (auto v = r.correlation(resp, m)) {
            sum += *v;
            ++cnt;
          }
        }
        w.row({std::to_string(g), to_string(plan.recipes[g].kind), to_string(resp), to_string(m),
               std::to_string(cnt), cnt ? csv::format(sum / static_cast<double>(cnt)) : ""});
      }
  return w.str();
}

inline std::string table_comparison(const ComparisonTable& c) {
  csv::Writer w({"kind", "response", "samples", "min", "q1", "median", "q3", "max", "mean"});
  for (const auto& s : c.summaries)
    for (Response resp : kAllResponses) {
      const Quantiles& q = resp == Response::remaining_work      ? s.remaining
                           : resp == Response::module_investment ? s.module_investment
                                                                 : s.rule_investment;
      w.row({s.kind, to_string(resp), std::to_string(s.samples), csv::format(q.min), csv::format(q.q1),
             csv::format(q.median), csv::format(q.q3), csv::format(q.max), csv::format(q.mean)});
    }
  return w.str();
}

inline std::string table_anova(const ComparisonTable& c, double alpha = 0.10) {
  csv::Writer w({"a", "b", "response", "F", "df_between", "df_within", "p_value", "significant"});
  for (const auto& a : c.anova) {
    if (!a.anova) {
      w.row({a.a, a.b, to_string(a.response), "", "", "", "", ""});
      continue;
    }
    const auto& r = *a.anova;
    w.row({a.a, a.b, to_string(a.response), std::isfinite(r.F) ? csv::format(r.F) : "inf",
           std::to_string(r.df_between), std::to_string(r.df_within), csv::format(r.p_value),
           r.p_value < alpha ? "1" : "0"});
  }
  return w.str();
}

inline std::string table_sweep(const std::vector<SweepRow>& rows) {
  csv::Writer w({"parameter", "value", "kind", "runs", "module_up", "rule_down", "total_down", "mean_remaining",
                 "mean_cost"});
  for (const auto& r : rows)
    w.row({to_string(r.parameter), csv::format(r.value), r.kind, std::to_string(r.runs), std::to_string(r.module_up),
           std::to_string(r.rule_down), std::to_string(r.total_down), csv::format(r.mean_remaining),
           csv::format(r.mean_cost)});
  return w.str();
}

}  // namespace detail

/// Run (or resume) a study into `dir`. Instances whose result.json exists
/// are loaded instead of recomputed; a directory holding a different plan
/// is rejected. `progress` is called once per finished instance.
inline StudyRunSummary run_study_directory(const PlanConfig& cfg, const std::filesystem::path& dir,
                                           const std::function<void(const std::string&)>& progress = {}) {
  namespace fs = std::filesystem;
  const ExperimentPlan plan = cfg.experiment_plan();
  plan.validate();
  if (plan.recipes.empty()) throw InvalidArgument("study plan has no network recipes");
  // Thread count and output location do not affect results.
  PlanConfig echo_cfg = cfg;
  echo_cfg.threads = 1;
  echo_cfg.output_directory = "";
  const Json plan_echo = plan_config_json(echo_cfg);
  fs::create_directories(dir);
  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    const Json old = detail::parse_json_text(read_text(manifest_path.string()), manifest_path.string());
    if (!old.contains("plan") || old.at("plan") != plan_echo)
      throw InvalidArgument(dir.string() + " holds a study with a different plan");
  }

  const auto jobs = study_jobs(plan);
  StudyTable table;
  table.kind = plan.kind;
  table.rows.resize(jobs.size());
  std::vector<std::size_t> missing;
  StudyRunSummary sum;
  sum.total = jobs.size();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const fs::path file = dir / "instances" / jobs[i].id() / "result.json";
    if (fs::exists(file)) {
      table.rows[i] = summary_from_json(detail::parse_json_text(read_text(file.string()), file.string()).at("summary"));
      ++sum.reused;
    } else {
      missing.push_back(i);
    }
  }
  std::mutex progress_mutex;
  detail::parallel_for(missing.size(), plan.threads, [&](std::size_t m) {
    const std::size_t i = missing[m];
    InstanceResult row = run_job(plan, jobs[i]);
    write_result(dir / "instances" / jobs[i].id(), row, plan_echo, cfg.wants("csv"));
    row.report.reset();
    row.architecture.reset();
    table.rows[i] = std::move(row);
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(jobs[i].id() + " " + table.rows[i].status);
    }
  });
  sum.computed = missing.size();

  write_text((dir / "study.csv").string(), detail::table_study(table, jobs));
  write_text((dir / "rounds.csv").string(), detail::table_rounds(table, jobs));
  write_text((dir / "correlations.csv").string(), detail::table_correlations(table, jobs));
  write_text((dir / "correlation_summary.csv").string(), detail::table_correlation_summary(plan, table));
  if (cfg.compare && plan.recipes.size() >= 2) {
    const ComparisonTable cmp = compare_architectures(plan, table);
    write_text((dir / "comparison.csv").string(), detail::table_comparison(cmp));
    write_text((dir / "anova.csv").string(), detail::table_anova(cmp));
  }
  const bool sweep_done = sum.computed == 0 && fs::exists(dir / "sweep.csv");
  if ((!cfg.sweep_p.empty() || !cfg.sweep_c.empty()) && !sweep_done) {
    std::vector<SweepRow> rows = robustness_sweep(plan, cfg.sweep_p, SweepParameter::p);
    const auto rc = robustness_sweep(plan, cfg.sweep_c, SweepParameter::c);
    rows.insert(rows.end(), rc.begin(), rc.end());
    write_text((dir / "sweep.csv").string(), detail::table_sweep(rows));
  }

  Json instances = Json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& r = table.rows[i];
    instances.push_back({{"id", jobs[i].id()}, {"kind", r.kind}, {"seed", r.seed}, {"status", r.status}});
    if (!r.ok()) {
      ++sum.failed;
      sum.failures.push_back(jobs[i].id() + ": " + r.status + (r.message.empty() ? "" : " " + r.message));
    }
  }
  write_text(manifest_path.string(), dump(Json{{"schema_version", kSchemaVersion},
                                               {"tool_version", kToolVersion},
                                               {"plan", plan_echo},
                                               {"instances", instances}}));
  return sum;
}

}  // namespace pdalloc
