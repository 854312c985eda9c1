// Command-line front end: generate, solve, study, case.
//
// Exit codes: 0 optimal, 1 usage or input error, 2 infeasible,
// 3 not converged (or any failed instance in a study).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pdalloc/io.hpp"

namespace fs = std::filesystem;
using namespace pdalloc;

namespace {

constexpr int kExitOptimal = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNotConverged = 3;

int exit_code(const std::string& status) {
  if (status == "optimal") return kExitOptimal;
  if (status == "infeasible") return kExitInfeasible;
  return kExitNotConverged;
}

/// --out, else $PDALLOC_OUTPUT_DIR, else the configured directory.
std::string output_dir(const std::string& flag, const std::string& configured) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PDALLOC_OUTPUT_DIR"); env && *env) return env;
  return configured;
}

struct GenerateArgs {
  std::string kind = "er";
  std::size_t modules = 50;
  std::size_t rules = 100;
  std::uint64_t seed = 0;
  double beta = 0.1;
  std::size_t neighbors = 0;
  std::size_t attachments = 1;
  std::vector<std::size_t> blocks;
  double phi_init = 0.5;
  double gamma_init = 0.05;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  ArchitectureRecipe r;
  r.kind = architecture_kind_from_string(a.kind);
  r.n = a.modules;
  r.target_rules = a.rules;
  r.seed = a.seed;
  r.rewire_probability = a.beta;
  r.neighbors = a.neighbors;
  r.attachments = a.attachments;
  r.block_sizes = a.blocks;
  r.phi_init = a.phi_init;
  r.gamma_init = a.gamma_init;
  const ProductArchitecture arch = generate(r);
  save_dsm(a.out, arch);
  std::cout << "rules " << arch.rule_count() << "\n";
  return kExitOptimal;
}

struct SolveArgs {
  std::string config;
  std::string dsm;
  std::string problem;
  std::string out;
};

int run_solve(const SolveArgs& a) {
  PlanConfig cfg = a.config.empty() ? PlanConfig{} : load_plan_config(a.config);
  if (!a.problem.empty()) cfg.kind = problem_kind_from_string(a.problem);
  const ProductArchitecture arch = load_dsm(a.dsm);
  InstanceResult row = run_instance(cfg.experiment_plan(), arch);
  row.kind = "dsm";
  const std::string dir = output_dir(a.out, cfg.output_directory);
  const Json echo = plan_config_json(cfg);
  fs::create_directories(dir);
  if (cfg.wants("csv"))
    for (const auto& [name, text] : result_csvs(row)) write_text((fs::path(dir) / name).string(), text);
  write_text((fs::path(dir) / "result.json").string(), dump(result_json(row, echo)));
  std::cout << "status " << row.status << "\n";
  if (!row.message.empty()) std::cout << "reason " << row.message << "\n";
  std::cout << "decision_variables " << (arch.modules() + arch.rule_count()) * cfg.rounds << "\n";
  std::cout << "total_remaining " << csv::format(row.total_remaining) << "\n";
  std::cout << "total_cost " << csv::format(row.total_cost) << "\n";
  return exit_code(row.status);
}

struct StudyArgs {
  std::string plan;
  std::string out;
  unsigned threads = 0;
};

int run_study_cmd(const StudyArgs& a) {
  PlanConfig cfg = load_plan_config(a.plan);
  if (a.threads > 0) cfg.threads = a.threads;
  const std::string dir = output_dir(a.out, cfg.output_directory);
  const auto sum = run_study_directory(cfg, dir, [](const std::string& line) { std::cerr << line << "\n"; });
  std::cout << "instances " << sum.total << " computed " << sum.computed << " reused " << sum.reused
            << " failed " << sum.failed << "\n";
  for (const auto& f : sum.failures) std::cout << "failed " << f << "\n";
  return sum.failed ? kExitNotConverged : kExitOptimal;
}

struct CaseArgs {
  std::string tasks;
  std::string deps;
  std::string config;
  std::string preset;
  std::string out;
};

void write_case_tables(const fs::path& dir, const InstanceResult& row, const ProductArchitecture& arch) {
  auto name = [&](std::size_t i) { return arch.names().empty() ? std::to_string(i) : arch.names()[i]; };
  const auto& final_work = row.report->trajectory.P.back();
  csv::Writer rem({"metric", "module", "name", "remaining_final", "centrality", "pearson_r"});
  csv::Writer mod({"metric", "module", "name", "mu", "centrality", "pearson_r"});
  csv::Writer rule({"metric", "i", "j", "rho_ij", "centrality", "pearson_r"});
  std::vector<Edge> pe;
  for (const auto& [a, b] : row.aggregates.pairs) pe.push_back({a, b});
  for (const auto& s : row.centralities) {
    if (s.node.empty()) continue;
    const std::string m = to_string(s.metric);
    const std::string r_rem = detail::optional_csv(row.correlation(Response::remaining_work, s.metric));
    const std::string r_mod = detail::optional_csv(row.correlation(Response::module_investment, s.metric));
    const std::string r_rule = detail::optional_csv(row.correlation(Response::rule_investment, s.metric));
    for (std::size_t i = 0; i < arch.modules(); ++i) {
      rem.row({m, std::to_string(i), name(i), csv::format(final_work[i]), csv::format(s.node[i]), r_rem});
      mod.row({m, std::to_string(i), name(i), csv::format(row.aggregates.mu[i]), csv::format(s.node[i]), r_mod});
    }
    const auto pair_scores = edge_centrality(s.node, pe);
    for (std::size_t p = 0; p < pe.size(); ++p)
      rule.row({m, std::to_string(pe[p].row), std::to_string(pe[p].col), csv::format(row.aggregates.rho_edge[p]),
                csv::format(pair_scores[p]), r_rule});
  }
  csv::Writer mr({"module", "name", "mu", "rho", "pearson_r"});
  const std::string r_mr = detail::optional_csv(row.mu_rho_r);
  for (std::size_t i = 0; i < arch.modules(); ++i)
    mr.row({std::to_string(i), name(i), csv::format(row.aggregates.mu[i]), csv::format(row.aggregates.rho[i]), r_mr});
  rem.save((dir / "remaining_vs_centrality.csv").string());
  mod.save((dir / "module_investment_vs_centrality.csv").string());
  rule.save((dir / "rule_investment_vs_centrality.csv").string());
  mr.save((dir / "module_vs_rule_investment.csv").string());
}

int run_case(const CaseArgs& a) {
  CaseConfig cc = a.config.empty() ? CaseConfig{} : load_case_config_file(a.config);
  if (!a.preset.empty()) cc.preset = case_preset_from_string(a.preset);
  const TaskTable tasks = load_task_table(a.tasks);
  const DependencyTable deps = load_dependency_table(a.deps);
  const CasePlan cp = load_case_config(tasks, deps, cc.preset, cc.overrides);
  for (const auto& w : cp.warnings) std::cerr << "warning: " << w << "\n";
  const fs::path dir = output_dir(a.out, cc.output_directory);
  int worst = kExitOptimal;
  for (ProblemKind kind : cp.kinds) {
    ExperimentPlan plan;
    plan.kind = kind;
    plan.rounds = cp.rounds;
    plan.initial = InitialWork::ones;
    plan.epsilon = cp.epsilon;
    plan.costs = cp.costs;
    plan.mode = cp.mode;
    plan.budgets = cp.budgets;
    plan.target = cp.target;
    plan.solver = cp.solver;
    InstanceResult row = run_instance(plan, cp.arch);
    row.kind = to_string(cp.preset);
    const fs::path sub = dir / to_string(kind);
    const Json echo{{"preset", to_string(cp.preset)},
                    {"problem", to_string(kind)},
                    {"rounds", cp.rounds},
                    {"epsilon", cp.epsilon},
                    {"diagonal", to_string(cp.diagonal)},
                    {"cumulation", to_string(cp.mode)},
                    {"budgets", cp.budgets},
                    {"target", cp.target},
                    {"warnings", cp.warnings}};
    write_result(sub, row, echo, true);
    write_case_tables(sub, row, cp.arch);
    save_dsm((sub / "dsm.csv").string(), cp.arch);
    std::cout << to_string(kind) << " status " << row.status;
    if (!row.message.empty()) std::cout << " (" << row.message << ")";
    std::cout << " remaining " << csv::format(row.total_remaining) << " cost " << csv::format(row.total_cost);
    if (row.mu_rho_r) std::cout << " mu_rho_r " << csv::format(*row.mu_rho_r);
    std::cout << "\n";
    worst = std::max(worst, exit_code(row.status));
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resource allocation over product development rounds"};
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Write a synthetic DSM");
  gen->add_option("--kind", ga.kind, "block | er | ws | ba")->capture_default_str();
  gen->add_option("--modules", ga.modules, "Module count")->capture_default_str();
  gen->add_option("--rules", ga.rules, "Target design-rule count")->capture_default_str();
  gen->add_option("--seed", ga.seed, "RNG seed")->capture_default_str();
  gen->add_option("--beta", ga.beta, "Small-world rewiring probability")->capture_default_str();
  gen->add_option("--neighbors", ga.neighbors, "Small-world neighbors per side (0 derives it)");
  gen->add_option("--attachments", ga.attachments, "Scale-free attachments per node")->capture_default_str();
  gen->add_option("--blocks", ga.blocks, "Block sizes (block kind)")->delimiter(',');
  gen->add_option("--phi-init", ga.phi_init, "Initial diagonal value")->capture_default_str();
  gen->add_option("--gamma-init", ga.gamma_init, "Initial dependency value")->capture_default_str();
  gen->add_option("-o,--out", ga.out, "Output DSM CSV")->required();

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve one DSM");
  solve->add_option("--config", sa.config, "Plan config (JSON)");
  solve->add_option("--dsm", sa.dsm, "DSM CSV")->required();
  solve->add_option("--problem", sa.problem, "budget | performance (overrides the config)");
  solve->add_option("-o,--out", sa.out, "Output directory");

  StudyArgs sta;
  auto* study = app.add_subcommand("study", "Run or resume a batch study");
  study->add_option("--plan", sta.plan, "Plan config (JSON)")->required();
  study->add_option("-o,--out", sta.out, "Study directory");
  study->add_option("--threads", sta.threads, "Worker threads (results do not depend on it)");

  CaseArgs ca;
  auto* cs = app.add_subcommand("case", "Solve an empirical case from task and dependency tables");
  cs->add_option("--tasks", ca.tasks, "Task table CSV (task,t_min,t_max)")->required();
  cs->add_option("--deps", ca.deps, "Dependency table CSV (task,depends_on,strength)")->required();
  cs->add_option("--config", ca.config, "Case config (JSON)");
  cs->add_option("--preset", ca.preset, "manipulator | automotive (overrides the config)");
  cs->add_option("-o,--out", ca.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) return run_generate(ga);
    if (*solve) return run_solve(sa);
    if (*study) return run_study_cmd(sta);
    if (*cs) return run_case(ca);
  } catch (const pdalloc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
