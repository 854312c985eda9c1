#pragma once

// Batch studies over seeded architectures: per-instance solves, investment
// aggregates, centrality correlations, architecture comparison and
// parameter sweeps. Row order is deterministic regardless of threading.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pdalloc/centrality.hpp"
#include "pdalloc/cost.hpp"
#include "pdalloc/netgen.hpp"
#include "pdalloc/solver.hpp"
#include "pdalloc/stats.hpp"
#include "pdalloc/wtm.hpp"

namespace pdalloc {

/// Initial remaining work: all ones, or 1/n per module (total 1).
enum class InitialWork { ones, normalized };

inline std::string to_string(InitialWork w) { return w == InitialWork::ones ? "ones" : "normalized"; }

inline InitialWork initial_work_from_string(const std::string& s) {
  if (s == "ones") return InitialWork::ones;
  if (s == "normalized") return InitialWork::normalized;
  throw InvalidArgument("unknown initial work convention '" + s + "' (expected ones|normalized)");
}

inline std::vector<double> initial_work(std::size_t n, InitialWork w) {
  return std::vector<double>(n, w == InitialWork::ones ? 1.0 : 1.0 / static_cast<double>(n));
}

struct ExperimentPlan {
  ProblemKind kind = ProblemKind::budget;
  std::vector<ArchitectureRecipe> recipes;  ///< replication r uses seed recipe.seed + r
  std::size_t replications = 1;
  std::size_t rounds = 5;
  InitialWork initial = InitialWork::ones;
  std::vector<double> P0;  ///< explicit initial work; overrides `initial` when nonempty
  double epsilon = 0.1;
  CostModel costs;
  CumulationMode mode = CumulationMode::literal;
  std::vector<double> budgets;  ///< one per round (budget kind)
  double target = 0.01;         ///< maximum final remaining work (performance kind)
  SolverConfig solver;
  EdgeCentralityMode edge_mode = EdgeCentralityMode::arithmetic;
  unsigned threads = 1;

  void validate() const {
    if (replications < 1) throw InvalidArgument("replication count must be at least 1");
    if (rounds < 1) throw InvalidArgument("round count must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0,1)");
    costs.validate();
    solver.validate();
    if (kind == ProblemKind::budget) {
      if (budgets.size() != rounds) throw InvalidArgument("need one budget per round");
      for (double b : budgets)
        if (!(b >= 0.0)) throw InvalidArgument("budgets must be nonnegative");
    } else if (!(target > 0.0)) {
      throw InvalidArgument("remaining-work target must be positive");
    }
    if (threads < 1) throw InvalidArgument("thread count must be at least 1");
  }
};

/// The synthetic-study settings: 50 modules, 100 rules, 5 rounds, bounds
/// [0.1 init, init], unit cost coefficients, budget 300 per round or a final
/// remaining-work cap of 0.01 of the (normalized) initial work.
inline ExperimentPlan reference_plan(ProblemKind kind, std::size_t replications = 1,
                                     std::uint64_t seed = 1) {
  ExperimentPlan p;
  p.kind = kind;
  p.replications = replications;
  for (ArchitectureKind k : {ArchitectureKind::block_diagonal, ArchitectureKind::erdos_renyi,
                             ArchitectureKind::watts_strogatz, ArchitectureKind::barabasi_albert}) {
    ArchitectureRecipe r;
    r.kind = k;
    r.seed = seed;
    p.recipes.push_back(r);
  }
  p.budgets.assign(p.rounds, 300.0);
  if (kind == ProblemKind::performance) p.initial = InitialWork::normalized;
  return p;
}

/// Cumulative investments. Rule pairs are unordered (i < j); a pair's value
/// sums both directions that exist.
struct AggregateInvestments {
  std::vector<double> mu;
  std::vector<double> rho;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> rho_edge;
};

inline AggregateInvestments derive_aggregates(const ProductArchitecture& arch,
                                              const std::vector<RoundCost>& round_costs) {
  AggregateInvestments a;
  const std::size_t n = arch.modules();
  a.mu.assign(n, 0.0);
  a.rho.assign(n, 0.0);
  std::map<std::pair<std::size_t, std::size_t>, double> pair_sum;
  for (const Edge& e : arch.edges()) pair_sum[{std::min(e.row, e.col), std::max(e.row, e.col)}] = 0.0;
  for (const RoundCost& rc : round_costs) {
    for (std::size_t i = 0; i < n; ++i) a.mu[i] += rc.module_costs.at(i);
    for (std::size_t e = 0; e < arch.rule_count(); ++e) {
      const Edge& ed = arch.edges()[e];
      const double g = rc.edge_costs.at(e);
      a.rho[ed.row] += g;
      a.rho[ed.col] += g;
      pair_sum[{std::min(ed.row, ed.col), std::max(ed.row, ed.col)}] += g;
    }
  }
  for (const auto& [p, v] : pair_sum) {
    a.pairs.push_back(p);
    a.rho_edge.push_back(v);
  }
  return a;
}

inline AggregateInvestments derive_aggregates(const ProductArchitecture& arch,
                                              const SolutionReport& report) {
  return derive_aggregates(arch, report.round_costs);
}

/// Response variables correlated against centrality.
enum class Response { remaining_work, module_investment, rule_investment };

inline std::string to_string(Response r) {
  switch (r) {
    case Response::remaining_work: return "remaining_work";
    case Response::module_investment: return "module_investment";
    case Response::rule_investment: return "rule_investment";
  }
  return "unknown";
}

inline constexpr Response kAllResponses[] = {Response::remaining_work, Response::module_investment,
                                             Response::rule_investment};

/// Pearson r of one response against one metric; empty when degenerate.
struct CorrelationCell {
  Response response = Response::remaining_work;
  CentralityMetric metric = CentralityMetric::pagerank;
  std::optional<double> r;
};

/// Nondecreasing / nonincreasing with an absolute slack.
inline bool nondecreasing(const std::vector<double>& v, double slack = 1e-6) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] < v[k - 1] - slack) return false;
  return true;
}

inline bool nonincreasing(const std::vector<double>& v, double slack = 1e-6) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[k - 1] + slack) return false;
  return true;
}

struct InstanceResult {
  std::string kind;  ///< architecture kind
  std::uint64_t seed = 0;
  std::size_t recipe_index = 0;
  std::size_t rules = 0;
  std::string status;  ///< solve status, or "error"
  std::string message;

  double total_remaining = 0.0;  ///< sum P_i(T)
  double total_cost = 0.0;
  double module_investment = 0.0;
  double rule_investment = 0.0;
  std::vector<double> xi;           ///< completion rates of the solution
  std::vector<double> baseline_xi;  ///< completion rates without investment
  std::vector<double> module_round;  ///< sum_i f_i per round
  std::vector<double> rule_round;    ///< sum_e g_e per round
  std::vector<double> total_round;   ///< B_k per round
  bool module_trend_up = false;      ///< module_round nondecreasing
  bool rule_trend_down = false;      ///< rule_round nonincreasing
  bool total_trend_down = false;     ///< total_round nonincreasing

  AggregateInvestments aggregates;
  std::vector<CentralityScores> centralities;  ///< one per metric, kAllMetrics order
  std::vector<CorrelationCell> correlations;   ///< responses x metrics
  std::optional<double> mu_rho_r;              ///< Pearson(mu_i, rho_i)

  std::optional<ProductArchitecture> architecture;
  std::optional<SolutionReport> report;

  bool ok() const { return status == "optimal"; }

  std::optional<double> correlation(Response resp, CentralityMetric m) const {
    for (const auto& c : correlations)
      if (c.response == resp && c.metric == m) return c.r;
    return std::nullopt;
  }
};

struct StudyTable {
  ProblemKind kind = ProblemKind::budget;
  std::vector<InstanceResult> rows;
};

namespace detail {

inline std::optional<double> safe_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  try {
    return pearson(x, y);
  } catch (const InvalidArgument&) {
    return std::nullopt;
  }
}

/// Run fn(i) for i in [0, count) on up to `threads` workers.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Solve one architecture under the plan and derive every reported quantity.
inline InstanceResult run_instance(const ExperimentPlan& plan, const ProductArchitecture& arch) {
  InstanceResult row;
  row.rules = arch.rule_count();
  const std::size_t n = arch.modules();
  const std::size_t T = plan.rounds;
  const RoundBounds bounds = RoundBounds::from_ratio(arch, T, plan.epsilon);
  if (!plan.P0.empty() && plan.P0.size() != n)
    throw InvalidArgument("explicit P0 has " + std::to_string(plan.P0.size()) + " entries for " +
                          std::to_string(n) + " modules");
  const std::vector<double> P0 = plan.P0.empty() ? initial_work(n, plan.initial) : plan.P0;

  SolutionReport rep = plan.kind == ProblemKind::budget
                           ? solve_budget(arch, bounds, P0, plan.costs, plan.budgets, plan.solver, plan.mode)
                           : solve_performance(arch, bounds, P0, plan.costs, plan.target, plan.solver,
                                               plan.mode);
  row.status = to_string(rep.status);
  row.message = rep.message;
  row.total_remaining = total_remaining(rep.trajectory, T);
  row.total_cost = rep.total_cost();
  row.xi = completion_rates(rep.trajectory);
  row.baseline_xi =
      completion_rates(propagate(arch, DecisionVariables::uninvested(bounds), P0, plan.mode));
  for (const RoundCost& rc : rep.round_costs) {
    double m = 0.0, r = 0.0;
    for (double v : rc.module_costs) m += v;
    for (double v : rc.edge_costs) r += v;
    row.module_round.push_back(m);
    row.rule_round.push_back(r);
    row.total_round.push_back(rc.total);
    row.module_investment += m;
    row.rule_investment += r;
  }
  row.module_trend_up = nondecreasing(row.module_round);
  row.rule_trend_down = nonincreasing(row.rule_round);
  row.total_trend_down = nonincreasing(row.total_round);

  row.aggregates = derive_aggregates(arch, rep);
  row.mu_rho_r = detail::safe_pearson(row.aggregates.mu, row.aggregates.rho);

  const std::vector<double>& final_work = rep.trajectory.P.back();
  std::vector<Edge> pair_edges;
  for (const auto& [a, b] : row.aggregates.pairs) pair_edges.push_back({a, b});
  for (CentralityMetric m : kAllMetrics) {
    CentralityScores s;
    s.metric = m;
    try {
      s = centrality(arch, m, plan.edge_mode);
    } catch (const InvalidArgument&) {
      // No edges: the metric is undefined and its correlations stay empty.
    }
    row.centralities.push_back(s);
    std::vector<double> pair_scores;
    if (!s.node.empty()) pair_scores = edge_centrality(s.node, pair_edges, plan.edge_mode);
    for (Response resp : kAllResponses) {
      CorrelationCell cell{resp, m, std::nullopt};
      if (!s.node.empty()) {
        if (resp == Response::remaining_work) cell.r = detail::safe_pearson(final_work, s.node);
        if (resp == Response::module_investment) cell.r = detail::safe_pearson(row.aggregates.mu, s.node);
        if (resp == Response::rule_investment && pair_scores.size() >= 2)
          cell.r = detail::safe_pearson(row.aggregates.rho_edge, pair_scores);
      }
      row.correlations.push_back(cell);
    }
  }
  row.architecture = arch;
  row.report = std::move(rep);
  return row;
}

/// One (recipe, replication) pair; replication r uses seed recipe.seed + r.
struct StudyJob {
  std::size_t recipe_index = 0;
  ArchitectureRecipe recipe;

  std::string id() const {
    return std::to_string(recipe_index) + "-" + to_string(recipe.kind) + "-" + std::to_string(recipe.seed);
  }
};

/// Every job of the plan in deterministic order.
inline std::vector<StudyJob> study_jobs(const ExperimentPlan& plan) {
  std::vector<StudyJob> jobs;
  for (std::size_t i = 0; i < plan.recipes.size(); ++i)
    for (std::size_t rep = 0; rep < plan.replications; ++rep) {
      ArchitectureRecipe r = plan.recipes[i];
      r.seed += rep;
      jobs.push_back({i, r});
    }
  return jobs;
}

/// Generate and solve one job; failures become rows with status "error".
inline InstanceResult run_job(const ExperimentPlan& plan, const StudyJob& job) {
  InstanceResult row;
  try {
    row = run_instance(plan, generate(job.recipe));
  } catch (const std::exception& e) {
    row = InstanceResult{};
    row.status = "error";
    row.message = e.what();
  }
  row.kind = to_string(job.recipe.kind);
  row.seed = job.recipe.seed;
  row.recipe_index = job.recipe_index;
  return row;
}

inline StudyTable run_study(const ExperimentPlan& plan) {
  plan.validate();
  const auto jobs = study_jobs(plan);
  StudyTable table;
  table.kind = plan.kind;
  table.rows.resize(jobs.size());
  detail::parallel_for(jobs.size(), plan.threads,
                       [&](std::size_t j) { table.rows[j] = run_job(plan, jobs[j]); });
  return table;
}

inline StudyTable run_budget_study(ExperimentPlan plan) {
  if (plan.kind != ProblemKind::budget) throw InvalidArgument("plan is not a budget study");
  return run_study(plan);
}

inline StudyTable run_performance_study(ExperimentPlan plan) {
  if (plan.kind != ProblemKind::performance) throw InvalidArgument("plan is not a performance study");
  return run_study(plan);
}

struct ArchitectureSummary {
  std::string kind;
  std::size_t samples = 0;  ///< successful instances
  Quantiles remaining;
  Quantiles module_investment;
  Quantiles rule_investment;
};

struct PairwiseAnova {
  std::string a, b;
  Response response = Response::remaining_work;
  std::optional<AnovaResult> anova;  ///< empty when a group is too small
};

struct ComparisonTable {
  std::vector<ArchitectureSummary> summaries;  ///< one per recipe, plan order
  std::vector<PairwiseAnova> anova;            ///< pairs (i < j) x responses

  std::optional<double> p_value(const std::string& a, const std::string& b, Response r) const {
    for (const auto& x : anova)
      if (x.response == r && ((x.a == a && x.b == b) || (x.a == b && x.b == a)) && x.anova)
        return x.anova->p_value;
    return std::nullopt;
  }
};

inline double response_total(const InstanceResult& row, Response r) {
  switch (r) {
    case Response::remaining_work: return row.total_remaining;
    case Response::module_investment: return row.module_investment;
    case Response::rule_investment: return row.rule_investment;
  }
  return 0.0;
}

/// Group a study by recipe: boxplot quantiles and pairwise one-way ANOVA.
inline ComparisonTable compare_architectures(const ExperimentPlan& plan, const StudyTable& study) {
  if (plan.recipes.size() < 2) throw InvalidArgument("comparison needs at least two architectures");
  const std::size_t K = plan.recipes.size();
  std::vector<std::vector<const InstanceResult*>> groups(K);
  for (const auto& row : study.rows)
    if (row.ok()) groups.at(row.recipe_index).push_back(&row);
  auto values = [&](std::size_t g, Response r) {
    std::vector<double> v;
    for (const auto* row : groups[g]) v.push_back(response_total(*row, r));
    return v;
  };
  ComparisonTable out;
  for (std::size_t g = 0; g < K; ++g) {
    ArchitectureSummary s;
    s.kind = to_string(plan.recipes[g].kind);
    s.samples = groups[g].size();
    if (!groups[g].empty()) {
      s.remaining = quantiles(values(g, Response::remaining_work));
      s.module_investment = quantiles(values(g, Response::module_investment));
      s.rule_investment = quantiles(values(g, Response::rule_investment));
    }
    out.summaries.push_back(s);
  }
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = a + 1; b < K; ++b)
      for (Response r : kAllResponses) {
        PairwiseAnova pa{out.summaries[a].kind, out.summaries[b].kind, r, std::nullopt};
        if (groups[a].size() >= 2 && groups[b].size() >= 2)
          pa.anova = one_way_anova({values(a, r), values(b, r)});
        out.anova.push_back(pa);
      }
  return out;
}

inline ComparisonTable compare_architectures(const ExperimentPlan& plan) {
  return compare_architectures(plan, run_study(plan));
}

enum class SweepParameter { p, c };

inline std::string to_string(SweepParameter s) { return s == SweepParameter::p ? "p" : "c"; }

struct SweepRow {
  SweepParameter parameter = SweepParameter::p;
  double value = 0.0;
  std::string kind;
  std::size_t runs = 0;             ///< successful instances
  std::size_t module_up = 0;        ///< runs with nondecreasing module investment
  std::size_t rule_down = 0;        ///< runs with nonincreasing rule investment
  std::size_t total_down = 0;       ///< runs with nonincreasing total investment
  double mean_remaining = 0.0;
  double mean_cost = 0.0;
};

/// Re-run the study with the default cost shape parameter (or coefficient)
/// set to each value; one row per (value, recipe).
inline std::vector<SweepRow> robustness_sweep(ExperimentPlan plan, const std::vector<double>& values,
                                              SweepParameter which = SweepParameter::p) {
  std::vector<SweepRow> out;
  for (double v : values) {
    if (which == SweepParameter::p) {
      if (!(v > 0.0)) throw InvalidArgument("cost exponent must be positive");
      plan.costs.default_spec.p = v;
    } else {
      if (!(v > 0.0)) throw InvalidArgument("cost coefficient must be positive");
      plan.costs.default_spec.c = v;
    }
    const StudyTable study = run_study(plan);
    for (std::size_t g = 0; g < plan.recipes.size(); ++g) {
      SweepRow row;
      row.parameter = which;
      row.value = v;
      row.kind = to_string(plan.recipes[g].kind);
      for (const auto& r : study.rows) {
        if (r.recipe_index != g || !r.ok()) continue;
        ++row.runs;
        row.module_up += r.module_trend_up;
        row.rule_down += r.rule_trend_down;
        row.total_down += r.total_trend_down;
        row.mean_remaining += r.total_remaining;
        row.mean_cost += r.total_cost;
      }
      if (row.runs > 0) {
        row.mean_remaining /= static_cast<double>(row.runs);
        row.mean_cost /= static_cast<double>(row.runs);
      }
      out.push_back(row);
    }
  }
  return out;
}

}  // namespace pdalloc
