#include <gtest/gtest.h>

#include "pdalloc/experiments.hpp"

using namespace pdalloc;

namespace {

ArchitectureRecipe small(ArchitectureKind kind, std::uint64_t seed = 1) {
  ArchitectureRecipe r;
  r.kind = kind;
  r.n = 10;
  r.target_rules = 20;
  r.seed = seed;
  if (kind == ArchitectureKind::block_diagonal) r.block_sizes = {3, 3, 2, 2};
  return r;
}

ExperimentPlan small_plan(ProblemKind kind) {
  ExperimentPlan p;
  p.kind = kind;
  p.rounds = 3;
  p.budgets = {4.0, 4.0, 4.0};
  p.target = 0.05;
  p.initial = kind == ProblemKind::performance ? InitialWork::normalized : InitialWork::ones;
  for (auto k : {ArchitectureKind::block_diagonal, ArchitectureKind::erdos_renyi,
                 ArchitectureKind::watts_strogatz, ArchitectureKind::barabasi_albert})
    p.recipes.push_back(small(k));
  return p;
}

}  // namespace

TEST(Aggregates, HandExamples) {
  const auto one = ProductArchitecture::uniform(1, {}, 0.5, 0.05);
  std::vector<RoundCost> rc(2);
  rc[0].module_costs = {1.0};
  rc[1].module_costs = {3.0};
  EXPECT_EQ(derive_aggregates(one, rc).mu, (std::vector<double>{4.0}));

  const auto pair = ProductArchitecture::uniform(2, {{0, 1}, {1, 0}}, 0.5, 0.05);
  std::vector<RoundCost> r1(1);
  r1[0].module_costs = {0.0, 0.0};
  r1[0].edge_costs = {1.0, 2.0};
  const auto a = derive_aggregates(pair, r1);
  EXPECT_EQ(a.rho, (std::vector<double>{3.0, 3.0}));
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.rho_edge[0], 3.0);

  std::vector<RoundCost> zero(1);
  zero[0].module_costs = {0.0, 0.0};
  zero[0].edge_costs = {0.0, 0.0};
  const auto z = derive_aggregates(pair, zero);
  EXPECT_EQ(z.mu, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(z.rho_edge, (std::vector<double>{0.0}));
}

TEST(Aggregates, ConsistentWithReportedCost) {
  const auto plan = small_plan(ProblemKind::budget);
  const auto row = run_instance(plan, generate(small(ArchitectureKind::erdos_renyi, 5)));
  ASSERT_TRUE(row.ok()) << row.message;
  double s = 0.0;
  for (double m : row.aggregates.mu) s += m;
  for (double r : row.aggregates.rho_edge) s += r;
  EXPECT_NEAR(s, row.total_cost, 1e-9 * row.total_cost);
}

TEST(Study, ShapeContract) {
  const auto plan = small_plan(ProblemKind::budget);
  const auto table = run_budget_study(plan);
  ASSERT_EQ(table.rows.size(), 4u);
  for (const auto& row : table.rows) {
    EXPECT_TRUE(row.ok()) << row.kind << ": " << row.message;
    EXPECT_EQ(row.correlations.size(), 9u);
    EXPECT_EQ(row.centralities.size(), 3u);
    EXPECT_EQ(row.xi.size(), plan.rounds);
    for (std::size_t k = 0; k < plan.rounds; ++k) EXPECT_GE(row.xi[k], row.baseline_xi[k] - 1e-12);
  }
}

TEST(Study, PerformanceMeetsTarget) {
  const auto plan = small_plan(ProblemKind::performance);
  const auto table = run_performance_study(plan);
  for (const auto& row : table.rows) {
    ASSERT_TRUE(row.ok()) << row.kind << ": " << row.message;
    EXPECT_LE(row.total_remaining, plan.target * (1 + 1e-6));
    EXPECT_EQ(row.total_round.size(), plan.rounds);
  }
}

TEST(Study, ReachedTargetCostsNothing) {
  auto plan = small_plan(ProblemKind::performance);
  plan.recipes = {small(ArchitectureKind::erdos_renyi)};
  plan.target = 10.0;
  const auto table = run_study(plan);
  EXPECT_EQ(table.rows[0].total_cost, 0.0);
}

TEST(Study, Reproducible) {
  auto plan = small_plan(ProblemKind::budget);
  plan.replications = 2;
  const auto a = run_study(plan);
  plan.threads = 3;
  const auto b = run_study(plan);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].seed, b.rows[i].seed);
    EXPECT_EQ(a.rows[i].total_remaining, b.rows[i].total_remaining);
    EXPECT_EQ(a.rows[i].aggregates.mu, b.rows[i].aggregates.mu);
  }
}

TEST(Study, FailuresBecomeRows) {
  auto plan = small_plan(ProblemKind::budget);
  auto bad = small(ArchitectureKind::erdos_renyi);
  bad.target_rules = 21;
  plan.recipes = {bad, small(ArchitectureKind::erdos_renyi)};
  const auto table = run_study(plan);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0].status, "error");
  EXPECT_FALSE(table.rows[0].message.empty());
  EXPECT_TRUE(table.rows[1].ok());
}

TEST(Compare, IdenticalGroupsGivePOne) {
  auto plan = small_plan(ProblemKind::budget);
  plan.recipes = {small(ArchitectureKind::erdos_renyi, 3), small(ArchitectureKind::erdos_renyi, 3)};
  plan.replications = 3;
  const auto cmp = compare_architectures(plan);
  ASSERT_EQ(cmp.summaries.size(), 2u);
  for (const auto& pa : cmp.anova) {
    ASSERT_TRUE(pa.anova.has_value());
    EXPECT_EQ(pa.anova->p_value, 1.0);
  }
}

TEST(Compare, NeedsTwoKinds) {
  auto plan = small_plan(ProblemKind::budget);
  plan.recipes.resize(1);
  EXPECT_THROW(compare_architectures(plan, StudyTable{}), InvalidArgument);
}

TEST(Sweep, EmptyListAndCoefficientMonotonicity) {
  auto plan = small_plan(ProblemKind::budget);
  EXPECT_TRUE(robustness_sweep(plan, {}).empty());
  plan.recipes = {small(ArchitectureKind::erdos_renyi)};
  const auto rows = robustness_sweep(plan, {0.5, 1.0, 2.0}, SweepParameter::c);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i)
    EXPECT_GE(rows[i].mean_remaining, rows[i - 1].mean_remaining * (1 - 1e-6));
  EXPECT_THROW(robustness_sweep(plan, {0.0}), InvalidArgument);
}

TEST(Plan, ReferenceDefaults) {
  const auto b = reference_plan(ProblemKind::budget, 2, 1);
  EXPECT_EQ(b.recipes.size(), 4u);
  EXPECT_EQ(b.budgets, std::vector<double>(5, 300.0));
  EXPECT_EQ(study_jobs(b).size(), 8u);
  const auto p = reference_plan(ProblemKind::performance);
  EXPECT_EQ(p.initial, InitialWork::normalized);
  EXPECT_EQ(p.target, 0.01);
  EXPECT_DOUBLE_EQ(initial_work(50, InitialWork::normalized)[0], 0.02);
}
