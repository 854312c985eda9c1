#include <gtest/gtest.h>

#include <random>

#include "pdalloc/cost.hpp"

using namespace pdalloc;

TEST(ElementCost, Examples) {
  CostSpec s;
  EXPECT_EQ(element_cost(s, 1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(element_cost(s, 0.5, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(element_cost(s, 0.025, 0.05), 1.0);  // ratio space
}

TEST(ElementCost, UnitMaxCostNormalization) {
  CostSpec s;
  s.normalization = CostNormalization::unit_max_cost;
  s.epsilon = 0.1;
  EXPECT_DOUBLE_EQ(s.coefficient(), 1.0 / 9.0);
  EXPECT_NEAR(element_cost(s, 0.1, 1.0), 1.0, 1e-15);
  CostSpec explicit_c;
  explicit_c.c = 1.0 / 9.0;
  EXPECT_NEAR(element_cost(explicit_c, 0.1, 1.0), 1.0, 1e-15);
}

TEST(ElementCost, Errors) {
  CostSpec s;
  EXPECT_THROW(element_cost(s, 1.1, 1.0), InvalidArgument);
  EXPECT_THROW(element_cost(s, 0.05, 1.0), InvalidArgument);
  EXPECT_THROW(element_cost(s, 0.0, 1.0), InvalidArgument);
  CostSpec bad;
  bad.p = 0.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(ElementCost, StrictlyDecreasingAndDiminishingReturns) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    CostSpec s;
    s.c = 0.1 + 5 * U(rng);
    s.p = 0.2 + 9.8 * U(rng);
    s.epsilon = 0.05 + 0.5 * U(rng);
    const double init = 0.01 + U(rng);
    const double delta = 0.01 * (1 - s.epsilon) * init;
    const double v = init * (s.epsilon + (1 - s.epsilon) * (0.1 + 0.8 * U(rng)));
    const double d_hi = element_cost(s, v - delta, init) - element_cost(s, v, init);
    const double d_lo = element_cost(s, v, init) - element_cost(s, v + delta, init);
    EXPECT_GT(d_lo, 0.0);
    EXPECT_GT(d_hi, d_lo);
  }
}

TEST(ElementCost, PositivePartIsLogLinear) {
  CostSpec s;
  s.c = 2.5;
  s.p = 3.0;
  // log f+(exp x) = log c - p x: chords are exact.
  for (double x0 : {-2.0, -1.0, -0.3})
    for (double x1 : {-1.5, -0.1}) {
      auto F = [&](double x) { return std::log(s.positive_part(std::exp(x))); };
      EXPECT_NEAR(F(0.5 * (x0 + x1)), 0.5 * (F(x0) + F(x1)), 1e-12);
    }
}

namespace {

ProductArchitecture one_module_one_edge() {
  return ProductArchitecture(2, {{0, 1}}, {1.0, 1.0}, {1.0});
}

}  // namespace

TEST(RoundCost, Examples) {
  const auto two = ProductArchitecture::uniform(2, {}, 1.0, 1.0);
  const auto b2 = RoundBounds::from_ratio(two, 1, 0.1);
  CostModel cm;
  EXPECT_EQ(round_cost(two, b2, DecisionVariables::uninvested(b2), cm, 1).total, 0.0);
  DecisionVariables half{Grid(2, 1, 0.5), Grid(0, 1)};
  EXPECT_DOUBLE_EQ(round_cost(two, b2, half, cm, 1).total, 2.0);

  const auto me = one_module_one_edge();
  const auto b = RoundBounds::from_ratio(me, 1, 0.1);
  DecisionVariables dv{Grid(2, 1, 1.0), Grid(1, 1, 0.25)};
  dv.phi(0, 0) = 0.5;
  const RoundCost rc = round_cost(me, b, dv, cm, 1);
  EXPECT_DOUBLE_EQ(rc.total, 4.0);
  EXPECT_DOUBLE_EQ(rc.module_costs[0], 1.0);
  EXPECT_DOUBLE_EQ(rc.edge_costs[0], 3.0);
  EXPECT_THROW(round_cost(me, b, dv, cm, 2), InvalidArgument);
}

TEST(TotalCost, Additivity) {
  const auto one = ProductArchitecture::uniform(1, {}, 1.0, 1.0);
  const auto b = RoundBounds::from_ratio(one, 5, 0.1);
  CostModel cm;
  EXPECT_EQ(total_cost(one, b, DecisionVariables::uninvested(b), cm), 0.0);
  DecisionVariables dv{Grid(1, 5, 0.5), Grid(0, 5)};
  EXPECT_DOUBLE_EQ(total_cost(one, b, dv, cm), 5.0);

  const auto me = one_module_one_edge();
  const auto b2 = RoundBounds::from_ratio(me, 2, 0.1);
  DecisionVariables d2{Grid(2, 2, 1.0), Grid(1, 2, 0.25)};
  d2.phi(0, 0) = d2.phi(0, 1) = 0.5;
  EXPECT_DOUBLE_EQ(total_cost(me, b2, d2, cm), 8.0);
}

TEST(RoundCost, SplitMatchesTotal) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(0.1, 1.0);
  const auto a = ProductArchitecture::uniform(3, {{0, 1}, {1, 2}, {2, 0}}, 0.5, 0.05);
  const auto b = RoundBounds::from_ratio(a, 2, 0.1);
  CostModel cm;
  cm.default_spec.p = 2.0;
  cm.module_overrides[1] = CostSpec{3.0, 1.5, 0.1, CostNormalization::unit_coefficient};
  cm.edge_overrides[2] = CostSpec{1.0, 1.0, 0.1, CostNormalization::unit_max_cost};
  for (int t = 0; t < 100; ++t) {
    DecisionVariables dv{b.phi_hi, b.gamma_hi};
    for (double& v : dv.phi.data()) v *= U(rng);
    for (double& v : dv.gamma.data()) v *= U(rng);
    for (std::size_t k = 1; k <= 2; ++k) {
      const RoundCost rc = round_cost(a, b, dv, cm, k);
      EXPECT_NEAR(rc.positive - rc.constant, rc.total, 1e-12 * rc.positive);
      for (double c : rc.module_costs) EXPECT_GE(c, 0.0);
      for (double c : rc.edge_costs) EXPECT_GE(c, 0.0);
    }
  }
}
