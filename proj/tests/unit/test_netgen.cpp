#include <gtest/gtest.h>

#include <set>

#include "pdalloc/netgen.hpp"

using namespace pdalloc;

namespace {

bool symmetric(const ProductArchitecture& a) {
  std::set<std::pair<std::size_t, std::size_t>> s;
  for (const auto& e : a.edges()) s.insert({e.row, e.col});
  for (const auto& e : a.edges())
    if (!s.count({e.col, e.row})) return false;
  return true;
}

ArchitectureRecipe recipe(ArchitectureKind kind, std::uint64_t seed) {
  ArchitectureRecipe r;
  r.kind = kind;
  r.seed = seed;
  return r;
}

}  // namespace

TEST(Generate, ErdosRenyiHitsTarget) {
  for (std::uint64_t seed : {0u, 1u, 77u}) {
    const auto a = generate(recipe(ArchitectureKind::erdos_renyi, seed));
    EXPECT_EQ(a.modules(), 50u);
    EXPECT_EQ(a.rule_count(), 100u);
    EXPECT_TRUE(symmetric(a));
  }
}

TEST(Generate, RingLatticeWithoutRewiring) {
  auto r = recipe(ArchitectureKind::watts_strogatz, 3);
  r.neighbors = 1;
  r.rewire_probability = 0.0;
  const auto a = generate(r);
  EXPECT_EQ(a.rule_count(), 100u);
  for (const auto& e : a.edges()) {
    const std::size_t d = e.row > e.col ? e.row - e.col : e.col - e.row;
    EXPECT_TRUE(d == 1 || d == 49);
  }
}

TEST(Generate, BlockDiagonalCounts) {
  auto r = recipe(ArchitectureKind::block_diagonal, 0);
  r.n = 10;
  r.block_sizes = {5, 5};
  const auto a = generate(r);
  EXPECT_EQ(a.rule_count(), 40u);
  for (const auto& e : a.edges()) EXPECT_EQ(e.row / 5, e.col / 5);
  EXPECT_EQ(generate(recipe(ArchitectureKind::block_diagonal, 0)).rule_count(), 100u);
}

TEST(Generate, DefaultBlockPartition) {
  const auto s = default_block_sizes(50);
  std::size_t sum = 0, rules = 0;
  for (auto v : s) {
    sum += v;
    rules += v * (v - 1);
  }
  EXPECT_EQ(sum, 50u);
  EXPECT_EQ(rules, 100u);
}

TEST(Generate, AllKindsSymmetricAndOnTarget) {
  for (auto kind : {ArchitectureKind::erdos_renyi, ArchitectureKind::watts_strogatz,
                    ArchitectureKind::barabasi_albert}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto a = generate(recipe(kind, seed));
      EXPECT_EQ(a.rule_count(), 100u) << to_string(kind);
      EXPECT_TRUE(symmetric(a)) << to_string(kind);
      EXPECT_EQ(a.phi_init(), std::vector<double>(50, 0.5));
    }
  }
}

TEST(Generate, Deterministic) {
  for (auto kind : {ArchitectureKind::erdos_renyi, ArchitectureKind::watts_strogatz,
                    ArchitectureKind::barabasi_albert}) {
    const auto a = generate(recipe(kind, 9));
    const auto b = generate(recipe(kind, 9));
    const auto c = generate(recipe(kind, 10));
    EXPECT_EQ(a.edges(), b.edges());
    EXPECT_NE(a.edges(), c.edges());
  }
}

TEST(Generate, Errors) {
  auto odd = recipe(ArchitectureKind::erdos_renyi, 0);
  odd.target_rules = 99;
  EXPECT_THROW(generate(odd), InvalidArgument);
  auto big = recipe(ArchitectureKind::erdos_renyi, 0);
  big.n = 5;
  big.target_rules = 22;
  EXPECT_THROW(generate(big), InvalidArgument);
  auto blocks = recipe(ArchitectureKind::block_diagonal, 0);
  blocks.block_sizes = {10, 10};
  EXPECT_THROW(generate(blocks), InvalidArgument);
  auto tiny = recipe(ArchitectureKind::erdos_renyi, 0);
  tiny.n = 1;
  EXPECT_THROW(generate(tiny), InvalidArgument);
  auto beta = recipe(ArchitectureKind::watts_strogatz, 0);
  beta.rewire_probability = 1.5;
  EXPECT_THROW(generate(beta), InvalidArgument);
}

TEST(Generate, KindNames) {
  for (auto kind : {ArchitectureKind::block_diagonal, ArchitectureKind::erdos_renyi,
                    ArchitectureKind::watts_strogatz, ArchitectureKind::barabasi_albert})
    EXPECT_EQ(architecture_kind_from_string(to_string(kind)), kind);
  EXPECT_THROW(architecture_kind_from_string("lattice"), InvalidArgument);
}
