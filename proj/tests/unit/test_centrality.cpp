#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "pdalloc/centrality.hpp"
#include "pdalloc/netgen.hpp"

using namespace pdalloc;

namespace {

ProductArchitecture undirected(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<Edge> e;
  for (auto [a, b] : pairs) {
    e.push_back({a, b});
    e.push_back({b, a});
  }
  return ProductArchitecture::uniform(n, e, 0.5, 0.05);
}

ProductArchitecture cycle(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({i, (i + 1) % n});
  return undirected(n, p);
}

void expect_all(const std::vector<double>& v, double x, double tol = 1e-10) {
  for (double s : v) EXPECT_NEAR(s, x, tol);
}

}  // namespace

TEST(PageRank, SymmetricPairAndCycle) {
  expect_all(pagerank(undirected(2, {{0, 1}})), 1.0);
  expect_all(pagerank(cycle(50)), 1.0);
}

TEST(PageRank, DirectedStarMatchesLinearSolve) {
  // Edge (hub, leaf) carries work from the leaf into the hub: a link leaf -> hub.
  const auto a = ProductArchitecture::uniform(4, {{0, 1}, {0, 2}, {0, 3}}, 0.5, 0.05);
  const double d = 0.85;
  // Google matrix with the dangling hub spread uniformly; solve (I - G) x = 0, sum x = 1.
  Eigen::Matrix4d G = Eigen::Matrix4d::Constant((1 - d) / 4);
  for (int leaf = 1; leaf < 4; ++leaf) G(0, leaf) += d;
  for (int i = 0; i < 4; ++i) G(i, 0) += d / 4;
  Eigen::Matrix<double, 5, 4> M;
  M.topRows<4>() = Eigen::Matrix4d::Identity() - G;
  M.row(4).setOnes();
  Eigen::Matrix<double, 5, 1> rhs = Eigen::Matrix<double, 5, 1>::Zero();
  rhs(4) = 1.0;
  const Eigen::Vector4d x = M.colPivHouseholderQr().solve(rhs);
  const auto raw = pagerank_raw(a);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(raw[i], x(i), 1e-12);
  const auto s = pagerank(a);
  EXPECT_EQ(s[0], 1.0);
  for (int i = 1; i < 4; ++i) EXPECT_LT(s[i], 1.0);
}

TEST(PageRank, RawScoresSumToOne) {
  for (auto kind : {ArchitectureKind::erdos_renyi, ArchitectureKind::barabasi_albert,
                    ArchitectureKind::block_diagonal}) {
    ArchitectureRecipe r;
    r.kind = kind;
    r.seed = 4;
    const auto raw = pagerank_raw(generate(r));
    EXPECT_NEAR(std::accumulate(raw.begin(), raw.end(), 0.0), 1.0, 1e-10);
  }
}

TEST(Eigenvector, ClosedForms) {
  expect_all(eigenvector_centrality(undirected(3, {{0, 1}, {1, 2}, {0, 2}})), 1.0);
  const auto path = eigenvector_centrality(undirected(3, {{0, 1}, {1, 2}}));
  EXPECT_NEAR(path[1], 1.0, 1e-10);
  EXPECT_NEAR(path[0], 1 / std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(path[2], 1 / std::sqrt(2.0), 1e-9);
  expect_all(eigenvector_centrality(undirected(4, {{0, 1}, {2, 3}})), 1.0);
  EXPECT_THROW(eigenvector_centrality(ProductArchitecture::uniform(3, {}, 0.5, 0.05)), InvalidArgument);
}

TEST(Closeness, HarmonicBfs) {
  expect_all(closeness_centrality(undirected(2, {{0, 1}})), 1.0);
  const auto path = closeness_centrality(undirected(3, {{0, 1}, {1, 2}}));
  EXPECT_EQ(path[1], 1.0);
  EXPECT_EQ(path[0], 0.75);
  EXPECT_EQ(path[2], 0.75);
  const auto iso = closeness_centrality(undirected(4, {{0, 1}, {1, 2}}));
  EXPECT_EQ(iso[3], 0.0);
  for (int i = 0; i < 3; ++i) EXPECT_GT(iso[i], 0.0);
  expect_all(closeness_centrality(ProductArchitecture::uniform(3, {}, 0.5, 0.05)), 0.0);
}

TEST(EdgeCentrality, Modes) {
  const std::vector<double> node{0.5, 1.0, 0.25};
  EXPECT_EQ(edge_centrality({1.0, 1.0}, {{0, 1}}), (std::vector<double>{1.0}));
  const auto ar = edge_centrality(node, {{0, 1}, {1, 1}});
  EXPECT_DOUBLE_EQ(ar[0], 0.75);
  const auto ge = edge_centrality(node, {{2, 1}, {1, 1}}, EdgeCentralityMode::geometric);
  EXPECT_DOUBLE_EQ(ge[0], 0.5);
}

TEST(Centrality, MaxIsOneAndPermutationEquivariant) {
  ArchitectureRecipe r;
  r.kind = ArchitectureKind::erdos_renyi;
  r.seed = 12;
  const auto a = generate(r);
  std::vector<std::size_t> perm(a.modules());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
  std::vector<Edge> pe;
  for (const auto& e : a.edges()) pe.push_back({perm[e.row], perm[e.col]});
  const ProductArchitecture b = ProductArchitecture::uniform(a.modules(), pe, 0.5, 0.05);
  for (auto m : kAllMetrics) {
    const auto sa = centrality(a, m);
    const auto sb = centrality(b, m);
    EXPECT_EQ(*std::max_element(sa.node.begin(), sa.node.end()), 1.0);
    for (std::size_t i = 0; i < a.modules(); ++i) EXPECT_NEAR(sa.node[i], sb.node[perm[i]], 1e-9) << to_string(m);
    EXPECT_EQ(sa.edge.size(), a.rule_count());
  }
}

TEST(Centrality, MetricNames) {
  for (auto m : kAllMetrics) EXPECT_EQ(centrality_metric_from_string(to_string(m)), m);
  EXPECT_THROW(centrality_metric_from_string("degree"), InvalidArgument);
}
