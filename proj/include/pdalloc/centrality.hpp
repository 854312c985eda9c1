#pragma once

// Node centralities on the unweighted dependency structure (PageRank,
// eigenvector, harmonic closeness) and derived design-rule scores.

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "pdalloc/common.hpp"
#include "pdalloc/wtm.hpp"

namespace pdalloc {

enum class CentralityMetric { pagerank, eigenvector, closeness };

inline std::string to_string(CentralityMetric m) {
  switch (m) {
    case CentralityMetric::pagerank: return "pagerank";
    case CentralityMetric::eigenvector: return "eigenvector";
    case CentralityMetric::closeness: return "closeness";
  }
  return "unknown";
}

inline CentralityMetric centrality_metric_from_string(const std::string& s) {
  if (s == "pagerank") return CentralityMetric::pagerank;
  if (s == "eigenvector") return CentralityMetric::eigenvector;
  if (s == "closeness") return CentralityMetric::closeness;
  throw InvalidArgument("unknown centrality metric '" + s + "'");
}

inline constexpr CentralityMetric kAllMetrics[] = {
    CentralityMetric::eigenvector, CentralityMetric::pagerank, CentralityMetric::closeness};

enum class EdgeCentralityMode { arithmetic, geometric };

struct CentralityScores {
  CentralityMetric metric = CentralityMetric::pagerank;
  std::vector<double> node;
  std::vector<double> edge;
};

/// Divide by the maximum; an all-zero vector is left unchanged.
inline void max_normalize(std::vector<double>& v) {
  if (v.empty()) return;
  const double m = *std::max_element(v.begin(), v.end());
  if (!(m > 0.0)) return;
  for (double& x : v) x /= m;
}

namespace detail {

/// Undirected neighbor lists (both directions of every edge, deduplicated).
inline std::vector<std::vector<std::size_t>> undirected_neighbors(const ProductArchitecture& arch) {
  std::vector<std::vector<std::size_t>> nb(arch.modules());
  for (const Edge& e : arch.edges()) {
    nb[e.row].push_back(e.col);
    nb[e.col].push_back(e.row);
  }
  for (auto& l : nb) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return nb;
}

}  // namespace detail

/// PageRank scores summing to 1 (before any normalization). Link direction
/// follows the work flow: edge (row, col) is a link col -> row.
inline std::vector<double> pagerank_raw(const ProductArchitecture& arch, double damping = 0.85,
                                        double tol = 1e-12, int max_iterations = 100000) {
  if (!(damping >= 0.0 && damping < 1.0)) throw InvalidArgument("damping must lie in [0,1)");
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  const std::size_t n = arch.modules();
  std::vector<std::size_t> out_degree(n, 0);
  for (const Edge& e : arch.edges()) ++out_degree[e.col];
  const double nd = static_cast<double>(n);
  std::vector<double> r(n, 1.0 / nd), next(n);
  for (int it = 0; it < max_iterations; ++it) {
    double dangling = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (out_degree[i] == 0) dangling += r[i];
    const double base = (1.0 - damping) / nd + damping * dangling / nd;
    std::fill(next.begin(), next.end(), base);
    for (const Edge& e : arch.edges())
      next[e.row] += damping * r[e.col] / static_cast<double>(out_degree[e.col]);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - r[i]);
    r.swap(next);
    if (change <= tol) break;
  }
  return r;
}

inline std::vector<double> pagerank(const ProductArchitecture& arch, double damping = 0.85,
                                    double tol = 1e-12) {
  auto r = pagerank_raw(arch, damping, tol);
  max_normalize(r);
  return r;
}

/// Dominant eigenvector of the symmetrized adjacency by power iteration from
/// the uniform vector. Iterates with A + I, which has the same eigenvectors
/// and avoids oscillation on bipartite graphs.
inline std::vector<double> eigenvector_centrality(const ProductArchitecture& arch, double tol = 1e-12,
                                                  int max_iterations = 100000) {
  if (arch.rule_count() == 0) throw InvalidArgument("eigenvector centrality needs at least one edge");
  const auto nb = detail::undirected_neighbors(arch);
  const std::size_t n = arch.modules();
  std::vector<double> v(n, 1.0), next(n);
  for (int it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = v[i];
      for (std::size_t j : nb[i]) next[i] += v[j];
    }
    max_normalize(next);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - v[i]));
    v.swap(next);
    if (change <= tol) break;
  }
  return v;
}

/// Harmonic closeness sum_{j != i} 1 / d(i, j) on the symmetrized graph.
inline std::vector<double> closeness_centrality(const ProductArchitecture& arch) {
  const auto nb = detail::undirected_neighbors(arch);
  const std::size_t n = arch.modules();
  std::vector<double> score(n, 0.0);
  std::vector<int> dist(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::queue<std::size_t> q;
    dist[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t w : nb[u]) {
        if (dist[w] >= 0) continue;
        dist[w] = dist[u] + 1;
        score[s] += 1.0 / dist[w];
        q.push(w);
      }
    }
  }
  max_normalize(score);
  return score;
}

/// Per-edge score from endpoint scores, max-normalized.
inline std::vector<double> edge_centrality(const std::vector<double>& node, const std::vector<Edge>& edges,
                                           EdgeCentralityMode mode = EdgeCentralityMode::arithmetic) {
  std::vector<double> out;
  out.reserve(edges.size());
  for (const Edge& e : edges) {
    const double a = node.at(e.row), b = node.at(e.col);
    out.push_back(mode == EdgeCentralityMode::arithmetic ? 0.5 * (a + b) : std::sqrt(a * b));
  }
  max_normalize(out);
  return out;
}

inline CentralityScores centrality(const ProductArchitecture& arch, CentralityMetric metric,
                                   EdgeCentralityMode mode = EdgeCentralityMode::arithmetic) {
  CentralityScores s;
  s.metric = metric;
  switch (metric) {
    case CentralityMetric::pagerank: s.node = pagerank(arch); break;
    case CentralityMetric::eigenvector: s.node = eigenvector_centrality(arch); break;
    case CentralityMetric::closeness: s.node = closeness_centrality(arch); break;
  }
  s.edge = edge_centrality(s.node, arch.edges(), mode);
  return s;
}

}  // namespace pdalloc
