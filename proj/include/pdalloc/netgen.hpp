#pragma once

// Seeded generators for symmetric synthetic DSM architectures.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pdalloc/common.hpp"
#include "pdalloc/wtm.hpp"

namespace pdalloc {

enum class ArchitectureKind { block_diagonal, erdos_renyi, watts_strogatz, barabasi_albert };

inline std::string to_string(ArchitectureKind k) {
  switch (k) {
    case ArchitectureKind::block_diagonal: return "block";
    case ArchitectureKind::erdos_renyi: return "er";
    case ArchitectureKind::watts_strogatz: return "ws";
    case ArchitectureKind::barabasi_albert: return "ba";
  }
  return "unknown";
}

inline ArchitectureKind architecture_kind_from_string(const std::string& s) {
  if (s == "block" || s == "block-diagonal") return ArchitectureKind::block_diagonal;
  if (s == "er" || s == "erdos-renyi" || s == "random") return ArchitectureKind::erdos_renyi;
  if (s == "ws" || s == "watts-strogatz" || s == "small-world") return ArchitectureKind::watts_strogatz;
  if (s == "ba" || s == "barabasi-albert" || s == "scale-free") return ArchitectureKind::barabasi_albert;
  throw InvalidArgument("unknown architecture kind '" + s + "' (expected block|er|ws|ba)");
}

/// Block sizes [10,3,2,2] padded with singletons: exactly 100 rules.
inline std::vector<std::size_t> default_block_sizes(std::size_t n) {
  std::vector<std::size_t> sizes;
  std::size_t used = 0;
  for (std::size_t s : {10, 3, 2, 2}) {
    if (used + s > n) break;
    sizes.push_back(s);
    used += s;
  }
  while (used < n) {
    sizes.push_back(1);
    ++used;
  }
  return sizes;
}

struct ArchitectureRecipe {
  ArchitectureKind kind = ArchitectureKind::erdos_renyi;
  std::size_t n = 50;
  std::size_t target_rules = 100;
  std::vector<std::size_t> block_sizes;  ///< block-diagonal; empty selects the default partition
  std::size_t neighbors = 0;             ///< WS neighbors per side; 0 derives it from target_rules
  double rewire_probability = 0.1;       ///< WS beta
  std::size_t attachments = 1;           ///< BA m
  std::uint64_t seed = 0;
  double phi_init = 0.5;
  double gamma_init = 0.05;

  bool operator==(const ArchitectureRecipe&) const = default;
};

namespace detail {

/// Portable uniform integer in [0, bound) on top of mt19937_64 (the standard
/// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw InvalidArgument("empty sampling range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do v = eng_();
    while (v >= limit);
    return v % bound;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 eng_;
};

using UndirectedSet = std::set<std::pair<std::size_t, std::size_t>>;

inline std::pair<std::size_t, std::size_t> ordered(std::size_t a, std::size_t b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

inline ProductArchitecture symmetric_architecture(std::size_t n, const UndirectedSet& pairs,
                                                  double phi0, double gamma0) {
  std::vector<Edge> edges;
  for (const auto& [a, b] : pairs) {
    edges.push_back({a, b});
    edges.push_back({b, a});
  }
  std::sort(edges.begin(), edges.end());
  return ProductArchitecture::uniform(n, std::move(edges), phi0, gamma0);
}

inline void check_symmetric_target(const ArchitectureRecipe& r) {
  if (r.target_rules % 2 != 0)
    throw InvalidArgument("target rule count must be even for symmetric architectures");
  if (r.target_rules > r.n * (r.n - 1))
    throw InvalidArgument("target rule count exceeds n(n-1)");
}

inline void top_up(UndirectedSet& pairs, std::size_t n, std::size_t target_pairs, Rng& rng) {
  while (pairs.size() < target_pairs) {
    const std::size_t a = rng.below(n);
    const std::size_t b = rng.below(n);
    if (a == b) continue;
    pairs.insert(ordered(a, b));
  }
}

}  // namespace detail

/// Build a symmetric synthetic architecture from a recipe.
inline ProductArchitecture generate(const ArchitectureRecipe& r) {
  if (r.n < 2) throw InvalidArgument("generated architectures need at least 2 modules");
  if (!(r.phi_init > 0.0) || !(r.gamma_init > 0.0))
    throw InvalidArgument("initial parameter values must be positive");
  detail::Rng rng(r.seed);
  detail::UndirectedSet pairs;
  const std::size_t n = r.n;

  switch (r.kind) {
    case ArchitectureKind::block_diagonal: {
      const std::vector<std::size_t> sizes =
          r.block_sizes.empty() ? default_block_sizes(n) : r.block_sizes;
      if (std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) != n)
        throw InvalidArgument("block sizes must sum to the module count");
      std::size_t base = 0;
      for (std::size_t s : sizes) {
        if (s == 0) throw InvalidArgument("block sizes must be positive");
        for (std::size_t a = base; a < base + s; ++a)
          for (std::size_t b = a + 1; b < base + s; ++b) pairs.insert({a, b});
        base += s;
      }
      break;
    }
    case ArchitectureKind::erdos_renyi: {
      detail::check_symmetric_target(r);
      // G(n, M): partial Fisher-Yates over all unordered pairs.
      std::vector<std::pair<std::size_t, std::size_t>> all;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) all.emplace_back(a, b);
      const std::size_t m = r.target_rules / 2;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + rng.below(all.size() - i);
        std::swap(all[i], all[j]);
        pairs.insert(all[i]);
      }
      break;
    }
    case ArchitectureKind::watts_strogatz: {
      detail::check_symmetric_target(r);
      std::size_t k = r.neighbors;
      if (k == 0) {
        if (r.target_rules % (2 * n) != 0)
          throw InvalidArgument("small-world target rules must be a multiple of 2n");
        k = r.target_rules / (2 * n);
      }
      if (2 * k * n != r.target_rules)
        throw InvalidArgument("small-world lattice with " + std::to_string(k) +
                              " neighbors per side cannot yield the target rule count");
      if (2 * k >= n) throw InvalidArgument("too many lattice neighbors for the module count");
      if (!(r.rewire_probability >= 0.0 && r.rewire_probability <= 1.0))
        throw InvalidArgument("rewiring probability must lie in [0,1]");
      for (std::size_t u = 0; u < n; ++u)
        for (std::size_t j = 1; j <= k; ++j) pairs.insert(detail::ordered(u, (u + j) % n));
      std::vector<std::size_t> degree(n, 2 * k);
      for (std::size_t j = 1; j <= k; ++j) {
        for (std::size_t u = 0; u < n; ++u) {
          const std::size_t v = (u + j) % n;
          if (rng.uniform() >= r.rewire_probability) continue;
          if (!pairs.count(detail::ordered(u, v))) continue;
          if (degree[u] >= n - 1) continue;
          std::size_t w;
          do w = rng.below(n);
          while (w == u || pairs.count(detail::ordered(u, w)));
          pairs.erase(detail::ordered(u, v));
          pairs.insert(detail::ordered(u, w));
          --degree[v];
          ++degree[w];
        }
      }
      break;
    }
    case ArchitectureKind::barabasi_albert: {
      detail::check_symmetric_target(r);
      const std::size_t m = r.attachments;
      if (m < 1 || m >= n) throw InvalidArgument("attachment count must lie in [1, n)");
      // Star seed on m+1 nodes, then preferential attachment.
      std::vector<std::size_t> repeated;
      for (std::size_t b = 1; b <= m; ++b) {
        pairs.insert({0, b});
        repeated.push_back(0);
        repeated.push_back(b);
      }
      for (std::size_t v = m + 1; v < n; ++v) {
        std::set<std::size_t> targets;
        while (targets.size() < m) targets.insert(repeated[rng.below(repeated.size())]);
        for (std::size_t t : targets) {
          pairs.insert(detail::ordered(v, t));
          repeated.push_back(v);
          repeated.push_back(t);
        }
      }
      if (2 * pairs.size() > r.target_rules)
        throw InvalidArgument("preferential attachment already exceeds the target rule count");
      detail::top_up(pairs, n, r.target_rules / 2, rng);
      break;
    }
  }
  return detail::symmetric_architecture(n, pairs, r.phi_init, r.gamma_init);
}

}  // namespace pdalloc
