#pragma once

// Product architecture, per-round decision variables and the discrete-time
// work transformation recursion P(k) = A_k P(k-1).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdalloc/common.hpp"

namespace pdalloc {

/// Directed dependency. Entry (row, col) of the WTM carries work from module
/// `col` into module `row`.
struct Edge {
  std::size_t row = 0;
  std::size_t col = 0;

  auto operator<=>(const Edge&) const = default;
};

/// How design-rule multipliers accumulate across rounds.
enum class CumulationMode {
  literal,  ///< entry = prod_{l<=k} gamma_l
  ratio,    ///< entry = gamma_init * prod_{l<=k} (gamma_l / gamma_init)
};

inline std::string to_string(CumulationMode m) {
  return m == CumulationMode::literal ? "literal" : "ratio";
}

inline CumulationMode cumulation_mode_from_string(const std::string& s) {
  if (s == "literal") return CumulationMode::literal;
  if (s == "ratio") return CumulationMode::ratio;
  throw InvalidArgument("unknown cumulation mode '" + s + "' (expected literal|ratio)");
}

/// Module count, dependency structure and initial parameter values (the
/// DSM/WTM skeleton). Immutable after construction.
class ProductArchitecture {
 public:
  ProductArchitecture() = default;

  ProductArchitecture(std::size_t n, std::vector<Edge> edges, std::vector<double> phi_init,
                      std::vector<double> gamma_init, std::vector<std::string> names = {})
      : n_(n),
        edges_(std::move(edges)),
        phi_init_(std::move(phi_init)),
        gamma_init_(std::move(gamma_init)),
        names_(std::move(names)) {
    if (n_ == 0) throw InvalidArgument("architecture needs at least one module");
    if (phi_init_.size() != n_) throw InvalidArgument("phi_init length must equal module count");
    if (gamma_init_.size() != edges_.size())
      throw InvalidArgument("gamma_init length must equal edge count");
    if (!names_.empty() && names_.size() != n_)
      throw InvalidArgument("module name count must equal module count");
    std::set<Edge> seen;
    for (const Edge& e : edges_) {
      if (e.row >= n_ || e.col >= n_) throw InvalidArgument("edge endpoint out of range");
      if (e.row == e.col) throw InvalidArgument("self-loop edges are not allowed");
      if (!seen.insert(e).second) throw InvalidArgument("duplicate edge");
    }
    for (double v : phi_init_)
      if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("phi_init entries must be positive");
    for (double v : gamma_init_)
      if (!(v > 0.0) || !std::isfinite(v))
        throw InvalidArgument("gamma_init entries must be positive");
  }

  /// Uniform initial values on a given structure.
  static ProductArchitecture uniform(std::size_t n, std::vector<Edge> edges, double phi0,
                                     double gamma0) {
    std::vector<double> g(edges.size(), gamma0);
    return ProductArchitecture(n, std::move(edges), std::vector<double>(n, phi0), std::move(g));
  }

  std::size_t modules() const { return n_; }
  std::size_t rule_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<double>& phi_init() const { return phi_init_; }
  const std::vector<double>& gamma_init() const { return gamma_init_; }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<std::size_t> edge_index(std::size_t row, std::size_t col) const {
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (edges_[e].row == row && edges_[e].col == col) return e;
    return std::nullopt;
  }

  bool operator==(const ProductArchitecture&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<double> phi_init_;
  std::vector<double> gamma_init_;
  std::vector<std::string> names_;
};

/// Per-element, per-round box bounds. Grids are (element x round).
struct RoundBounds {
  std::size_t rounds = 0;
  Grid phi_lo, phi_hi;
  Grid gamma_lo, gamma_hi;

  /// Bounds [eps * init, init] for every round.
  static RoundBounds from_ratio(const ProductArchitecture& arch, std::size_t T, double eps) {
    if (T == 0) throw InvalidArgument("round count must be positive");
    if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("bound ratio must lie in (0,1]");
    RoundBounds b;
    b.rounds = T;
    b.phi_lo = Grid(arch.modules(), T);
    b.phi_hi = Grid(arch.modules(), T);
    b.gamma_lo = Grid(arch.rule_count(), T);
    b.gamma_hi = Grid(arch.rule_count(), T);
    for (std::size_t k = 0; k < T; ++k) {
      for (std::size_t i = 0; i < arch.modules(); ++i) {
        b.phi_hi(i, k) = arch.phi_init()[i];
        b.phi_lo(i, k) = eps * arch.phi_init()[i];
      }
      for (std::size_t e = 0; e < arch.rule_count(); ++e) {
        b.gamma_hi(e, k) = arch.gamma_init()[e];
        b.gamma_lo(e, k) = eps * arch.gamma_init()[e];
      }
    }
    return b;
  }

  void validate(const ProductArchitecture& arch) const {
    if (rounds == 0) throw InvalidArgument("round count must be positive");
    auto check = [&](const Grid& lo, const Grid& hi, std::size_t rows, const char* what) {
      if (lo.rows() != rows || hi.rows() != rows || lo.cols() != rounds || hi.cols() != rounds)
        throw InvalidArgument(std::string(what) + " bound grid has wrong shape");
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = 0; k < rounds; ++k)
          if (!(lo(r, k) > 0.0) || !(lo(r, k) <= hi(r, k)) || !std::isfinite(hi(r, k)))
            throw InvalidArgument(std::string("inconsistent ") + what + " bounds at element " +
                                  std::to_string(r) + ", round " + std::to_string(k + 1));
    };
    check(phi_lo, phi_hi, arch.modules(), "phi");
    check(gamma_lo, gamma_hi, arch.rule_count(), "gamma");
  }
};

/// phi: n x T, gamma: |edges| x T.
struct DecisionVariables {
  Grid phi;
  Grid gamma;

  std::size_t rounds() const { return phi.cols(); }

  /// Every variable at its initial (upper) value: no investment.
  static DecisionVariables uninvested(const RoundBounds& b) { return {b.phi_hi, b.gamma_hi}; }

  bool within(const RoundBounds& b, double rel_tol = 1e-12) const {
    auto ok = [&](const Grid& v, const Grid& lo, const Grid& hi) {
      if (v.rows() != lo.rows() || v.cols() != lo.cols()) return false;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = v.data()[i];
        if (!(x >= lo.data()[i] * (1 - rel_tol) && x <= hi.data()[i] * (1 + rel_tol))) return false;
      }
      return true;
    };
    return ok(phi, b.phi_lo, b.phi_hi) && ok(gamma, b.gamma_lo, b.gamma_hi);
  }

  bool operator==(const DecisionVariables&) const = default;
};

/// P[k] for k = 0..T.
struct WorkTrajectory {
  std::vector<std::vector<double>> P;

  std::size_t rounds() const { return P.empty() ? 0 : P.size() - 1; }
};

namespace detail {

inline void check_dims(const ProductArchitecture& arch, const DecisionVariables& dv) {
  if (dv.phi.rows() != arch.modules() || dv.gamma.rows() != arch.rule_count() ||
      dv.gamma.cols() != dv.phi.cols())
    throw InvalidArgument("decision variable grid does not match architecture");
}

/// Off-diagonal weight of edge e in round k (0-based), given the decision grid.
inline double edge_weight(const ProductArchitecture& arch, const DecisionVariables& dv,
                          std::size_t e, std::size_t k, CumulationMode mode) {
  double w = 1.0;
  if (mode == CumulationMode::literal) {
    for (std::size_t l = 0; l <= k; ++l) w *= dv.gamma(e, l);
  } else {
    const double g0 = arch.gamma_init()[e];
    w = g0;
    for (std::size_t l = 0; l <= k; ++l) w *= dv.gamma(e, l) / g0;
  }
  return w;
}

}  // namespace detail

/// Dense WTM A_k for a 1-based round index k.
inline Grid build_wtm(const ProductArchitecture& arch, const DecisionVariables& dv, std::size_t k,
                      CumulationMode mode = CumulationMode::literal) {
  detail::check_dims(arch, dv);
  if (k < 1 || k > dv.rounds())
    throw InvalidArgument("round index " + std::to_string(k) + " out of range [1, " +
                          std::to_string(dv.rounds()) + "]");
  const std::size_t n = arch.modules();
  Grid A(n, n);
  for (std::size_t i = 0; i < n; ++i) A(i, i) = dv.phi(i, k - 1);
  for (std::size_t e = 0; e < arch.rule_count(); ++e) {
    const Edge& ed = arch.edges()[e];
    A(ed.row, ed.col) = detail::edge_weight(arch, dv, e, k - 1, mode);
  }
  return A;
}

/// Forward recursion P(k) = A_k P(k-1), k = 1..T.
inline WorkTrajectory propagate(const ProductArchitecture& arch, const DecisionVariables& dv,
                                std::span<const double> P0,
                                CumulationMode mode = CumulationMode::literal) {
  detail::check_dims(arch, dv);
  if (P0.size() != arch.modules()) throw InvalidArgument("P0 length must equal module count");
  for (double v : P0)
    if (!(v > 0.0)) throw InvalidArgument("P0 entries must be strictly positive");
  const std::size_t n = arch.modules();
  const std::size_t T = dv.rounds();
  WorkTrajectory traj;
  traj.P.assign(T + 1, std::vector<double>(n, 0.0));
  traj.P[0].assign(P0.begin(), P0.end());
  for (std::size_t k = 1; k <= T; ++k) {
    const auto& prev = traj.P[k - 1];
    auto& cur = traj.P[k];
    for (std::size_t i = 0; i < n; ++i) cur[i] = dv.phi(i, k - 1) * prev[i];
    for (std::size_t e = 0; e < arch.rule_count(); ++e) {
      const Edge& ed = arch.edges()[e];
      cur[ed.row] += detail::edge_weight(arch, dv, e, k - 1, mode) * prev[ed.col];
    }
  }
  return traj;
}

inline std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

/// Sum_i P_i(k).
inline double total_remaining(const WorkTrajectory& traj, std::size_t k) {
  if (k >= traj.P.size()) throw InvalidArgument("round index out of range");
  return std::accumulate(traj.P[k].begin(), traj.P[k].end(), 0.0);
}

/// 1 / Sum_i P_i(k); throws when no work remains.
inline double performance(const WorkTrajectory& traj, std::size_t k) {
  const double s = total_remaining(traj, k);
  if (!(s > 0.0)) throw InvalidArgument("performance undefined: total remaining work is zero");
  return 1.0 / s;
}

/// Fractional reduction of total remaining work from round k to k+1.
inline double completion_rate(const WorkTrajectory& traj, std::size_t k) {
  if (k + 1 >= traj.P.size()) throw InvalidArgument("completion rate needs k < T");
  const double a = total_remaining(traj, k);
  if (!(a > 0.0)) throw InvalidArgument("completion rate undefined: zero remaining work");
  return (a - total_remaining(traj, k + 1)) / a;
}

/// xi(0..T-1).
inline std::vector<double> completion_rates(const WorkTrajectory& traj) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < traj.P.size(); ++k) out.push_back(completion_rate(traj, k));
  return out;
}

}  // namespace pdalloc
