#pragma once

// Budget-constrained and performance-constrained allocation, solved as convex
// programs in the log variables x = log(phi), y = log(gamma).
//
// Flat layout of a log point: x(i,k) at i*T + k, then y(e,k) at n*T + e*T + k.

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "pdalloc/barrier.hpp"
#include "pdalloc/cost.hpp"
#include "pdalloc/wtm.hpp"

namespace pdalloc {

enum class ProblemKind { budget, performance };

inline std::string to_string(ProblemKind k) {
  return k == ProblemKind::budget ? "budget" : "performance";
}

inline ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "budget") return ProblemKind::budget;
  if (s == "performance") return ProblemKind::performance;
  throw InvalidArgument("unknown problem kind '" + s + "' (expected budget|performance)");
}

/// x = log(phi) (n x T), y = log(gamma) (|edges| x T).
struct LogPoint {
  Grid x;
  Grid y;

  static LogPoint from_decisions(const DecisionVariables& dv) {
    LogPoint z{dv.phi, dv.gamma};
    for (double& v : z.x.data()) v = std::log(v);
    for (double& v : z.y.data()) v = std::log(v);
    return z;
  }

  DecisionVariables to_decisions() const {
    DecisionVariables dv{x, y};
    for (double& v : dv.phi.data()) v = std::exp(v);
    for (double& v : dv.gamma.data()) v = std::exp(v);
    return dv;
  }

  std::vector<double> flatten() const {
    std::vector<double> f(x.data());
    f.insert(f.end(), y.data().begin(), y.data().end());
    return f;
  }

  static LogPoint unflatten(std::span<const double> f, std::size_t n, std::size_t edges,
                            std::size_t T) {
    if (f.size() != (n + edges) * T) throw InvalidArgument("flat log point has wrong length");
    LogPoint z{Grid(n, T), Grid(edges, T)};
    std::copy(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(n * T), z.x.data().begin());
    std::copy(f.begin() + static_cast<std::ptrdiff_t>(n * T), f.end(), z.y.data().begin());
    return z;
  }
};

/// log sum_i P_i(T) and its gradient with respect to the log variables, by
/// one forward pass and one adjoint pass through the recursion.
struct LogWorkObjective {
  const ProductArchitecture* arch = nullptr;
  std::size_t T = 0;
  std::vector<double> P0;
  CumulationMode mode = CumulationMode::literal;

  double operator()(std::span<const double> z, std::span<double> grad) const {
    const std::size_t n = arch->modules();
    const std::size_t E = arch->rule_count();
    const auto& edges = arch->edges();
    // log edge weight per (e, k): cumulative sum of y over rounds <= k.
    std::vector<double> w(E * T);
    for (std::size_t e = 0; e < E; ++e) {
      double acc = 0.0;
      const double shift =
          mode == CumulationMode::ratio ? std::log(arch->gamma_init()[e]) : 0.0;
      for (std::size_t k = 0; k < T; ++k) {
        acc += z[n * T + e * T + k] - shift;
        w[e * T + k] = std::exp(acc + shift);
      }
    }
    std::vector<double> P((T + 1) * n);
    std::copy(P0.begin(), P0.end(), P.begin());
    for (std::size_t k = 0; k < T; ++k) {
      const double* prev = &P[k * n];
      double* cur = &P[(k + 1) * n];
      for (std::size_t i = 0; i < n; ++i) cur[i] = std::exp(z[i * T + k]) * prev[i];
      for (std::size_t e = 0; e < E; ++e) cur[edges[e].row] += w[e * T + k] * prev[edges[e].col];
    }
    double S = 0.0;
    for (std::size_t i = 0; i < n; ++i) S += P[T * n + i];
    const double F = std::log(S);
    if (grad.empty()) return F;

    std::vector<double> lam(n, 1.0 / S), lam_prev(n);
    std::vector<double> contrib(E * T);
    for (std::size_t k = T; k-- > 0;) {
      const double* prev = &P[k * n];
      for (std::size_t i = 0; i < n; ++i) {
        const double phi = std::exp(z[i * T + k]);
        grad[i * T + k] = lam[i] * phi * prev[i];
        lam_prev[i] = phi * lam[i];
      }
      for (std::size_t e = 0; e < E; ++e) {
        const double wk = w[e * T + k];
        contrib[e * T + k] = lam[edges[e].row] * wk * prev[edges[e].col];
        lam_prev[edges[e].col] += wk * lam[edges[e].row];
      }
      lam.swap(lam_prev);
    }
    for (std::size_t e = 0; e < E; ++e) {
      double suffix = 0.0;
      for (std::size_t k = T; k-- > 0;) {
        suffix += contrib[e * T + k];
        grad[n * T + e * T + k] = suffix;
      }
    }
    return F;
  }
};

/// F(z) = log sum_i P_i(T) at phi = exp(x), gamma = exp(y), with gradient.
inline std::pair<double, LogPoint> objective_and_gradient_budget(
    const ProductArchitecture& arch, std::size_t T, std::span<const double> P0, const LogPoint& z,
    CumulationMode mode = CumulationMode::literal) {
  LogWorkObjective obj{&arch, T, std::vector<double>(P0.begin(), P0.end()), mode};
  const std::vector<double> flat = z.flatten();
  std::vector<double> g(flat.size());
  const double F = obj(flat, g);
  return {F, LogPoint::unflatten(g, arch.modules(), arch.rule_count(), T)};
}

/// Positive cost part sum c_e * (v_e / init_e)^-p_e over a set of rounds,
/// evaluated in log space.
struct LogCostTerms {
  struct Term {
    std::size_t index;  ///< position in the flat log point
    double coeff;
    double p;
    double log_init;
  };
  std::vector<Term> terms;
  double constant = 0.0;  ///< B^- over the same elements

  /// sum of positive parts and its gradient (accumulated into grad when non-empty).
  double positive(std::span<const double> z, std::span<double> grad) const {
    double s = 0.0;
    for (const Term& t : terms) {
      const double v = t.coeff * std::exp(-t.p * (z[t.index] - t.log_init));
      s += v;
      if (!grad.empty()) grad[t.index] += -t.p * v;
    }
    return s;
  }

  /// B = B^+ - B^-, summed term by term with expm1 so small investments keep
  /// full relative precision.
  double investment(std::span<const double> z) const {
    double s = 0.0;
    for (const Term& t : terms) s += t.coeff * std::expm1(-t.p * (z[t.index] - t.log_init));
    return s;
  }
};

/// Cost terms of rounds [r_begin, r_end). With `ratio_coordinates` the terms
/// expect z' = log(value / upper bound) instead of log(value).
inline LogCostTerms cost_terms(const ProductArchitecture& arch, const RoundBounds& bounds,
                               const CostModel& costs, std::size_t r_begin, std::size_t r_end,
                               bool ratio_coordinates = false) {
  const std::size_t n = arch.modules();
  const std::size_t T = bounds.rounds;
  LogCostTerms out;
  for (std::size_t k = r_begin; k < r_end; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const CostSpec& s = costs.module(i);
      out.terms.push_back({i * T + k, s.coefficient(), s.p,
                           ratio_coordinates ? 0.0 : std::log(bounds.phi_hi(i, k))});
      out.constant += s.coefficient();
    }
    for (std::size_t e = 0; e < arch.rule_count(); ++e) {
      const CostSpec& s = costs.edge(e);
      out.terms.push_back({n * T + e * T + k, s.coefficient(), s.p,
                           ratio_coordinates ? 0.0 : std::log(bounds.gamma_hi(e, k))});
      out.constant += s.coefficient();
    }
  }
  return out;
}

enum class SolveStatus { optimal, infeasible, not_converged };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::not_converged: return "not_converged";
  }
  return "unknown";
}

struct SolverDiagnostics {
  int outer_iterations = 0;
  int inner_iterations = 0;
  double kkt_residual = 0.0;
  double gap_bound = 0.0;
  std::vector<double> constraint_values;  ///< G_j at the optimum (<= 0)
  std::vector<bool> constraint_active;    ///< relative slack <= 1e-4
  std::string barrier_status;
};

struct SolutionReport {
  ProblemKind kind = ProblemKind::budget;
  SolveStatus status = SolveStatus::optimal;
  std::string message;
  DecisionVariables decisions;
  double objective = 0.0;  ///< sum P_i(T) (budget) or total cost (performance)
  double epigraph = 0.0;   ///< Gamma = log sum P_i(T) (budget) or Psi = total cost (performance)
  WorkTrajectory trajectory;
  std::vector<RoundCost> round_costs;
  SolverDiagnostics diagnostics;
  double wall_seconds = 0.0;

  double total_cost() const {
    double s = 0.0;
    for (const auto& rc : round_costs) s += rc.total;
    return s;
  }
};

namespace detail {

/// Values strictly inside [lo, hi] may land a hair outside after exp/log;
/// snap them back so cost evaluation stays within the declared bounds.
inline DecisionVariables clamp_to_bounds(DecisionVariables dv, const RoundBounds& b) {
  for (std::size_t i = 0; i < dv.phi.size(); ++i)
    dv.phi.data()[i] = std::clamp(dv.phi.data()[i], b.phi_lo.data()[i], b.phi_hi.data()[i]);
  for (std::size_t i = 0; i < dv.gamma.size(); ++i)
    dv.gamma.data()[i] = std::clamp(dv.gamma.data()[i], b.gamma_lo.data()[i], b.gamma_hi.data()[i]);
  return dv;
}

inline void check_cost_bounds(const ProductArchitecture& arch, const RoundBounds& bounds,
                              const CostModel& costs) {
  costs.validate();
  constexpr double slack = 1e-12;
  for (std::size_t k = 0; k < bounds.rounds; ++k) {
    for (std::size_t i = 0; i < arch.modules(); ++i)
      if (bounds.phi_lo(i, k) < costs.module(i).epsilon * bounds.phi_hi(i, k) * (1 - slack))
        throw InvalidArgument("phi lower bound of module " + std::to_string(i) +
                              " is below the cost model's fully improved value");
    for (std::size_t e = 0; e < arch.rule_count(); ++e)
      if (bounds.gamma_lo(e, k) < costs.edge(e).epsilon * bounds.gamma_hi(e, k) * (1 - slack))
        throw InvalidArgument("gamma lower bound of rule " + std::to_string(e) +
                              " is below the cost model's fully improved value");
  }
}

/// Internal coordinates: z' = log(value / upper bound), so the upper face is
/// exactly 0 and an uninvested element sits at the origin.
struct RatioCoordinates {
  std::vector<double> log_hi;

  std::vector<double> to_log(std::span<const double> zr) const {
    std::vector<double> z(zr.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = zr[i] + log_hi[i];
    return z;
  }
};

inline std::pair<Box, RatioCoordinates> ratio_box(const ProductArchitecture& arch,
                                                  const RoundBounds& bounds) {
  const std::size_t n = arch.modules();
  const std::size_t T = bounds.rounds;
  const std::size_t N = (n + arch.rule_count()) * T;
  Box box{std::vector<double>(N), std::vector<double>(N, 0.0)};
  RatioCoordinates rc{std::vector<double>(N)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < T; ++k) {
      box.lo[i * T + k] = std::log(bounds.phi_lo(i, k) / bounds.phi_hi(i, k));
      rc.log_hi[i * T + k] = std::log(bounds.phi_hi(i, k));
    }
  for (std::size_t e = 0; e < arch.rule_count(); ++e)
    for (std::size_t k = 0; k < T; ++k) {
      box.lo[n * T + e * T + k] = std::log(bounds.gamma_lo(e, k) / bounds.gamma_hi(e, k));
      rc.log_hi[n * T + e * T + k] = std::log(bounds.gamma_hi(e, k));
    }
  return {box, rc};
}

/// Decisions from ratio coordinates: value = upper * exp(z').
inline DecisionVariables decisions_from_ratio(std::span<const double> zr,
                                              const ProductArchitecture& arch,
                                              const RoundBounds& bounds) {
  const std::size_t n = arch.modules();
  const std::size_t T = bounds.rounds;
  DecisionVariables dv{Grid(n, T), Grid(arch.rule_count(), T)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < T; ++k) dv.phi(i, k) = bounds.phi_hi(i, k) * std::exp(zr[i * T + k]);
  for (std::size_t e = 0; e < arch.rule_count(); ++e)
    for (std::size_t k = 0; k < T; ++k)
      dv.gamma(e, k) = bounds.gamma_hi(e, k) * std::exp(zr[n * T + e * T + k]);
  return dv;
}

inline void finish_report(SolutionReport& rep, const ProductArchitecture& arch,
                          const RoundBounds& bounds, std::span<const double> P0,
                          const CostModel& costs, CumulationMode mode) {
  rep.decisions = clamp_to_bounds(rep.decisions, bounds);
  rep.trajectory = propagate(arch, rep.decisions, P0, mode);
  rep.round_costs = round_costs(arch, bounds, rep.decisions, costs);
  if (rep.kind == ProblemKind::budget) {
    rep.objective = total_remaining(rep.trajectory, bounds.rounds);
    rep.epigraph = std::log(rep.objective);
  } else {
    rep.objective = rep.total_cost();
    rep.epigraph = rep.objective;
  }
}

inline void copy_barrier_diagnostics(SolutionReport& rep, const BarrierResult& br) {
  rep.diagnostics.outer_iterations = br.outer_iterations;
  rep.diagnostics.inner_iterations = br.inner_iterations;
  rep.diagnostics.kkt_residual = br.kkt_residual;
  rep.diagnostics.gap_bound = br.gap_bound;
  rep.diagnostics.constraint_values = br.constraint_values;
  rep.diagnostics.barrier_status = to_string(br.status);
  if (br.status != BarrierStatus::converged) {
    rep.status = SolveStatus::not_converged;
    rep.message = br.message;
  }
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Minimize sum_i P_i(T) subject to B_k <= budgets[k] and the box bounds.
inline SolutionReport solve_budget(const ProductArchitecture& arch, const RoundBounds& bounds,
                                   std::span<const double> P0, const CostModel& costs,
                                   std::span<const double> budgets, const SolverConfig& cfg = {},
                                   CumulationMode mode = CumulationMode::literal) {
  const auto t_start = std::chrono::steady_clock::now();
  bounds.validate(arch);
  cfg.validate();
  detail::check_cost_bounds(arch, bounds, costs);
  const std::size_t T = bounds.rounds;
  const std::size_t n = arch.modules();
  if (budgets.size() != T) throw InvalidArgument("need one budget per round");
  for (double b : budgets)
    if (!(b >= 0.0) || !std::isfinite(b)) throw InvalidArgument("budgets must be nonnegative");
  if (P0.size() != n) throw InvalidArgument("P0 length must equal module count");
  for (double v : P0)
    if (!(v > 0.0)) throw InvalidArgument("P0 entries must be strictly positive");

  SolutionReport rep;
  rep.kind = ProblemKind::budget;

  auto [box, coords] = detail::ratio_box(arch, bounds);
  std::vector<double> start(box.hi.size(), 0.0);
  std::vector<SmoothFunction> constraints;
  for (std::size_t k = 0; k < T; ++k) {
    LogCostTerms terms = cost_terms(arch, bounds, costs, k, k + 1, true);
    if (budgets[k] <= 0.0) {
      // Nothing can be bought: pin the round at its initial values.
      for (const auto& t : terms.terms) box.lo[t.index] = box.hi[t.index];
      continue;
    }
    // Shrink inward until the round spends at most half its budget.
    double delta = cfg.feasibility_shrink;
    for (int tries = 0;; ++tries) {
      for (const auto& t : terms.terms)
        start[t.index] = -std::min(delta, 0.5 * (box.hi[t.index] - box.lo[t.index]));
      if (terms.investment(start) <= 0.5 * budgets[k]) break;
      if (tries > 200) throw Error("could not construct a strictly feasible start");
      delta *= 0.5;
    }
    const double budget = budgets[k];
    // G = (B^+ - budget - B^-) / (budget + B^-): convex, and the slack is
    // summed with expm1 so the barrier -log(-G) keeps full precision.
    constraints.push_back([terms, budget](std::span<const double> z, std::span<double> grad) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const double scale = budget + terms.constant;
      terms.positive(z, grad);
      for (const auto& t : terms.terms) grad[t.index] /= scale;
      return -(budget - terms.investment(z)) / scale;
    });
  }
  for (std::size_t i = 0; i < start.size(); ++i)
    if (box.lo[i] == box.hi[i]) start[i] = box.hi[i];

  LogWorkObjective obj{&arch, T, std::vector<double>(P0.begin(), P0.end()), mode};
  SmoothFunction f = [&obj, &coords](std::span<const double> zr, std::span<double> g) {
    return obj(coords.to_log(zr), g);
  };
  const BarrierResult br = barrier_minimize(f, constraints, box, start, cfg);

  rep.decisions = detail::decisions_from_ratio(br.z, arch, bounds);
  detail::copy_barrier_diagnostics(rep, br);
  detail::finish_report(rep, arch, bounds, P0, costs, mode);
  rep.diagnostics.constraint_active.assign(T, false);
  for (std::size_t k = 0; k < T; ++k) {
    const double b = budgets[k];
    rep.diagnostics.constraint_active[k] = b > 0.0 && (b - rep.round_costs[k].total) <= 1e-4 * b;
  }
  rep.wall_seconds = detail::seconds_since(t_start);
  return rep;
}

/// Minimize total cost subject to sum_i P_i(T) <= target and the box bounds.
inline SolutionReport solve_performance(const ProductArchitecture& arch, const RoundBounds& bounds,
                                        std::span<const double> P0, const CostModel& costs,
                                        double target, const SolverConfig& cfg = {},
                                        CumulationMode mode = CumulationMode::literal) {
  const auto t_start = std::chrono::steady_clock::now();
  bounds.validate(arch);
  cfg.validate();
  detail::check_cost_bounds(arch, bounds, costs);
  if (!(target > 0.0) || !std::isfinite(target))
    throw InvalidArgument("remaining-work target must be positive");
  const std::size_t T = bounds.rounds;
  const std::size_t n = arch.modules();
  if (P0.size() != n) throw InvalidArgument("P0 length must equal module count");
  for (double v : P0)
    if (!(v > 0.0)) throw InvalidArgument("P0 entries must be strictly positive");

  SolutionReport rep;
  rep.kind = ProblemKind::performance;
  const auto [box, coords] = detail::ratio_box(arch, bounds);
  LogWorkObjective work{&arch, T, std::vector<double>(P0.begin(), P0.end()), mode};
  const double log_target = std::log(target);

  const double uninvested = work(coords.to_log(box.hi), {});
  if (uninvested <= log_target) {
    rep.decisions = DecisionVariables::uninvested(bounds);
    rep.diagnostics.barrier_status = "not_needed";
    rep.diagnostics.constraint_values = {uninvested - log_target};
    rep.diagnostics.constraint_active = {false};
    detail::finish_report(rep, arch, bounds, P0, costs, mode);
    rep.wall_seconds = detail::seconds_since(t_start);
    return rep;
  }
  const double floor_value = work(coords.to_log(box.lo), {});
  if (!(floor_value < log_target)) {
    rep.status = SolveStatus::infeasible;
    rep.message = "target " + to_string_precise(target) + " is below the achievable floor " +
                  to_string_precise(std::exp(floor_value)) + " (all variables at their lower bounds)";
    rep.decisions = DecisionVariables{bounds.phi_lo, bounds.gamma_lo};
    detail::finish_report(rep, arch, bounds, P0, costs, mode);
    rep.objective = 0.0;
    rep.epigraph = 0.0;
    rep.wall_seconds = detail::seconds_since(t_start);
    return rep;
  }

  // Strictly feasible start: lower faces shifted inward.
  std::vector<double> start(box.lo.size());
  double delta = cfg.feasibility_shrink;
  for (int tries = 0;; ++tries) {
    for (std::size_t i = 0; i < start.size(); ++i)
      start[i] = box.lo[i] + std::min(delta, 0.5 * (box.hi[i] - box.lo[i]));
    if (work(coords.to_log(start), {}) < log_target) break;
    if (tries > 200) throw Error("could not construct a strictly feasible start");
    delta *= 0.5;
  }

  const LogCostTerms all_terms = cost_terms(arch, bounds, costs, 0, T, true);
  SmoothFunction f = [&all_terms](std::span<const double> z, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
    const double bp = all_terms.positive(z, g);
    for (const auto& t : all_terms.terms) g[t.index] /= bp;
    return std::log(bp);
  };
  std::vector<SmoothFunction> constraints{
      [&work, &coords, log_target](std::span<const double> z, std::span<double> g) {
        return work(coords.to_log(z), g) - log_target;
      }};
  const BarrierResult br = barrier_minimize(f, constraints, box, start, cfg);

  rep.decisions = detail::decisions_from_ratio(br.z, arch, bounds);
  detail::copy_barrier_diagnostics(rep, br);
  detail::finish_report(rep, arch, bounds, P0, costs, mode);
  const double final_work = total_remaining(rep.trajectory, T);
  rep.diagnostics.constraint_active = {(target - final_work) <= 1e-4 * target};
  rep.wall_seconds = detail::seconds_since(t_start);
  return rep;
}

}  // namespace pdalloc
