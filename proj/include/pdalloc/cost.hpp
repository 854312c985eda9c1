#pragma once

// Posynomial investment costs. Each element is costed on the ratio
// u = value / init in [eps, 1]:
//
//   cost(u) = c * (u^-p - 1),   f+(u) = c * u^-p,   f-(init) = c
//
// so an uninvested element (u = 1) costs exactly zero.

#include <cmath>
#include <map>
#include <string>

#include "pdalloc/common.hpp"
#include "pdalloc/wtm.hpp"

namespace pdalloc {

enum class CostNormalization {
  unit_coefficient,  ///< coefficient = c
  unit_max_cost,     ///< coefficient = 1 / (eps^-p - 1), so cost(eps) = 1
};

inline std::string to_string(CostNormalization n) {
  return n == CostNormalization::unit_coefficient ? "unit-coefficient" : "unit-max-cost";
}

inline CostNormalization cost_normalization_from_string(const std::string& s) {
  if (s == "unit-coefficient") return CostNormalization::unit_coefficient;
  if (s == "unit-max-cost") return CostNormalization::unit_max_cost;
  throw InvalidArgument("unknown cost normalization '" + s +
                        "' (expected unit-coefficient|unit-max-cost)");
}

struct CostSpec {
  double c = 1.0;
  double p = 1.0;
  double epsilon = 0.1;
  CostNormalization normalization = CostNormalization::unit_coefficient;

  void validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("cost coefficient c must be positive");
    if (!(p > 0.0) || !std::isfinite(p)) throw InvalidArgument("cost exponent p must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("cost epsilon must lie in (0,1)");
  }

  double coefficient() const {
    if (normalization == CostNormalization::unit_coefficient) return c;
    return 1.0 / (std::pow(epsilon, -p) - 1.0);
  }

  /// Monomial part c * u^-p.
  double positive_part(double u) const { return coefficient() * std::pow(u, -p); }

  bool operator==(const CostSpec&) const = default;
};

/// Cost of moving an element from `init` down to `value`.
inline double element_cost(const CostSpec& spec, double value, double init) {
  if (!(value > 0.0) || !(init > 0.0)) throw InvalidArgument("cost arguments must be positive");
  const double u = value / init;
  constexpr double slack = 1e-12;
  if (u > 1.0 + slack)
    throw InvalidArgument("negative investment: value " + to_string_precise(value) +
                          " exceeds initial value " + to_string_precise(init));
  if (u < spec.epsilon * (1.0 - slack))
    throw InvalidArgument("value " + to_string_precise(value) + " is below the fully improved bound " +
                          to_string_precise(spec.epsilon * init));
  if (u >= 1.0) return 0.0;
  return spec.coefficient() * (std::pow(u, -spec.p) - 1.0);
}

/// Global default with per-module and per-edge overrides.
struct CostModel {
  CostSpec default_spec;
  std::map<std::size_t, CostSpec> module_overrides;
  std::map<std::size_t, CostSpec> edge_overrides;

  const CostSpec& module(std::size_t i) const {
    auto it = module_overrides.find(i);
    return it == module_overrides.end() ? default_spec : it->second;
  }
  const CostSpec& edge(std::size_t e) const {
    auto it = edge_overrides.find(e);
    return it == edge_overrides.end() ? default_spec : it->second;
  }

  void validate() const {
    default_spec.validate();
    for (const auto& [_, s] : module_overrides) s.validate();
    for (const auto& [_, s] : edge_overrides) s.validate();
  }

  bool operator==(const CostModel&) const = default;
};

struct RoundCost {
  std::vector<double> module_costs;  ///< f_i
  std::vector<double> edge_costs;    ///< g_e
  double total = 0.0;                ///< B_k
  double positive = 0.0;             ///< B_k^+
  double constant = 0.0;             ///< B_k^-
};

/// B_k and its B^+ / B^- split for a 1-based round k. The initial value of
/// each element is its round-k upper bound.
inline RoundCost round_cost(const ProductArchitecture& arch, const RoundBounds& bounds,
                            const DecisionVariables& dv, const CostModel& costs, std::size_t k) {
  if (k < 1 || k > dv.rounds()) throw InvalidArgument("round index out of range");
  const std::size_t r = k - 1;
  RoundCost rc;
  rc.module_costs.resize(arch.modules());
  rc.edge_costs.resize(arch.rule_count());
  for (std::size_t i = 0; i < arch.modules(); ++i) {
    const CostSpec& s = costs.module(i);
    const double init = bounds.phi_hi(i, r);
    rc.module_costs[i] = element_cost(s, dv.phi(i, r), init);
    rc.positive += s.positive_part(dv.phi(i, r) / init);
    rc.constant += s.coefficient();
    rc.total += rc.module_costs[i];
  }
  for (std::size_t e = 0; e < arch.rule_count(); ++e) {
    const CostSpec& s = costs.edge(e);
    const double init = bounds.gamma_hi(e, r);
    rc.edge_costs[e] = element_cost(s, dv.gamma(e, r), init);
    rc.positive += s.positive_part(dv.gamma(e, r) / init);
    rc.constant += s.coefficient();
    rc.total += rc.edge_costs[e];
  }
  return rc;
}

inline std::vector<RoundCost> round_costs(const ProductArchitecture& arch, const RoundBounds& bounds,
                                          const DecisionVariables& dv, const CostModel& costs) {
  std::vector<RoundCost> out;
  for (std::size_t k = 1; k <= dv.rounds(); ++k) out.push_back(round_cost(arch, bounds, dv, costs, k));
  return out;
}

/// Sum_k B_k.
inline double total_cost(const ProductArchitecture& arch, const RoundBounds& bounds,
                         const DecisionVariables& dv, const CostModel& costs) {
  double s = 0.0;
  for (std::size_t k = 1; k <= dv.rounds(); ++k) s += round_cost(arch, bounds, dv, costs, k).total;
  return s;
}

}  // namespace pdalloc
