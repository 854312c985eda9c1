#pragma once

// Symbolic monomials and posynomials over the per-round decision variables.
// This is a desk-scale oracle: it expands P(T) exactly so the numeric
// propagation and adjoint gradients can be checked against it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "pdalloc/common.hpp"
#include "pdalloc/wtm.hpp"

namespace pdalloc {

/// A decision variable: phi_{element,round} or gamma_{element,round}
/// (0-based element and round).
struct Variable {
  enum class Kind { phi, gamma };
  Kind kind = Kind::phi;
  std::size_t element = 0;
  std::size_t round = 0;

  static Variable phi(std::size_t i, std::size_t k) { return {Kind::phi, i, k}; }
  static Variable gamma(std::size_t e, std::size_t k) { return {Kind::gamma, e, k}; }

  auto operator<=>(const Variable&) const = default;
};

inline std::string to_string(const Variable& v) {
  return std::string(v.kind == Variable::Kind::phi ? "phi" : "gamma") + "[" +
         std::to_string(v.element) + "," + std::to_string(v.round) + "]";
}

using ExponentMap = std::map<Variable, double>;
using VariableValues = std::map<Variable, double>;

struct Monomial {
  double coeff = 1.0;
  ExponentMap exponents;

  double evaluate(const VariableValues& vals) const {
    double r = coeff;
    for (const auto& [v, a] : exponents) r *= std::pow(vals.at(v), a);
    return r;
  }
};

/// Sum of monomials with canonical term merging (identical exponent maps
/// collapse into one term). An empty posynomial is the zero function.
class Posynomial {
 public:
  Posynomial() = default;

  static Posynomial constant(double c) { return monomial(c, {}); }
  static Posynomial variable(const Variable& v) { return monomial(1.0, {{v, 1.0}}); }
  static Posynomial monomial(double c, ExponentMap exps) {
    if (!(c > 0.0)) throw InvalidArgument("monomial coefficient must be positive");
    Posynomial p;
    std::erase_if(exps, [](const auto& kv) { return kv.second == 0.0; });
    p.terms_.emplace(std::move(exps), c);
    return p;
  }

  bool is_zero() const { return terms_.empty(); }
  std::size_t term_count() const { return terms_.size(); }

  std::vector<Monomial> terms() const {
    std::vector<Monomial> out;
    for (const auto& [e, c] : terms_) out.push_back({c, e});
    return out;
  }

  /// Coefficient of the term with exactly these exponents (0 if absent).
  double coefficient(const ExponentMap& exps) const {
    auto it = terms_.find(exps);
    return it == terms_.end() ? 0.0 : it->second;
  }

  friend Posynomial operator+(const Posynomial& a, const Posynomial& b) {
    Posynomial r = a;
    for (const auto& [e, c] : b.terms_) r.terms_[e] += c;
    return r;
  }

  friend Posynomial operator*(const Posynomial& a, const Posynomial& b) {
    Posynomial r;
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        ExponentMap e = ea;
        for (const auto& [v, x] : eb) e[v] += x;
        std::erase_if(e, [](const auto& kv) { return kv.second == 0.0; });
        r.terms_[std::move(e)] += ca * cb;
      }
    }
    return r;
  }

  Posynomial scaled(double s) const {
    if (!(s > 0.0)) throw InvalidArgument("posynomial scale factor must be positive");
    Posynomial r = *this;
    for (auto& [_, c] : r.terms_) c *= s;
    return r;
  }

  double evaluate(const VariableValues& vals) const {
    double s = 0.0;
    for (const auto& [e, c] : terms_) s += Monomial{c, e}.evaluate(vals);
    return s;
  }

  /// log f(exp[x]) with max-shift stabilization. x holds log-values.
  double log_domain_eval(const VariableValues& x) const {
    if (is_zero()) throw InvalidArgument("log of the zero posynomial");
    std::vector<double> args;
    args.reserve(terms_.size());
    for (const auto& [e, c] : terms_) {
      double a = std::log(c);
      for (const auto& [v, p] : e) a += p * x.at(v);
      args.push_back(a);
    }
    const double m = *std::max_element(args.begin(), args.end());
    double s = 0.0;
    for (double a : args) s += std::exp(a - m);
    return m + std::log(s);
  }

  /// Gradient of log f(exp[x]) with respect to x: softmax-weighted exponents.
  VariableValues log_domain_gradient(const VariableValues& x) const {
    if (is_zero()) throw InvalidArgument("log of the zero posynomial");
    std::vector<double> args;
    for (const auto& [e, c] : terms_) {
      double a = std::log(c);
      for (const auto& [v, p] : e) a += p * x.at(v);
      args.push_back(a);
    }
    const double m = *std::max_element(args.begin(), args.end());
    double s = 0.0;
    for (double& a : args) s += (a = std::exp(a - m));
    VariableValues g;
    std::size_t idx = 0;
    for (const auto& [e, c] : terms_) {
      const double w = args[idx++] / s;
      for (const auto& [v, p] : e) g[v] += w * p;
    }
    return g;
  }

 private:
  std::map<ExponentMap, double> terms_;
};

inline Posynomial poly_add(const Posynomial& a, const Posynomial& b) { return a + b; }
inline Posynomial poly_mul(const Posynomial& a, const Posynomial& b) { return a * b; }
inline Posynomial poly_scale(const Posynomial& a, double s) { return a.scaled(s); }

inline double log_domain_eval(const Posynomial& f, const VariableValues& x) {
  return f.log_domain_eval(x);
}

inline constexpr std::size_t kMaxSymbolicTerms = 1'000'000;

/// P_i(T) for every module as exact posynomials in {phi_{i,k}} and {gamma_{e,k}}.
inline std::vector<Posynomial> symbolic_remaining_work(const ProductArchitecture& arch,
                                                       std::size_t T, std::span<const double> P0,
                                                       CumulationMode mode = CumulationMode::literal,
                                                       std::size_t max_terms = kMaxSymbolicTerms) {
  const std::size_t n = arch.modules();
  if (P0.size() != n) throw InvalidArgument("P0 length must equal module count");
  if (T == 0) throw InvalidArgument("round count must be positive");
  std::vector<Posynomial> P(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(P0[i] > 0.0)) throw InvalidArgument("P0 entries must be strictly positive");
    P[i] = Posynomial::constant(P0[i]);
  }
  for (std::size_t k = 0; k < T; ++k) {
    // Projected size before expanding this round.
    std::size_t projected = 0;
    for (std::size_t i = 0; i < n; ++i) projected += P[i].term_count();
    for (const Edge& ed : arch.edges()) projected += P[ed.col].term_count();
    if (projected > max_terms)
      throw Error("symbolic expansion exceeds " + std::to_string(max_terms) + " terms");

    std::vector<Posynomial> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = Posynomial::variable(Variable::phi(i, k)) * P[i];
    for (std::size_t e = 0; e < arch.rule_count(); ++e) {
      const Edge& ed = arch.edges()[e];
      ExponentMap exps;
      for (std::size_t l = 0; l <= k; ++l) exps[Variable::gamma(e, l)] = 1.0;
      double coeff = 1.0;
      if (mode == CumulationMode::ratio)
        coeff = std::pow(arch.gamma_init()[e], -static_cast<double>(k));
      next[ed.row] = next[ed.row] + Posynomial::monomial(coeff, std::move(exps)) * P[ed.col];
    }
    P = std::move(next);
  }
  return P;
}

/// Numeric values of every decision variable, keyed for posynomial evaluation.
inline VariableValues variable_values(const DecisionVariables& dv) {
  VariableValues vals;
  for (std::size_t k = 0; k < dv.rounds(); ++k) {
    for (std::size_t i = 0; i < dv.phi.rows(); ++i) vals[Variable::phi(i, k)] = dv.phi(i, k);
    for (std::size_t e = 0; e < dv.gamma.rows(); ++e) vals[Variable::gamma(e, k)] = dv.gamma(e, k);
  }
  return vals;
}

inline VariableValues log_values(const VariableValues& vals) {
  VariableValues out;
  for (const auto& [v, x] : vals) out[v] = std::log(x);
  return out;
}

}  // namespace pdalloc
