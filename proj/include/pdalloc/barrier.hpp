#pragma once

// Log-barrier interior-point minimizer for smooth convex programs
//
//   minimize F(z)  s.t.  G_j(z) <= 0,  lo <= z <= hi
//
// The inner problems  F + (1/t) * barrier  are solved with a limited-memory
// quasi-Newton method and backtracking line search; a stage that does not
// converge quickly switches to damped Newton steps on a dense Hessian. Box
// dimensions with lo == hi are held fixed.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "pdalloc/common.hpp"

namespace pdalloc {

struct SolverConfig {
  double t0 = 1.0;              ///< initial barrier weight
  double mu = 10.0;             ///< barrier growth per outer iteration
  double inner_tol = 1e-8;      ///< inf-norm of the barrier-function gradient
  double outer_tol = 1e-5;      ///< stop when m / t <= outer_tol
  double refine_tol = 1e-8;     ///< best-effort gap pursued after outer_tol is met
  int refine_iterations = 300;  ///< inner iteration cap per refinement stage
  int max_inner_iterations = 20000;
  int max_outer_iterations = 100;
  double alpha = 0.3;           ///< Armijo sufficient-decrease fraction
  double beta = 0.7;            ///< backtracking factor
  double feasibility_shrink = 1e-3;  ///< start offset from the upper box face (log space)
  int memory = 12;              ///< curvature pairs kept by the quasi-Newton update
  double curvature_floor = 1e-3;  ///< added to the preconditioner diagonal
  int newton_after = 2000;      ///< quasi-Newton iterations per stage before Newton steps
  double hessian_step = 1e-5;   ///< central-difference step for the smooth Hessian parts

  void validate() const {
    if (!(t0 > 0.0)) throw InvalidArgument("solver t0 must be positive");
    if (!(mu > 1.0)) throw InvalidArgument("solver mu must exceed 1");
    if (!(inner_tol > 0.0) || !(outer_tol > 0.0) || !(refine_tol > 0.0))
      throw InvalidArgument("solver tolerances must be positive");
    if (refine_iterations < 0) throw InvalidArgument("refine_iterations must be non-negative");
    if (!(alpha > 0.0 && alpha < 0.5)) throw InvalidArgument("solver alpha must lie in (0, 0.5)");
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("solver beta must lie in (0, 1)");
    if (max_inner_iterations < 1 || max_outer_iterations < 1)
      throw InvalidArgument("solver iteration caps must be positive");
    if (!(feasibility_shrink > 0.0)) throw InvalidArgument("feasibility shrink must be positive");
    if (memory < 1) throw InvalidArgument("quasi-Newton memory must be positive");
    if (!(curvature_floor > 0.0)) throw InvalidArgument("curvature floor must be positive");
    if (newton_after < 0) throw InvalidArgument("newton_after must be non-negative");
    if (!(hessian_step > 0.0)) throw InvalidArgument("hessian step must be positive");
  }

  bool operator==(const SolverConfig&) const = default;
};

/// Value-and-gradient callable. Writes the gradient into `grad` (same size as
/// z) and returns the value. Must be a pure function of z.
using SmoothFunction = std::function<double(std::span<const double> z, std::span<double> grad)>;

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

enum class BarrierStatus { converged, iteration_limit, line_search_failure, stalled };

inline std::string to_string(BarrierStatus s) {
  switch (s) {
    case BarrierStatus::converged: return "converged";
    case BarrierStatus::iteration_limit: return "iteration_limit";
    case BarrierStatus::line_search_failure: return "line_search_failure";
    case BarrierStatus::stalled: return "stalled";
  }
  return "unknown";
}

struct BarrierResult {
  std::vector<double> z;
  double objective = 0.0;
  std::vector<double> constraint_values;  ///< G_j(z) at the returned point
  BarrierStatus status = BarrierStatus::converged;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double kkt_residual = 0.0;   ///< inf-norm of the final barrier-function gradient
  double gap_bound = 0.0;      ///< m / t at exit
  double final_t = 0.0;
  std::string message;
};

namespace detail {

/// Barrier-augmented objective restricted to the free coordinates.
class BarrierProblem {
 public:
  BarrierProblem(const SmoothFunction& f, const std::vector<SmoothFunction>& g, const Box& box,
                 std::vector<double> full_point)
      : f_(f), g_(g), box_(box), full_(std::move(full_point)) {
    for (std::size_t i = 0; i < full_.size(); ++i)
      if (box_.hi[i] > box_.lo[i]) free_.push_back(i);
    grad_full_.resize(full_.size());
    anchor_.resize(free_.size());
    vlo_.resize(free_.size());
    vhi_.resize(free_.size());
    for (std::size_t a = 0; a < free_.size(); ++a) set_anchor(a, box_.lo[free_[a]]);
  }

  std::size_t dimension() const { return free_.size(); }
  std::size_t constraint_count() const { return g_.size() + 2 * free_.size(); }
  const std::vector<std::size_t>& free_indices() const { return free_; }

  /// Free coordinates of a full point, relative to their anchors.
  std::vector<double> restrict(const std::vector<double>& full) const {
    std::vector<double> r(free_.size());
    for (std::size_t a = 0; a < free_.size(); ++a) r[a] = full[free_[a]] - anchor_[a];
    return r;
  }

  std::vector<double> expand(std::span<const double> w) const {
    std::vector<double> z = full_;
    for (std::size_t a = 0; a < free_.size(); ++a) z[free_[a]] = anchor_[a] + w[a];
    return z;
  }

  /// Re-expresses every free coordinate relative to its nearer box face, so
  /// the slack to that face is represented exactly.
  void reanchor(std::vector<double>& w) {
    for (std::size_t a = 0; a < free_.size(); ++a) {
      const std::size_t i = free_[a];
      const double z = anchor_[a] + w[a];
      const double target = (w[a] - vlo_[a] <= vhi_[a] - w[a]) ? box_.lo[i] : box_.hi[i];
      if (target == anchor_[a]) continue;
      const double old_anchor = anchor_[a];
      const double old_w = w[a];
      set_anchor(a, target);
      w[a] = z - target;
      if (!(w[a] > vlo_[a] && w[a] < vhi_[a])) {
        set_anchor(a, old_anchor);
        w[a] = old_w;
      }
    }
  }

  /// Strict feasibility for every constraint and box face.
  bool strictly_feasible(std::span<const double> w) {
    for (std::size_t a = 0; a < free_.size(); ++a)
      if (!(w[a] > vlo_[a] && w[a] < vhi_[a])) return false;
    const std::vector<double> z = expand(w);
    for (const auto& gj : g_)
      if (!(gj(z, grad_full_) < 0.0)) return false;
    return true;
  }

  /// F(z) + (1/t) * phi(z). Returns +inf outside the barrier domain.
  double evaluate(std::span<const double> w, double t, std::span<double> grad) {
    const std::size_t d = free_.size();
    for (std::size_t a = 0; a < d; ++a)
      if (!(w[a] > vlo_[a] && w[a] < vhi_[a])) return inf();
    const std::vector<double> z = expand(w);
    std::fill(grad.begin(), grad.end(), 0.0);
    double barrier = 0.0;
    for (const auto& gj : g_) {
      const double v = gj(z, grad_full_);
      if (!(v < 0.0) || !std::isfinite(v)) return inf();
      barrier -= std::log(-v);
      for (std::size_t a = 0; a < d; ++a) grad[a] += grad_full_[free_[a]] / (-v) / t;
    }
    for (std::size_t a = 0; a < d; ++a) {
      const double sl = w[a] - vlo_[a];
      const double su = vhi_[a] - w[a];
      barrier -= std::log(sl) + std::log(su);
      grad[a] += (-1.0 / sl + 1.0 / su) / t;
    }
    const double fv = f_(z, grad_full_);
    if (!std::isfinite(fv)) return inf();
    for (std::size_t a = 0; a < d; ++a) grad[a] += grad_full_[free_[a]];
    return fv + barrier / t;
  }

  /// Builds M = D + U U^T at w. D holds the box-barrier curvature plus a
  /// diagonal estimate |dF| + sum_j |dG_j| / (t |G_j|) of the smooth
  /// curvature (exact up to the exponent scale for log-sum-exp forms with
  /// unit exponents), floored at sigma. U has one column
  /// grad G_j / (sqrt(t) |G_j|) per constraint.
  void prepare_preconditioner(std::span<const double> w, double t, double sigma) {
    const std::size_t d = free_.size();
    const std::size_t m = g_.size();
    diag_.resize(d);
    const std::vector<double> z = expand(w);
    f_(z, grad_full_);
    for (std::size_t a = 0; a < d; ++a) {
      const double sl = w[a] - vlo_[a];
      const double su = vhi_[a] - w[a];
      diag_[a] = (1.0 / (sl * sl) + 1.0 / (su * su)) / t + sigma + std::abs(grad_full_[free_[a]]);
    }
    cols_.assign(m, std::vector<double>(d));
    for (std::size_t j = 0; j < m; ++j) {
      const double v = g_[j](z, grad_full_);
      const double sc = 1.0 / (std::sqrt(t) * std::abs(v));
      for (std::size_t a = 0; a < d; ++a) {
        cols_[j][a] = grad_full_[free_[a]] * sc;
        diag_[a] += std::abs(grad_full_[free_[a]]) / (t * std::abs(v));
      }
    }
    // Cholesky of C = I + U^T D^-1 U.
    chol_.assign(m * m, 0.0);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c <= r; ++c) {
        double s = r == c ? 1.0 : 0.0;
        for (std::size_t a = 0; a < d; ++a) s += cols_[r][a] * cols_[c][a] / diag_[a];
        chol_[r * m + c] = s;
      }
    for (std::size_t c = 0; c < m; ++c) {
      double s = chol_[c * m + c];
      for (std::size_t k = 0; k < c; ++k) s -= chol_[c * m + k] * chol_[c * m + k];
      chol_[c * m + c] = std::sqrt(s);
      for (std::size_t r = c + 1; r < m; ++r) {
        double v = chol_[r * m + c];
        for (std::size_t k = 0; k < c; ++k) v -= chol_[r * m + k] * chol_[c * m + k];
        chol_[r * m + c] = v / chol_[c * m + c];
      }
    }
  }

  /// q <- M^-1 q by the Woodbury identity.
  void apply_preconditioner(std::span<double> q) const {
    const std::size_t d = free_.size();
    const std::size_t m = cols_.size();
    for (std::size_t a = 0; a < d; ++a) q[a] /= diag_[a];
    if (m == 0) return;
    std::vector<double> r(m);
    for (std::size_t j = 0; j < m; ++j) r[j] = dot_span(cols_[j], q);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < i; ++k) r[i] -= chol_[i * m + k] * r[k];
      r[i] /= chol_[i * m + i];
    }
    for (std::size_t i = m; i-- > 0;) {
      for (std::size_t k = i + 1; k < m; ++k) r[i] -= chol_[k * m + i] * r[k];
      r[i] /= chol_[i * m + i];
    }
    for (std::size_t a = 0; a < d; ++a) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += cols_[j][a] * r[j];
      q[a] -= s / diag_[a];
    }
  }

  /// Dense Hessian of the barrier function at w. Barrier terms are exact; the
  /// Hessians of F and every G_j come from central differences of their
  /// gradients, which are smooth on the whole space.
  void hessian(std::span<const double> w, double t, double h, Eigen::MatrixXd& H) {
    const std::size_t d = free_.size();
    const std::size_t m = g_.size();
    std::vector<double> z = expand(w);
    std::vector<double> weight(m);
    Eigen::MatrixXd U(d, m);
    for (std::size_t j = 0; j < m; ++j) {
      const double v = g_[j](z, grad_full_);
      weight[j] = 1.0 / (t * -v);
      for (std::size_t a = 0; a < d; ++a) U(a, j) = grad_full_[free_[a]] / (std::sqrt(t) * -v);
    }
    H.setZero(d, d);
    std::vector<double> gp(z.size()), gm(z.size());
    auto add_column = [&](const SmoothFunction& fn, double wt, std::size_t a) {
      const std::size_t i = free_[a];
      const double zi = z[i];
      z[i] = zi + h;
      fn(z, gp);
      z[i] = zi - h;
      fn(z, gm);
      z[i] = zi;
      const double sc = wt / (2.0 * h);
      for (std::size_t b = 0; b < d; ++b) H(b, a) += (gp[free_[b]] - gm[free_[b]]) * sc;
    };
    for (std::size_t a = 0; a < d; ++a) {
      add_column(f_, 1.0, a);
      for (std::size_t j = 0; j < m; ++j) add_column(g_[j], weight[j], a);
    }
    H = 0.5 * (H + H.transpose()).eval();
    H.noalias() += U * U.transpose();
    for (std::size_t a = 0; a < d; ++a) {
      const double sl = w[a] - vlo_[a];
      const double su = vhi_[a] - w[a];
      H(a, a) += (1.0 / (sl * sl) + 1.0 / (su * su)) / t;
    }
  }

  /// Largest step along `dir` that stays inside the open box.
  double max_box_step(std::span<const double> w, std::span<const double> dir) const {
    double s = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < free_.size(); ++a) {
      if (dir[a] > 0.0) s = std::min(s, (vhi_[a] - w[a]) / dir[a]);
      else if (dir[a] < 0.0) s = std::min(s, (vlo_[a] - w[a]) / dir[a]);
    }
    return s;
  }

  static double inf() { return std::numeric_limits<double>::infinity(); }

 private:
  const SmoothFunction& f_;
  const std::vector<SmoothFunction>& g_;
  const Box& box_;
  std::vector<double> full_;
  std::vector<std::size_t> free_;
  std::vector<double> grad_full_;
  std::vector<double> anchor_, vlo_, vhi_;
  std::vector<double> diag_;
  std::vector<std::vector<double>> cols_;
  std::vector<double> chol_;

  void set_anchor(std::size_t a, double anchor) {
    const std::size_t i = free_[a];
    anchor_[a] = anchor;
    vlo_[a] = box_.lo[i] - anchor;
    vhi_[a] = box_.hi[i] - anchor;
  }

  static double dot_span(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }
};

inline double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct InnerResult {
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  bool line_search_failed = false;
  bool stalled = false;
};

/// Backtracking from the largest safe step along a descent direction.
/// Returns false when no acceptable step exists.
inline bool backtrack(BarrierProblem& prob, std::span<const double> w, double t,
                      const SolverConfig& cfg, double fval, double slope,
                      std::span<const double> dir, std::vector<double>& w_new,
                      std::vector<double>& g_new, double& f_new) {
  const std::size_t d = w.size();
  double step = std::min(1.0, 0.99 * prob.max_box_step(w, dir));
  for (int ls = 0; ls < 200 && step >= 1e-300; ++ls, step *= cfg.beta) {
    for (std::size_t a = 0; a < d; ++a) w_new[a] = w[a] + step * dir[a];
    f_new = prob.evaluate(w_new, t, g_new);
    if (!std::isfinite(f_new)) continue;
    if (f_new <= fval + cfg.alpha * step * slope) return true;
    // The barrier function is convex along the ray, so phi(s) <= phi(0) +
    // s phi'(s); phi'(s) <= alpha phi'(0) therefore certifies sufficient
    // decrease even when f differences fall below rounding.
    if (dot(g_new, dir) <= cfg.alpha * slope) return true;
  }
  return false;
}

/// Damped Newton steps on the dense barrier Hessian.
inline void newton_phase(BarrierProblem& prob, std::vector<double>& w, double t,
                         const SolverConfig& cfg, int iteration_budget, InnerResult& out) {
  const std::size_t d = w.size();
  std::vector<double> g(d), g_new(d), dir(d), w_new(d);
  double fval = prob.evaluate(w, t, g);
  Eigen::MatrixXd H;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double best = std::numeric_limits<double>::infinity();
  double best_f = std::numeric_limits<double>::infinity();
  int best_it = 0;
  for (int it = 0; it < iteration_budget; ++it) {
    out.grad_norm = inf_norm(g);
    if (out.grad_norm <= cfg.inner_tol) {
      out.converged = true;
      return;
    }
    // Stop once neither the gradient nor the value moves any more: rounding
    // has taken over.
    if (out.grad_norm < 0.5 * best ||
        best_f - fval > 1e-13 * (1.0 + std::abs(fval))) {
      best = std::min(best, out.grad_norm);
      best_f = fval;
      best_it = it;
    } else if (it - best_it >= 10) {
      out.stalled = true;
      return;
    }
    prob.hessian(w, t, cfg.hessian_step, H);
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(d));
    Eigen::VectorXd step;
    // FD noise can make H slightly indefinite; shift until Cholesky succeeds.
    const double scale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
    for (double shift = 0.0; shift < scale; shift = shift == 0.0 ? 1e-12 * scale : shift * 10.0) {
      llt.compute(H + shift * Eigen::MatrixXd::Identity(H.rows(), H.cols()));
      if (llt.info() != Eigen::Success) continue;
      step = -llt.solve(gv);
      if (step.allFinite() && step.dot(gv) < 0.0) break;
      step.resize(0);
    }
    if (step.size() == 0) {
      const double sc = 1.0 / std::max(1.0, out.grad_norm);
      for (std::size_t a = 0; a < d; ++a) dir[a] = -g[a] * sc;
    } else {
      for (std::size_t a = 0; a < d; ++a) dir[a] = step[static_cast<Eigen::Index>(a)];
    }
    double f_new = 0.0;
    ++out.iterations;
    if (!backtrack(prob, w, t, cfg, fval, dot(g, dir), dir, w_new, g_new, f_new)) {
      out.line_search_failed = true;
      return;
    }
    w.swap(w_new);
    g.swap(g_new);
    fval = f_new;
  }
  out.grad_norm = inf_norm(g);
  out.converged = out.grad_norm <= cfg.inner_tol;
}

/// Limited-memory quasi-Newton descent on the barrier function at weight t,
/// handing over to Newton steps after `cfg.newton_after` iterations.
inline InnerResult minimize_inner(BarrierProblem& prob, std::vector<double>& w, double t,
                                  const SolverConfig& cfg, int iteration_budget) {
  const std::size_t d = w.size();
  InnerResult out;
  std::vector<double> g(d), g_new(d), dir(d), w_new(d), q(d);
  double fval = prob.evaluate(w, t, g);
  if (!std::isfinite(fval)) {
    out.line_search_failed = true;
    return out;
  }
  std::deque<std::vector<double>> S, Y;
  std::deque<double> Rho;
  std::vector<double> alpha_buf;
  const int qn_budget = std::min(iteration_budget, cfg.newton_after);

  for (int it = 0; it < qn_budget; ++it) {
    out.grad_norm = inf_norm(g);
    if (out.grad_norm <= cfg.inner_tol) {
      out.converged = true;
      return out;
    }
    // Two-loop recursion with the barrier preconditioner as initial inverse.
    q = g;
    alpha_buf.assign(S.size(), 0.0);
    for (std::size_t m = S.size(); m-- > 0;) {
      alpha_buf[m] = Rho[m] * dot(S[m], q);
      for (std::size_t a = 0; a < d; ++a) q[a] -= alpha_buf[m] * Y[m][a];
    }
    prob.prepare_preconditioner(w, t, cfg.curvature_floor);
    prob.apply_preconditioner(q);
    for (std::size_t m = 0; m < S.size(); ++m) {
      const double b = Rho[m] * dot(Y[m], q);
      for (std::size_t a = 0; a < d; ++a) q[a] += S[m][a] * (alpha_buf[m] - b);
    }
    for (std::size_t a = 0; a < d; ++a) dir[a] = -q[a];
    double slope = dot(g, dir);
    if (!(slope < 0.0)) {
      // Curvature memory produced a non-descent direction; restart on -g.
      S.clear();
      Y.clear();
      Rho.clear();
      const double sc = 1.0 / std::max(1.0, inf_norm(g));
      for (std::size_t a = 0; a < d; ++a) dir[a] = -g[a] * sc;
      slope = dot(g, dir);
    }
    double f_new = 0.0;
    ++out.iterations;
    if (!backtrack(prob, w, t, cfg, fval, slope, dir, w_new, g_new, f_new)) break;
    std::vector<double> s(d), y(d);
    for (std::size_t a = 0; a < d; ++a) {
      s[a] = w_new[a] - w[a];
      y[a] = g_new[a] - g[a];
    }
    const double sy = dot(s, y);
    if (sy > 1e-300 * std::max(1.0, dot(y, y))) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      Rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > cfg.memory) {
        S.pop_front();
        Y.pop_front();
        Rho.pop_front();
      }
    }
    w.swap(w_new);
    g.swap(g_new);
    fval = f_new;
  }
  out.grad_norm = inf_norm(g);
  if (out.grad_norm <= cfg.inner_tol) {
    out.converged = true;
    return out;
  }
  newton_phase(prob, w, t, cfg, iteration_budget - out.iterations, out);
  return out;
}

}  // namespace detail

/// Barrier method from a strictly feasible start. Throws InvalidArgument when
/// `start` is not strictly feasible.
inline BarrierResult barrier_minimize(const SmoothFunction& f, const std::vector<SmoothFunction>& g,
                                      const Box& box, const std::vector<double>& start,
                                      const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t N = start.size();
  if (box.lo.size() != N || box.hi.size() != N) throw InvalidArgument("box dimension mismatch");
  for (std::size_t i = 0; i < N; ++i)
    if (!(box.lo[i] <= box.hi[i])) throw InvalidArgument("inconsistent box bounds");

  detail::BarrierProblem prob(f, g, box, start);
  std::vector<double> w = prob.restrict(start);
  if (!prob.strictly_feasible(w)) throw InvalidArgument("barrier start point is not strictly feasible");

  BarrierResult res;
  const double m = static_cast<double>(std::max<std::size_t>(prob.constraint_count(), 1));
  double t = cfg.t0;
  int inner_budget = cfg.max_inner_iterations;
  bool failed = false;
  double last_grad = 0.0;

  if (prob.dimension() > 0) {
    for (int outer = 0; outer < cfg.max_outer_iterations; ++outer) {
      prob.reanchor(w);
      const auto inner = detail::minimize_inner(prob, w, t, cfg, inner_budget);
      res.inner_iterations += inner.iterations;
      ++res.outer_iterations;
      last_grad = inner.grad_norm;
      if (!inner.converged) {
        failed = true;
        const std::string at = " at t = " + to_string_precise(t) + " (gradient norm " +
                               to_string_precise(inner.grad_norm) + ")";
        if (inner.line_search_failed) {
          res.status = BarrierStatus::line_search_failure;
          res.message = "line search failed" + at;
        } else if (inner.stalled) {
          res.status = BarrierStatus::stalled;
          res.message = "inner solve stalled at the rounding floor" + at;
        } else {
          res.status = BarrierStatus::iteration_limit;
          res.message = "inner iteration cap reached" + at;
        }
      }
      if (failed) break;
      if (m / t <= cfg.outer_tol) break;
      t *= cfg.mu;
      if (outer + 1 == cfg.max_outer_iterations) {
        failed = true;
        res.status = BarrierStatus::iteration_limit;
        res.message = "outer iteration cap reached";
      }
    }
    // Refinement: tighten the gap further while stages still converge within
    // a short budget. A failed stage is discarded and the last converged
    // iterate kept.
    if (!failed && cfg.refine_iterations > 0) {
      std::vector<double> kept;
      while (m / t > cfg.refine_tol) {
        prob.reanchor(w);
        kept = w;
        const double t_next = t * cfg.mu;
        const auto inner = detail::minimize_inner(prob, w, t_next, cfg, cfg.refine_iterations);
        res.inner_iterations += inner.iterations;
        if (!inner.converged) {
          w.swap(kept);
          break;
        }
        ++res.outer_iterations;
        t = t_next;
        last_grad = inner.grad_norm;
      }
    }
  }

  res.z = prob.expand(w);
  std::vector<double> scratch(N);
  res.objective = f(res.z, scratch);
  for (const auto& gj : g) res.constraint_values.push_back(gj(res.z, scratch));
  res.kkt_residual = last_grad;
  res.final_t = t;
  res.gap_bound = prob.dimension() > 0 ? m / t : 0.0;
  if (!failed) res.status = BarrierStatus::converged;
  return res;
}

}  // namespace pdalloc
