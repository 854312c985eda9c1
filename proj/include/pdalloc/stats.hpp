#pragma once

// Pearson correlation, least-squares lines and one-way ANOVA with an
// F-distribution p-value from the regularized incomplete beta function.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "pdalloc/common.hpp"

namespace pdalloc {

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double pearson_r = 0.0;
  std::size_t count = 0;
};

struct AnovaResult {
  double F = 0.0;
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  double p_value = 1.0;
};

namespace detail {

struct Moments {
  double sxx = 0.0, syy = 0.0, sxy = 0.0, mx = 0.0, my = 0.0;
};

inline Moments moments(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("sample lengths differ");
  if (xs.size() < 2) throw InvalidArgument("need at least two samples");
  Moments m;
  const double n = static_cast<double>(xs.size());
  m.mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  m.my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - m.mx, dy = ys[i] - m.my;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  return m;
}

/// Continued fraction for the incomplete beta (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("beta parameters must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("incomplete beta argument must lie in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The fraction converges fast for x < (a+1)/(a+b+2); use symmetry otherwise.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(F > f) for an F(d1, d2) variable.
inline double f_survival(double f, double d1, double d2) {
  if (!(f > 0.0)) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  const auto m = detail::moments(xs, ys);
  if (!(m.sxx > 0.0) || !(m.syy > 0.0))
    throw InvalidArgument("pearson correlation undefined for zero variance");
  const double r = m.sxy / std::sqrt(m.sxx * m.syy);
  return std::clamp(r, -1.0, 1.0);
}

inline RegressionFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  const auto m = detail::moments(xs, ys);
  if (!(m.sxx > 0.0)) throw InvalidArgument("regression undefined for zero x variance");
  RegressionFit fit;
  fit.count = xs.size();
  fit.slope = m.sxy / m.sxx;
  fit.intercept = m.my - fit.slope * m.mx;
  fit.pearson_r = m.syy > 0.0 ? std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0) : 0.0;
  return fit;
}

inline AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw InvalidArgument("ANOVA needs at least two groups");
  double total = 0.0;
  std::size_t N = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw InvalidArgument("every ANOVA group needs at least two samples");
    total += std::accumulate(g.begin(), g.end(), 0.0);
    N += g.size();
  }
  const double grand = total / static_cast<double>(N);
  double ss_between = 0.0, ss_within = 0.0;
  for (const auto& g : groups) {
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    ss_between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) ss_within += (v - mean) * (v - mean);
  }
  AnovaResult r;
  r.df_between = groups.size() - 1;
  r.df_within = N - groups.size();
  const double msb = ss_between / static_cast<double>(r.df_between);
  const double msw = ss_within / static_cast<double>(r.df_within);
  // Tiny between-group sums are rounding noise from identical groups.
  if (ss_between <= 1e-15 * (ss_within + grand * grand * static_cast<double>(N))) {
    r.F = 0.0;
    r.p_value = 1.0;
  } else if (!(msw > 0.0)) {
    r.F = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
  } else {
    r.F = msb / msw;
    r.p_value = f_survival(r.F, static_cast<double>(r.df_between), static_cast<double>(r.df_within));
  }
  return r;
}

/// Boxplot-ready summary.
struct Quantiles {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
};

/// Linear interpolation between order statistics.
inline Quantiles quantiles(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("quantiles of an empty sample");
  std::sort(v.begin(), v.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  Quantiles q;
  q.min = v.front();
  q.max = v.back();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  q.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return q;
}

}  // namespace pdalloc
