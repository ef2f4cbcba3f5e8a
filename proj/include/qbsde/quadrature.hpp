#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "qbsde/errors.hpp"

namespace qbsde {

namespace detail {

template <class F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm,
                            double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  if (!std::isfinite(flm) || !std::isfinite(frm))
    throw CoefficientEvalError("integrand returned a non-finite value near x = " +
                               std::to_string(m));
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Richardson: |error| of the refined pair is about |delta| / 15.
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
    throw CoefficientEvalError("integrand returned a non-finite value in [" +
                               std::to_string(a) + ", " + std::to_string(b) + "]");
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace detail

/// Adaptive quadrature of f over [a, b] to absolute tolerance `abs_tol`.
/// The interval is split at every listed breakpoint so that discontinuities
/// of piecewise rules sit on panel edges; each smooth panel then refines
/// until the local Richardson estimate meets its share of the tolerance.
/// Orientation follows the usual convention: a > b flips the sign.
template <class F>
double integrate_adaptive(const F& f, double a, double b, double abs_tol = 1e-12,
                          std::span<const double> breakpoints = {},
                          int max_depth = 40) {
  if (!(std::isfinite(a) && std::isfinite(b)))
    throw PreconditionError("integrate_adaptive: non-finite interval endpoint");
  if (a == b) return 0.0;
  const double sign = a < b ? 1.0 : -1.0;
  const double lo = std::min(a, b), hi = std::max(a, b);
  std::vector<double> cuts;
  cuts.push_back(lo);
  for (double c : breakpoints)
    if (c > lo && c < hi) cuts.push_back(c);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  const double panel_tol = abs_tol / static_cast<double>(cuts.size() - 1);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += detail::adaptive_simpson(f, cuts[i], cuts[i + 1], panel_tol, max_depth);
  return sign * total;
}

/// Nodes and weights of the n-point Gauss-Hermite rule for weight exp(-x^2),
/// so that  ∫ g(x) exp(-x^2) dx ≈ Σ w_i g(x_i).
/// Computed once per order by Newton iteration on the orthonormal recurrence
/// and cached; exact for polynomials of degree 2n - 1.
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline const HermiteRule& gauss_hermite(std::size_t n) {
  if (n == 0 || n > 256) throw PreconditionError("gauss_hermite: order must be in [1, 256]");
  static std::mutex mu;
  static std::map<std::size_t, HermiteRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  HermiteRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const std::size_t m = (n + 1) / 2;
  long double z = 0.0L;
  for (std::size_t i = 0; i < m; ++i) {
    // Stroud-Secrest style initial guesses, then Newton on the orthonormal
    // Hermite recurrence (stable up to the supported orders).
    if (i == 0) {
      z = std::sqrt(2.0L * n + 1.0L) -
          1.85575L * std::pow(2.0L * n + 1.0L, -0.16667L);
    } else if (i == 1) {
      z -= 1.14L * std::pow((long double)n, 0.426L) / z;
    } else if (i == 2) {
      z = 1.86L * z - 0.86L * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91L * z - 0.91L * rule.nodes[1];
    } else {
      z = 2.0L * z - rule.nodes[i - 2];
    }
    long double pp = 0.0L;
    for (int iter = 0; iter < 200; ++iter) {
      long double p1 = 0.7511255444649424828587030047762276930510L;  // pi^(-1/4)
      long double p2 = 0.0L;
      for (std::size_t j = 1; j <= n; ++j) {
        const long double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0L / j) * p2 - std::sqrt((j - 1.0L) / j) * p3;
      }
      pp = std::sqrt(2.0L * n) * p2;
      const long double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-18L * std::max(1.0L, std::abs(z))) break;
    }
    rule.nodes[i] = static_cast<double>(z);
    rule.nodes[n - 1 - i] = -static_cast<double>(z);
    const double w = static_cast<double>(2.0L / (pp * pp));
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;  // symmetry: centre node is exact
  auto [pos, inserted] = cache.emplace(n, std::move(rule));
  (void)inserted;
  return pos->second;
}

/// E[g(Z)] for Z ~ N(0,1) via the n-point Gauss-Hermite rule.
template <class G>
double normal_expectation(const G& g, std::size_t order) {
  static const double inv_sqrt_pi = 1.0 / std::sqrt(std::acos(-1.0));
  const HermiteRule& rule = gauss_hermite(order);
  const double root2 = std::sqrt(2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double gi = g(root2 * rule.nodes[i]);
    if (!std::isfinite(gi))
      throw CoefficientEvalError("normal_expectation: integrand non-finite at z = " +
                                 std::to_string(root2 * rule.nodes[i]));
    s += rule.weights[i] * gi;
  }
  return inv_sqrt_pi * s;
}

/// E[g(Z)] computed at increasing quadrature orders until the relative change
/// between consecutive orders drops below `rel_tol`. Throws OracleFailureError
/// when the sequence has not settled at the maximum order.
template <class G>
double normal_expectation_adaptive(const G& g, double rel_tol = 1e-9) {
  static const std::size_t orders[] = {32, 48, 64, 96, 128};
  double prev = normal_expectation(g, orders[0]);
  for (std::size_t k = 1; k < std::size(orders); ++k) {
    const double cur = normal_expectation(g, orders[k]);
    const double change = std::abs(cur - prev) / std::max(1.0, std::abs(cur));
    if (change <= rel_tol) return cur;
    prev = cur;
  }
  throw OracleFailureError(
      "normal_expectation_adaptive: no convergence at maximum quadrature order");
}

/// Standard normal density and distribution function (double precision).
inline double normal_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779399460599343818684759;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace qbsde
