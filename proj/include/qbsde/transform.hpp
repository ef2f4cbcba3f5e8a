#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "qbsde/coefficient.hpp"
#include "qbsde/errors.hpp"
#include "qbsde/quadrature.hpp"

namespace qbsde {

enum class TransformKind { u, v };

struct TransformEval {
  double value;
  double deriv;
};

/// Tabulated scalar transform attached to an integrable coefficient f.
///
/// Kind u:  u(x) = ∫_0^x exp(2 ∫_0^y f(s) ds) dy.
///   Strictly increasing bijection with u(0) = 0, u'' = 2 f u' a.e.,
///   |x|/M <= |u(x)| <= M |x| and 1/M <= u' <= M for M = exp(2 ∫ |f|).
///
/// Kind v:  v(x) = ∫_0^{|x|} w(y) dy with w(y) = u_{-f}(y) exp(2 ∫_0^y f ds),
///   so that v >= 0, v(0) = 0, sgn(v') = sgn(x), v'' - 2 f(|x|) |v'| = 1 a.e.,
///   x^2/(2 M^2) <= v(x) <= M^2 x^2 / 2 and |x|/M^2 <= |v'(x)| <= M^2 |x|.
///
/// Node values and derivatives are produced by nested adaptive quadrature with
/// panel edges snapped to the coefficient's discontinuities, so the tabulated
/// derivative is exp(2 ∫_0^x f) evaluated to quadrature accuracy, not a
/// divided difference. Between nodes evaluation uses a monotone cubic Hermite
/// rule; outside the table it extends linearly with the boundary derivative
/// (exact once the table covers the coefficient's support, since u' is
/// constant there).
struct TransformTable {
  TransformKind kind = TransformKind::u;
  std::vector<double> nodes;
  std::vector<double> values;
  std::vector<double> derivs;
  double mass_constant = 1.0;  // M = exp(2 * total |mass| of the coefficient)
  IntegrableCoefficient source;
};

namespace detail {

inline std::vector<double> make_table_nodes(double lo, double hi, std::size_t resolution,
                                            std::span<const double> breakpoints) {
  std::vector<double> special;
  special.push_back(lo);
  special.push_back(hi);
  if (lo < 0.0 && hi > 0.0) special.push_back(0.0);
  for (double b : breakpoints)
    if (b > lo && b < hi) special.push_back(b);
  std::sort(special.begin(), special.end());
  special.erase(std::unique(special.begin(), special.end()), special.end());

  const double snap = (hi - lo) * 1e-12;
  std::vector<double> nodes = special;
  for (std::size_t i = 0; i < resolution; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) /
                              static_cast<double>(resolution - 1);
    bool near_special = false;
    for (double s : special)
      if (std::abs(x - s) <= snap) {
        near_special = true;
        break;
      }
    if (!near_special) nodes.push_back(x);
  }
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

/// Cumulative 2 ∫_0^{x_k} f over a node set that contains 0 and every
/// breakpoint, so each panel is smooth.
inline std::vector<double> cumulative_double_integral(const IntegrableCoefficient& f,
                                                      const std::vector<double>& nodes,
                                                      std::size_t k0) {
  std::vector<double> acc(nodes.size(), 0.0);
  for (std::size_t k = k0; k + 1 < nodes.size(); ++k)
    acc[k + 1] =
        acc[k] + 2.0 * integrate_adaptive([&f](double x) { return f(x); }, nodes[k],
                                          nodes[k + 1], 1e-13);
  for (std::size_t k = k0; k > 0; --k)
    acc[k - 1] =
        acc[k] - 2.0 * integrate_adaptive([&f](double x) { return f(x); }, nodes[k - 1],
                                          nodes[k], 1e-13);
  return acc;
}

}  // namespace detail

/// Build the u-table for f on [lo, hi] (which must contain 0) with at least
/// `resolution` nodes; discontinuities of f become nodes.
inline TransformTable build_u(const IntegrableCoefficient& f, double lo, double hi,
                              std::size_t resolution = 2001) {
  if (!(lo < hi)) throw PreconditionError("build_u: domain is empty");
  if (!(lo <= 0.0 && 0.0 <= hi)) throw PreconditionError("build_u: domain must contain 0");
  if (resolution < 2) throw PreconditionError("build_u: resolution must be >= 2");

  TransformTable t;
  t.kind = TransformKind::u;
  t.source = f;
  t.mass_constant = std::exp(2.0 * f.total_abs_mass);
  if (!std::isfinite(t.mass_constant))
    throw PreconditionError("build_u: coefficient mass too large, exp(2 mass) overflows");
  t.nodes = detail::make_table_nodes(lo, hi, resolution,
                                     std::span<const double>(f.breakpoints));
  const std::size_t n = t.nodes.size();
  const std::size_t k0 = static_cast<std::size_t>(
      std::lower_bound(t.nodes.begin(), t.nodes.end(), 0.0) - t.nodes.begin());
  if (k0 >= n || t.nodes[k0] != 0.0)
    throw PreconditionError("build_u: node set does not contain 0");

  const std::vector<double> inner = detail::cumulative_double_integral(f, t.nodes, k0);
  t.derivs.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    t.derivs[k] = std::exp(inner[k]);
    if (!std::isfinite(t.derivs[k]))
      throw PreconditionError("build_u: derivative overflow at node " +
                              std::to_string(t.nodes[k]));
  }

  t.values.assign(n, 0.0);
  for (std::size_t k = k0; k + 1 < n; ++k) {
    const double a = t.nodes[k], b = t.nodes[k + 1], base = inner[k];
    auto integrand = [&](double y) {
      return std::exp(base + 2.0 * integrate_adaptive(
                                 [&f](double x) { return f(x); }, a, y, 1e-13));
    };
    t.values[k + 1] = t.values[k] + integrate_adaptive(integrand, a, b, 1e-14);
  }
  for (std::size_t k = k0; k > 0; --k) {
    const double a = t.nodes[k - 1], b = t.nodes[k], base = inner[k];
    auto integrand = [&](double y) {
      return std::exp(base + 2.0 * integrate_adaptive(
                                 [&f](double x) { return f(x); }, b, y, 1e-13));
    };
    t.values[k - 1] = t.values[k] - integrate_adaptive(integrand, a, b, 1e-14);
  }
  return t;
}

/// Build the v-table for f on [lo, hi]. Values at negative nodes mirror the
/// positive axis through |x|; the derivative is odd.
inline TransformTable build_v(const IntegrableCoefficient& f, double lo, double hi,
                              std::size_t resolution = 2001) {
  if (!(lo < hi)) throw PreconditionError("build_v: domain is empty");
  if (!(lo <= 0.0 && 0.0 <= hi)) throw PreconditionError("build_v: domain must contain 0");
  if (resolution < 2) throw PreconditionError("build_v: resolution must be >= 2");

  TransformTable t;
  t.kind = TransformKind::v;
  t.source = f;
  t.mass_constant = std::exp(2.0 * f.total_abs_mass);
  if (!std::isfinite(t.mass_constant))
    throw PreconditionError("build_v: coefficient mass too large, exp(2 mass) overflows");
  t.nodes = detail::make_table_nodes(lo, hi, resolution,
                                     std::span<const double>(f.breakpoints));

  // Positive-axis helper grid carrying |node| images and breakpoints.
  std::vector<double> pos;
  pos.push_back(0.0);
  for (double x : t.nodes) pos.push_back(std::abs(x));
  for (double b : f.breakpoints)
    if (b > 0.0) pos.push_back(b);
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-15; }),
            pos.end());

  const std::size_t np = pos.size();
  std::vector<double> inner = detail::cumulative_double_integral(f, pos, 0);
  // u_minus = ∫_0^y exp(-2 ∫_0^s f) ds, the increasing transform of -f.
  std::vector<double> u_minus(np, 0.0);
  for (std::size_t k = 0; k + 1 < np; ++k) {
    const double a = pos[k], b = pos[k + 1], base = inner[k];
    auto integrand = [&](double y) {
      return std::exp(-(base + 2.0 * integrate_adaptive(
                                   [&f](double x) { return f(x); }, a, y, 1e-13)));
    };
    u_minus[k + 1] = u_minus[k] + integrate_adaptive(integrand, a, b, 1e-14);
  }
  std::vector<double> w(np, 0.0);
  for (std::size_t k = 0; k < np; ++k) w[k] = u_minus[k] * std::exp(inner[k]);
  std::vector<double> v_pos(np, 0.0);
  for (std::size_t k = 0; k + 1 < np; ++k) {
    const double a = pos[k], b = pos[k + 1];
    const double base = inner[k], um0 = u_minus[k];
    auto integrand = [&](double y) {
      const double iy =
          base + 2.0 * integrate_adaptive([&f](double x) { return f(x); }, a, y, 1e-13);
      const double um =
          um0 + integrate_adaptive(
                    [&](double s) {
                      return std::exp(-(base + 2.0 * integrate_adaptive(
                                                   [&f](double x) { return f(x); }, a, s,
                                                   1e-13)));
                    },
                    a, y, 1e-13);
      return um * std::exp(iy);
    };
    v_pos[k + 1] = v_pos[k] + integrate_adaptive(integrand, a, b, 1e-14);
  }

  auto pos_index = [&](double r) {
    const auto it = std::lower_bound(pos.begin(), pos.end(), r - 1e-14);
    const std::size_t j = static_cast<std::size_t>(it - pos.begin());
    if (j >= np || std::abs(pos[j] - r) > 1e-12 * std::max(1.0, r))
      throw PreconditionError("build_v: positive-axis lookup failed");
    return j;
  };
  const std::size_t n = t.nodes.size();
  t.values.resize(n);
  t.derivs.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = t.nodes[k];
    const std::size_t j = pos_index(std::abs(x));
    t.values[k] = v_pos[j];
    t.derivs[k] = (x > 0.0 ? 1.0 : x < 0.0 ? -1.0 : 0.0) * w[j];
  }
  return t;
}

namespace detail {

struct HermiteCell {
  double x0, h, v0, v1, d0, d1;
};

/// Fritsch-Carlson limiting keeps the cubic monotone on cells where the
/// tabulated derivatives overshoot the secant by more than the monotone
/// region allows (only reachable on very coarse tables).
inline HermiteCell monotone_cell(const TransformTable& t, std::size_t k) {
  HermiteCell c;
  c.x0 = t.nodes[k];
  c.h = t.nodes[k + 1] - t.nodes[k];
  c.v0 = t.values[k];
  c.v1 = t.values[k + 1];
  c.d0 = t.derivs[k];
  c.d1 = t.derivs[k + 1];
  const double s = (c.v1 - c.v0) / c.h;
  if (s != 0.0) {
    const double alpha = c.d0 / s, beta = c.d1 / s;
    if (alpha < 0.0) c.d0 = 0.0;
    if (beta < 0.0) c.d1 = 0.0;
    const double r = alpha * alpha + beta * beta;
    if (alpha >= 0.0 && beta >= 0.0 && r > 9.0) {
      const double tau = 3.0 / std::sqrt(r);
      c.d0 = tau * alpha * s;
      c.d1 = tau * beta * s;
    }
  } else {
    c.d0 = c.d1 = 0.0;
  }
  return c;
}

inline TransformEval eval_cell(const HermiteCell& c, double x) {
  const double u = (x - c.x0) / c.h;
  const double u2 = u * u, u3 = u2 * u;
  TransformEval e;
  e.value = (2.0 * u3 - 3.0 * u2 + 1.0) * c.v0 + (u3 - 2.0 * u2 + u) * c.h * c.d0 +
            (-2.0 * u3 + 3.0 * u2) * c.v1 + (u3 - u2) * c.h * c.d1;
  e.deriv = (6.0 * u2 - 6.0 * u) * (c.v0 - c.v1) / c.h +
            (3.0 * u2 - 4.0 * u + 1.0) * c.d0 + (3.0 * u2 - 2.0 * u) * c.d1;
  return e;
}

}  // namespace detail

/// Value and first derivative at x: exact at nodes, monotone cubic between
/// them, linear with the boundary slope outside the table.
inline TransformEval eval_transform(const TransformTable& t, double x) {
  const std::size_t n = t.nodes.size();
  if (n < 2) throw PreconditionError("eval_transform: table has fewer than two nodes");
  if (x <= t.nodes.front())
    return {t.values.front() + t.derivs.front() * (x - t.nodes.front()),
            t.derivs.front()};
  if (x >= t.nodes.back())
    return {t.values.back() + t.derivs.back() * (x - t.nodes.back()), t.derivs.back()};
  const auto it = std::upper_bound(t.nodes.begin(), t.nodes.end(), x);
  std::size_t k = static_cast<std::size_t>(it - t.nodes.begin()) - 1;
  if (t.nodes[k] == x) return {t.values[k], t.derivs[k]};
  return detail::eval_cell(detail::monotone_cell(t, k), x);
}

/// Inverse of a u-table, total on the real line: inside the tabulated range a
/// bracketed Newton iteration drives |u(x) - y| below 1e-10, outside it the
/// linear extension is inverted exactly.
inline double invert_u(const TransformTable& t, double y, double tol = 1e-10) {
  if (t.kind != TransformKind::u)
    throw PreconditionError("invert_u: inversion requires an increasing u-table");
  if (y <= t.values.front())
    return t.nodes.front() + (y - t.values.front()) / t.derivs.front();
  if (y >= t.values.back())
    return t.nodes.back() + (y - t.values.back()) / t.derivs.back();
  const auto it = std::upper_bound(t.values.begin(), t.values.end(), y);
  std::size_t k = static_cast<std::size_t>(it - t.values.begin()) - 1;
  if (t.values[k] == y) return t.nodes[k];
  const detail::HermiteCell cell = detail::monotone_cell(t, k);
  double a = t.nodes[k], b = t.nodes[k + 1];
  double x = 0.5 * (a + b);
  for (int iter = 0; iter < 200; ++iter) {
    const TransformEval e = detail::eval_cell(cell, x);
    const double g = e.value - y;
    if (std::abs(g) <= 0.5 * tol) return x;
    if (g > 0.0)
      b = x;
    else
      a = x;
    double step = e.deriv != 0.0 ? -g / e.deriv : 0.0;
    double next = x + step;
    if (!(next > a && next < b)) next = 0.5 * (a + b);  // bisection fallback
    x = next;
  }
  return x;
}

/// Worst violation (positive number) of the two-sided value/derivative bounds
/// over the sampled points; 0 means every inequality held.
inline double transform_bound_violation(const TransformTable& t,
                                        std::span<const double> xs) {
  const double m = t.mass_constant;
  double worst = 0.0;
  for (double x : xs) {
    const TransformEval e = eval_transform(t, x);
    const double ax = std::abs(x);
    if (t.kind == TransformKind::u) {
      worst = std::max(worst, ax / m - std::abs(e.value));
      worst = std::max(worst, std::abs(e.value) - m * ax);
      worst = std::max(worst, 1.0 / m - e.deriv);
      worst = std::max(worst, e.deriv - m);
    } else {
      const double m2 = m * m;
      worst = std::max(worst, -e.value);
      worst = std::max(worst, x * x / (2.0 * m2) - e.value);
      worst = std::max(worst, e.value - m2 * x * x / 2.0);
      worst = std::max(worst, ax / m2 - std::abs(e.deriv));
      worst = std::max(worst, std::abs(e.deriv) - m2 * ax);
      if (x != 0.0 && e.deriv * x < 0.0) worst = std::max(worst, std::abs(e.deriv));
    }
  }
  return worst;
}

/// Write the table as CSV with columns x,value,deriv (17 significant digits,
/// bit-stable across runs).
inline void export_transform_csv(const TransformTable& t, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("export_transform_csv: cannot open " + path);
  std::fputs("x,value,deriv\n", fp);
  for (std::size_t k = 0; k < t.nodes.size(); ++k)
    std::fprintf(fp, "%.17g,%.17g,%.17g\n", t.nodes[k], t.values[k], t.derivs[k]);
  std::fclose(fp);
}

}  // namespace qbsde
