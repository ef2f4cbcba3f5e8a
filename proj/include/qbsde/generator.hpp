#pragma once

// Driver models F = F1 + F2 for the scalar backward equation, carrying the
// structure data under which the solver theory operates:
//
//   sign condition   sgn(y) F(t,y,z) <= alpha_t + beta|y| + gamma|z|
//                                       + f(|y|)|z|^2
//   growth           |F(t,y,z)|      <= alpha_t + phi(|y|) + gamma|z|
//                                       + f(|y|)|z|^2
//   F1 part          monotone in y (rate beta1), Lipschitz in z (rate gamma1)
//
// with f integrable and phi nondecreasing, phi(0) = 0.  The conditions are
// checked statistically on sampled points (the rules are arbitrary callables,
// so symbolic verification is out of scope).  The module also provides the
// approximation operators used by the double-approximation experiment: the
// Lipschitz inf-convolution of a rule over a bounded lattice, the hard
// truncation of y, and the change-of-variable transport of a driver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qbsde/coefficient.hpp"
#include "qbsde/errors.hpp"
#include "qbsde/rng.hpp"
#include "qbsde/time_grid.hpp"
#include "qbsde/transform.hpp"

namespace qbsde {

struct GeneratorSpec {
  // (t, x, y, z) -> real; x is the forward state, passed as 0 by callers
  // without one.
  using Rule = std::function<double(double, double, double, double)>;

  Rule f1;  // monotone-in-y, Lipschitz-in-z part (empty means 0)
  Rule f2;  // quadratic-growth part (empty means 0)
  // alpha_t: nonnegative integrable bound process (empty means the constant).
  std::function<double(double)> alpha;
  double alpha_const = 0.0;
  double beta1 = 0.0, beta2 = 0.0;
  double gamma1 = 0.0, gamma2 = 0.0;
  // Nondecreasing growth envelope in |y| with phi(0) = 0 (empty means 0).
  std::function<double(double)> phi;
  // Quadratic-term coefficient, applied as f(|y|).
  IntegrableCoefficient f = zero_coefficient();
  bool convex_f2 = false;
  std::string label;

  double alpha_at(double t) const { return alpha ? alpha(t) : alpha_const; }
  double phi_at(double r) const { return phi ? phi(r) : 0.0; }
  double eval_f1(double t, double x, double y, double z) const {
    return f1 ? f1(t, x, y, z) : 0.0;
  }
  double eval_f2(double t, double x, double y, double z) const {
    return f2 ? f2(t, x, y, z) : 0.0;
  }
  double operator()(double t, double x, double y, double z) const {
    const double v = eval_f1(t, x, y, z) + eval_f2(t, x, y, z);
    if (!std::isfinite(v))
      throw CoefficientEvalError("generator '" + label +
                                 "' is non-finite at y = " + std::to_string(y) +
                                 ", z = " + std::to_string(z));
    return v;
  }
  double beta() const { return beta1 + beta2; }
  double gamma() const { return gamma1 + gamma2; }
};

// ---- built-in families ----------------------------------------------------

/// F1 = a + b y + c z.
inline GeneratorSpec linear_generator(double a, double b, double c) {
  GeneratorSpec s;
  s.f1 = [a, b, c](double, double, double y, double z) {
    return a + b * y + c * z;
  };
  s.alpha_const = std::fabs(a);
  s.beta1 = b;
  s.gamma1 = std::fabs(c);
  s.phi = [b](double r) { return std::fabs(b) * r; };
  s.label = "linear";
  return s;
}

/// F1 = -c y^m with c >= 0 and odd m: monotone decreasing in y.
inline GeneratorSpec monotone_poly_generator(double c, int m) {
  if (c < 0.0 || m < 1 || m % 2 == 0)
    throw PreconditionError(
        "monotone_poly_generator: need c >= 0 and odd exponent");
  GeneratorSpec s;
  s.f1 = [c, m](double, double, double y, double) {
    return -c * std::pow(y, m);
  };
  s.beta1 = 0.0;
  s.phi = [c, m](double r) { return c * std::pow(r, m); };
  s.label = "monotone_poly";
  return s;
}

/// F1 = c (sqrt(1 + z^2) - 1): |c|-Lipschitz in z, zero at z = 0.
inline GeneratorSpec lipschitz_z_generator(double c) {
  GeneratorSpec s;
  s.f1 = [c](double, double, double, double z) {
    return c * (std::sqrt(1.0 + z * z) - 1.0);
  };
  s.gamma1 = std::fabs(c);
  s.label = "lipschitz_z";
  return s;
}

/// F2 = f(|y|) |z|^2 — the equality case of the sign condition.
inline GeneratorSpec quadratic_f_generator(const IntegrableCoefficient& f) {
  GeneratorSpec s;
  IntegrableCoefficient fc = f;
  s.f2 = [fc](double, double, double y, double z) {
    return fc(std::fabs(y)) * z * z;
  };
  s.f = f;
  s.label = "quadratic_f(" + f.label + ")";
  return s;
}

/// F2 = c (cosh z - 1), convex in (y, z).  Exponential z-growth exceeds any
/// quadratic envelope globally, so the declared structure data dominate it
/// only on the window |z| <= z_win, |y| <= y_win — the validator's world.
inline GeneratorSpec exp_z_generator(double c, double z_win = 6.0,
                                     double y_win = 10.0) {
  if (c < 0.0) throw PreconditionError("exp_z_generator: need c >= 0");
  GeneratorSpec s;
  s.f2 = [c](double, double, double, double z) {
    return c * (std::cosh(z) - 1.0);
  };
  // cosh z - 1 <= z^2 cosh(z_win) / 2 on the window.
  s.f = indicator_coefficient(c * std::cosh(z_win) / 2.0, y_win);
  s.convex_f2 = true;
  s.label = "exp_z";
  return s;
}

/// Named-family dispatch used by configuration loading.
inline GeneratorSpec generator_from_family(
    const std::string& family, const std::map<std::string, double>& p) {
  const auto get = [&](const std::string& key, double fallback) {
    const auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
  };
  if (family == "linear")
    return linear_generator(get("a", 0.0), get("b", 0.0), get("c", 0.0));
  if (family == "monotone_poly")
    return monotone_poly_generator(get("c", 1.0),
                                   static_cast<int>(get("m", 3.0)));
  if (family == "lipschitz_z") return lipschitz_z_generator(get("c", 1.0));
  if (family == "quadratic_f")
    return quadratic_f_generator(
        indicator_coefficient(get("f_level", 0.5), get("f_radius", 1.0)));
  if (family == "exp_z")
    return exp_z_generator(get("c", 0.5), get("z_win", 6.0),
                           get("y_win", 10.0));
  throw ConfigError("generator_from_family: unknown family '" + family + "'");
}

// ---- sampled structure validation -----------------------------------------

struct StructureSampleWindow {
  double t_lo = 0.0, t_hi = 1.0;
  double x_lo = -2.0, x_hi = 2.0;
  double y_lo = -2.5, y_hi = 2.5;
  double z_lo = -3.0, z_hi = 3.0;
};

struct StructureReport {
  // Worst sampled margin (bound minus value) per condition; a condition
  // holds on the sample iff its margin >= -1e-9.
  double margin_sign = 0.0;        // sgn(y) F <= alpha + beta|y| + gamma|z| + f|z|^2
  double margin_growth = 0.0;      // |F| <= alpha + phi(|y|) + gamma|z| + f|z|^2
  double margin_monotone = 0.0;    // F1 monotone in y at rate beta1
  double margin_lipschitz = 0.0;   // F1 Lipschitz in z at rate gamma1
  double margin_convexity = 0.0;   // midpoint convexity of F2
  bool checked_convexity = false;
  bool pass = false;

  static constexpr double kTol = -1e-9;
};

inline StructureReport validate_structure(const GeneratorSpec& spec,
                                          std::size_t sample_size = 2000,
                                          std::uint64_t seed = 20240901,
                                          const StructureSampleWindow& win = {}) {
  CounterRng rng{seed, 0};
  const auto unif = [&](std::size_t i, std::uint64_t slot, double lo,
                        double hi) {
    return lo + (hi - lo) * rng.uniform(i, 0, slot);
  };
  const double inf = std::numeric_limits<double>::infinity();
  StructureReport rep;
  rep.margin_sign = rep.margin_growth = inf;
  rep.margin_monotone = rep.margin_lipschitz = inf;
  rep.margin_convexity = inf;
  rep.checked_convexity = spec.convex_f2 && static_cast<bool>(spec.f2);

  for (std::size_t i = 0; i < sample_size; ++i) {
    const double t = unif(i, 0, win.t_lo, win.t_hi);
    const double x = unif(i, 1, win.x_lo, win.x_hi);
    const double y = unif(i, 2, win.y_lo, win.y_hi);
    const double z = unif(i, 3, win.z_lo, win.z_hi);
    const double y2 = unif(i, 4, win.y_lo, win.y_hi);
    const double z2 = unif(i, 5, win.z_lo, win.z_hi);

    const double fv = spec(t, x, y, z);
    const double quad = spec.f(std::fabs(y)) * z * z;
    const double sign_bound = spec.alpha_at(t) + spec.beta() * std::fabs(y) +
                              spec.gamma() * std::fabs(z) + quad;
    const double sgn = y > 0.0 ? 1.0 : (y < 0.0 ? -1.0 : 0.0);
    rep.margin_sign = std::min(rep.margin_sign, sign_bound - sgn * fv);

    const double growth_bound = spec.alpha_at(t) + spec.phi_at(std::fabs(y)) +
                                spec.gamma() * std::fabs(z) + quad;
    rep.margin_growth = std::min(rep.margin_growth, growth_bound - std::fabs(fv));

    if (spec.f1) {
      const double dy = spec.eval_f1(t, x, y, z) - spec.eval_f1(t, x, y2, z);
      const double sgn_d = y > y2 ? 1.0 : (y < y2 ? -1.0 : 0.0);
      rep.margin_monotone =
          std::min(rep.margin_monotone,
                   spec.beta1 * std::fabs(y - y2) - sgn_d * dy);
      const double dz = spec.eval_f1(t, x, y, z) - spec.eval_f1(t, x, y, z2);
      rep.margin_lipschitz =
          std::min(rep.margin_lipschitz,
                   spec.gamma1 * std::fabs(z - z2) - std::fabs(dz));
    }
    if (rep.checked_convexity) {
      const double mid = spec.eval_f2(t, x, 0.5 * (y + y2), 0.5 * (z + z2));
      const double avg = 0.5 * (spec.eval_f2(t, x, y, z) +
                                spec.eval_f2(t, x, y2, z2));
      rep.margin_convexity = std::min(rep.margin_convexity, avg - mid);
    }
  }
  rep.pass = rep.margin_sign >= StructureReport::kTol &&
             rep.margin_growth >= StructureReport::kTol &&
             rep.margin_monotone >= StructureReport::kTol &&
             rep.margin_lipschitz >= StructureReport::kTol &&
             (!rep.checked_convexity ||
              rep.margin_convexity >= StructureReport::kTol);
  return rep;
}

// ---- approximation operators ----------------------------------------------

/// Hard truncation of y to [-m, m].
inline double truncate_rho(double y, double m) {
  if (!(m > 0.0)) throw PreconditionError("truncate_rho: need m > 0");
  return std::clamp(y, -m, m);
}

/// Discrete Lipschitz regularization
///     H(y, z) = min over lattice points (y', z') of
///               { F(y', z') + n (|y - y'| + |z - z'|) },
/// evaluated exactly: lattice values by a two-pass distance transform per
/// axis, off-lattice queries by minimizing over the four corners of the
/// clamped enclosing cell (exact because every lattice point is reachable
/// through a cell corner along an L1 geodesic).
struct InfConvolutionLattice {
  double y_lo = -10.0, y_hi = 10.0;
  double z_lo = -10.0, z_hi = 10.0;
  std::size_t ny = 401, nz = 401;
  double n = 1.0;
  std::vector<double> values;  // row-major [iy * nz + iz]

  double dy() const { return (y_hi - y_lo) / static_cast<double>(ny - 1); }
  double dz() const { return (z_hi - z_lo) / static_cast<double>(nz - 1); }
  double at(std::size_t iy, std::size_t iz) const {
    return values[iy * nz + iz];
  }

  double operator()(double y, double z) const {
    const double hy = dy(), hz = dz();
    const double fy = (y - y_lo) / hy;
    const double fz = (z - z_lo) / hz;
    const std::size_t iy0 = static_cast<std::size_t>(
        std::clamp(std::floor(fy), 0.0, static_cast<double>(ny - 2)));
    const std::size_t iz0 = static_cast<std::size_t>(
        std::clamp(std::floor(fz), 0.0, static_cast<double>(nz - 2)));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 2; ++b) {
        const double yc = y_lo + static_cast<double>(iy0 + a) * hy;
        const double zc = z_lo + static_cast<double>(iz0 + b) * hz;
        const double cand = at(iy0 + a, iz0 + b) +
                            n * (std::fabs(y - yc) + std::fabs(z - zc));
        best = std::min(best, cand);
      }
    return best;
  }
};

struct InfConvolutionGrid {
  double y_lo = -10.0, y_hi = 10.0;
  double z_lo = -10.0, z_hi = 10.0;
  std::size_t ny = 401, nz = 401;
};

/// Builds the discrete inf-convolution of rule(y, z) at Lipschitz index n.
inline InfConvolutionLattice inf_convolution(
    const std::function<double(double, double)>& rule, double n,
    const InfConvolutionGrid& grid = {}) {
  if (grid.ny < 2 || grid.nz < 2)
    throw PreconditionError("inf_convolution: lattice needs >= 2 points per axis");
  if (!(n > 0.0)) throw PreconditionError("inf_convolution: need n > 0");
  InfConvolutionLattice lat;
  lat.y_lo = grid.y_lo;
  lat.y_hi = grid.y_hi;
  lat.z_lo = grid.z_lo;
  lat.z_hi = grid.z_hi;
  lat.ny = grid.ny;
  lat.nz = grid.nz;
  lat.n = n;
  lat.values.resize(grid.ny * grid.nz);
  for (std::size_t i = 0; i < grid.ny; ++i) {
    const double y = grid.y_lo + static_cast<double>(i) * lat.dy();
    for (std::size_t j = 0; j < grid.nz; ++j) {
      const double z = grid.z_lo + static_cast<double>(j) * lat.dz();
      const double v = rule(y, z);
      if (!std::isfinite(v))
        throw PreconditionError(
            "inf_convolution: rule is not finite on the lattice");
      lat.values[i * grid.nz + j] = v;
    }
  }
  // L1 distance transform: forward and backward pass along each axis.
  const double step_y = n * lat.dy(), step_z = n * lat.dz();
  for (std::size_t j = 0; j < grid.nz; ++j) {
    for (std::size_t i = 1; i < grid.ny; ++i)
      lat.values[i * grid.nz + j] = std::min(
          lat.values[i * grid.nz + j], lat.values[(i - 1) * grid.nz + j] + step_y);
    for (std::size_t i = grid.ny - 1; i-- > 0;)
      lat.values[i * grid.nz + j] = std::min(
          lat.values[i * grid.nz + j], lat.values[(i + 1) * grid.nz + j] + step_y);
  }
  for (std::size_t i = 0; i < grid.ny; ++i) {
    double* row = lat.values.data() + i * grid.nz;
    for (std::size_t j = 1; j < grid.nz; ++j)
      row[j] = std::min(row[j], row[j - 1] + step_z);
    for (std::size_t j = grid.nz - 1; j-- > 0;) row[j] = std::min(row[j], row[j + 1] + step_z);
  }
  return lat;
}

// ---- change-of-variable transport of a driver ------------------------------

/// F-tilde(t, x, y, z) = u'(u^{-1}(y)) * G(t, x, u^{-1}(y), z / u'(u^{-1}(y))).
/// Solving the transported driver with terminal u(xi) and mapping back equals
/// solving G plus the quadratic term of the table's coefficient.
inline GeneratorSpec::Rule transform_generator(
    GeneratorSpec::Rule g, std::shared_ptr<const TransformTable> table) {
  if (!table) throw PreconditionError("transform_generator: null table");
  return [g = std::move(g), table](double t, double x, double y, double z) {
    const double yy = invert_u(*table, y, 1e-12);
    const double du = eval_transform(*table, yy).deriv;
    return du * g(t, x, yy, z / du);
  };
}

/// Formal inverse of transform_generator: recovers G from the transported
/// rule, G(t, x, y, z) = F-tilde(t, x, u(y), z u'(y)) / u'(y).
inline GeneratorSpec::Rule transform_generator_inverse(
    GeneratorSpec::Rule transported,
    std::shared_ptr<const TransformTable> table) {
  if (!table) throw PreconditionError("transform_generator_inverse: null table");
  return [r = std::move(transported), table](double t, double x, double y,
                                             double z) {
    const auto uv = eval_transform(*table, y);
    return r(t, x, uv.value, z * uv.deriv) / uv.deriv;
  };
}

// ---- stopping rule for the alpha level ------------------------------------

/// First grid index at which the running integral of alpha crosses `level`
/// (left-endpoint rule); returns the last index when it never does.
inline std::size_t sigma_time_index(const GeneratorSpec& spec,
                                    const TimeGrid& grid, double level) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < grid.times.size(); ++k) {
    if (acc >= level) return k;
    acc += spec.alpha_at(grid.times[k]) * grid.dt(k);
  }
  return grid.times.size() - 1;
}

}  // namespace qbsde
