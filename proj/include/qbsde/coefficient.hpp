#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qbsde/errors.hpp"
#include "qbsde/quadrature.hpp"

namespace qbsde {

/// A real coefficient on the line with finite total |mass|, known support
/// radius and (for the piecewise families) explicit jump locations. The jump
/// list lets quadrature and table builders put panel edges exactly on the
/// discontinuities instead of hunting for them adaptively.
struct IntegrableCoefficient {
  std::function<double(double)> eval;
  double support_radius = 0.0;   // eval(x) == 0 for |x| > support_radius
  double bound = 0.0;            // sup |eval|
  double total_abs_mass = 0.0;   // ∫ |eval(x)| dx over the line
  std::vector<double> breakpoints;
  std::string label;

  double operator()(double x) const {
    const double y = eval(x);
    if (!std::isfinite(y))
      throw CoefficientEvalError("coefficient '" + label +
                                 "' returned a non-finite value at x = " +
                                 std::to_string(x));
    return y;
  }

  bool is_zero() const { return total_abs_mass == 0.0; }
};

inline IntegrableCoefficient zero_coefficient() {
  IntegrableCoefficient c;
  c.eval = [](double) { return 0.0; };
  c.support_radius = 0.0;
  c.bound = 0.0;
  c.total_abs_mass = 0.0;
  c.label = "zero";
  return c;
}

/// c * 1_{[-a, a]}.
inline IntegrableCoefficient indicator_coefficient(double c, double a) {
  if (!(a > 0.0)) throw PreconditionError("indicator_coefficient: a must be positive");
  IntegrableCoefficient f;
  f.eval = [c, a](double x) { return std::abs(x) <= a ? c : 0.0; };
  f.support_radius = a;
  f.bound = std::abs(c);
  f.total_abs_mass = 2.0 * std::abs(c) * a;
  f.breakpoints = {-a, a};
  f.label = "indicator(c=" + std::to_string(c) + ",a=" + std::to_string(a) + ")";
  return f;
}

/// c1 * 1_{[-a1, a1]} + c2 * 1_{a1 < |x| <= a2}; a genuinely discontinuous
/// two-level profile.
inline IntegrableCoefficient two_step_coefficient(double c1, double a1, double c2,
                                                  double a2) {
  if (!(0.0 < a1 && a1 < a2))
    throw PreconditionError("two_step_coefficient: need 0 < a1 < a2");
  IntegrableCoefficient f;
  f.eval = [c1, a1, c2, a2](double x) {
    const double r = std::abs(x);
    if (r <= a1) return c1;
    if (r <= a2) return c2;
    return 0.0;
  };
  f.support_radius = a2;
  f.bound = std::max(std::abs(c1), std::abs(c2));
  f.total_abs_mass = 2.0 * (std::abs(c1) * a1 + std::abs(c2) * (a2 - a1));
  f.breakpoints = {-a2, -a1, a1, a2};
  f.label = "two_step";
  return f;
}

/// c * exp(-x^2 / (2 s^2)). The tail beyond 10 s is below 2e-22 of the peak,
/// so the support radius is reported as 10 s and the mass integral is taken
/// over that window.
inline IntegrableCoefficient gaussian_coefficient(double c, double s) {
  if (!(s > 0.0)) throw PreconditionError("gaussian_coefficient: s must be positive");
  IntegrableCoefficient f;
  f.eval = [c, s](double x) {
    const double r = x / s;
    return std::abs(r) > 10.0 ? 0.0 : c * std::exp(-0.5 * r * r);
  };
  f.support_radius = 10.0 * s;
  f.bound = std::abs(c);
  f.total_abs_mass =
      integrate_adaptive([&f](double x) { return std::abs(f.eval(x)); },
                         -f.support_radius, f.support_radius, 1e-12);
  f.breakpoints = {-10.0 * s, 10.0 * s};
  f.label = "gaussian(c=" + std::to_string(c) + ",s=" + std::to_string(s) + ")";
  return f;
}

/// Wrap an arbitrary rule. The mass integral is computed by adaptive
/// quadrature over [-support_radius, support_radius].
inline IntegrableCoefficient custom_coefficient(std::function<double(double)> rule,
                                                double support_radius, double bound,
                                                std::vector<double> breakpoints = {},
                                                std::string label = "custom") {
  if (!(support_radius >= 0.0))
    throw PreconditionError("custom_coefficient: support radius must be >= 0");
  IntegrableCoefficient f;
  f.eval = std::move(rule);
  f.support_radius = support_radius;
  f.bound = bound;
  f.breakpoints = std::move(breakpoints);
  f.label = std::move(label);
  f.total_abs_mass =
      support_radius == 0.0
          ? 0.0
          : integrate_adaptive([&f](double x) { return std::abs(f.eval(x)); },
                               -support_radius, support_radius, 1e-12,
                               std::span<const double>(f.breakpoints));
  return f;
}

/// kappa * f, with mass and bound scaled accordingly.
inline IntegrableCoefficient scaled_coefficient(const IntegrableCoefficient& f,
                                                double kappa) {
  IntegrableCoefficient g = f;
  auto base = f.eval;
  g.eval = [base, kappa](double x) { return kappa * base(x); };
  g.bound = std::abs(kappa) * f.bound;
  g.total_abs_mass = std::abs(kappa) * f.total_abs_mass;
  g.label = f.label + "*" + std::to_string(kappa);
  return g;
}

/// Re-integrates |eval| and checks it against the stored mass; sampled
/// finiteness check at and around every breakpoint.
inline void validate_coefficient(const IntegrableCoefficient& f, double tol = 1e-9) {
  for (double b : f.breakpoints) {
    (void)f(b);
    (void)f(b - 1e-12);
    (void)f(b + 1e-12);
  }
  if (f.support_radius > 0.0) {
    const double mass =
        integrate_adaptive([&f](double x) { return std::abs(f(x)); },
                           -f.support_radius, f.support_radius, 1e-12,
                           std::span<const double>(f.breakpoints));
    if (std::abs(mass - f.total_abs_mass) > tol * std::max(1.0, f.total_abs_mass))
      throw PreconditionError("coefficient '" + f.label +
                              "': stored mass disagrees with quadrature");
  }
}

}  // namespace qbsde
