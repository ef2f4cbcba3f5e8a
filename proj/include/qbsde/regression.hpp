#pragma once

// Least-squares projection onto a global polynomial basis of a scalar state.
// This is the conditional-expectation engine of the backward solvers: at each
// time step the response (next-step value, or next-step value times a Brownian
// increment) is regressed on monomials of the current state, and the fitted
// function is read back as the conditional expectation.
//
// The state is standardised (centred and scaled by its sample moments) before
// the Vandermonde matrix is formed, so conditioning depends on the shape of
// the state distribution rather than its location.  A state with (numerically)
// zero variance carries no information beyond its mean, so the fit degrades
// gracefully to the sample mean of the response instead of failing; a state
// with genuine spread that still produces a rank-deficient basis (for example
// two distinct values under a degree-5 basis) is reported as an error carrying
// the measured condition number.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbsde/errors.hpp"
#include "qbsde/stats.hpp"

namespace qbsde {

struct RegressionFit {
  // Coefficients in the standardised variable s = (x - x_mean) / x_scale,
  // lowest order first.  A degree-0 fit holds a single coefficient.
  std::vector<double> coeffs;
  double x_mean = 0.0;
  double x_scale = 1.0;
  // 2-norm condition number of the design matrix (square root of the
  // eigenvalue ratio of the normal matrix).
  double condition_number = 1.0;
  double residual_rms = 0.0;
  // Largest design leverage h_i = a_i^T (A^T A)^{-1} a_i over the sample; the
  // statistical standard error of the fitted value at sample i is about
  // residual_rms * sqrt(h_i), so residual_rms * sqrt(max_leverage) bounds the
  // fitted-value noise across the cross-section.
  double max_leverage = 0.0;

  double fitted_se_max() const { return residual_rms * std::sqrt(max_leverage); }

  // Design leverage of an arbitrary evaluation point (equals h_i at sample
  // points); residual_rms * sqrt(leverage(x)) is the standard error of the
  // fitted value at x.
  double leverage(double x) const {
    if (ev_.size() == 0)
      return n_samples_ ? 1.0 / static_cast<double>(n_samples_) : 0.0;
    const double s = (x - x_mean) / x_scale;
    Eigen::VectorXd a(coeffs.size());
    double p = 1.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      a(j) = p;
      p *= s;
    }
    const Eigen::VectorXd w = vt_ * a;
    double h = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) h += w(j) * w(j) / ev_(j);
    return h;
  }

  // Spectral data of the normal matrix, kept for leverage evaluation.
  Eigen::VectorXd ev_;
  Eigen::MatrixXd vt_;
  std::size_t n_samples_ = 0;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }

  double operator()(double x) const {
    const double s = (x - x_mean) / x_scale;
    double acc = 0.0;
    for (std::size_t j = coeffs.size(); j-- > 0;) acc = acc * s + coeffs[j];
    return acc;
  }
};

namespace detail {

// Relative spread below which a state is treated as deterministic.
inline constexpr double kZeroVarianceTol = 1e-13;

inline bool effectively_constant(const std::vector<double>& xs) {
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  const double scale = std::max({std::fabs(*lo), std::fabs(*hi), 1.0});
  return (*hi - *lo) <= kZeroVarianceTol * scale;
}

}  // namespace detail

// Returns true when all responses coincide up to rounding; the conditional
// expectation of a constant is itself and its Brownian projection vanishes
// identically, so callers can shortcut the regression in that case.
inline bool constant_response(const std::vector<double>& ys,
                              double tol = 1e-12) {
  if (ys.empty()) return true;
  const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
  const double scale = std::max({std::fabs(*lo), std::fabs(*hi), 1.0});
  return (*hi - *lo) <= tol * scale;
}

// Least-squares fit of ys on {1, s, ..., s^degree} with s the standardised
// state.  Throws PreconditionError on size mismatch or an empty sample, and
// IllConditionedBasisError when the design matrix is rank deficient or its
// condition number exceeds cond_limit.
inline RegressionFit fit_polynomial(const std::vector<double>& xs,
                                    const std::vector<double>& ys, int degree,
                                    double cond_limit = 1e10) {
  if (xs.size() != ys.size())
    throw PreconditionError("fit_polynomial: state/response size mismatch");
  if (xs.empty()) throw PreconditionError("fit_polynomial: empty sample");
  if (degree < 0) throw PreconditionError("fit_polynomial: negative degree");
  const std::size_t n = xs.size();

  RegressionFit fit;
  fit.n_samples_ = n;
  fit.x_mean = mean(xs);

  const bool flat = detail::effectively_constant(xs);
  int d = flat ? 0 : degree;
  if (static_cast<std::size_t>(d) + 1 > n)
    throw IllConditionedBasisError(
        "fit_polynomial: fewer samples than basis functions (" +
            std::to_string(n) + " < " + std::to_string(d + 1) + ")",
        std::numeric_limits<double>::infinity());

  if (d == 0) {
    fit.coeffs = {mean(ys)};
    fit.x_scale = 1.0;
    fit.condition_number = 1.0;
    fit.max_leverage = 1.0 / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ys[i] - fit.coeffs[0];
      ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
    return fit;
  }

  fit.x_scale = std::max(std::sqrt(variance(xs)), 1e-300);

  Eigen::MatrixXd a(n, d + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = (xs[i] - fit.x_mean) / fit.x_scale;
    double p = 1.0;
    for (int j = 0; j <= d; ++j) {
      a(i, j) = p;
      p *= s;
    }
  }
  const Eigen::MatrixXd ata = a.transpose() * a;
  Eigen::Map<const Eigen::VectorXd> y(ys.data(), n);
  const Eigen::VectorXd aty = a.transpose() * y;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ata);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double ev_max = ev(d);
  const double ev_min = ev(0);
  const double cond = (ev_min > 0.0 && ev_max > 0.0)
                          ? std::sqrt(ev_max / ev_min)
                          : std::numeric_limits<double>::infinity();
  fit.condition_number = cond;
  if (!(cond < cond_limit))
    throw IllConditionedBasisError(
        "fit_polynomial: design matrix condition number " +
            std::to_string(cond) + " exceeds limit " +
            std::to_string(cond_limit),
        cond);

  const Eigen::MatrixXd vt = eig.eigenvectors().transpose();
  const Eigen::VectorXd beta =
      eig.eigenvectors() * ((vt * aty).array() / ev.array()).matrix();
  fit.coeffs.assign(beta.data(), beta.data() + d + 1);
  fit.ev_ = ev;
  fit.vt_ = vt;

  double h_max = 0.0;
  Eigen::VectorXd w(d + 1);
  for (std::size_t i = 0; i < n; ++i) {
    w.noalias() = vt * a.row(i).transpose();
    double h = 0.0;
    for (int j = 0; j <= d; ++j) h += w(j) * w(j) / ev(j);
    h_max = std::max(h_max, h);
  }
  fit.max_leverage = h_max;

  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - fit(xs[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

// Fitted conditional expectation evaluated on the sample itself.
inline std::vector<double> fitted_values(const RegressionFit& fit,
                                         const std::vector<double>& xs) {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = fit(xs[i]);
  return out;
}

}  // namespace qbsde
