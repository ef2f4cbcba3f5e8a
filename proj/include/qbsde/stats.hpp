#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "qbsde/errors.hpp"

namespace qbsde {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw PreconditionError("mean: empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw PreconditionError("variance: need at least two samples");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double std_dev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

/// Standard error of the sample mean obtained by splitting the sample into
/// `n_batches` contiguous batches and treating the batch means as i.i.d.
/// All statistical tolerances in this library are expressed as 3 * SE.
inline double batch_se(std::span<const double> xs, std::size_t n_batches = 30) {
  if (n_batches < 2) throw PreconditionError("batch_se: need at least two batches");
  if (xs.size() < 2 * n_batches)
    throw PreconditionError("batch_se: sample too small for requested batch count");
  const std::size_t len = xs.size() / n_batches;
  std::vector<double> batch_means;
  batch_means.reserve(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += xs[i];
    batch_means.push_back(s / static_cast<double>(len));
  }
  const double v = variance(batch_means);
  return std::sqrt(v / static_cast<double>(n_batches));
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw PreconditionError("median: empty sample");
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + mid, xs.end());
  double hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  std::nth_element(xs.begin(), xs.begin() + mid - 1, xs.end());
  return 0.5 * (xs[mid - 1] + hi);
}

/// Empirical quantile with linear interpolation, q in [0, 1].
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw PreconditionError("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw PreconditionError("quantile: q outside [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * xs[lo] + w * xs[lo + 1];
}

inline double max_abs(std::span<const double> xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, std::abs(x));
  return m;
}

/// Least-squares slope of log(y) against log(x); used to fit convergence
/// orders from refinement sweeps. Requires positive inputs.
inline double fit_log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw PreconditionError("fit_log_log_slope: need matched samples of size >= 2");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw PreconditionError("fit_log_log_slope: inputs must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = mean(lx), my = mean(ly);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw PreconditionError("fit_log_log_slope: degenerate abscissae");
  return sxy / sxx;
}

}  // namespace qbsde
