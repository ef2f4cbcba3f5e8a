#pragma once

#include <cmath>
#include <cstdint>

namespace qbsde {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stateless mix of a four-word key into one 64-bit word. Each component is
/// absorbed through a full finalizer round, so any single-bit change in any
/// component avalanches through the output.
inline constexpr std::uint64_t mix4(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                                    std::uint64_t d) {
  std::uint64_t h = splitmix64(a);
  h = splitmix64(h ^ (b + 0x9E3779B97F4A7C15ULL));
  h = splitmix64(h ^ (c + 0xC2B2AE3D27D4EB4FULL));
  h = splitmix64(h ^ (d + 0x165667B19E3779F9ULL));
  return h;
}

}  // namespace detail

/// Inverse of the standard normal distribution function. Rational initial
/// guess (Acklam) polished by one Halley step against erfc, giving close to
/// full double precision over (0, 1).
inline double inv_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  static const double sqrt_2pi = 2.5066282746310005024157652848110452530070;
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * sqrt_2pi * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, path, step, slot), so draws need no sequential state, any
/// path can be regenerated in isolation, and enlarging the path count never
/// changes the draws of existing paths.
struct CounterRng {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Uniform draw strictly inside (0, 1).
  double uniform(std::uint64_t path, std::uint64_t step, std::uint64_t slot) const {
    const std::uint64_t h =
        detail::mix4(seed, stream, path, (step << 20) ^ slot);
    return (static_cast<double>(h >> 12) + 0.5) * 0x1.0p-52;
  }

  /// Standard normal draw via the inverse distribution function.
  double normal(std::uint64_t path, std::uint64_t step, std::uint64_t slot) const {
    return inv_normal_cdf(uniform(path, step, slot));
  }
};

}  // namespace qbsde
