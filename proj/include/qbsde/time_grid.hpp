#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "qbsde/errors.hpp"

namespace qbsde {

/// Strictly increasing partition of [t0, T].
struct TimeGrid {
  std::vector<double> times;

  static TimeGrid uniform(double t0, double horizon, std::size_t n_steps) {
    if (!(horizon > t0)) throw PreconditionError("TimeGrid: horizon must exceed t0");
    if (n_steps < 1) throw PreconditionError("TimeGrid: need at least one step");
    TimeGrid g;
    g.times.resize(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k)
      g.times[k] = t0 + (horizon - t0) * static_cast<double>(k) /
                            static_cast<double>(n_steps);
    g.times.back() = horizon;
    return g;
  }

  static TimeGrid from_times(std::vector<double> ts) {
    TimeGrid g;
    g.times = std::move(ts);
    g.validate();
    return g;
  }

  void validate() const {
    if (times.size() < 2) throw PreconditionError("TimeGrid: need at least two times");
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (!std::isfinite(times[k])) throw PreconditionError("TimeGrid: non-finite time");
      if (k > 0 && !(times[k] > times[k - 1]))
        throw PreconditionError("TimeGrid: times must be strictly increasing");
    }
  }

  std::size_t n_steps() const { return times.size() - 1; }
  double t0() const { return times.front(); }
  double horizon() const { return times.back(); }
  double dt(std::size_t k) const { return times[k + 1] - times[k]; }
  double max_step() const {
    double m = 0.0;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) m = std::max(m, dt(k));
    return m;
  }
};

}  // namespace qbsde
