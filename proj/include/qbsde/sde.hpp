#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qbsde/errors.hpp"
#include "qbsde/path_bundle.hpp"

namespace qbsde {

/// Scalar diffusion dX = b(t, X) dt + sigma(t, X) dW with declared regularity
/// constants: `lipschitz` bounds both |b(t,x)-b(t,y)| and |sigma(t,x)-sigma(t,y)|
/// by lipschitz * |x-y|, and `bound_beta` bounds |b(t,0)| + |sigma(t,0)|.
struct SdeModel {
  std::function<double(double, double)> drift;
  std::function<double(double, double)> diffusion;
  double x0 = 0.0;
  double lipschitz = 0.0;
  double bound_beta = 0.0;
  std::string label = "sde";
};

inline SdeModel brownian_model() {
  SdeModel m;
  m.drift = [](double, double) { return 0.0; };
  m.diffusion = [](double, double) { return 1.0; };
  m.x0 = 0.0;
  m.lipschitz = 0.0;
  m.bound_beta = 1.0;
  m.label = "brownian";
  return m;
}

/// Euler scheme over the bundle's grid, driven by the first noise component.
/// Output is grid-major: states[k * n_paths + p] = X_{t_k} of path p.
/// The first non-finite state aborts with its (path, step) location.
inline std::vector<double> euler_maruyama(const SdeModel& model, const PathBundle& b) {
  const std::size_t K = b.grid.n_steps();
  const std::size_t n = b.n_paths;
  std::vector<double> states((K + 1) * n);
  for (std::size_t p = 0; p < n; ++p) states[p] = model.x0;
  for (std::size_t k = 0; k < K; ++k) {
    const double t = b.grid.times[k];
    const double dt = b.grid.dt(k);
    for (std::size_t p = 0; p < n; ++p) {
      const double x = states[k * n + p];
      const double next =
          x + model.drift(t, x) * dt + model.diffusion(t, x) * b.dw(p, k, 0);
      if (!std::isfinite(next))
        throw SimulationBlowupError("euler_maruyama: state became non-finite (model '" +
                                        model.label + "', path " + std::to_string(p) +
                                        ", step " + std::to_string(k + 1) + ")",
                                    p, k + 1);
      states[(k + 1) * n + p] = next;
    }
  }
  return states;
}

struct SdeValidationReport {
  double worst_lipschitz_margin = 0.0;  // min over samples of L|x-y| - |f(x)-f(y)|
  double worst_growth_margin = 0.0;     // min over samples of beta - |b(t,0)|-|sigma(t,0)|
  bool pass = false;
};

/// Sampled check of the declared constants over t in [t_lo, t_hi] and
/// x in [-x_range, x_range]; margins below -1e-9 fail.
inline SdeValidationReport validate_sde(const SdeModel& model, double t_lo, double t_hi,
                                        double x_range, std::size_t n_samples = 2000,
                                        std::uint64_t sample_seed = 12345) {
  std::mt19937_64 gen(sample_seed);
  std::uniform_real_distribution<double> td(t_lo, t_hi);
  std::uniform_real_distribution<double> xd(-x_range, x_range);
  SdeValidationReport r;
  r.worst_lipschitz_margin = std::numeric_limits<double>::infinity();
  r.worst_growth_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = td(gen), x = xd(gen), y = xd(gen);
    const double lb = model.lipschitz * std::abs(x - y);
    r.worst_lipschitz_margin = std::min(
        {r.worst_lipschitz_margin, lb - std::abs(model.drift(t, x) - model.drift(t, y)),
         lb - std::abs(model.diffusion(t, x) - model.diffusion(t, y))});
    r.worst_growth_margin =
        std::min(r.worst_growth_margin, model.bound_beta - std::abs(model.drift(t, 0.0)) -
                                            std::abs(model.diffusion(t, 0.0)));
  }
  r.pass = r.worst_lipschitz_margin >= -1e-9 && r.worst_growth_margin >= -1e-9;
  return r;
}

}  // namespace qbsde
