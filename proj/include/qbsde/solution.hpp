#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "qbsde/errors.hpp"
#include "qbsde/stats.hpp"
#include "qbsde/time_grid.hpp"

namespace qbsde {

/// Discrete backward solution on grid x paths, grid-major like the state
/// arrays: y[k * n_paths + p]. The z field carries the final time slot too
/// (filled by one-sided extrapolation from the last interval); driver holds
/// the realized generator values when the producer recorded them.
struct BsdeSolution {
  TimeGrid grid;
  std::size_t n_paths = 0;
  std::vector<double> y;
  std::vector<double> z;
  std::vector<double> driver;  // empty unless recorded
  std::vector<double> state;   // forward state used for conditioning

  struct StepDiagnostics {
    double regression_residual_rms = 0.0;
    double condition_number = 0.0;
    // Largest statistical standard error of a fitted conditional-expectation
    // value across the cross-section (residual rms times the square root of
    // the worst design leverage).
    double fitted_se_max = 0.0;
    int picard_iterations = 0;
    std::size_t clipped_z = 0;
  };
  std::vector<StepDiagnostics> diagnostics;
  std::string scheme_label;
  // Statistical standard error of y0(), set by the producing solver (for the
  // martingale schemes this is the Monte Carlo error of the terminal mean
  // mapped through the inverse change of variable).
  double y0_se = 0.0;
  // Optional grid-major pointwise standard error of the fitted Y field, in Y
  // units: regression noise accumulated backward along each path (suffix
  // root-sum-square of residual_rms * sqrt(leverage at the path's state),
  // mapped through the producing scheme's change of variable).  Populated
  // only when the producing solver was asked to record it.
  std::vector<double> y_fit_se;

  double y_fit_se_at(std::size_t k, std::size_t p) const {
    return y_fit_se[k * n_paths + p];
  }

  double y_at(std::size_t k, std::size_t p) const { return y[k * n_paths + p]; }
  double z_at(std::size_t k, std::size_t p) const { return z[k * n_paths + p]; }
  double driver_at(std::size_t k, std::size_t p) const {
    return driver[k * n_paths + p];
  }
  double state_at(std::size_t k, std::size_t p) const { return state[k * n_paths + p]; }
  bool has_driver() const { return !driver.empty(); }

  /// Y at the initial time; the first step conditions on a deterministic
  /// state, so the whole cross-section carries one value.
  double y0() const { return y.empty() ? 0.0 : y.front(); }

  std::vector<double> y_slice(std::size_t k) const {
    return std::vector<double>(y.begin() + k * n_paths, y.begin() + (k + 1) * n_paths);
  }
  std::vector<double> z_slice(std::size_t k) const {
    return std::vector<double>(z.begin() + k * n_paths, z.begin() + (k + 1) * n_paths);
  }

  /// Per-path running maximum of |Y| over the whole horizon.
  std::vector<double> y_sup() const {
    std::vector<double> m(n_paths, 0.0);
    for (std::size_t k = 0; k < grid.times.size(); ++k)
      for (std::size_t p = 0; p < n_paths; ++p)
        m[p] = std::max(m[p], std::abs(y_at(k, p)));
    return m;
  }

  /// Per-path ∫ |Z|^2 ds (left endpoint rule).
  std::vector<double> z_quadratic_variation() const {
    std::vector<double> q(n_paths, 0.0);
    for (std::size_t k = 0; k + 1 < grid.times.size(); ++k) {
      const double dt = grid.dt(k);
      for (std::size_t p = 0; p < n_paths; ++p)
        q[p] += z_at(k, p) * z_at(k, p) * dt;
    }
    return q;
  }
};

/// Per-time aggregates plus the first few paths, deterministic formatting.
inline void export_solution_csv(const BsdeSolution& s, const std::string& path,
                                std::size_t sample_paths = 8) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("export_solution_csv: cannot open " + path);
  const std::size_t m = std::min(sample_paths, s.n_paths);
  std::fputs("t,y_mean,y_sd,z_mean,z_sd", fp);
  for (std::size_t p = 0; p < m; ++p) std::fprintf(fp, ",y_path%zu", p);
  std::fputc('\n', fp);
  for (std::size_t k = 0; k < s.grid.times.size(); ++k) {
    const std::vector<double> ys = s.y_slice(k);
    const std::vector<double> zs = s.z_slice(k);
    const double ym = mean(ys), zm = mean(zs);
    const double ysd = s.n_paths > 1 ? std_dev(ys) : 0.0;
    const double zsd = s.n_paths > 1 ? std_dev(zs) : 0.0;
    std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g", s.grid.times[k], ym, ysd, zm, zsd);
    for (std::size_t p = 0; p < m; ++p) std::fprintf(fp, ",%.17g", s.y_at(k, p));
    std::fputc('\n', fp);
  }
  std::fclose(fp);
}

/// Long-format rows (t, path, y, z), capped at max_paths paths.
inline void export_solution_long_csv(const BsdeSolution& s,
                                     const std::string& path,
                                     std::size_t max_paths = 16) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("export_solution_long_csv: cannot open " + path);
  const std::size_t m = std::min(max_paths, s.n_paths);
  std::fputs("t,path,y,z\n", fp);
  for (std::size_t k = 0; k < s.grid.times.size(); ++k)
    for (std::size_t p = 0; p < m; ++p)
      std::fprintf(fp, "%.17g,%zu,%.17g,%.17g\n", s.grid.times[k], p,
                   s.y_at(k, p), s.z_at(k, p));
  std::fclose(fp);
}

/// Flat summary object: initial value, its standard error, scheme metadata.
inline void export_solution_summary_json(const BsdeSolution& s,
                                         const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("export_solution_summary_json: cannot open " + path);
  std::fprintf(fp,
               "{\n"
               "  \"y0\": %.17g,\n"
               "  \"y0_se\": %.17g,\n"
               "  \"scheme\": \"%s\",\n"
               "  \"n_paths\": %zu,\n"
               "  \"n_steps\": %zu,\n"
               "  \"horizon\": %.17g\n"
               "}\n",
               s.y0(), s.y0_se, s.scheme_label.c_str(), s.n_paths,
               s.grid.n_steps(), s.grid.horizon());
  std::fclose(fp);
}

}  // namespace qbsde
