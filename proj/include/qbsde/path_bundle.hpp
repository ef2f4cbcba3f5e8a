#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "qbsde/errors.hpp"
#include "qbsde/rng.hpp"
#include "qbsde/stats.hpp"
#include "qbsde/time_grid.hpp"

namespace qbsde {

/// Brownian increments on a time grid, path-major storage:
/// increments[(p * n_steps + k) * dim + j] = ΔW^j over [t_k, t_{k+1}] of path p.
struct PathBundle {
  TimeGrid grid;
  std::size_t n_paths = 0;
  std::size_t dim = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<double> increments;

  double dw(std::size_t path, std::size_t step, std::size_t j = 0) const {
    return increments[(path * grid.n_steps() + step) * dim + j];
  }

  /// W at grid index k (component j), accumulated from the increments.
  double brownian_at(std::size_t path, std::size_t k, std::size_t j = 0) const {
    double w = 0.0;
    for (std::size_t s = 0; s < k; ++s) w += dw(path, s, j);
    return w;
  }
};

/// Draw a bundle with the counter generator; path p and step k receive
/// sqrt(dt_k) * Phi^{-1}(U(seed, stream, p, k, j)), so any path's increments
/// are a pure function of (seed, stream, p) and never depend on n_paths.
/// Per-step sanity gates: |mean| <= 5 sqrt(dt)/sqrt(n) and sample variance
/// within 5 standard errors of dt (only enforced when n_paths >= 100).
inline PathBundle sample_brownian(const TimeGrid& grid, std::size_t n_paths,
                                  std::size_t dim, std::uint64_t seed,
                                  std::uint64_t stream = 0) {
  grid.validate();
  if (n_paths == 0) throw PreconditionError("sample_brownian: n_paths must be positive");
  if (dim == 0) throw PreconditionError("sample_brownian: dim must be positive");
  PathBundle b;
  b.grid = grid;
  b.n_paths = n_paths;
  b.dim = dim;
  b.seed = seed;
  b.stream = stream;
  const std::size_t K = grid.n_steps();
  b.increments.resize(n_paths * K * dim);
  const CounterRng rng{seed, stream};
  for (std::size_t p = 0; p < n_paths; ++p)
    for (std::size_t k = 0; k < K; ++k) {
      const double s = std::sqrt(grid.dt(k));
      for (std::size_t j = 0; j < dim; ++j)
        b.increments[(p * K + k) * dim + j] = s * rng.normal(p, k, j);
    }

  if (n_paths >= 100) {
    const double n = static_cast<double>(n_paths);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < dim; ++j) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t p = 0; p < n_paths; ++p) {
          const double x = b.dw(p, k, j);
          s1 += x;
          s2 += x * x;
        }
        const double dt = grid.dt(k);
        const double m = s1 / n;
        const double var = (s2 - n * m * m) / (n - 1.0);
        const double var_se = dt * std::sqrt(2.0 / (n - 1.0));
        if (std::abs(m) > 5.0 * std::sqrt(dt) / std::sqrt(n) ||
            std::abs(var - dt) > 5.0 * var_se)
          throw PreconditionError("sample_brownian: statistical gate failed at step " +
                                  std::to_string(k));
      }
  }
  return b;
}

/// Sum consecutive increments so the same driving noise lives on a grid
/// coarsened by `factor` (n_steps must divide evenly).
inline PathBundle coarsen_bundle(const PathBundle& b, std::size_t factor) {
  const std::size_t K = b.grid.n_steps();
  if (factor == 0 || K % factor != 0)
    throw PreconditionError("coarsen_bundle: factor must divide the step count");
  PathBundle c;
  std::vector<double> ts;
  for (std::size_t k = 0; k <= K; k += factor) ts.push_back(b.grid.times[k]);
  c.grid = TimeGrid::from_times(std::move(ts));
  c.n_paths = b.n_paths;
  c.dim = b.dim;
  c.seed = b.seed;
  c.stream = b.stream;
  const std::size_t Kc = K / factor;
  c.increments.assign(b.n_paths * Kc * b.dim, 0.0);
  for (std::size_t p = 0; p < b.n_paths; ++p)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < b.dim; ++j)
        c.increments[(p * Kc + k / factor) * c.dim + j] += b.dw(p, k, j);
  return c;
}

namespace detail {
inline constexpr char bundle_magic[8] = {'Q', 'B', 'S', 'B', '0', '0', '0', '1'};
}

/// Binary layout: 8-byte magic, then seed, stream, n_paths, dim, n_times as
/// 64-bit unsigned little-endian, then times and increments as 64-bit floats.
inline void export_bundle(const PathBundle& b, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("export_bundle: cannot open " + path);
  std::fwrite(detail::bundle_magic, 1, 8, fp);
  const std::uint64_t header[5] = {b.seed, b.stream, b.n_paths, b.dim,
                                   b.grid.times.size()};
  std::fwrite(header, sizeof(std::uint64_t), 5, fp);
  std::fwrite(b.grid.times.data(), sizeof(double), b.grid.times.size(), fp);
  std::fwrite(b.increments.data(), sizeof(double), b.increments.size(), fp);
  std::fclose(fp);
}

inline PathBundle import_bundle(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("import_bundle: cannot open " + path);
  char magic[8];
  std::uint64_t header[5];
  if (std::fread(magic, 1, 8, fp) != 8 ||
      std::memcmp(magic, detail::bundle_magic, 8) != 0 ||
      std::fread(header, sizeof(std::uint64_t), 5, fp) != 5) {
    std::fclose(fp);
    throw IoError("import_bundle: bad header in " + path);
  }
  PathBundle b;
  b.seed = header[0];
  b.stream = header[1];
  b.n_paths = header[2];
  b.dim = header[3];
  const std::uint64_t n_times = header[4];
  b.grid.times.resize(n_times);
  if (std::fread(b.grid.times.data(), sizeof(double), n_times, fp) != n_times) {
    std::fclose(fp);
    throw IoError("import_bundle: truncated time grid in " + path);
  }
  const std::size_t want = b.n_paths * (n_times - 1) * b.dim;
  b.increments.resize(want);
  const std::size_t got = std::fread(b.increments.data(), sizeof(double), want, fp);
  const bool extra = std::fgetc(fp) != EOF;
  std::fclose(fp);
  if (got != want || extra)
    throw IoError("import_bundle: increment payload has wrong size in " + path);
  b.grid.validate();
  return b;
}

}  // namespace qbsde
