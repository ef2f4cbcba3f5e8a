#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qbsde/regression.hpp"
#include "qbsde/rng.hpp"
#include "qbsde/stats.hpp"

using namespace qbsde;

TEST_CASE("polynomial responses are reproduced to rounding accuracy") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 200; ++i) {
    const double x = -2.0 + 4.0 * i / 199.0;
    xs.push_back(x);
    ys.push_back(2.0 + 3.0 * x - x * x * x);
  }
  const RegressionFit fit = fit_polynomial(xs, ys, 5);
  REQUIRE(fit.degree() == 5);
  REQUIRE(fit.residual_rms <= 1e-10);
  for (double x : {-1.7, -0.3, 0.0, 0.9, 1.99}) {
    const double want = 2.0 + 3.0 * x - x * x * x;
    REQUIRE(std::fabs(fit(x) - want) <= 1e-9);
  }
}

TEST_CASE("noisy conditional expectation is recovered on a large sample") {
  const std::size_t n = 200000;
  CounterRng rng{20240811u, 0u};
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = rng.normal(i, 0, 0);
    ys[i] = xs[i] * xs[i] + 0.5 * rng.normal(i, 0, 1);
  }
  const RegressionFit fit = fit_polynomial(xs, ys, 5);
  // E[y|x] = x^2 lies in the basis, so the only error is coefficient noise
  // of order sigma * sqrt(basis/n) ~ 3e-3.
  for (double x : {-1.0, 0.0, 1.0}) {
    REQUIRE(std::fabs(fit(x) - x * x) <= 0.02);
  }
  REQUIRE(std::fabs(fit.residual_rms - 0.5) <= 0.02);
  REQUIRE(fit.condition_number < 100.0);
}

TEST_CASE("a constant response regresses to itself with zero driver load") {
  CounterRng rng{7u, 1u};
  std::vector<double> xs, ys;
  for (int i = 0; i < 500; ++i) {
    xs.push_back(rng.normal(i, 0, 0));
    ys.push_back(7.0);
  }
  REQUIRE(constant_response(ys));
  const RegressionFit fit = fit_polynomial(xs, ys, 5);
  REQUIRE(fit.residual_rms <= 1e-12);
  for (double x : {-3.0, 0.0, 1.5}) REQUIRE(std::fabs(fit(x) - 7.0) <= 1e-12);

  ys[3] = 7.1;
  REQUIRE_FALSE(constant_response(ys));
}

TEST_CASE("a deterministic state falls back to the sample mean") {
  const std::vector<double> xs(4, 3.0);
  const std::vector<double> ys{1.0, 2.0, 3.0, 4.0};
  const RegressionFit fit = fit_polynomial(xs, ys, 5);
  REQUIRE(fit.degree() == 0);
  REQUIRE(fit.condition_number == 1.0);
  REQUIRE(fit(99.0) == Catch::Approx(2.5).margin(1e-14));
}

TEST_CASE("rank-deficient designs raise an error carrying the conditioning") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 64; ++i) {
    xs.push_back(i % 2 ? 1.0 : 0.0);
    ys.push_back(static_cast<double>(i));
  }
  try {
    fit_polynomial(xs, ys, 5);
    FAIL("expected IllConditionedBasisError");
  } catch (const IllConditionedBasisError& e) {
    REQUIRE(e.condition_number >= 1e10);
  }
}

TEST_CASE("undersized samples are rejected") {
  const std::vector<double> xs{0.0, 1.0, 2.0};
  const std::vector<double> ys{0.0, 1.0, 4.0};
  REQUIRE_THROWS_AS(fit_polynomial(xs, ys, 5), IllConditionedBasisError);
  REQUIRE_NOTHROW(fit_polynomial(xs, ys, 2));
}

TEST_CASE("standardisation keeps far-offset states well conditioned") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 101; ++i) {
    const double x = 1e6 + i / 100.0;
    xs.push_back(x);
    const double t = x - 1e6;
    ys.push_back(t * t);
  }
  const RegressionFit fit = fit_polynomial(xs, ys, 2);
  REQUIRE(fit.condition_number < 100.0);
  REQUIRE(std::fabs(fit(1e6 + 0.5) - 0.25) <= 1e-8);
}

TEST_CASE("shape errors are preconditions") {
  REQUIRE_THROWS_AS(fit_polynomial({1.0, 2.0}, {1.0}, 1), PreconditionError);
  REQUIRE_THROWS_AS(fit_polynomial({}, {}, 1), PreconditionError);
  REQUIRE_THROWS_AS(fit_polynomial({1.0}, {1.0}, -1), PreconditionError);
}
