#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "qbsde/errors.hpp"

namespace qbsde {

/// Terminal payoff. Either a constant or a function of the terminal state
/// (the driving Brownian motion itself when no state equation is attached).
/// `p_integrability` declares which p-th moments downstream estimates assume;
/// the optional growth envelope |g(x)| <= growth_beta (1 + |x|^growth_q) is
/// checked on samples when growth_beta > 0.
struct TerminalCondition {
  enum class Kind { constant, function_of_state };
  Kind kind = Kind::constant;
  double value = 0.0;
  std::function<double(double)> g;
  double p_integrability = 2.0;
  double growth_beta = 0.0;
  double growth_q = 1.0;
  std::string label = "terminal";

  double operator()(double x_terminal) const {
    const double xi = kind == Kind::constant ? value : g(x_terminal);
    if (!std::isfinite(xi))
      throw CoefficientEvalError("terminal '" + label +
                                 "' is non-finite at x = " + std::to_string(x_terminal));
    return xi;
  }
};

inline TerminalCondition constant_terminal(double v) {
  TerminalCondition t;
  t.kind = TerminalCondition::Kind::constant;
  t.value = v;
  t.label = "constant(" + std::to_string(v) + ")";
  return t;
}

inline TerminalCondition state_terminal(std::function<double(double)> g,
                                        std::string label = "g(state)") {
  TerminalCondition t;
  t.kind = TerminalCondition::Kind::function_of_state;
  t.g = std::move(g);
  t.label = std::move(label);
  return t;
}

/// Worst sampled violation of the declared growth envelope (0 when clean or
/// when no envelope is declared).
inline double terminal_growth_violation(const TerminalCondition& t,
                                        const std::vector<double>& xs) {
  if (t.kind == TerminalCondition::Kind::constant || t.growth_beta <= 0.0) return 0.0;
  double worst = 0.0;
  for (double x : xs) {
    const double cap = t.growth_beta * (1.0 + std::pow(std::abs(x), t.growth_q));
    worst = std::max(worst, std::abs(t(x)) - cap);
  }
  return worst;
}

}  // namespace qbsde
