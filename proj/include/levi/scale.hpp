#pragma once

#include <algorithm>
#include <cmath>

#include "levi/core.hpp"

namespace levi {

//! ϱ_γ^β(t,x) = t^γ (|x|^β ∧ 1)(|x| + t)^{−d−1}, written in terms of r = |x|.
inline double scale_function(double gamma, double beta, double t, double r, int d) {
  const double cap = (beta == 0.0) ? 1.0 : std::min(std::pow(r, beta), 1.0);
  return std::pow(t, gamma) * cap * std::pow(r + t, -d - 1.0);
}

struct ScaleBound {
  double gamma = 0.0;
  double beta = 0.0;
  int d = 1;

  double operator()(double t, double r) const { return scale_function(gamma, beta, t, r, d); }
};

inline double beta_function(double a, double b) {
  require(a > 0.0 && b > 0.0, ErrorKind::domain, "Beta function needs positive arguments");
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

//! Coefficient of the n-th Picard level majorant, (C Γ(β))^{n+1} / Γ((n+1)β).
inline double picard_majorant_coefficient(double c_d, double beta, int n) {
  return std::exp((n + 1) * std::log(c_d * std::tgamma(beta)) - std::lgamma((n + 1) * beta));
}

}  // namespace levi
