#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "levi/core.hpp"

namespace levi {

//! A symmetric jump intensity κ̄(z) on ℝ^D, with declared two-sided bounds.
template <int D>
struct IsotropicKernelSpec {
  std::function<double(const Vec<D>&)> kappa_bar;
  double lower = 1.0;  // κ̄₀
  double upper = 1.0;  // κ̄₁
  // Set when κ̄ depends on the direction z/|z| only; enables exact homogeneity in d = 2.
  bool angle_only = false;
  std::string name = "unnamed";

  double operator()(const Vec<D>& z) const { return kappa_bar(z); }

  static IsotropicKernelSpec constant(double c) {
    IsotropicKernelSpec s;
    s.kappa_bar = [c](const Vec<D>&) { return c; };
    s.lower = s.upper = c;
    s.angle_only = true;
    s.name = "constant";
    return s;
  }

  //! Probes symmetry and the declared bounds on a deterministic point set.
  void validate(double tol = 1e-12) const {
    require(static_cast<bool>(kappa_bar), ErrorKind::invalid_spec, "kernel function missing");
    require(lower > 0.0 && lower <= upper, ErrorKind::invalid_spec, "need 0 < lower <= upper");
    for (int i = 0; i < 64; ++i) {
      const double r = std::pow(10.0, -4.0 + 7.0 * i / 63.0);
      Vec<D> z;
      for (int k = 0; k < D; ++k) z[k] = r * std::cos(0.7 * i + 1.3 * k);
      if constexpr (D == 1) z[0] = (i % 2 == 0) ? r : -r;
      const double a = kappa_bar(z), b = kappa_bar(Vec<D>(-z));
      if (std::abs(a - b) > tol * std::max(1.0, std::abs(a)))
        fail(ErrorKind::invalid_spec, "kappa_bar is not symmetric in z at |z|=" + std::to_string(r));
      if (a < lower * (1 - 1e-12) || a > upper * (1 + 1e-12))
        fail(ErrorKind::invalid_spec, "kappa_bar leaves its declared bounds at |z|=" + std::to_string(r));
    }
  }
};

}  // namespace levi
