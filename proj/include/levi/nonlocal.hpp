#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include "levi/core.hpp"
#include "levi/kernel_spec.hpp"
#include "levi/quadrature.hpp"

namespace levi {

//! δ_f(x; z) = f(x+z) + f(x−z) − 2 f(x).
template <int D, class F>
double second_difference(F&& f, const Vec<D>& x, const Vec<D>& z) {
  return f(Vec<D>(x + z)) + f(Vec<D>(x - z)) - 2.0 * f(x);
}

//! Time-dependent overload, f(t, x).
template <int D, class F>
double second_difference(F&& f, double t, const Vec<D>& x, const Vec<D>& z) {
  return f(t, Vec<D>(x + z)) + f(t, Vec<D>(x - z)) - 2.0 * f(t, x);
}

struct RadialQuadrature {
  double inner_radius = 1e-4;  ///< Taylor cell [0, r0]
  double far_radius = 64.0;    ///< beyond this, substitute v = 1/r
  double panel_width = 1.0;    ///< panel length on [1, far_radius]
  double tol = 1e-11;
  double abs_tol = 1e-13;
  unsigned max_depth = 18;
  int angular_nodes = 64;  ///< d = 2 only
  std::vector<double> feature_radii;
  double reliable_tol = 1e-7;
};

struct NonlocalValue {
  double value = 0.0;
  double error = 0.0;
  bool reliable = true;
};

namespace detail {

// Sphere-averaged, symmetrized difference S(r) = ½ ∫_{S^{d−1}} δ_f(x; rθ) κ(rθ) dθ.
template <int D, class F, class K>
double spherical_difference(F& f, const Vec<D>& x, K& kappa, double r, int angular_nodes) {
  const double fx = f(x);
  if constexpr (D == 1) {
    Vec<1> z;
    z[0] = r;
    const double delta = f(Vec<1>(x + z)) + f(Vec<1>(x - z)) - 2.0 * fx;
    return 0.5 * delta * (kappa(z) + kappa(Vec<1>(-z)));
  } else {
    static_assert(D == 2, "only d = 1, 2 supported");
    // θ and θ+π give the same second difference, so sweep a half circle.
    const int n = std::max(angular_nodes / 2, 4);
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
      const double th = pi * (k + 0.5) / n;
      Vec<2> z(r * std::cos(th), r * std::sin(th));
      const double delta = f(Vec<2>(x + z)) + f(Vec<2>(x - z)) - 2.0 * fx;
      s += delta * (kappa(z) + kappa(Vec<2>(-z)));
    }
    return 0.5 * s * (pi / n);
  }
}

}  // namespace detail

//! 𝓛^κ f(x) = ½ ∫ δ_f(x; z) κ(z) |z|^{−d−1} dz by radial quadrature.
template <int D, class F, class K>
NonlocalValue apply_nonlocal(F&& f, const Vec<D>& x, K&& kappa_at_x, const RadialQuadrature& q = {}) {
  auto S = [&](double r) { return detail::spherical_difference<D>(f, x, kappa_at_x, r, q.angular_nodes); };
  NonlocalValue out;
  const double r0 = q.inner_radius;

  // Innermost cell: S(r) ≈ c r², so ∫₀^{r0} S/r² ≈ S(r0)/r0; the half-cell estimate gauges the remainder.
  const double s0 = S(r0), sh = S(0.5 * r0);
  const double inner = s0 / r0;
  const double inner_err = std::abs(inner - 2.0 * sh / r0) * 0.5 + 1e-300;

  // [r0, 1] in u = log r.
  std::vector<double> ubreaks;
  for (double fr : q.feature_radii)
    if (fr > r0 && fr < 1.0) ubreaks.push_back(std::log(fr));
  auto mid = integrate_panels([&](double u) { return S(std::exp(u)) * std::exp(-u); }, std::log(r0), 0.0, ubreaks,
                              q.tol, q.max_depth, q.abs_tol);

  // [1, R] in unit panels plus feature breakpoints.
  std::vector<double> rbreaks;
  for (double r = 1.0 + q.panel_width; r < q.far_radius; r += q.panel_width) rbreaks.push_back(r);
  for (double fr : q.feature_radii)
    if (fr > 1.0 && fr < q.far_radius) rbreaks.push_back(fr);
  auto outer = integrate_panels([&](double r) { return S(r) / (r * r); }, 1.0, q.far_radius, rbreaks, q.tol,
                                q.max_depth, q.abs_tol);

  // [R, ∞) in v = 1/r.
  const double R = q.far_radius;
  auto tail = integrate_panels([&](double v) { return v <= 0.0 ? 0.0 : S(R / v) / R; }, 0.0, 1.0, {}, q.tol,
                               std::min(q.max_depth, 10u), q.abs_tol);

  out.value = inner + mid.value + outer.value + tail.value;
  out.error = inner_err + mid.error + outer.error + tail.error;
  out.reliable = out.error <= q.reliable_tol * std::max(1.0, std::abs(out.value));
  return out;
}

//! ∫₀^∞ (1 − cos(a r)) g(r) r^{−2} dr for a ≥ 0 and bounded g.
template <class G>
double ray_integral(double a, G&& g, double tol = 1e-13) {
  a = std::abs(a);
  if (a == 0.0) return 0.0;
  // s = a r.
  constexpr int periods = 8;
  const double S1 = 2.0 * pi * periods;
  std::vector<double> breaks;
  for (int k = 1; k < 2 * periods; ++k) breaks.push_back(pi * k);
  auto head = integrate_panels(
      [&](double s) {
        if (s == 0.0) return 0.5 * g(0.0);
        const double h = std::sin(0.5 * s) / s;
        return 2.0 * h * h * g(s / a);
      },
      0.0, S1, breaks, tol, 18);
  auto flat = integrate_adaptive([&](double v) { return v <= 0.0 ? 0.0 : g(S1 / (v * a)) / S1; }, 0.0, 1.0, tol, 15);
  // A fresh integrator per call: a cached one grows its tables lazily, which makes results depend on call history.
  boost::math::quadrature::ooura_fourier_cos<double> cosine;
  auto osc = cosine.integrate(
      [&](double s) {
        const double r = s + S1;
        return g(r / a) / (r * r);
      },
      1.0);
  // cos(s + S1) = cos(s) because S1 is a whole number of periods.
  return a * (head.value + flat.value - osc.first);
}

//! ψ(ξ) = ∫ (1 − cos ξ·z) κ̄(z) |z|^{−d−1} dz.
template <int D>
double levy_symbol(const Vec<D>& xi, const IsotropicKernelSpec<D>& spec, int angular_nodes = 48) {
  const double n = xi.norm();
  if (n == 0.0) return 0.0;
  if constexpr (D == 1) {
    auto g = [&](double r) {
      Vec<1> z;
      z[0] = r;
      return spec(z) + spec(Vec<1>(-z));
    };
    return ray_integral(n, g);
  } else {
    static_assert(D == 2, "only d = 1, 2 supported");
    // Integrand in θ is smooth between the zeros of ξ·θ; Gauss on each half-circle arc.
    const double th0 = std::atan2(xi[1], xi[0]) - 0.5 * pi;
    const auto rule = gauss_legendre(angular_nodes, 0.0, pi);
    double total = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double th = th0 + rule.nodes[k];
      const Vec<2> e(std::cos(th), std::sin(th));
      const double a = std::abs(xi.dot(e));
      double ray;
      if (spec.angle_only) {
        ray = 0.5 * pi * a * spec(e);
      } else {
        ray = ray_integral(a, [&](double r) { return spec(Vec<2>(r * e)); });
      }
      total += 2.0 * rule.weights[k] * ray;  // θ+π contributes the same by symmetry
    }
    return total;
  }
}

}  // namespace levi
