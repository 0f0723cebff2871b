#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "levi/core.hpp"

namespace levi {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {
// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
inline std::pair<double, double> legendre_with_derivative(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}
}  // namespace detail

//! Gauss–Legendre rule on [a, b] with n nodes.
inline QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0) {
  require(n >= 1, ErrorKind::invalid_spec, "gauss_legendre needs n >= 1");
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  if (n == 1) {
    r.nodes[0] = mid;
    r.weights[0] = 2.0 * half;
    return r;
  }
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre_with_derivative(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = detail::legendre_with_derivative(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = mid - half * x;
    r.nodes[n - 1 - i] = mid + half * x;
    r.weights[i] = r.weights[n - 1 - i] = half * w;
  }
  return r;
}

struct IntegralEstimate {
  double value = 0.0;
  double error = 0.0;
};

//! Adaptive Gauss–Kronrod (15-point) over [a, b].
template <class F>
IntegralEstimate integrate_adaptive(F&& f, double a, double b, double tol = 1e-10, unsigned max_depth = 15) {
  IntegralEstimate e;
  if (a == b) return e;
  e.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, tol, &e.error);
  return e;
}

//! Adaptive integral over consecutive panels split at the given breakpoints (clipped to [a, b]).
//! The tolerance is relative to the whole integral, so negligible panels are not refined.
template <class F>
IntegralEstimate integrate_panels(F&& f, double a, double b, std::vector<double> breaks, double tol = 1e-10,
                                  unsigned max_depth = 15, double abs_tol = 0.0) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  std::vector<std::pair<double, double>> panels;
  double prev = a;
  for (double c : breaks) {
    if (c <= prev || c > b) continue;
    panels.emplace_back(prev, c);
    prev = c;
  }
  std::vector<double> rough(panels.size()), l1(panels.size());
  double total_l1 = 0.0;
  for (std::size_t i = 0; i < panels.size(); ++i) {
    rough[i] = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, panels[i].first, panels[i].second, 0,
                                                                              0.0, nullptr, &l1[i]);
    total_l1 += l1[i];
  }
  IntegralEstimate total;
  for (std::size_t i = 0; i < panels.size(); ++i) {
    if (l1[i] <= std::max(tol * total_l1, abs_tol)) {
      total.value += rough[i];
      total.error += l1[i];
      continue;
    }
    const double rel = std::min(1e-2, std::max(tol * total_l1, abs_tol) / l1[i]);
    auto piece = integrate_adaptive(f, panels[i].first, panels[i].second, rel, max_depth);
    total.value += piece.value;
    total.error += piece.error;
  }
  return total;
}

//! Pairwise summation; fixed combine order so results are bit-stable for a given input.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

}  // namespace levi
