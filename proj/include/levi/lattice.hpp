#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "levi/core.hpp"

namespace levi {

//! Symmetric spatial lattice: uniform core [−a, a] with step h, geometrically graded outside up to ±outer.
struct Lattice {
  std::vector<double> nodes;
  std::vector<double> weights;  ///< trapezoid weights
  double core = 0.0;
  double step = 0.0;
  double growth = 1.0;

  static Lattice graded(double core, double step, double outer, double growth = 1.15) {
    require(core > 0 && step > 0 && outer >= core && growth >= 1.0, ErrorKind::invalid_spec, "bad lattice spec");
    const int n = static_cast<int>(std::lround(core / step));
    require(std::abs(n * step - core) < 1e-9 * core, ErrorKind::invalid_spec, "core must be a multiple of step");
    std::vector<double> right;
    for (int i = 0; i <= n; ++i) right.push_back(i * step);
    double h = step;
    while (growth > 1.0 && right.back() < outer) {
      h *= growth;
      right.push_back(std::min(right.back() + h, outer));
      if (outer - right.back() < 0.3 * h) right.back() = outer;
    }
    Lattice L;
    L.core = core;
    L.step = step;
    L.growth = growth;
    for (auto it = right.rbegin(); it != right.rend() - 1; ++it) L.nodes.push_back(-*it);
    L.nodes.insert(L.nodes.end(), right.begin(), right.end());
    L.weights.assign(L.nodes.size(), 0.0);
    for (std::size_t i = 0; i + 1 < L.nodes.size(); ++i) {
      const double w = 0.5 * (L.nodes[i + 1] - L.nodes[i]);
      L.weights[i] += w;
      L.weights[i + 1] += w;
    }
    return L;
  }

  static Lattice uniform(double half_width, double step) { return graded(half_width, step, half_width, 1.0); }

  int size() const { return static_cast<int>(nodes.size()); }
  double lo() const { return nodes.front(); }
  double hi() const { return nodes.back(); }

  //! Index of the node nearest to x.
  int nearest(double x) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), x);
    if (it == nodes.begin()) return 0;
    if (it == nodes.end()) return size() - 1;
    const int i = static_cast<int>(it - nodes.begin());
    return (x - nodes[i - 1] < nodes[i] - x) ? i - 1 : i;
  }

  //! Cubic Lagrange interpolation of lattice values; inverse-square decay about `center` outside the lattice.
  double interpolate(std::span<const double> v, double x, double center = 0.0) const {
    const int n = size();
    if (x <= lo() || x >= hi()) {
      const int e = x <= lo() ? 0 : n - 1;
      const double r0 = nodes[e] - center, r = x - center;
      return v[e] * (r0 * r0) / (r * r);
    }
    int i = static_cast<int>(std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin()) - 1;
    i = std::clamp(i - 1, 0, n - 4);
    double s = 0.0;
    for (int j = i; j < i + 4; ++j) {
      double l = 1.0;
      for (int k = i; k < i + 4; ++k)
        if (k != j) l *= (x - nodes[k]) / (nodes[j] - nodes[k]);
      s += l * v[j];
    }
    return s;
  }

  //! Derivative of the cubic interpolant.
  double interpolate_derivative(std::span<const double> v, double x) const {
    const int n = size();
    int i = static_cast<int>(std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin()) - 1;
    i = std::clamp(i - 1, 0, n - 4);
    double s = 0.0;
    for (int j = i; j < i + 4; ++j) {
      double dl = 0.0;
      for (int m = i; m < i + 4; ++m) {
        if (m == j) continue;
        double l = 1.0 / (nodes[j] - nodes[m]);
        for (int k = i; k < i + 4; ++k)
          if (k != j && k != m) l *= (x - nodes[k]) / (nodes[j] - nodes[k]);
        dl += l;
      }
      s += dl * v[j];
    }
    return s;
  }

  //! ∫ f over ℝ from lattice values: trapezoid plus inverse-square tails about `center`.
  double integrate(std::span<const double> v, double center = 0.0) const {
    double s = 0.0;
    for (int j = 0; j < size(); ++j) s += weights[j] * v[j];
    return s + v.front() * std::abs(lo() - center) + v.back() * std::abs(hi() - center);
  }
};

}  // namespace levi
