#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "levi/core.hpp"
#include "levi/kernel_spec.hpp"

namespace levi {

//! Problem data for 𝓛 = 𝓛^κ + b·∇ on the line.
//! For simulation, κ(x,z) = σ(x,z) κ̄(z) with κ̄ the driving kernel.
struct ModelSpec {
  int d = 1;
  std::string name = "custom";
  std::function<double(double, double)> kappa;  ///< κ(x, z)
  double kappa0 = 1.0, kappa1 = 1.0, kappa2 = 0.0;
  double beta = 1.0;  ///< Hölder exponent of κ in x
  std::function<double(double)> b = [](double) { return 0.0; };
  double b_sup = 0.0;
  double b_holder = 0.0;  ///< Hölder seminorm [b]_θ
  double theta = 1.0;
  IsotropicKernelSpec<1> noise = IsotropicKernelSpec<1>::constant(1.0);  ///< κ̄
  double sigma_max = 1.0;                                                 ///< sup σ = sup κ/κ̄
  double period = 0.0;  ///< common period of κ(·, z) and b, 0 if none
  std::function<double(double)> kato_h;  ///< h with ∫|σ(x,z) − σ(y,z)|(|z|∧1)ν(dz) ≤ |x−y|(h(x)+h(y)), if declared

  double sigma(double x, double z) const {
    Vec<1> v;
    v[0] = z;
    return kappa(x, z) / noise(v);
  }
  double b_norm() const { return b_sup + b_holder; }

  bool kappa_x_independent() const {
    for (double z : probe_offsets())
      for (double x : probe_points())
        if (kappa(x, z) != kappa(0.0, z)) return false;
    return true;
  }
  bool b_constant() const {
    for (double x : probe_points())
      if (b(x) != b(0.0)) return false;
    return true;
  }

  //! Checks the declared bounds on deterministic probe sets.
  void validate() const {
    require(d == 1, ErrorKind::invalid_spec, "the parametrix is implemented for d = 1");
    require(static_cast<bool>(kappa) && static_cast<bool>(b), ErrorKind::invalid_spec, "kappa and b must be set");
    require(kappa0 > 0 && kappa0 <= kappa1, ErrorKind::invalid_spec, "need 0 < kappa0 <= kappa1");
    require(beta > 0 && beta <= 1, ErrorKind::invalid_spec, "beta must lie in (0, 1]");
    require(theta > 0 && theta <= 1, ErrorKind::invalid_spec, "theta must lie in (0, 1]");
    noise.validate();
    const auto xs = probe_points();
    const auto zs = probe_offsets();
    const double slack = 1e-12;
    for (double x : xs) {
      const double bx = b(x);
      if (std::abs(bx) > b_sup * (1 + slack) + slack)
        fail(ErrorKind::invalid_spec, "|b| exceeds b_sup at x=" + std::to_string(x));
      for (double z : zs) {
        const double k = kappa(x, z);
        if (k < kappa0 * (1 - slack) || k > kappa1 * (1 + slack))
          fail(ErrorKind::invalid_spec, "kappa outside [kappa0, kappa1] at x=" + std::to_string(x));
        if (std::abs(k - kappa(x, -z)) > slack * k)
          fail(ErrorKind::invalid_spec, "kappa not symmetric in z at x=" + std::to_string(x));
        if (sigma(x, z) > sigma_max * (1 + slack))
          fail(ErrorKind::invalid_spec, "sigma exceeds sigma_max at x=" + std::to_string(x));
      }
    }
    require(period >= 0, ErrorKind::invalid_spec, "period must be nonnegative");
    if (period > 0)
      for (double x : xs) {
        if (std::abs(b(x + period) - b(x)) > 1e-9 * (1 + std::abs(b(x))))
          fail(ErrorKind::invalid_spec, "b is not periodic with the declared period");
        for (double z : zs)
          if (std::abs(kappa(x + period, z) - kappa(x, z)) > 1e-9 * kappa(x, z))
            fail(ErrorKind::invalid_spec, "kappa is not periodic with the declared period");
      }
    if (kato_h)
      for (double x : xs)
        if (!(kato_h(x) >= 0)) fail(ErrorKind::invalid_spec, "kato h must be nonnegative");
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (double h : {1e-3, 0.07, 0.5, 1.3, 4.0}) {
        const double x = xs[i], y = xs[i] + h;
        const double db = std::abs(b(x) - b(y));
        if (db > b_holder * std::pow(h, theta) * (1 + 1e-9) + slack)
          fail(ErrorKind::invalid_spec, "b violates its Hoelder bound near x=" + std::to_string(x));
        for (double z : zs) {
          const double dk = std::abs(kappa(x, z) - kappa(y, z));
          if (dk > kappa2 * std::pow(h, beta) * (1 + 1e-9) + slack)
            fail(ErrorKind::invalid_spec, "kappa violates its Hoelder bound near x=" + std::to_string(x));
        }
      }
  }

  //! FNV-1a digest of the name and sampled coefficient values.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* p, std::size_t n) {
      const auto* c = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < n; ++i) h = (h ^ c[i]) * 1099511628211ULL;
    };
    mix(name.data(), name.size());
    for (double x : probe_points()) {
      const double bx = b(x);
      mix(&bx, sizeof bx);
      for (double z : probe_offsets()) {
        const double k = kappa(x, z);
        mix(&k, sizeof k);
      }
    }
    return h;
  }

  static std::vector<double> probe_points() {
    std::vector<double> v;
    for (int i = 0; i < 41; ++i) v.push_back(-10.0 + 0.5 * i + 0.013 * std::sin(3.7 * i));
    return v;
  }
  static std::vector<double> probe_offsets() {
    std::vector<double> v;
    for (int i = 0; i < 25; ++i) v.push_back(std::pow(10.0, -4.0 + 0.25 * i));
    return v;
  }
};

namespace presets {

inline ModelSpec cauchy_constant() {
  ModelSpec m;
  m.name = "cauchy-constant";
  m.kappa = [](double, double) { return 1.0; };
  m.period = 2 * pi;
  m.kato_h = [](double) { return 0.0; };
  return m;
}

//! κ(x,z) = 1 + ½ sin²(x) e^{−|z|}, b(x) = ½ cos x.
inline ModelSpec default_test() {
  ModelSpec m;
  m.name = "default-test";
  m.kappa = [](double x, double z) {
    const double s = std::sin(x);
    return 1.0 + 0.5 * s * s * std::exp(-std::abs(z));
  };
  m.kappa0 = 1.0;
  m.kappa1 = 1.5;
  m.kappa2 = 0.5;
  m.beta = 1.0;
  m.b = [](double x) { return 0.5 * std::cos(x); };
  m.b_sup = 0.5;
  m.b_holder = 1.0;
  m.theta = 1.0;
  m.sigma_max = 1.5;
  m.period = 2 * pi;
  return m;
}

//! σ(x,z) = K(z) + σ̃(x)(|z| ∧ 1)^γ with K ≡ 1, σ̃(x) = ¼(1 + cos x), γ = ½.
inline ModelSpec kato_sigma() {
  ModelSpec m;
  m.name = "kato-sigma";
  m.kappa = [](double x, double z) {
    return 1.0 + 0.25 * (1.0 + std::cos(x)) * std::sqrt(std::min(std::abs(z), 1.0));
  };
  m.kappa0 = 1.0;
  m.kappa1 = 1.5;
  m.kappa2 = 0.25;
  m.beta = 1.0;
  m.b = [](double x) { return 0.25 * std::sin(x); };
  m.b_sup = 0.25;
  m.b_holder = 0.25;
  m.theta = 1.0;
  m.sigma_max = 1.5;
  m.period = 2 * pi;
  // ∫(|z|∧1)^{3/2}|z|^{−2}dz = 6 and |σ̃(x) − σ̃(y)| ≤ ¼|x − y|.
  m.kato_h = [](double) { return 0.75; };
  return m;
}

//! Kato-σ jump kernel with the Hölder drift b(x) = |sin x|^{0.6}.
inline ModelSpec holder_drift() {
  ModelSpec m = kato_sigma();
  m.name = "holder-drift";
  m.b = [](double x) { return std::pow(std::abs(std::sin(x)), 0.6); };
  m.b_sup = 1.0;
  m.b_holder = 1.0;
  m.theta = 0.6;
  return m;
}

inline std::vector<std::string> names() { return {"cauchy-constant", "default-test", "holder-drift", "kato-sigma"}; }

inline ModelSpec by_name(const std::string& n) {
  if (n == "cauchy-constant") return cauchy_constant();
  if (n == "default-test") return default_test();
  if (n == "holder-drift") return holder_drift();
  if (n == "kato-sigma") return kato_sigma();
  fail(ErrorKind::invalid_spec, "unknown preset '" + n + "'");
}

}  // namespace presets
}  // namespace levi
