#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "levi/core.hpp"
#include "levi/kernel_spec.hpp"
#include "levi/model.hpp"
#include "levi/quadrature.hpp"

namespace levi {

//! Seed mixing (SplitMix64) for independent per-path streams.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t path_seed(std::uint64_t base, std::uint64_t path) { return mix_seed(mix_seed(base) ^ path); }

//! Uniform on [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

//! Poisson random measure with mean ν(dz) dr ds on {|z| ≥ ε} × [0, σ_max] × [0, ∞), ν(dz) = κ̄(z)|z|^{−2}dz.
struct LevyNoiseSpec {
  IsotropicKernelSpec<1> kappa_bar = IsotropicKernelSpec<1>::constant(1.0);
  double epsilon = 1e-3;
  double sigma_max = 1.0;
  double nu_mid = 0.0;       ///< ν(ε ≤ |z| ≤ 1)
  double nu_big = 0.0;       ///< ν(|z| > 1)
  double compensator = 0.0;  ///< ∫_{ε≤|z|≤1} z ν(dz)
  double small_variance = 0.0;  ///< ∫_{|z|<ε} z² ν(dz) σ_max

  double lambda_mid() const { return nu_mid * sigma_max; }
  double lambda_big() const { return nu_big * sigma_max; }
  double truncation_budget(double T) const { return small_variance * T; }

  static LevyNoiseSpec make(IsotropicKernelSpec<1> kbar, double epsilon, double sigma_max) {
    require(epsilon > 0 && epsilon < 1, ErrorKind::invalid_spec, "small-jump floor must lie in (0, 1)");
    require(sigma_max > 0, ErrorKind::invalid_spec, "sigma_max must be positive");
    kbar.validate();
    LevyNoiseSpec s;
    s.kappa_bar = std::move(kbar);
    s.epsilon = epsilon;
    s.sigma_max = sigma_max;
    auto k = [&](double z) {
      Vec<1> v;
      v[0] = z;
      return s.kappa_bar(v);
    };
    // Band [ε, 1] in u = log|z|; tail in v = 1/|z|.
    s.nu_mid = integrate_adaptive([&](double u) { return (k(std::exp(u)) + k(-std::exp(u))) * std::exp(-u); },
                                  std::log(epsilon), 0.0, 1e-12)
                   .value;
    s.nu_big = integrate_adaptive([&](double v) { return v <= 0 ? 0.0 : k(1.0 / v) + k(-1.0 / v); }, 0.0, 1.0, 1e-12)
                   .value;
    s.compensator =
        integrate_adaptive([&](double u) { return k(std::exp(u)) - k(-std::exp(u)); }, std::log(epsilon), 0.0, 1e-12)
            .value;
    s.small_variance =
        sigma_max * integrate_adaptive([&](double z) { return k(z) + k(-z); }, 0.0, epsilon, 1e-12).value;
    require(std::abs(s.compensator) <= 1e-12 * s.nu_mid, ErrorKind::invalid_spec,
            "mid-band compensator is nonzero; only symmetric noise is supported");
    return s;
  }

  static LevyNoiseSpec for_model(const ModelSpec& m, double epsilon = 1e-3) {
    return make(m.noise, epsilon, m.sigma_max);
  }
};

//! Marks with |z| ≥ ε in time order; the same realization drives every coupled solution.
struct NoiseRealization {
  std::uint64_t seed = 0;
  double horizon = 0.0;
  std::vector<double> t, z, r;
  std::size_t size() const { return t.size(); }
};

//! Candidates from κ̄_max|z|^{−2}dz by radial inverse CDF, kept with probability κ̄(z)/κ̄_max.
inline NoiseRealization sample_noise(const LevyNoiseSpec& spec, double T, std::uint64_t seed) {
  require(T >= 0, ErrorKind::domain, "negative horizon");
  NoiseRealization n;
  n.seed = seed;
  n.horizon = T;
  if (T == 0) return n;
  std::mt19937_64 g(mix_seed(seed));
  const double kmax = spec.kappa_bar.upper;
  const double inv_eps = 1.0 / spec.epsilon;
  const double mid = 2.0 * (inv_eps - 1.0), big = 2.0;
  const double rate = kmax * (mid + big) * spec.sigma_max;
  const bool flat = spec.kappa_bar.lower == spec.kappa_bar.upper;
  double t = 0.0;
  n.t.reserve(static_cast<std::size_t>(rate * T * 1.1) + 16);
  for (;;) {
    t += -std::log1p(-uniform01(g)) / rate;
    if (t > T) break;
    const double band = uniform01(g) * (mid + big);
    double a;
    if (band < mid)
      a = 1.0 / (inv_eps - uniform01(g) * (inv_eps - 1.0));
    else
      a = 1.0 / (1.0 - uniform01(g));
    const double z = uniform01(g) < 0.5 ? -a : a;
    const double keep = uniform01(g);
    const double r = uniform01(g) * spec.sigma_max;
    if (!flat) {
      Vec<1> v;
      v[0] = z;
      if (keep * kmax > spec.kappa_bar(v)) continue;
    }
    n.t.push_back(t);
    n.z.push_back(z);
    n.r.push_back(r);
  }
  return n;
}

//! dX = drift(X) dt + Σ jump(X_{s−}, z) 1{r ≤ intensity(X_{s−}, z)}; all jumps uncompensated (symmetric ν).
struct Dynamics {
  std::function<double(double)> drift;
  std::function<double(double, double)> jump;       ///< post-jump state
  std::function<double(double, double)> intensity;  ///< σ(x, z)
};

inline Dynamics model_dynamics(const ModelSpec& m) {
  return {m.b, [](double x, double z) { return x + z; }, [m](double x, double z) { return m.sigma(x, z); }};
}

struct Trajectory {
  std::vector<double> t, x;
  long accepted = 0;
};

//! split: drift re-evaluated after every event. frozen: drift held at its value on the last mesh node kΔt, so the
//! drift mesh is exactly Δt whatever the event density.
enum class DriftScheme { split, frozen };

//! Euler drift on the mesh kΔt with jumps at their event times; states recorded at k·record_dt.
inline Trajectory simulate_path(double x0, const Dynamics& dyn, const NoiseRealization& noise, double dt,
                                double record_dt, DriftScheme scheme = DriftScheme::split) {
  require(dt > 0 && record_dt > 0, ErrorKind::invalid_spec, "mesh steps must be positive");
  const double T = noise.horizon;
  Trajectory tr;
  const long records = static_cast<long>(std::floor(T / record_dt + 1e-9));
  tr.t.reserve(records + 1);
  tr.x.reserve(records + 1);
  tr.t.push_back(0.0);
  tr.x.push_back(x0);
  double t = 0.0, x = x0;
  long step = 0, rec = 1;
  std::size_t e = 0;
  double drift = dyn.drift(x0);
  while (rec <= records || e < noise.size()) {
    const double grid = (step + 1) * dt;
    const double next_rec = rec <= records ? rec * record_dt : INFINITY;
    const double next_ev = e < noise.size() ? noise.t[e] : INFINITY;
    const double tn = std::min({grid, next_rec, next_ev});
    if (!(tn <= T + 1e-12)) break;
    if (scheme == DriftScheme::split) drift = dyn.drift(x);
    x += drift * (tn - t);
    t = tn;
    if (tn == grid) ++step;
    if (tn == next_ev) {
      if (noise.r[e] <= dyn.intensity(x, noise.z[e])) {
        x = dyn.jump(x, noise.z[e]);
        ++tr.accepted;
      }
      ++e;
    }
    if (tn == grid && scheme == DriftScheme::frozen) drift = dyn.drift(x);
    if (tn == next_rec) {
      tr.t.push_back(t);
      tr.x.push_back(x);
      ++rec;
    }
  }
  return tr;
}

inline Trajectory simulate_path(double x0, const ModelSpec& m, const NoiseRealization& noise, double dt,
                                double record_dt) {
  return simulate_path(x0, model_dynamics(m), noise, dt, record_dt);
}

//! Independent paths from x0; row i is path i on the record mesh.
struct PathEnsemble {
  std::vector<double> times;
  Eigen::MatrixXd paths;
  std::uint64_t seed = 0;
  std::uint64_t model_hash = 0;
  double dt = 0.0, epsilon = 0.0, x0 = 0.0;
  long accepted = 0;

  int count() const { return static_cast<int>(paths.rows()); }
  int time_index(double t) const {
    for (std::size_t k = 0; k < times.size(); ++k)
      if (std::abs(times[k] - t) < 1e-9) return static_cast<int>(k);
    fail(ErrorKind::domain, "time is not on the record mesh");
  }
  std::vector<double> samples(int k) const {
    std::vector<double> v(paths.rows());
    for (int i = 0; i < paths.rows(); ++i) v[i] = paths(i, k);
    return v;
  }
};

struct EnsembleConfig {
  double x0 = 0.0;
  double horizon = 1.0;
  double dt = 1.0 / 1024;
  double record_dt = 1.0 / 64;
  int paths = 10000;
  std::uint64_t seed = 1;
  double epsilon = 1e-3;
};

inline PathEnsemble simulate_ensemble(const ModelSpec& m, const EnsembleConfig& c) {
  const auto spec = LevyNoiseSpec::for_model(m, c.epsilon);
  const auto dyn = model_dynamics(m);
  PathEnsemble E;
  E.seed = c.seed;
  E.model_hash = m.hash();
  E.dt = c.dt;
  E.epsilon = c.epsilon;
  E.x0 = c.x0;
  const long records = static_cast<long>(std::floor(c.horizon / c.record_dt + 1e-9));
  for (long k = 0; k <= records; ++k) E.times.push_back(k * c.record_dt);
  E.paths.resize(c.paths, records + 1);
  std::vector<long> acc(c.paths);
  parallel_for(c.paths, [&](int i) {
    auto noise = sample_noise(spec, c.horizon, path_seed(c.seed, i));
    auto tr = simulate_path(c.x0, dyn, noise, c.dt, c.record_dt);
    for (long k = 0; k <= records; ++k) E.paths(i, k) = tr.x[k];
    acc[i] = tr.accepted;
  });
  for (long a : acc) E.accepted += a;
  return E;
}

}  // namespace levi
