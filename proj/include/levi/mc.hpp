#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "levi/core.hpp"
#include "levi/nonlocal.hpp"
#include "levi/parametrix.hpp"
#include "levi/quadrature.hpp"
#include "levi/resolvent.hpp"
#include "levi/sde.hpp"

namespace levi {

//! Gaussian kernel density estimate, bandwidth 0.9 min(sd, IQR/1.34) n^{−1/5}; the kernel is cut at 8 bandwidths.
class DensityEstimate {
 public:
  static constexpr int min_samples = 10000;

  explicit DensityEstimate(std::vector<double> samples, double bandwidth = 0.0) : s_(std::move(samples)) {
    const auto n = s_.size();
    if (n < static_cast<std::size_t>(min_samples))
      fail(ErrorKind::too_few_samples,
           "density estimate needs at least " + std::to_string(min_samples) + " paths, got " + std::to_string(n));
    std::sort(s_.begin(), s_.end());
    if (bandwidth <= 0) {
      const double mean = std::accumulate(s_.begin(), s_.end(), 0.0) / n;
      double var = 0.0;
      for (double v : s_) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / (n - 1));
      const double iqr = s_[3 * n / 4] - s_[n / 4];
      bandwidth = 0.9 * std::min(sd, iqr / 1.34) * std::pow(static_cast<double>(n), -0.2);
    }
    h_ = bandwidth;
  }

  double bandwidth() const { return h_; }
  std::size_t size() const { return s_.size(); }
  const std::vector<double>& samples() const { return s_; }

  double operator()(double x) const {
    auto lo = std::lower_bound(s_.begin(), s_.end(), x - cut * h_);
    auto hi = std::upper_bound(s_.begin(), s_.end(), x + cut * h_);
    double acc = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const double u = (x - *it) / h_;
      acc += std::exp(-0.5 * u * u);
    }
    return acc / (s_.size() * h_ * std::sqrt(2 * pi));
  }

  //! Pointwise standard error √(f R(K) / (n h)), R(K) = 1/(2√π).
  double standard_error(double x) const {
    return std::sqrt(std::max((*this)(x), 0.0) / (2 * std::sqrt(pi) * s_.size() * h_));
  }

  double cdf(double x) const {
    return static_cast<double>(std::upper_bound(s_.begin(), s_.end(), x) - s_.begin()) / s_.size();
  }

  //! ∫ estimate, by Gauss–Legendre on the support clusters.
  double mass() const {
    auto rule = gauss_legendre(8, 0.0, 1.0);
    double total = 0.0;
    std::size_t i = 0;
    while (i < s_.size()) {
      const double a = s_[i] - cut * h_;
      double b = s_[i] + cut * h_;
      while (i + 1 < s_.size() && s_[i + 1] - cut * h_ <= b) b = s_[++i] + cut * h_;
      ++i;
      const int panels = static_cast<int>(std::ceil((b - a) / (0.5 * h_)));
      const double w = (b - a) / panels;
      for (int p = 0; p < panels; ++p)
        for (std::size_t g = 0; g < rule.nodes.size(); ++g) total += w * rule.weights[g] * (*this)(a + (p + rule.nodes[g]) * w);
    }
    return total;
  }

 private:
  static constexpr double cut = 8.0;
  std::vector<double> s_;
  double h_ = 0.0;
};

inline DensityEstimate density_estimate(const PathEnsemble& E, double t) { return DensityEstimate(E.samples(E.time_index(t))); }

//! sup |F_n − F| over the sorted samples.
template <class Cdf>
double ks_distance(std::vector<double> samples, Cdf&& F) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = F(samples[i]);
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  return d;
}

struct DensityComparison {
  double l1 = 0.0;
  double ks = 0.0;
};

//! L¹ and Kolmogorov–Smirnov distances between the Monte Carlo law at t and the row p(t, x0, ·).
inline DensityComparison compare_density(const PathEnsemble& E, const KernelTable& T, double t) {
  if (E.model_hash != T.model_hash) fail(ErrorKind::model_mismatch, "ensemble and kernel table use different models");
  const int k = T.time.index_of(t);
  require(k >= 1, ErrorKind::domain, "t is not a node of the kernel table");
  const auto& L = T.lattice;
  const int i = L.nearest(E.x0);
  require(std::abs(L.nodes[i] - E.x0) < 1e-12, ErrorKind::domain, "x0 must be a lattice node");
  DensityEstimate f(E.samples(E.time_index(t)));
  const int n = L.size();
  std::vector<double> diff(n);
  for (int j = 0; j < n; ++j) diff[j] = std::abs(f(L.nodes[j]) - T.p[k](i, j));
  DensityComparison c;
  for (int j = 0; j < n; ++j) c.l1 += L.weights[j] * diff[j];
  // Mass beyond the lattice on either side.
  const double mc_out = f.cdf(L.lo()) + 1.0 - f.cdf(L.hi());
  const double kernel_out = T.p[k](i, 0) * std::abs(L.lo() - E.x0) + T.p[k](i, n - 1) * std::abs(L.hi() - E.x0);
  c.l1 += mc_out + kernel_out;
  double P = T.p[k](i, 0) * std::abs(L.lo() - E.x0);
  c.ks = std::abs(f.cdf(L.nodes[0]) - P);
  for (int j = 1; j < n; ++j) {
    P += 0.5 * (L.nodes[j] - L.nodes[j - 1]) * (T.p[k](i, j - 1) + T.p[k](i, j));
    c.ks = std::max(c.ks, std::abs(f.cdf(L.nodes[j]) - P));
  }
  return c;
}

//! Kato-class function with optional singular points, used as quadrature breakpoints.
struct KatoFunction {
  std::function<double(double)> h;
  enum class Class { bounded, lp, explicit_k1 } declared = Class::bounded;
  std::vector<double> singular;
};

struct KatoNorm {
  double value = 0.0;
  double error = 0.0;
  bool finite = true;
  double argmax = 0.0;
};

//! sup_x ∫ |h(x − y)| min(1, T²/y²) dy over the probe points (d = 1).
inline KatoNorm kato_norm(const KatoFunction& f, double T, std::span<const double> probes) {
  require(T > 0, ErrorKind::domain, "Kato norm needs T > 0");
  KatoNorm out;
  for (double x : probes) {
    // Singularities of y ↦ h(x − y) sit at y = x − s.
    std::vector<double> sing;
    for (double s : f.singular) sing.push_back(x - s);
    auto integral = [&](double delta) {
      auto g = [&](double y) {
        for (double s : sing)
          if (std::abs(y - s) < delta) return 0.0;
        const double w = std::abs(y) <= T ? 1.0 : T * T / (y * y);
        return std::abs(f.h(x - y)) * w;
      };
      std::vector<double> br{-T, 0.0, T};
      for (double s : sing) {
        br.push_back(s - delta);
        br.push_back(s + delta);
        br.push_back(s - 1.0);
        br.push_back(s + 1.0);
      }
      double far = 8 * T;
      for (double s : sing) far = std::max(far, std::abs(s) + 2.0);
      auto mid = integrate_panels(g, -far, far, br, 1e-12, 20, 1e-15);
      // |y| > far in v = 1/y.
      auto tail = integrate_adaptive(
          [&](double v) { return v <= 0 ? 0.0 : (g(1.0 / v) + g(-1.0 / v)) / (v * v); }, 0.0, 1.0 / far, 1e-12);
      return mid.value + tail.value;
    };
    double v;
    double err = 0.0;
    if (sing.empty()) {
      v = integral(0.0);
    } else {
      const double i1 = integral(1e-3), i2 = integral(1e-6), i3 = integral(1e-9);
      const double d1 = i2 - i1, d2 = i3 - i2;
      if (d2 > 0.5 * d1 && d2 > 1e-12 * std::abs(i3)) {
        out.finite = false;
        out.value = std::numeric_limits<double>::infinity();
        out.argmax = x;
        return out;
      }
      const double rho = d1 > 0 ? d2 / d1 : 0.0;
      err = rho < 1 ? std::abs(d2) * rho / (1 - rho) : std::abs(d2);
      v = i3 + err;
    }
    if (v > out.value) {
      out.value = v;
      out.error = err;
      out.argmax = x;
    }
  }
  return out;
}

struct MonteCarloMean {
  double mean = 0.0;
  double standard_error = 0.0;
};

//! E ∫₀^T f(X_s) ds by the trapezoid rule on the record mesh.
template <class F>
MonteCarloMean krylov_functional(const PathEnsemble& E, F&& f, double T) {
  const int K = E.time_index(T);
  const int n = E.count();
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 1; k <= K; ++k)
      s += 0.5 * (E.times[k] - E.times[k - 1]) * (f(E.paths(i, k - 1)) + f(E.paths(i, k)));
    v[i] = s;
  }
  MonteCarloMean m;
  m.mean = pairwise_sum(v) / n;
  double var = 0.0;
  for (double a : v) var += (a - m.mean) * (a - m.mean);
  m.standard_error = std::sqrt(var / (n - 1) / n);
  return m;
}

//! ∫₀^T 𝒯_s f(x0) ds from the kernel table, trapezoid in s with 𝒯_0 f = f.
template <class F>
double kernel_krylov(const KernelTable& T, double x0, F&& f, double horizon) {
  const int K = T.time.index_of(horizon);
  require(K >= 1, ErrorKind::domain, "horizon is not a node of the kernel table");
  const int i = T.lattice.nearest(x0);
  require(std::abs(T.lattice.nodes[i] - x0) < 1e-12, ErrorKind::domain, "x0 must be a lattice node");
  Eigen::VectorXd fv(T.lattice.size());
  for (int j = 0; j < fv.size(); ++j) fv[j] = f(T.lattice.nodes[j]);
  double prev = f(x0), s = 0.0;
  for (int k = 1; k <= K; ++k) {
    const double cur = semigroup_apply(T, k, fv)[i];
    s += 0.5 * T.time.dt * (prev + cur);
    prev = cur;
  }
  return s;
}

struct GeneratorCheck {
  double estimate = 0.0;
  double standard_error = 0.0;
  double exact = 0.0;  ///< 𝓛f(x0)
  double z_score() const { return std::abs(estimate - exact) / standard_error; }
};

//! Per-path least squares f(X_t) − f(x0) ≈ a t + c t² over the record times; a estimates 𝓛f(x0).
inline GeneratorCheck generator_check(const ModelSpec& m, const EnsembleConfig& c, std::function<double(double)> f,
                                      std::function<double(double)> df) {
  auto E = simulate_ensemble(m, c);
  const int K = static_cast<int>(E.times.size()) - 1;
  require(K >= 2, ErrorKind::invalid_spec, "generator check needs at least two record times");
  Eigen::MatrixXd A(K, 2);
  for (int k = 1; k <= K; ++k) {
    A(k - 1, 0) = E.times[k];
    A(k - 1, 1) = E.times[k] * E.times[k];
  }
  const Eigen::RowVectorXd w = (A.transpose() * A).ldlt().solve(A.transpose()).row(0);
  const double f0 = f(c.x0);
  std::vector<double> a(E.count());
  for (int i = 0; i < E.count(); ++i) {
    double s = 0.0;
    for (int k = 1; k <= K; ++k) s += w[k - 1] * (f(E.paths(i, k)) - f0);
    a[i] = s;
  }
  GeneratorCheck g;
  g.estimate = pairwise_sum(a) / a.size();
  double var = 0.0;
  for (double v : a) var += (v - g.estimate) * (v - g.estimate);
  g.standard_error = std::sqrt(var / (a.size() - 1) / a.size());
  Vec<1> xv;
  xv[0] = c.x0;
  auto fv = [&](const Vec<1>& y) { return f(y[0]); };
  auto kap = [&](const Vec<1>& z) { return m.kappa(c.x0, z[0]); };
  g.exact = apply_nonlocal<1>(fv, xv, kap).value + m.b(c.x0) * df(c.x0);
  return g;
}

struct UniquenessReport {
  std::vector<double> dts;
  std::vector<double> errors;  ///< E sup_t |X^{Δt_i} − X^{Δt_{i+1}}| on the coarsest mesh
  std::vector<double> standard_errors;
  bool strictly_decreasing() const {
    for (std::size_t i = 1; i < errors.size(); ++i)
      if (!(errors[i] < errors[i - 1])) return false;
    return true;
  }
};

//! Shared-noise solutions at successive drift meshes.
inline UniquenessReport pathwise_uniqueness_experiment(const Dynamics& dyn, const LevyNoiseSpec& spec, double x0,
                                                       double T, std::vector<double> dts, int paths,
                                                       std::uint64_t seed,
                                                       DriftScheme scheme = DriftScheme::frozen) {
  require(dts.size() >= 2, ErrorKind::invalid_spec, "need at least two resolutions");
  UniquenessReport rep;
  rep.dts = dts;
  const std::size_t R = dts.size();
  Eigen::MatrixXd gaps(paths, R - 1);
  parallel_for(paths, [&](int i) {
    auto noise = sample_noise(spec, T, path_seed(seed, i));
    std::vector<Trajectory> tr;
    for (double dt : dts) tr.push_back(simulate_path(x0, dyn, noise, dt, dts.front(), scheme));
    for (std::size_t r = 0; r + 1 < R; ++r) {
      double g = 0.0;
      for (std::size_t k = 0; k < tr[r].x.size(); ++k) g = std::max(g, std::abs(tr[r].x[k] - tr[r + 1].x[k]));
      gaps(i, r) = g;
    }
  });
  for (std::size_t r = 0; r + 1 < R; ++r) {
    const double mean = gaps.col(r).mean();
    const double var = (gaps.col(r).array() - mean).square().sum() / std::max(paths - 1, 1);
    rep.errors.push_back(mean);
    rep.standard_errors.push_back(std::sqrt(var / paths));
  }
  return rep;
}

//! Dynamics of Y = Φ(X) with uncompensated jumps g̃ and thinning σ̃.
inline Dynamics transformed_dynamics(const TransformedCoefficients& c) {
  auto cc = std::make_shared<TransformedCoefficients>(c);
  return {[cc](double y) { return cc->raw_drift(y); }, [cc](double y, double z) { return y + cc->g(y, z); },
          [cc](double y, double z) { return cc->sigma(y, z); }};
}

struct CoupledRun {
  double distance = 0.0;  ///< E sup_t |Φ(X_t) − Y_t|
  double baseline = 0.0;  ///< E sup_t |X^{Δt} − X^{Δt/2}|
  double distance_error = 0.0, baseline_error = 0.0;
  double ratio() const { return baseline > 0 ? distance / baseline : (distance == 0 ? 0.0 : INFINITY); }
};

inline CoupledRun zvonkin_coupled_run(const ModelSpec& m, const TransformedCoefficients& c, double epsilon, double x0,
                                      double T, double dt, double record_dt, int paths, std::uint64_t seed,
                                      DriftScheme scheme = DriftScheme::frozen) {
  const auto spec = LevyNoiseSpec::for_model(m, epsilon);
  const auto dx = model_dynamics(m);
  const auto dy = transformed_dynamics(c);
  const auto& map = c.map();
  std::vector<double> dist(paths), base(paths);
  parallel_for(paths, [&](int i) {
    auto noise = sample_noise(spec, T, path_seed(seed, i));
    auto X = simulate_path(x0, dx, noise, dt, record_dt, scheme);
    auto X2 = simulate_path(x0, dx, noise, 0.5 * dt, record_dt, scheme);
    auto Y = simulate_path(map(x0), dy, noise, dt, record_dt, scheme);
    double d = 0.0, b = 0.0;
    for (std::size_t k = 0; k < X.x.size(); ++k) {
      d = std::max(d, std::abs(map(X.x[k]) - Y.x[k]));
      b = std::max(b, std::abs(X.x[k] - X2.x[k]));
    }
    dist[i] = d;
    base[i] = b;
  });
  auto stats = [&](const std::vector<double>& v, double& mean, double& se) {
    mean = pairwise_sum(v) / v.size();
    double var = 0.0;
    for (double a : v) var += (a - mean) * (a - mean);
    se = std::sqrt(var / std::max<std::size_t>(v.size() - 1, 1) / v.size());
  };
  CoupledRun r;
  stats(dist, r.distance, r.distance_error);
  stats(base, r.baseline, r.baseline_error);
  return r;
}

}  // namespace levi
