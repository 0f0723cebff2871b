#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <fftw3.h>

#include "levi/core.hpp"
#include "levi/kernel_spec.hpp"
#include "levi/nonlocal.hpp"

namespace levi {

//! Poisson kernel ρ(t, x) on ℝ^d, given |x|.
inline double poisson_kernel(double t, double r, int d) {
  require(t > 0.0, ErrorKind::domain, "poisson_kernel needs t > 0");
  require(d == 1 || d == 2, ErrorKind::domain, "poisson_kernel supports d = 1, 2");
  const double h = 0.5 * (d + 1);
  return std::tgamma(h) * std::pow(pi, -h) * t * std::pow(r * r + t * t, -h);
}

template <int D>
double poisson_kernel(double t, const Vec<D>& x) {
  return poisson_kernel(t, x.norm(), D);
}

//! ψ(ξ)/ξ on a log-spaced grid for a one-dimensional symmetric kernel.
class SymbolProfile {
 public:
  static constexpr double lo = 1e-5;
  static constexpr double hi = 1e9;
  static constexpr int per_decade = 48;

  SymbolProfile() = default;

  template <class Psi>
  static SymbolProfile tabulate(Psi&& psi) {
    SymbolProfile p;
    const int n = static_cast<int>(std::lround(std::log10(hi / lo) * per_decade)) + 1;
    p.ratio_.resize(n);
    for (int i = 0; i < n; ++i) {
      const double xi = lo * std::pow(10.0, static_cast<double>(i) / per_decade);
      p.ratio_[i] = psi(xi) / xi;
    }
    p.build();
    return p;
  }

  static SymbolProfile from_spec(const IsotropicKernelSpec<1>& spec) {
    spec.validate();
    return tabulate([&](double xi) {
      Vec<1> v;
      v[0] = xi;
      return levy_symbol<1>(v, spec);
    });
  }

  //! ψ(ξ) = slope·|ξ|.
  static SymbolProfile linear(double slope) {
    return tabulate([slope](double xi) { return slope * xi; });
  }

  static SymbolProfile combine(std::span<const SymbolProfile* const> parts, std::span<const double> weights) {
    require(parts.size() == weights.size() && !parts.empty(), ErrorKind::invalid_spec, "combine: size mismatch");
    SymbolProfile p;
    p.ratio_.assign(parts[0]->ratio_.size(), 0.0);
    for (std::size_t m = 0; m < parts.size(); ++m)
      for (std::size_t i = 0; i < p.ratio_.size(); ++i) p.ratio_[i] += weights[m] * parts[m]->ratio_[i];
    p.build();
    return p;
  }

  double ratio(double xi) const {
    xi = std::abs(xi);
    if (xi <= lo) return slope_at_zero() + (ratio_[0] - slope_at_zero()) * (xi / lo);
    if (xi >= hi) return ratio_.back();
    return (*spline_)(std::log10(xi / lo));
  }

  double operator()(double xi) const { return std::abs(xi) * ratio(xi); }

  //! lim_{ξ→0} ψ(ξ)/ξ, extrapolated linearly from the two smallest nodes.
  double slope_at_zero() const {
    const double r = std::pow(10.0, 1.0 / per_decade);
    return (r * ratio_[0] - ratio_[1]) / (r - 1.0);
  }
  double slope_at_infinity() const { return ratio_.back(); }

  //! Smallest ξ with ψ(ξ) ≥ level (bisection in log ξ; ψ is assumed eventually increasing).
  double level_crossing(double level) const {
    double a = lo, b = lo;
    while ((*this)(b) < level) {
      a = b;
      b *= 2.0;
      require(b < 1e15, ErrorKind::grid_too_coarse, "symbol does not reach the requested level");
    }
    for (int it = 0; it < 80 && b / a > 1.0 + 1e-12; ++it) {
      const double m = std::sqrt(a * b);
      ((*this)(m) < level ? a : b) = m;
    }
    return b;
  }

 private:
  void build() {
    spline_ = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
        ratio_.begin(), ratio_.end(), 0.0, 1.0 / per_decade);
  }
  std::vector<double> ratio_;
  std::shared_ptr<const boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
};

//! Uniform frequency lattice ξ_k = kΞ/M on [0, Ξ]; the dual lattice has spacing π/Ξ and covers [0, R].
struct FourierGrid {
  double cutoff = 0.0;  ///< Ξ
  int nodes = 0;        ///< M, even
  double extent = 0.0;  ///< R, usable spatial half-width

  double frequency_step() const { return cutoff / nodes; }
  double spatial_step() const { return pi / cutoff; }

  //! Grid for the given cutoff and usable extent; the period is at least four times the extent.
  static FourierGrid make(double cutoff, double extent) {
    require(cutoff > 0.0 && extent > 0.0, ErrorKind::invalid_spec, "FourierGrid needs positive cutoff and extent");
    FourierGrid g;
    g.cutoff = cutoff;
    g.extent = extent;
    g.nodes = nice_size(static_cast<long>(std::ceil(2.0 * extent * cutoff / pi)));
    return g;
  }

  //! Cutoff with exp(−tψ(Ξ)) below 1e−12, widened by the oversampling factor.
  static FourierGrid for_time(const SymbolProfile& psi, double t, double extent = 32.0, double oversample = 4.0) {
    require(t > 0.0, ErrorKind::domain, "FourierGrid::for_time needs t > 0");
    const double xi0 = psi.level_crossing(-std::log(1e-12) / t);
    return make(oversample * xi0, extent);
  }

  void validate() const {
    require(nodes > 0 && nodes % 2 == 0, ErrorKind::invalid_spec, "FourierGrid: M must be positive and even");
    require(nodes * spatial_step() >= 2.0 * extent * (1 - 1e-12), ErrorKind::grid_too_coarse,
            "FourierGrid: period too short for the requested extent");
  }

  static int nice_size(long n) {
    n = std::max<long>(n, 16);
    for (long m = n + (n % 2);; m += 2) {
      long r = m;
      for (long p : {2, 3, 5}) while (r % p == 0) r /= p;
      if (r == 1) return static_cast<int>(m);
    }
  }
};

namespace detail {

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_real(std::max<std::size_t>(n, 1))) {}
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* data;
};

inline fftw_plan r2r_plan(int n, fftw_r2r_kind kind) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, fftw_plan> plans;
  std::lock_guard lock(mu);
  auto key = std::make_pair(n, static_cast<int>(kind));
  if (auto it = plans.find(key); it != plans.end()) return it->second;
  FftwBuffer in(n), out(n);
  fftw_plan p = fftw_plan_r2r_1d(n, in.data, out.data, kind, FFTW_ESTIMATE);
  require(p != nullptr, ErrorKind::dependency, "FFTW plan creation failed");
  plans.emplace(key, p);
  return p;
}

}  // namespace detail

enum class SliceKind { density, gradient, generator };

//! Closed-form inverse of the Cauchy-type reference spectrum subtracted before the transform.
struct CauchyReference {
  SliceKind kind = SliceKind::density;
  double scale = 1.0;      ///< c
  double amplitude = 1.0;  ///< A

  double operator()(double w) const {
    const double c = scale, q = c * c + w * w;
    switch (kind) {
      case SliceKind::density: return amplitude * c / (pi * q);
      case SliceKind::gradient: return -amplitude * 2.0 * c * w / (pi * q * q);
      case SliceKind::generator: return amplitude * (w * w - c * c) / (pi * q * q);
    }
    return 0.0;
  }
  //! Spectrum of the reference: e^{−cξ}, ξ e^{−cξ} or −ξ e^{−cξ}, times A.
  double spectrum(double xi) const {
    const double e = std::exp(-scale * xi);
    switch (kind) {
      case SliceKind::density: return amplitude * e;
      case SliceKind::gradient: return amplitude * xi * e;
      case SliceKind::generator: return -amplitude * xi * e;
    }
    return 0.0;
  }
};

//! A kernel slice w ↦ f(w) on ℝ: tabulated residual plus analytic reference.
//! Even kinds use f(w) = (1/π)∫₀^Ξ m(ξ) cos(ξw) dξ; the gradient kind uses f(w) = −(1/π)∫₀^Ξ m(ξ) sin(ξw) dξ.
class SpectralSlice {
 public:
  SpectralSlice() = default;

  //! `spectrum` holds m(ξ_k) for k = 0..M on the grid; the reference spectrum is subtracted here.
  SpectralSlice(const FourierGrid& grid, std::span<const double> spectrum, CauchyReference ref)
      : ref_(ref), odd_(ref.kind == SliceKind::gradient), step_(grid.spatial_step()) {
    grid.validate();
    const int M = grid.nodes;
    require(static_cast<int>(spectrum.size()) == M + 1, ErrorKind::invalid_spec, "spectrum size must be M+1");
    const double dxi = grid.frequency_step();
    const int keep = std::min(M, static_cast<int>(std::ceil(grid.extent / step_)) + 4);
    table_.assign(keep + 1, 0.0);
    if (!odd_) {
      detail::FftwBuffer in(M + 1), out(M + 1);
      for (int k = 0; k <= M; ++k) in.data[k] = spectrum[k] - ref.spectrum(k * dxi);
      fftw_execute_r2r(detail::r2r_plan(M + 1, FFTW_REDFT00), in.data, out.data);
      for (int m = 0; m <= keep; ++m) table_[m] = dxi / (2.0 * pi) * out.data[m];
      residual_edge_ = std::abs(spectrum[M]) + std::abs(ref.spectrum(grid.cutoff));
    } else {
      detail::FftwBuffer in(M - 1), out(M - 1);
      for (int k = 1; k < M; ++k) in.data[k - 1] = spectrum[k] - ref.spectrum(k * dxi);
      fftw_execute_r2r(detail::r2r_plan(M - 1, FFTW_RODFT00), in.data, out.data);
      for (int m = 1; m <= keep; ++m) table_[m] = -dxi / (2.0 * pi) * out.data[m - 1];
      residual_edge_ = std::abs(spectrum[M]) + std::abs(ref.spectrum(grid.cutoff));
    }
    extent_ = (keep - 3) * step_;
  }

  double operator()(double w) const { return ref_(w) + residual(w); }

  //! Tabulated residual; zero beyond the table.
  double residual(double w) const {
    const double sign = (odd_ && w < 0.0) ? -1.0 : 1.0;
    const double a = std::abs(w);
    if (a >= extent_) return 0.0;
    const double u = a / step_;
    const int i = static_cast<int>(u);
    const double f = u - i;
    auto at = [&](int m) { return m >= 0 ? table_[m] : (odd_ ? -table_[-m] : table_[-m]); };
    // Six-point Lagrange on nodes i−2..i+3.
    double v = 0.0;
    for (int j = -2; j <= 3; ++j) {
      double l = 1.0;
      for (int k = -2; k <= 3; ++k)
        if (k != j) l *= (f - k) / (j - k);
      v += l * at(i + j);
    }
    return sign * v;
  }

  //! ∫_{−R}^{R} of the residual (trapezoid); vanishes for an exact density inversion.
  double residual_mass() const {
    const int n = static_cast<int>(extent_ / step_);
    double s = 0.5 * table_[0];
    for (int m = 1; m <= n; ++m) s += table_[m];
    return 2.0 * step_ * s;
  }

  double table_extent() const { return extent_; }
  double step() const { return step_; }
  double spectrum_edge() const { return residual_edge_; }
  const CauchyReference& reference() const { return ref_; }

 private:
  CauchyReference ref_;
  bool odd_ = false;
  double step_ = 1.0;
  double extent_ = 0.0;
  double residual_edge_ = 0.0;
  std::vector<double> table_;
};

//! Heat kernel Z(t, ·) of a one-dimensional symbol as a slice.
inline SpectralSlice density_slice(const SymbolProfile& psi, double t, const FourierGrid& grid) {
  require(t > 0.0, ErrorKind::domain, "density_slice needs t > 0");
  std::vector<double> m(grid.nodes + 1);
  const double dxi = grid.frequency_step();
  for (int k = 0; k <= grid.nodes; ++k) m[k] = std::exp(-t * psi(k * dxi));
  return SpectralSlice(grid, m, {SliceKind::density, psi.slope_at_zero() * t, 1.0});
}

//! ∂_w Z(t, w) as a slice.
inline SpectralSlice gradient_slice(const SymbolProfile& psi, double t, const FourierGrid& grid) {
  require(t > 0.0, ErrorKind::domain, "gradient_slice needs t > 0");
  std::vector<double> m(grid.nodes + 1);
  const double dxi = grid.frequency_step();
  for (int k = 0; k <= grid.nodes; ++k) m[k] = k * dxi * std::exp(-t * psi(k * dxi));
  return SpectralSlice(grid, m, {SliceKind::gradient, psi.slope_at_zero() * t, 1.0});
}

//! Mass defect of a density slice: the reference carries the full mass, so the residual must integrate to zero.
inline double normalization_error(const SpectralSlice& z) {
  return std::abs(z.residual_mass() + z.reference().amplitude - 1.0) + z.spectrum_edge();
}

//! One-dimensional heat kernel Z^κ̄ with the symbol profile cached.
class StableKernel1D {
 public:
  explicit StableKernel1D(SymbolProfile psi, double extent = 32.0, double oversample = 4.0)
      : psi_(std::move(psi)), extent_(extent), oversample_(oversample) {}
  explicit StableKernel1D(const IsotropicKernelSpec<1>& spec, double extent = 32.0, double oversample = 4.0)
      : StableKernel1D(SymbolProfile::from_spec(spec), extent, oversample) {}

  const SymbolProfile& symbol() const { return psi_; }

  FourierGrid grid_for(double t) const { return FourierGrid::for_time(psi_, t, extent_, oversample_); }

  SpectralSlice slice(double t, const FourierGrid& grid, double tol = 1e-4) const {
    auto z = density_slice(psi_, t, grid);
    const double err = normalization_error(z);
    if (err > tol) fail(ErrorKind::grid_too_coarse, "inversion normalization error " + std::to_string(err));
    return z;
  }
  SpectralSlice slice(double t) const { return slice(t, grid_for(t)); }

  double operator()(double t, double x) const { return slice(t)(x); }

 private:
  SymbolProfile psi_;
  double extent_;
  double oversample_;
};

namespace detail {

//! Direction profile Ψ(θ) = ψ(e_θ) for an angle-only planar kernel, on a periodic grid.
class AngularSymbol {
 public:
  explicit AngularSymbol(const IsotropicKernelSpec<2>& spec, int n = 256) : values_(n) {
    for (int k = 0; k < n; ++k) {
      const double th = 2.0 * pi * k / n;
      values_[k] = levy_symbol<2>(Vec<2>(std::cos(th), std::sin(th)), spec);
    }
  }
  int size() const { return static_cast<int>(values_.size()); }
  double node(int k) const { return values_[k]; }

 private:
  std::vector<double> values_;
};

}  // namespace detail

//! Planar heat kernel for an angle-only κ̄; the radial frequency integral is done in closed form,
//! Z = (2π)^{−2} ∫ Re[(tΨ(θ) − i x·e_θ)^{−2}] dθ, leaving a periodic trapezoid in θ.
class StableKernel2D {
 public:
  explicit StableKernel2D(const IsotropicKernelSpec<2>& spec, int angular_nodes = 512)
      : psi_(checked(spec), angular_nodes) {}

  double operator()(double t, const Vec<2>& x) const {
    require(t > 0.0, ErrorKind::domain, "stable kernel needs t > 0");
    const int n = psi_.size();
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
      const double th = 2.0 * pi * k / n;
      const double a = t * psi_.node(k), b = x[0] * std::cos(th) + x[1] * std::sin(th);
      const double q = a * a + b * b;
      s += (a * a - b * b) / (q * q);
    }
    return s * (2.0 * pi / n) / (4.0 * pi * pi);
  }

  //! ∇_x Z(t, x).
  Vec<2> gradient(double t, const Vec<2>& x) const {
    const int n = psi_.size();
    Vec<2> g = Vec<2>::Zero();
    for (int k = 0; k < n; ++k) {
      const double th = 2.0 * pi * k / n;
      const Vec<2> e(std::cos(th), std::sin(th));
      const double a = t * psi_.node(k), b = x.dot(e);
      const double q = a * a + b * b;
      // d/db Re[(a − ib)^{−2}] = 2b(b² − 3a²)/q³.
      g += e * (2.0 * b * (b * b - 3.0 * a * a) / (q * q * q));
    }
    return g * ((2.0 * pi / n) / (4.0 * pi * pi));
  }

 private:
  static const IsotropicKernelSpec<2>& checked(const IsotropicKernelSpec<2>& spec) {
    spec.validate();
    require(spec.angle_only, ErrorKind::invalid_spec, "planar kernels are supported for angle-only kappa_bar");
    return spec;
  }
  detail::AngularSymbol psi_;
};

//! Z^κ̄(t, x) by Fourier inversion; builds the symbol cache on every call.
inline double stable_like_kernel(double t, double x, const IsotropicKernelSpec<1>& spec, const FourierGrid& grid) {
  StableKernel1D k(spec, grid.extent);
  return k.slice(t, grid)(x);
}

inline double stable_like_kernel(double t, const Vec<2>& x, const IsotropicKernelSpec<2>& spec) {
  return StableKernel2D(spec)(t, x);
}

struct ConvolutionCheck {
  double max_residual = 0.0;
  double worst_x = 0.0;
};

//! Compares Z^κ̄(t, x) with ∫ ρ(ω κ₀ t / 2, x − z) Z^{κ̄ − κ₀/2}(t, z) dz on a probe lattice, d = 1.
//! The right side is a direct spatial quadrature, the left a Fourier inversion.
inline ConvolutionCheck convolution_identity_check(double t, const IsotropicKernelSpec<1>& spec,
                                                   std::span<const double> probes = {}, double kappa0 = -1.0) {
  require(t > 0.0, ErrorKind::domain, "convolution_identity_check needs t > 0");
  if (kappa0 < 0.0) kappa0 = spec.lower;
  require(kappa0 <= spec.lower * (1 + 1e-12), ErrorKind::invalid_spec, "kappa0 exceeds the kernel lower bound");
  std::vector<double> lattice(probes.begin(), probes.end());
  if (lattice.empty())
    for (int i = -16; i <= 16; ++i) lattice.push_back(0.25 * i);

  StableKernel1D full(spec);
  auto lhs = full.slice(t);

  ConvolutionCheck out;
  const double s = symbol_constant(1) * kappa0 * t / 2.0;
  auto rho = [&](double r) { return s > 0.0 ? poisson_kernel(s, r, 1) : 0.0; };
  std::optional<SpectralSlice> rhs_z;
  if (s > 0.0) {
    IsotropicKernelSpec<1> hat = spec;
    hat.kappa_bar = [&spec, kappa0](const Vec<1>& z) { return spec(z) - 0.5 * kappa0; };
    hat.lower = spec.lower - 0.5 * kappa0;
    hat.upper = spec.upper - 0.5 * kappa0;
    rhs_z = StableKernel1D(hat).slice(t);
  }
  for (double x : lattice) {
    double rhs;
    if (!rhs_z) {
      rhs = lhs(x);
    } else {
      auto f = [&](double z) { return rho(x - z) * (*rhs_z)(z); };
      const double L = 64.0;
      std::vector<double> br{x - 2 * s, x - s, x, x + s, x + 2 * s, -1.0, 0.0, 1.0};
      for (double b = -L; b <= L; b += 2.0) br.push_back(b);
      auto core = integrate_panels(f, -L, L, br, 1e-12, 15);
      auto tails = integrate_adaptive([&](double v) { return v <= 0 ? 0.0 : (f(L / v) + f(-L / v)) * L / (v * v); },
                                      0.0, 1.0, 1e-12, 12);
      rhs = core.value + tails.value;
    }
    const double r = std::abs(lhs(x) - rhs);
    if (r > out.max_residual) {
      out.max_residual = r;
      out.worst_x = x;
    }
  }
  return out;
}

}  // namespace levi
