#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "levi/core.hpp"
#include "levi/fourier.hpp"
#include "levi/lattice.hpp"
#include "levi/model.hpp"

namespace levi {

struct FrozenConfig {
  double extent = 16.0;     ///< spatial range of the residual tables
  double oversample = 2.0;  ///< frequency cutoff over the 1e−12 level
  int max_rank = 12;
  double rank_tol = 1e-12;
  double x_range = 24.0;  ///< x sample window for the low-rank fit
};

//! Low-rank factorization κ(x, z) ≈ Σ_m c_m(x) κ(s_m, z) over skeleton points s_m.
class KappaFactorization {
 public:
  KappaFactorization() = default;
  KappaFactorization(const ModelSpec& model, const FrozenConfig& cfg) : model_(&model) {
    for (int i = 0; i < 160; ++i) zs_.push_back(std::pow(10.0, -5.0 + 9.0 * i / 159.0));
    if (model.kappa_x_independent()) {
      skeleton_ = {0.0};
      x_independent_ = true;
      return;
    }
    std::vector<double> xs;
    for (int i = 0; i <= 960; ++i) xs.push_back(-cfg.x_range + 2.0 * cfg.x_range * i / 960.0);
    for (double x : ModelSpec::probe_points()) xs.push_back(x);
    Eigen::MatrixXd A(zs_.size(), xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) A.col(j) = profile(xs[j]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(cfg.rank_tol);
    const int r = static_cast<int>(qr.rank());
    require(r <= cfg.max_rank, ErrorKind::invalid_spec,
            "kappa(x, z) is not low-rank in x (rank " + std::to_string(r) + ")");
    Eigen::MatrixXd K(zs_.size(), r);
    for (int m = 0; m < r; ++m) {
      skeleton_.push_back(xs[qr.colsPermutation().indices()[m]]);
      K.col(m) = A.col(qr.colsPermutation().indices()[m]);
    }
    pinv_ = K.completeOrthogonalDecomposition().pseudoInverse();
    for (double x : xs) fit_error_ = std::max(fit_error_, fit_error(x));
  }

  int rank() const { return static_cast<int>(skeleton_.size()); }
  const std::vector<double>& skeleton() const { return skeleton_; }
  bool x_independent() const { return x_independent_; }
  double max_fit_error() const { return fit_error_; }

  Eigen::VectorXd coefficients(double x) const {
    if (x_independent_) return Eigen::VectorXd::Ones(1);
    return pinv_ * profile(x);
  }

  double fit_error(double x) const {
    if (x_independent_) return 0.0;
    Eigen::VectorXd c = coefficients(x);
    Eigen::VectorXd approx = Eigen::VectorXd::Zero(zs_.size());
    for (int m = 0; m < rank(); ++m) approx += c[m] * profile(skeleton_[m]);
    return (approx - profile(x)).cwiseAbs().maxCoeff();
  }

 private:
  Eigen::VectorXd profile(double x) const {
    Eigen::VectorXd v(zs_.size());
    for (std::size_t i = 0; i < zs_.size(); ++i) v[i] = model_->kappa(x, zs_[i]);
    return v;
  }
  const ModelSpec* model_ = nullptr;
  std::vector<double> zs_;
  std::vector<double> skeleton_;
  Eigen::MatrixXd pinv_;
  bool x_independent_ = false;
  double fit_error_ = 0.0;
};

//! Slices of the y-frozen kernel family at one time: Z_y, ∂_w Z_y and 𝓛^{φ_m} Z_y.
struct FrozenSlices {
  double tau = 0.0;
  double y = 0.0;
  double shift = 0.0;  ///< b(y) τ
  Eigen::VectorXd cy;  ///< c(y)
  SpectralSlice z, dz;
  std::vector<SpectralSlice> g;

  double p0(double x) const { return z(x - y + shift); }
  double grad_p0(double x) const { return dz(x - y + shift); }
};

//! Frozen kernels p₀, ∇p₀ and q₀ of a model, pointwise and as lattice tables.
class FrozenModel {
 public:
  explicit FrozenModel(const ModelSpec& model, FrozenConfig cfg = {})
      : model_(std::make_shared<ModelSpec>(model)), cfg_(cfg) {
    model_->validate();
    fac_ = KappaFactorization(*model_, cfg_);
    for (double s : fac_.skeleton()) {
      IsotropicKernelSpec<1> k;
      auto m = model_;
      k.kappa_bar = [m, s](const Vec<1>& z) { return m->kappa(s, z[0]); };
      k.lower = model_->kappa0;
      k.upper = model_->kappa1;
      k.name = model_->name;
      psi_.push_back(SymbolProfile::from_spec(k));
      slope_.push_back(psi_.back().slope_at_zero());
    }
  }

  const ModelSpec& model() const { return *model_; }
  const KappaFactorization& factorization() const { return fac_; }
  const FrozenConfig& config() const { return cfg_; }

  SymbolProfile symbol_at(double y) const {
    Eigen::VectorXd c = fac_.coefficients(y);
    std::vector<const SymbolProfile*> parts;
    for (auto& p : psi_) parts.push_back(&p);
    return SymbolProfile::combine(parts, std::span<const double>(c.data(), c.size()));
  }

  //! The frozen symbol satisfies ψ_y ≥ κ₀ π |ξ|, which fixes a y-independent cutoff.
  FourierGrid grid_for(double tau) const {
    require(tau > 0.0, ErrorKind::domain, "frozen kernels need t > 0");
    const double xi0 = -std::log(1e-12) / (tau * model_->kappa0 * symbol_constant(1));
    return FourierGrid::make(cfg_.oversample * xi0, cfg_.extent);
  }

  //! ψ_m(ξ_k) on the frequency grid, one row per skeleton symbol.
  Eigen::MatrixXd symbol_samples(const FourierGrid& grid) const {
    Eigen::MatrixXd s(psi_.size(), grid.nodes + 1);
    const double dxi = grid.frequency_step();
    for (std::size_t m = 0; m < psi_.size(); ++m)
      for (int k = 0; k <= grid.nodes; ++k) s(m, k) = psi_[m](k * dxi);
    return s;
  }

  FrozenSlices slices(double tau, double y, bool with_q0 = true) const {
    auto grid = grid_for(tau);
    return slices(tau, y, grid, symbol_samples(grid), with_q0);
  }

  FrozenSlices slices(double tau, double y, const FourierGrid& grid, const Eigen::MatrixXd& samples,
                      bool with_q0 = true) const {
    FrozenSlices f;
    f.tau = tau;
    f.y = y;
    f.shift = model_->b(y) * tau;
    f.cy = fac_.coefficients(y);
    const int M = grid.nodes;
    const double dxi = grid.frequency_step();
    double a = 0.0;
    for (int m = 0; m < fac_.rank(); ++m) a += f.cy[m] * slope_[m];
    std::vector<double> e(M + 1), spec(M + 1);
    for (int k = 0; k <= M; ++k) {
      double psi = 0.0;
      for (int m = 0; m < fac_.rank(); ++m) psi += f.cy[m] * samples(m, k);
      e[k] = std::exp(-tau * psi);
    }
    f.z = SpectralSlice(grid, e, {SliceKind::density, a * tau, 1.0});
    for (int k = 0; k <= M; ++k) spec[k] = k * dxi * e[k];
    f.dz = SpectralSlice(grid, spec, {SliceKind::gradient, a * tau, 1.0});
    if (with_q0 && !fac_.x_independent()) {
      for (int m = 0; m < fac_.rank(); ++m) {
        for (int k = 0; k <= M; ++k) spec[k] = -samples(m, k) * e[k];
        f.g.emplace_back(grid, spec, CauchyReference{SliceKind::generator, a * tau, slope_[m]});
      }
    }
    return f;
  }

  //! q₀(τ, x, y) from precomputed slices and c(x).
  double q0(const FrozenSlices& f, double x, const Eigen::VectorXd& cx) const {
    const double w = x - f.y + f.shift;
    double v = (model_->b(x) - model_->b(f.y)) * f.dz(w);
    for (std::size_t m = 0; m < f.g.size(); ++m) v += (cx[m] - f.cy[m]) * f.g[m](w);
    return v;
  }

  double p0(double t, double x, double y) const { return slices(t, y, false).p0(x); }
  double grad_p0(double t, double x, double y) const { return slices(t, y, false).grad_p0(x); }
  double q0(double t, double x, double y) const {
    if (x == y) return 0.0;
    return q0(slices(t, y), x, fac_.coefficients(x));
  }

  struct Tables {
    Eigen::MatrixXd p0, q0;  ///< (i, j) ↔ (x_i, y_j)
  };

  //! p₀(τ, x_i, y_j) and q₀(τ, x_i, y_j) on a lattice.
  Tables tables(double tau, const Lattice& L, bool with_q0 = true) const {
    const int n = L.size();
    auto grid = grid_for(tau);
    auto samples = symbol_samples(grid);
    std::vector<Eigen::VectorXd> c(n);
    std::vector<double> bx(n);
    for (int i = 0; i < n; ++i) {
      c[i] = fac_.coefficients(L.nodes[i]);
      bx[i] = model_->b(L.nodes[i]);
    }
    const bool trivial_q = fac_.x_independent() && model_->b_constant();
    Tables t;
    t.p0.resize(n, n);
    t.q0 = Eigen::MatrixXd::Zero(n, n);
    parallel_for(n, [&](int j) {
      auto f = slices(tau, L.nodes[j], grid, samples, with_q0 && !trivial_q);
      for (int i = 0; i < n; ++i) {
        const double w = L.nodes[i] - f.y + f.shift;
        t.p0(i, j) = f.z(w);
        if (!with_q0 || trivial_q || i == j) continue;
        double v = (bx[i] - bx[j]) * f.dz(w);
        for (std::size_t m = 0; m < f.g.size(); ++m) v += (c[i][m] - f.cy[m]) * f.g[m](w);
        t.q0(i, j) = v;
      }
    });
    return t;
  }

  //! ∂_x p₀(τ, x_r, y_j) for the listed rows r and all lattice columns j.
  Eigen::MatrixXd gradient_rows(double tau, const Lattice& L, const std::vector<int>& rows) const {
    const int n = L.size();
    auto grid = grid_for(tau);
    auto samples = symbol_samples(grid);
    Eigen::MatrixXd g(rows.size(), n);
    parallel_for(n, [&](int j) {
      auto f = slices(tau, L.nodes[j], grid, samples, false);
      for (std::size_t r = 0; r < rows.size(); ++r) g(r, j) = f.grad_p0(L.nodes[rows[r]]);
    });
    return g;
  }

 private:
  std::shared_ptr<ModelSpec> model_;
  FrozenConfig cfg_;
  KappaFactorization fac_;
  std::vector<SymbolProfile> psi_;
  std::vector<double> slope_;
};

}  // namespace levi
