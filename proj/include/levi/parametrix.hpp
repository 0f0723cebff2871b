#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "levi/core.hpp"
#include "levi/frozen.hpp"
#include "levi/lattice.hpp"
#include "levi/nonlocal.hpp"
#include "levi/quadrature.hpp"
#include "levi/scale.hpp"

namespace levi {

//! Uniform time nodes t_k = kΔ, k = 0..K.
struct TimeGrid {
  double dt = 1.0 / 64;
  int steps = 64;
  double t(int k) const { return k * dt; }
  double horizon() const { return steps * dt; }
  //! Index of t if it is a node (within 1e−9Δ), else −1.
  int index_of(double t) const {
    const double u = t / dt;
    const long k = std::lround(u);
    return (k >= 0 && k <= steps && std::abs(u - k) < 1e-9) ? static_cast<int>(k) : -1;
  }
};

//! One N×N matrix per time node; entry (i, j) ↔ (x_i, y_j).
using Sequence = std::vector<Eigen::MatrixXd>;

struct ParametrixConfig {
  double horizon = 1.0;
  int steps = 64;
  double core = 4.0;
  double step = 1.0 / 32;
  double outer = 400.0;
  double growth = 1.12;
  int gauss_nodes = 4;
  int max_order = 20;
  int keep_levels = 1;     ///< q_0.. tables retained in the state
  double tolerance = 1e-3; ///< series tail, relative to the leading term
  FrozenConfig frozen;

  ParametrixConfig refined() const {
    ParametrixConfig c = *this;
    c.steps *= 2;
    c.step /= 2;
    return c;
  }
};

//! Lattice, time grid and frozen tables shared by the Picard iteration and the assembly of p.
class ParametrixScheme {
 public:
  ParametrixScheme(const ModelSpec& model, ParametrixConfig cfg)
      : cfg_(cfg), frozen_(std::make_shared<FrozenModel>(model, cfg.frozen)) {
    require(cfg.steps >= 2 && cfg.horizon > 0, ErrorKind::invalid_spec, "need at least two time steps");
    time_.steps = cfg.steps;
    time_.dt = cfg.horizon / cfg.steps;
    lattice_ = Lattice::graded(cfg.core, cfg.step, cfg.outer, cfg.growth);
    W_ = Eigen::Map<const Eigen::VectorXd>(lattice_.weights.data(), lattice_.size());
    trivial_ = model.kappa_x_independent() && model.b_constant();
    const int n = lattice_.size();
    P0_.assign(time_.steps + 1, Eigen::MatrixXd());
    Q0_.assign(time_.steps + 1, Eigen::MatrixXd());
    P0_[0] = Eigen::MatrixXd::Zero(n, n);
    Q0_[0] = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k <= time_.steps; ++k) {
      auto t = frozen_->tables(time_.t(k), lattice_, !trivial_);
      P0_[k] = std::move(t.p0);
      Q0_[k] = std::move(t.q0);
    }
    const double dt = time_.dt;
    auto rule = gauss_legendre(cfg.gauss_nodes, 0.0, dt);
    gauss_ = rule;
    A1_ = A2_ = Eigen::MatrixXd::Zero(n, n);
    for (int g = 0; g < cfg.gauss_nodes; ++g) {
      Eigen::MatrixXd q = trivial_ ? Eigen::MatrixXd::Zero(n, n)
                                   : frozen_->tables(rule.nodes[g], lattice_, true).q0;
      A1_ += rule.weights[g] * (1.0 - rule.nodes[g] / dt) * q;
      A2_ += rule.weights[g] * (rule.nodes[g] / dt) * q;
      Q0g_.push_back(std::move(q));
    }
  }

  const ParametrixConfig& config() const { return cfg_; }
  const TimeGrid& time() const { return time_; }
  const Lattice& lattice() const { return lattice_; }
  const FrozenModel& frozen() const { return *frozen_; }
  std::shared_ptr<const FrozenModel> frozen_ptr() const { return frozen_; }
  const ModelSpec& model() const { return frozen_->model(); }
  const Eigen::VectorXd& weights() const { return W_; }
  const Sequence& p0() const { return P0_; }
  const Sequence& q0() const { return Q0_; }
  bool trivial() const { return trivial_; }

  //! q_n from q_{n−1}: ∫₀ᵗ∫ q₀(t−s, x, z) q_{n−1}(s, z, y) dz ds.
  //! The panel at s ≈ t uses product weights of q₀ over [0, Δ]; the panel at s ≈ 0 uses them too when n = 1,
  //! and otherwise the linear start q_{n−1}(0) = 0.
  Sequence picard_step(const Sequence& prev, int n) const {
    require(n >= 1, ErrorKind::invalid_spec, "picard_step builds levels n >= 1");
    const int K = time_.steps, N = lattice_.size();
    const double dt = time_.dt;
    Sequence out(K + 1, Eigen::MatrixXd::Zero(N, N));
    if (trivial_) return out;
    Sequence Rt(K + 1);
    for (int j = 0; j <= K; ++j) Rt[j] = W_.asDiagonal() * prev[j];
    const Eigen::MatrixXd WA1 = W_.asDiagonal() * A1_, WA2 = W_.asDiagonal() * A2_;
    const int G = static_cast<int>(Q0g_.size());
    for (int k = 1; k <= K; ++k) {
      Eigen::MatrixXd& C = out[k];
      if (k == 1) {
        if (n == 1) {
          for (int g = 0; g < G; ++g)
            C.noalias() += gauss_.weights[g] * Q0g_[G - 1 - g] * (W_.asDiagonal() * Q0g_[g]);
        } else {
          C.noalias() += A1_ * Rt[1];
        }
        continue;
      }
      C.noalias() += A1_ * Rt[k];
      C.noalias() += A2_ * Rt[k - 1];
      if (n == 1) {
        C.noalias() += Q0_[k] * WA1;
        C.noalias() += Q0_[k - 1] * WA2;
      }
      for (int j = 1; j <= k - 1; ++j) {
        double w = 0.5 * dt * ((j - 1 >= 1) + (j <= k - 2));
        if (n > 1 && j == 1) w += 0.5 * dt;
        if (w != 0.0) C.noalias() += w * Q0_[k - j] * Rt[j];
      }
    }
    return out;
  }

  //! 𝒬(t) = ∫₀ᵗ∫ p₀(t−s, x, z) q(s, z, y) dz ds, with p₀(0⁺)·W read as the identity.
  Sequence p0_convolution(const Sequence& q) const {
    const int K = time_.steps, N = lattice_.size();
    const double dt = time_.dt;
    Sequence out(K + 1, Eigen::MatrixXd::Zero(N, N));
    if (trivial_) return out;
    Sequence Rt(K + 1);
    for (int j = 0; j <= K; ++j) Rt[j] = W_.asDiagonal() * q[j];
    const Eigen::MatrixXd WA1 = W_.asDiagonal() * A1_, WA2 = W_.asDiagonal() * A2_;
    const Eigen::MatrixXd start = W_.asDiagonal() * Q0g_.front();  // q(0⁺) ≈ q₀ at the first Gauss node
    const Eigen::MatrixXd excess = W_.asDiagonal() * (q[1] - Q0_[1]);
    for (int k = 1; k <= K; ++k) {
      Eigen::MatrixXd& C = out[k];
      if (k == 1) {
        C = 0.5 * dt * q[1];
        C.noalias() += 0.5 * dt * P0_[1] * start;
        continue;
      }
      C = 0.5 * dt * q[k];
      C.noalias() += 0.5 * dt * P0_[1] * Rt[k - 1];
      C.noalias() += P0_[k] * WA1;
      C.noalias() += P0_[k - 1] * WA2;
      C.noalias() += 0.5 * dt * P0_[k - 1] * excess;
      for (int j = 1; j <= k - 1; ++j) {
        const double w = 0.5 * dt * ((j >= 2) + (j <= k - 2));
        if (w != 0.0) C.noalias() += w * P0_[k - j] * Rt[j];
      }
    }
    return out;
  }

 private:
  ParametrixConfig cfg_;
  std::shared_ptr<FrozenModel> frozen_;
  TimeGrid time_;
  Lattice lattice_;
  Eigen::VectorXd W_;
  bool trivial_ = false;
  Sequence P0_, Q0_;
  QuadratureRule gauss_;
  std::vector<Eigen::MatrixXd> Q0g_;
  Eigen::MatrixXd A1_, A2_;
};

//! Σ_{n>N} of the level majorants relative to the n = 0 term, with t ≤ T.
inline double picard_tail_bound(double c_d, double beta, int order, double horizon = 1.0) {
  const double a0 = picard_majorant_coefficient(c_d, beta, 0);
  double s = 0.0;
  for (int n = order + 1; n < order + 400; ++n) {
    const double term = picard_majorant_coefficient(c_d, beta, n) * std::pow(horizon, n * beta) / a0;
    s += term;
    if (n > order + 5 && term < 1e-18 * s) break;
  }
  return s;
}

struct ParametrixState {
  int order = 0;                  ///< N
  std::vector<Sequence> levels;   ///< q_0 … q_{min(N, keep−1)}
  Sequence q;                     ///< Σ_{n≤N} q_n
  double tail_bound = 0.0;        ///< relative to the leading term
  double fitted_cd = 0.0;
  std::vector<double> level_sup;  ///< sup |q_n| over the core lattice
  std::vector<double> level_ratio;///< sup |q_n| / majorant_n at the fitted C_d
};

namespace detail {

//! max over the core lattice and time nodes of |q_n| / (ϱ⁰_{(n+1)β} + ϱ^β_{nβ}).
inline double level_envelope_ratio(const ParametrixScheme& s, const Sequence& q, int n) {
  const auto& L = s.lattice();
  const double beta = std::min(s.model().beta, 1.0);
  double worst = 0.0;
  for (int k = 1; k <= s.time().steps; ++k) {
    const double t = s.time().t(k);
    for (int j = 0; j < L.size(); ++j) {
      if (std::abs(L.nodes[j]) > L.core) continue;
      for (int i = 0; i < L.size(); ++i) {
        if (std::abs(L.nodes[i]) > L.core) continue;
        const double r = std::abs(L.nodes[i] - L.nodes[j]);
        const double env = scale_function((n + 1) * beta, 0.0, t, r, 1) + scale_function(n * beta, beta, t, r, 1);
        worst = std::max(worst, std::abs(q[k](i, j)) / env);
      }
    }
  }
  return worst;
}

inline double sup_abs(const Sequence& q) {
  double m = 0.0;
  for (const auto& a : q)
    if (a.size()) m = std::max(m, a.cwiseAbs().maxCoeff());
  return m;
}

}  // namespace detail

//! q = Σ q_n with N fixed by the Γ-ratio tail of the fitted majorant.
inline ParametrixState sum_series(const ParametrixScheme& s, double tolerance = -1.0, int max_order = -1) {
  if (tolerance <= 0) tolerance = s.config().tolerance;
  if (max_order < 0) max_order = s.config().max_order;
  require(tolerance > 0, ErrorKind::invalid_spec, "series tolerance must be positive");
  ParametrixState st;
  const int K = s.time().steps, N = s.lattice().size();
  if (s.trivial()) {
    st.q.assign(K + 1, Eigen::MatrixXd::Zero(N, N));
    st.levels.push_back(st.q);
    st.level_sup = {0.0};
    st.level_ratio = {0.0};
    return st;
  }
  const double beta = std::min(s.model().beta, 1.0);
  const double gb = std::tgamma(beta);
  auto level_cd = [&](double ratio, int n) {
    return std::pow(ratio * std::tgamma((n + 1) * beta), 1.0 / (n + 1)) / gb;
  };
  Sequence cur = s.q0();
  st.q = cur;
  st.levels.push_back(cur);
  double cd = 0.0;
  std::vector<double> raw_ratio;
  for (int n = 0;; ++n) {
    const double ratio = detail::level_envelope_ratio(s, cur, n);
    raw_ratio.push_back(ratio);
    st.level_sup.push_back(detail::sup_abs(cur));
    cd = std::max(cd, level_cd(ratio, n));
    const double tail = picard_tail_bound(cd, beta, n, s.time().horizon());
    if (tail < tolerance) {
      st.order = n;
      st.tail_bound = tail;
      break;
    }
    if (n + 1 > max_order)
      fail(ErrorKind::convergence, "series needs more than " + std::to_string(max_order) +
                                       " terms (fitted C_d = " + std::to_string(cd) + ")");
    cur = s.picard_step(cur, n + 1);
    for (int k = 0; k <= K; ++k) st.q[k] += cur[k];
    if (static_cast<int>(st.levels.size()) < s.config().keep_levels) st.levels.push_back(cur);
  }
  st.fitted_cd = cd;
  for (int n = 0; n < static_cast<int>(raw_ratio.size()); ++n)
    st.level_ratio.push_back(raw_ratio[n] / picard_majorant_coefficient(cd, beta, n));
  return st;
}

//! Tabulated fundamental solution; p = p₀ + 𝒬 with p₀ evaluated exactly and 𝒬 from the lattice.
struct KernelTable {
  TimeGrid time;
  Lattice lattice;
  Sequence p;      ///< clamped at zero
  Sequence p_raw;  ///< before clamping
  Sequence conv;   ///< 𝒬
  double tolerance = 0.0;
  std::uint64_t model_hash = 0;
  long clamped_cells = 0;
  double min_raw = 0.0;
  std::shared_ptr<const FrozenModel> frozen;

  double clamped_fraction() const {
    const double cells = static_cast<double>(time.steps) * lattice.size() * lattice.size();
    return clamped_cells / cells;
  }

  //! ∫ p(t_k, x_i, y) dy with inverse-square tails.
  double row_sum(int k, int i) const {
    const int n = lattice.size();
    std::vector<double> row(n);
    for (int j = 0; j < n; ++j) row[j] = p_raw[k](i, j);
    return lattice.integrate(row, lattice.nodes[i]);
  }

  //! 𝒬(t_k, x, y_j) interpolated in x.
  double conv_at(int k, double x, int j) const {
    std::vector<double> col(conv[k].col(j).data(), conv[k].col(j).data() + lattice.size());
    return lattice.interpolate(col, x, lattice.nodes[j]);
  }
  double conv_grad_at(int k, double x, int j) const {
    std::vector<double> col(conv[k].col(j).data(), conv[k].col(j).data() + lattice.size());
    return lattice.interpolate_derivative(col, x);
  }
};

inline KernelTable assemble_p(const ParametrixScheme& s, const ParametrixState& st, double tolerance = 1e-3) {
  KernelTable T;
  T.time = s.time();
  T.lattice = s.lattice();
  T.tolerance = tolerance;
  T.model_hash = s.model().hash();
  T.frozen = s.frozen_ptr();
  T.conv = s.p0_convolution(st.q);
  const int K = s.time().steps;
  T.p.resize(K + 1);
  T.p_raw.resize(K + 1);
  T.min_raw = 0.0;
  for (int k = 0; k <= K; ++k) {
    T.p_raw[k] = s.p0()[k] + T.conv[k];
    if (k == 0) {
      T.p[k] = T.p_raw[k];
      continue;
    }
    T.min_raw = std::min(T.min_raw, T.p_raw[k].minCoeff());
    T.clamped_cells += (T.p_raw[k].array() < 0.0).count();
    T.p[k] = T.p_raw[k].cwiseMax(0.0);
  }
  return T;
}

struct LatticeProbe {
  int k = 0, i = 0, j = 0;  ///< (t_k, x_i, y_j)
};

struct FixedPointResidual {
  std::vector<double> relative;  ///< |q − q₀ − q₀⊛q| / sup_x |q(t, ·, y)|
  double max_relative = 0.0;
};

//! Residual of q = q₀ + ∫₀ᵗ∫ q₀(t−s, x, z) q(s, z, y) dz ds at lattice probes, with the time integral redone by
//! Gauss–Legendre on [0, t/2] and [t/2, t]; q₀ is evaluated exactly at each node and q − q₀ interpolated linearly.
inline FixedPointResidual q_equation_residual(const ParametrixScheme& s, const ParametrixState& st,
                                              std::span<const LatticeProbe> probes, int nodes_per_half = 16) {
  FixedPointResidual out;
  const auto& L = s.lattice();
  const auto& fz = s.frozen();
  const int N = L.size();
  const double dt = s.time().dt;
  std::vector<Eigen::VectorXd> cx(N);
  for (int i = 0; i < N; ++i) cx[i] = fz.factorization().coefficients(L.nodes[i]);
  out.relative.assign(probes.size(), 0.0);
  std::vector<int> ks;
  for (const auto& p : probes) ks.push_back(p.k);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (int k : ks) {
    const double t = s.time().t(k);
    std::vector<std::size_t> idx;
    for (std::size_t m = 0; m < probes.size(); ++m)
      if (probes[m].k == k) idx.push_back(m);
    std::vector<double> acc(idx.size(), 0.0);
    for (int half = 0; half < 2; ++half) {
      auto rule = gauss_legendre(nodes_per_half, half * 0.5 * t, (half + 1) * 0.5 * t);
      for (int g = 0; g < nodes_per_half; ++g) {
        const double sn = rule.nodes[g], tau = t - sn;
        // q(s, ·, y_j) = q₀(s, ·, y_j) + linear interpolation of q − q₀ (zero at s = 0).
        const double u = sn / dt;
        const int k0 = std::min(static_cast<int>(u), s.time().steps - 1);
        const double f = u - k0;
        auto excess = [&](int kk, int z, int j) { return kk == 0 ? 0.0 : st.q[kk](z, j) - s.q0()[kk](z, j); };
        std::vector<std::vector<double>> qcol(idx.size(), std::vector<double>(N));
        for (std::size_t a = 0; a < idx.size(); ++a) {
          const int j = probes[idx[a]].j;
          auto sl = fz.slices(sn, L.nodes[j]);
          for (int z = 0; z < N; ++z) {
            const double q0v = (z == j) ? 0.0 : fz.q0(sl, L.nodes[z], cx[z]);
            qcol[a][z] = q0v + (1 - f) * excess(k0, z, j) + f * excess(k0 + 1, z, j);
          }
        }
        // q₀(τ, x_i, z) over all z: one frozen family per z.
        auto grid = fz.grid_for(tau);
        auto samples = fz.symbol_samples(grid);
        std::vector<std::vector<double>> row(idx.size(), std::vector<double>(N, 0.0));
        parallel_for(N, [&](int z) {
          auto sl = fz.slices(tau, L.nodes[z], grid, samples, true);
          for (std::size_t a = 0; a < idx.size(); ++a) {
            const int i = probes[idx[a]].i;
            row[a][z] = (i == z) ? 0.0 : fz.q0(sl, L.nodes[i], cx[i]);
          }
        });
        for (std::size_t a = 0; a < idx.size(); ++a) {
          double sum = 0.0;
          for (int z = 0; z < N; ++z) sum += L.weights[z] * row[a][z] * qcol[a][z];
          acc[a] += rule.weights[g] * sum;
        }
      }
    }
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const auto& p = probes[idx[a]];
      const double rhs = s.q0()[k](p.i, p.j) + acc[a];
      const double scale = st.q[k].col(p.j).cwiseAbs().maxCoeff();
      out.relative[idx[a]] = std::abs(st.q[k](p.i, p.j) - rhs) / std::max(scale, 1e-300);
      out.max_relative = std::max(out.max_relative, out.relative[idx[a]]);
    }
  }
  return out;
}

struct PdeResidual {
  double dt_p = 0.0;       ///< central difference of p in t
  double generator = 0.0;  ///< 𝓛p
  double residual = 0.0;   ///< |∂_t p − 𝓛p|
  double relative = 0.0;   ///< residual / |∂_t p|
  bool reliable = true;
};

//! Radial quadrature for interpolated table data, whose noise floor sits near 1e−12.
inline RadialQuadrature table_quadrature() {
  RadialQuadrature q;
  q.inner_radius = 1e-3;
  q.tol = 1e-8;
  q.abs_tol = 1e-10;
  q.max_depth = 14;
  q.reliable_tol = 1e-5;
  return q;
}

//! ∂_t p − 𝓛p at (t_k, x, y_j); p(t, ·, y) is the exact frozen kernel plus the interpolated 𝒬.
inline PdeResidual pde_residual(const KernelTable& T, int k, double x, int j, RadialQuadrature q = table_quadrature()) {
  require(k >= 1 && k < T.time.steps, ErrorKind::domain, "pde_residual needs an interior time node");
  const auto& fz = *T.frozen;
  const auto& m = fz.model();
  const double y = T.lattice.nodes[j];
  auto p_at = [&](int kk) {
    auto sl = std::make_shared<FrozenSlices>(fz.slices(T.time.t(kk), y, false));
    std::vector<double> col(T.conv[kk].col(j).data(), T.conv[kk].col(j).data() + T.lattice.size());
    return [sl, col = std::move(col), &T, y](double u) { return sl->p0(u) + T.lattice.interpolate(col, u, y); };
  };
  auto pm = p_at(k - 1), pc = p_at(k), pp = p_at(k + 1);
  PdeResidual r;
  r.dt_p = (pp(x) - pm(x)) / (2.0 * T.time.dt);
  q.feature_radii.push_back(std::abs(x - y));
  auto f = [&](const Vec<1>& u) { return pc(u[0]); };
  auto kap = [&](const Vec<1>& z) { return m.kappa(x, z[0]); };
  Vec<1> xv;
  xv[0] = x;
  auto nl = apply_nonlocal<1>(f, xv, kap, q);
  const double hx = 1e-4 * std::max(1.0, T.time.t(k));
  const double grad = (pc(x + hx) - pc(x - hx)) / (2.0 * hx);
  r.generator = nl.value + m.b(x) * grad;
  r.residual = std::abs(r.dt_p - r.generator);
  r.relative = r.residual / std::abs(r.dt_p);
  r.reliable = nl.reliable;
  return r;
}

struct ChapmanKolmogorov {
  double direct = 0.0;    ///< p(t, x, y)
  double composed = 0.0;  ///< ∫ p(t − s, x, z) p(s, z, y) dz
  double residual = 0.0;
  double tolerance = 0.0;  ///< sum of the conservation errors of the three tables involved
};

//! Largest |row sum − 1| of p(t_k, x_i, ·) over the core.
inline double conservation_error(const KernelTable& T, int k) {
  double e = 0.0;
  for (int i = 0; i < T.lattice.size(); ++i)
    if (std::abs(T.lattice.nodes[i]) <= T.lattice.core) e = std::max(e, std::abs(T.row_sum(k, i) - 1.0));
  return e;
}

//! p(t_k) against p(t_{k−m}) ∘ p(t_m) at (x_i, y_j); the residual is relative to sup_x p(t_k, x, y_j).
inline ChapmanKolmogorov chapman_kolmogorov(const KernelTable& T, int k, int m, int i, int j) {
  require(m >= 1 && m < k && k <= T.time.steps, ErrorKind::domain, "need 0 < s < t on the grid");
  const int n = T.lattice.size();
  std::vector<double> v(n);
  for (int z = 0; z < n; ++z) v[z] = T.p_raw[k - m](i, z) * T.p_raw[m](z, j);
  ChapmanKolmogorov c;
  c.direct = T.p_raw[k](i, j);
  c.composed = T.lattice.integrate(v, T.lattice.nodes[i]);
  c.residual = std::abs(c.direct - c.composed) / T.p_raw[k].col(j).maxCoeff();
  c.tolerance = conservation_error(T, k) + conservation_error(T, k - m) + conservation_error(T, m);
  return c;
}

}  // namespace levi
