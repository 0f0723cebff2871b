#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "levi/core.hpp"
#include "levi/nonlocal.hpp"
#include "levi/parametrix.hpp"
#include "levi/quadrature.hpp"

namespace levi {

//! 𝒯_t f(x_i) = ∫ p(t_k, x_i, y) f(y) dy for every lattice node.
inline Eigen::VectorXd semigroup_apply(const KernelTable& T, int k, const Eigen::VectorXd& f) {
  require(k >= 1 && k <= T.time.steps, ErrorKind::domain, "time index outside the kernel table");
  const int n = T.lattice.size();
  require(f.size() == n, ErrorKind::invalid_spec, "field must be sampled on the lattice");
  Eigen::VectorXd out(n);
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) v[j] = T.p[k](i, j) * f[j];
    out[i] = T.lattice.integrate(v, T.lattice.nodes[i]);
  }
  return out;
}

template <class F>
  requires std::is_invocable_r_v<double, F, double>
Eigen::VectorXd semigroup_apply(const KernelTable& T, double t, F&& f) {
  const int k = T.time.index_of(t);
  require(k >= 1, ErrorKind::domain, "t is not a positive node of the kernel table");
  Eigen::VectorXd fv(T.lattice.size());
  for (int j = 0; j < fv.size(); ++j) fv[j] = f(T.lattice.nodes[j]);
  return semigroup_apply(T, k, fv);
}

//! Samples of a P-periodic function on uniform nodes covering one period plus a margin; cubic interpolation.
class PeriodicField {
 public:
  PeriodicField() = default;
  PeriodicField(double period, double first, double step, std::vector<double> values)
      : period_(period), first_(first), step_(step), v_(std::move(values)) {
    require(period > 0 && step > 0, ErrorKind::invalid_spec, "periodic field needs a period and a step");
    require(first <= -0.5 * period - 2 * step && first + (size() - 1) * step >= 0.5 * period + 2 * step,
            ErrorKind::invalid_spec, "periodic field nodes must cover one period with a margin");
  }

  //! Cubic interpolation on the wrapped point; over the last step before +P/2 it blends into the image at −P/2,
  //! so the field stays continuous across the seam.
  double operator()(double x) const {
    const double w = x - period_ * std::floor((x + 0.5 * period_) / period_);
    const double edge = 0.5 * period_ - step_;
    if (w <= edge) return interpolate(w);
    const double s = (w - edge) / step_;
    const double a = s * s * (3 - 2 * s);
    return (1 - a) * interpolate(w) + a * interpolate(w - period_);
  }

  int size() const { return static_cast<int>(v_.size()); }
  double period() const { return period_; }
  double first() const { return first_; }
  double step() const { return step_; }
  double node(int r) const { return first_ + r * step_; }
  const std::vector<double>& values() const { return v_; }
  double sup() const {
    double m = 0.0;
    for (double a : v_) m = std::max(m, std::abs(a));
    return m;
  }
  double mean() const {
    double s = 0.0;
    int c = 0;
    for (int r = 0; r < size(); ++r)
      if (node(r) >= -0.5 * period_ && node(r) < 0.5 * period_) s += v_[r], ++c;
    return c ? s / c : 0.0;
  }

 private:
  double interpolate(double w) const {
    const double u = (w - first_) / step_;
    const int i = std::clamp(static_cast<int>(std::floor(u)) - 1, 0, size() - 4);
    const double s = u - i;
    // Lagrange weights on the nodes i, i+1, i+2, i+3 at local coordinate s.
    const double l0 = -(s - 1) * (s - 2) * (s - 3) / 6.0;
    const double l1 = s * (s - 2) * (s - 3) / 2.0;
    const double l2 = -s * (s - 1) * (s - 3) / 2.0;
    const double l3 = s * (s - 1) * (s - 2) / 6.0;
    return l0 * v_[i] + l1 * v_[i + 1] + l2 * v_[i + 2] + l3 * v_[i + 3];
  }

  double period_ = 0.0, first_ = 0.0, step_ = 1.0;
  std::vector<double> v_;
};

struct ResolventConfig {
  double lambda = 0.0;      ///< 0 selects λ automatically
  double tolerance = 1e-6;  ///< budget for ‖b‖_∞ e^{−λT}/λ
  int singular_nodes = 16;  ///< Gauss nodes on the first time panel of ∇u
  int max_doublings = 12;
  ParametrixConfig kernel;  ///< horizon is overridden by the resolvent driver
};

//! 𝒯_t b and ∇𝒯_t b at the time nodes, on the lattice nodes spanning one period.
struct ResolventData {
  double period = 0.0;
  double step = 0.0;
  double dt = 0.0;
  double theta = 1.0;
  std::vector<double> x;
  std::vector<double> b;
  Eigen::MatrixXd F, G;  ///< (k, r): 𝒯_{t_k} b(x_r) and ∇𝒯_{t_k} b(x_r); row 0 holds b itself
};

//! The centered forms b(x) + ∫p (b(y) − b(x)) dy and ∫∇_x p (b(y) − b(x)) dy; ∇p = exact ∇p₀ + ∂_x𝒬.
inline ResolventData resolvent_data(const ParametrixScheme& s, const KernelTable& T) {
  const auto& m = s.model();
  require(m.period > 0, ErrorKind::invalid_spec, "the resolvent needs periodic coefficients");
  const auto& L = s.lattice();
  const double h = L.step;
  require(0.5 * m.period + 5 * h <= L.core, ErrorKind::invalid_spec, "lattice core must cover one period");
  ResolventData d;
  d.period = m.period;
  d.step = h;
  d.dt = s.time().dt;
  d.theta = m.theta;
  std::vector<int> rows;
  for (int i = 0; i < L.size(); ++i)
    if (std::abs(L.nodes[i]) <= 0.5 * m.period + 3 * h) rows.push_back(i);
  for (int i : rows) {
    d.x.push_back(L.nodes[i]);
    d.b.push_back(m.b(L.nodes[i]));
  }
  const int R = static_cast<int>(rows.size()), N = L.size(), K = s.time().steps;
  std::vector<double> by(N);
  for (int j = 0; j < N; ++j) by[j] = m.b(L.nodes[j]);
  // Fourth-order central differences on the uniform core.
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(R, N);
  for (int r = 0; r < R; ++r) {
    const int i = rows[r];
    D(r, i - 2) = 1.0 / (12 * h);
    D(r, i - 1) = -8.0 / (12 * h);
    D(r, i + 1) = 8.0 / (12 * h);
    D(r, i + 2) = -1.0 / (12 * h);
  }
  d.F.resize(K + 1, R);
  d.G.resize(K + 1, R);
  for (int r = 0; r < R; ++r) d.F(0, r) = d.b[r];
  d.G.row(0).setZero();
  std::vector<double> v(N), w(N);
  for (int k = 1; k <= K; ++k) {
    Eigen::MatrixXd grad = s.frozen().gradient_rows(s.time().t(k), L, rows);
    grad.noalias() += D * T.conv[k];
    for (int r = 0; r < R; ++r) {
      const int i = rows[r];
      for (int j = 0; j < N; ++j) {
        const double db = by[j] - d.b[r];
        v[j] = T.p_raw[k](i, j) * db;
        w[j] = grad(r, j) * db;
      }
      d.F(k, r) = d.b[r] + L.integrate(v, d.x[r]);
      d.G(k, r) = L.integrate(w, d.x[r]);
    }
  }
  return d;
}

struct ResolventSolution {
  double lambda = 0.0;
  double horizon = 0.0;
  double truncation_budget = 0.0;  ///< ‖b‖_∞ e^{−λT}/λ, not added to u
  int doublings = 0;
  PeriodicField u, grad;
  double u_sup = 0.0, grad_sup = 0.0;
  bool small() const { return u_sup + grad_sup <= 0.5; }
};

//! u = ∫₀^T e^{−λt} 𝒯_t b dt with exponential product-trapezoid weights; on the first panel ∇𝒯_t b is taken
//! ∝ t^{θ−1}.
inline ResolventSolution resolvent_at(const ResolventData& d, double lambda, int singular_nodes = 16) {
  require(lambda > 0, ErrorKind::invalid_spec, "lambda must be positive");
  const int K = static_cast<int>(d.F.rows()) - 1, R = static_cast<int>(d.x.size());
  const double dt = d.dt, mu = lambda * dt;
  const double em = std::exp(-mu);
  const double left = (mu > 1e-4) ? (mu - 1 + em) / (mu * mu) : 0.5 - mu / 6;
  const double right = (mu > 1e-4) ? (1 - em * (1 + mu)) / (mu * mu) : 0.5 - mu / 3;
  Eigen::VectorXd wf = Eigen::VectorXd::Zero(K + 1), wg = Eigen::VectorXd::Zero(K + 1);
  for (int k = 1; k <= K; ++k) {
    const double e = dt * std::exp(-lambda * (k - 1) * dt);
    wf[k - 1] += e * left;
    wf[k] += e * right;
    if (k >= 2) {
      wg[k - 1] += e * left;
      wg[k] += e * right;
    }
  }
  auto rule = gauss_legendre(singular_nodes, 0.0, 1.0);
  double first = 0.0;
  for (int g = 0; g < singular_nodes; ++g) first += rule.weights[g] * std::exp(-mu * std::pow(rule.nodes[g], 1.0 / d.theta));
  wg[1] += dt / d.theta * first;
  ResolventSolution s;
  s.lambda = lambda;
  s.horizon = K * dt;
  double bsup = 0.0;
  for (double b : d.b) bsup = std::max(bsup, std::abs(b));
  s.truncation_budget = bsup * std::exp(-lambda * s.horizon) / lambda;
  std::vector<double> u(R), g(R);
  for (int r = 0; r < R; ++r) {
    u[r] = wf.dot(d.F.col(r));
    g[r] = wg.dot(d.G.col(r));
  }
  s.u = PeriodicField(d.period, d.x.front(), d.step, std::move(u));
  s.grad = PeriodicField(d.period, d.x.front(), d.step, std::move(g));
  s.u_sup = s.u.sup();
  s.grad_sup = s.grad.sup();
  return s;
}

inline double initial_lambda(const ModelSpec& m) { return 4.0 * (1.0 + m.b_norm()); }

//! Fixed λ if configured (failing when ‖u‖_∞ + ‖∇u‖_∞ > ½), otherwise λ doubles from 4(1 + ‖b‖) until it holds.
inline ResolventSolution solve_resolvent(const ResolventData& d, const ModelSpec& m, const ResolventConfig& cfg) {
  double lambda = cfg.lambda > 0 ? cfg.lambda : initial_lambda(m);
  auto s = resolvent_at(d, lambda, cfg.singular_nodes);
  require(s.truncation_budget <= cfg.tolerance, ErrorKind::invalid_spec,
          "kernel horizon too short for lambda = " + std::to_string(lambda));
  if (cfg.lambda > 0) {
    if (!s.small())
      fail(ErrorKind::lambda_too_small, "at lambda = " + std::to_string(lambda) + ": |u| = " + std::to_string(s.u_sup) +
                                            ", |grad u| = " + std::to_string(s.grad_sup));
    return s;
  }
  int n = 0;
  while (!s.small()) {
    if (++n > cfg.max_doublings)
      fail(ErrorKind::lambda_too_small, "no lambda up to " + std::to_string(lambda) + " gives |u| + |grad u| <= 1/2");
    lambda *= 2;
    s = resolvent_at(d, lambda, cfg.singular_nodes);
  }
  s.doublings = n;
  return s;
}

//! Kernel horizon with ‖b‖_∞ e^{−λT}/λ below the tolerance, rounded up to the time step.
inline ParametrixConfig resolvent_kernel_config(const ModelSpec& m, const ResolventConfig& cfg) {
  ParametrixConfig k = cfg.kernel;
  const double dt = k.horizon / k.steps;
  const double lambda = cfg.lambda > 0 ? cfg.lambda : initial_lambda(m);
  const double bsup = std::max(m.b_sup, 1e-300);
  const double T = std::max(4 * dt, std::log(bsup / (lambda * cfg.tolerance)) / lambda);
  k.steps = std::max(2, static_cast<int>(std::ceil(T / dt - 1e-9)));
  k.horizon = k.steps * dt;
  return k;
}

struct ResolventRun {
  std::shared_ptr<ParametrixScheme> scheme;
  ParametrixState state;
  KernelTable table;
  ResolventData data;
  ResolventSolution solution;
};

inline ResolventRun solve_resolvent(const ModelSpec& m, const ResolventConfig& cfg) {
  ResolventRun r;
  r.scheme = std::make_shared<ParametrixScheme>(m, resolvent_kernel_config(m, cfg));
  r.state = sum_series(*r.scheme);
  r.table = assemble_p(*r.scheme, r.state);
  r.data = resolvent_data(*r.scheme, r.table);
  r.solution = solve_resolvent(r.data, m, cfg);
  return r;
}

//! Φ(x) = x + u(x) for a periodic u with ‖∇u‖_∞ ≤ ½.
class ZvonkinMap {
 public:
  ZvonkinMap() = default;
  ZvonkinMap(double lambda, PeriodicField u, PeriodicField grad)
      : lambda_(lambda), u_(std::move(u)), grad_(std::move(grad)) {}
  explicit ZvonkinMap(const ResolventSolution& s) : ZvonkinMap(s.lambda, s.u, s.grad) {}

  //! Φ = identity.
  static ZvonkinMap identity(double period = 2 * pi, double step = 1.0 / 8) {
    const int n = static_cast<int>(std::ceil(period / step)) + 8;
    PeriodicField z(period, -0.5 * period - 4 * step, step, std::vector<double>(n, 0.0));
    return ZvonkinMap(0.0, z, z);
  }

  double lambda() const { return lambda_; }
  const PeriodicField& u() const { return u_; }
  const PeriodicField& grad() const { return grad_; }
  double operator()(double x) const { return x + u_(x); }
  double derivative(double x) const { return 1.0 + grad_(x); }

  //! x_{k+1} = y − u(x_k) until the step falls below tol.
  double inverse(double y, double tol = 1e-12, int max_iter = 200) const {
    double x = y - u_(y), prev = std::abs(x - y);
    for (int it = 0; it < max_iter; ++it) {
      const double next = y - u_(x);
      const double step = std::abs(next - x);
      x = next;
      if (step <= tol * std::max(1.0, std::abs(y))) return x;
      if (it > 2 && step > 0.75 * prev && step > 1e3 * tol)
        fail(ErrorKind::inconsistent_map, "inverse iteration is not contracting");
      prev = step;
    }
    fail(ErrorKind::inconsistent_map, "inverse iteration did not converge");
  }

 private:
  double lambda_ = 0.0;
  PeriodicField u_, grad_;
};

//! Radial quadrature for the nonlocal part of a bounded periodic field.
inline RadialQuadrature periodic_quadrature() {
  RadialQuadrature q = table_quadrature();
  q.far_radius = 256.0;
  return q;
}

//! 𝓛^{κ(x,·)} u(x) for the map's u.
inline NonlocalValue map_nonlocal(const ZvonkinMap& map, const ModelSpec& m, double x) {
  auto f = [&](const Vec<1>& v) { return map.u()(v[0]); };
  auto kap = [&](const Vec<1>& z) { return m.kappa(x, z[0]); };
  Vec<1> xv;
  xv[0] = x;
  return apply_nonlocal<1>(f, xv, kap, periodic_quadrature());
}

//! ∫_{|z|>1} [u(x+z) − u(x)] κ(x,z)|z|^{−2} dz; beyond R the periodic mean of u replaces u(x ± z).
inline double big_jump_integral(const ZvonkinMap& map, const ModelSpec& m, double x, double R = 256.0) {
  const auto& u = map.u();
  const double ux = u(x);
  std::vector<double> breaks;
  for (double r = 2.0; r < R; r += 1.0) breaks.push_back(r);
  auto head = integrate_panels([&](double z) { return (u(x + z) + u(x - z) - 2 * ux) * m.kappa(x, z) / (z * z); }, 1.0,
                               R, breaks, 1e-8, 10, 1e-12);
  return head.value + 2.0 * (u.mean() - ux) * m.kappa(x, R) / R;
}

struct PideResidual {
  double lambda_u = 0.0, nonlocal = 0.0, drift = 0.0, b = 0.0;
  double residual = 0.0;  ///< |λu − 𝓛^κu − b·∇u − b|
};

inline PideResidual pide_residual(const ZvonkinMap& map, const ModelSpec& m, double x) {
  PideResidual r;
  r.lambda_u = map.lambda() * map.u()(x);
  r.nonlocal = map_nonlocal(map, m, x).value;
  r.b = m.b(x);
  r.drift = r.b * map.grad()(x);
  r.residual = std::abs(r.lambda_u - r.nonlocal - r.drift - r.b);
  return r;
}

//! Coefficients of Y = Φ(X): b̃, g̃(y,z) = Φ(Φ^{−1}(y) + z) − y and σ̃(y,z) = σ(Φ^{−1}(y), z).
//! With all jumps uncompensated (symmetric ν) the drift of Y is λu − 𝓛^κu at Φ^{−1}(y), tabulated as raw_drift.
class TransformedCoefficients {
 public:
  TransformedCoefficients(ZvonkinMap map, ModelSpec model) : map_(std::move(map)), model_(std::move(model)) {
    const auto& u = map_.u();
    std::vector<double> bt(u.size()), rd(u.size());
    parallel_for(u.size(), [&](int r) {
      const double x = u.node(r);
      bt[r] = map_.lambda() * u.values()[r] - big_jump_integral(map_, model_, x);
      rd[r] = map_.lambda() * u.values()[r] - map_nonlocal(map_, model_, x).value;
    });
    btilde_ = PeriodicField(u.period(), u.first(), u.step(), std::move(bt));
    raw_ = PeriodicField(u.period(), u.first(), u.step(), std::move(rd));
  }

  const ZvonkinMap& map() const { return map_; }
  const ModelSpec& model() const { return model_; }
  double btilde(double y) const { return btilde_(map_.inverse(y)); }
  double raw_drift(double y) const { return raw_(map_.inverse(y)); }
  double raw_drift_at(double x) const { return raw_(x); }
  double g(double y, double z) const {
    const double x = map_.inverse(y);
    return z + map_.u()(x + z) - map_.u()(x);
  }
  double sigma(double y, double z) const { return model_.sigma(map_.inverse(y), z); }

 private:
  ZvonkinMap map_;
  ModelSpec model_;
  PeriodicField btilde_, raw_;
};

//! max |b̃(x) − b̃(y)| / (|x − y| (1 + h(Φ^{−1}x) + h(Φ^{−1}y))) over the pairs; h ≡ 0 if the model declares none.
inline double fit_btilde_constant(const TransformedCoefficients& c, std::span<const std::pair<double, double>> pairs) {
  const auto& m = c.model();
  double C = 0.0;
  for (auto [x, y] : pairs) {
    const double hx = m.kato_h ? m.kato_h(c.map().inverse(x)) : 0.0;
    const double hy = m.kato_h ? m.kato_h(c.map().inverse(y)) : 0.0;
    C = std::max(C, std::abs(c.btilde(x) - c.btilde(y)) / (std::abs(x - y) * (1 + hx + hy)));
  }
  return C;
}

//! max |g̃(x,z) − g̃(y,z)| / (|x − y| |z|^γ) over pairs × jumps.
inline double fit_g_constant(const TransformedCoefficients& c, std::span<const std::pair<double, double>> pairs,
                             std::span<const double> jumps, double gamma) {
  double C = 0.0;
  for (auto [x, y] : pairs)
    for (double z : jumps)
      C = std::max(C, std::abs(c.g(x, z) - c.g(y, z)) / (std::abs(x - y) * std::pow(std::abs(z), gamma)));
  return C;
}

}  // namespace levi
