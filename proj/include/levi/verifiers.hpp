#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "levi/core.hpp"
#include "levi/frozen.hpp"
#include "levi/mc.hpp"
#include "levi/parametrix.hpp"
#include "levi/quadrature.hpp"
#include "levi/resolvent.hpp"
#include "levi/scale.hpp"

namespace levi {

//! Least-squares slope of log q against log t.
struct ExponentFit {
  std::string name;
  double slope = 0.0;
  double intercept = 0.0;
  double standard_error = 0.0;
  double half_width = 0.0;  ///< 95% interval half width
  int points = 0;
  bool within(double target, double tol) const { return std::abs(slope - target) <= tol; }
};

namespace detail {

//! Two-sided 97.5% Student quantiles, df = 1..30.
inline double student_975(int df) {
  static constexpr double q[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                 2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                 2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  return df >= 1 && df <= 30 ? q[df - 1] : 1.96;
}

}  // namespace detail

inline ExponentFit exponent_regression(std::span<const double> t, std::span<const double> q, std::string name = {}) {
  require(t.size() == q.size(), ErrorKind::invalid_spec, "exponent regression needs paired samples");
  if (t.size() < 5) fail(ErrorKind::invalid_spec, "exponent regression needs at least 5 points, got " + std::to_string(t.size()));
  const int n = static_cast<int>(t.size());
  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    require(t[i] > 0 && q[i] > 0, ErrorKind::domain, "exponent regression needs positive samples");
    lx[i] = std::log(t[i]);
    ly[i] = std::log(q[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n, my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  ExponentFit f;
  f.name = std::move(name);
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = ly[i] - f.intercept - f.slope * lx[i];
    rss += e * e;
  }
  f.standard_error = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
  f.half_width = detail::student_975(n - 2) * f.standard_error;
  return f;
}

struct BoundReport {
  std::string id;
  double constant = 0.0;         ///< worst LHS / majorant on the refined artifacts
  double coarse_constant = 0.0;  ///< same on the base artifacts
  double lower = 0.0;            ///< smallest ratio, for two-sided bounds
  double drift = 0.0;            ///< |constant − coarse_constant| / constant
  double threshold = 0.25;
  std::string probes;
  std::vector<ExponentFit> exponents;
  std::vector<std::pair<std::string, double>> details;
  bool passed = false;

  bool finite() const { return std::isfinite(constant) && std::isfinite(coarse_constant); }
};

//! Tables for one grid level.
struct KernelArtifacts {
  std::shared_ptr<ParametrixScheme> scheme;
  ParametrixState state;
  KernelTable table;
};

inline std::shared_ptr<const KernelArtifacts> build_kernel(const ModelSpec& m, const ParametrixConfig& c) {
  auto a = std::make_shared<KernelArtifacts>();
  a->scheme = std::make_shared<ParametrixScheme>(m, c);
  a->state = sum_series(*a->scheme);
  a->table = assemble_p(*a->scheme, a->state);
  return a;
}

//! Artifacts a verification may draw on; absent entries raise a dependency error naming their module.
struct VerifyContext {
  ModelSpec model;
  std::shared_ptr<const KernelArtifacts> coarse, fine;
  std::shared_ptr<const ResolventRun> resolvent, fine_resolvent;
  std::vector<double> times{1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2};
  std::vector<double> distances{0.0, 0.1, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> centers{0.0, 1.0, 2.0};  ///< frozen points y
  std::vector<double> thetas;                  ///< Hölder orders; empty selects {β/2, 3β/4}
  double gamma = 0.5;                          ///< free exponent of (con1), (con)
  double threshold = 0.25;
  int pairs = 100;
  std::uint64_t seed = 1;

  std::vector<double> theta_list() const {
    if (!thetas.empty()) return thetas;
    const double b = std::min(model.beta, model.theta);
    return {0.5 * b, 0.75 * b};
  }
};

namespace detail {

[[noreturn]] inline void missing(const std::string& id, const std::string& module) {
  fail(ErrorKind::dependency, "bound " + id + " needs artifacts from the " + module + " module");
}

inline double rho(double gamma, double beta, double t, double r) { return scale_function(gamma, beta, t, std::abs(r), 1); }

//! ∫_ℝ |F(z)| |z|^{−2} dz for an even integrand given on z > 0, with panels graded about the scales.
template <class F>
double radial_abs_integral(F&& f, std::vector<double> scales) {
  std::vector<double> br;
  double top = 1.0;
  for (double s : scales)
    if (s > 0) {
      for (double c : {0.25, 0.5, 1.0, 2.0, 4.0}) br.push_back(c * s);
      top = std::max(top, 8 * s);
    }
  double lo = top;
  for (double s : br) lo = std::min(lo, s);
  for (double r = lo; r < top; r *= 2) br.push_back(r);
  auto g = [&](double z) { return z <= 0 ? 0.0 : std::abs(f(z)) / (z * z); };
  auto head = integrate_panels(g, 0.0, top, br, 1e-7, 12, 1e-14);
  auto tail = integrate_adaptive([&](double v) { return v <= 0 ? 0.0 : std::abs(f(1.0 / v)); }, 0.0, 1.0 / top, 1e-8);
  return 2.0 * (head.value + tail.value);
}

template <class F>
double delta(F&& f, double x, double z) {
  return f(x + z) + f(x - z) - 2.0 * f(x);
}

//! Probe pairs (x, x′ = x + δ) about y for Hölder quotients, x̃ the point nearer y.
inline std::vector<std::pair<double, double>> holder_pairs(double t, double y, std::span<const double> distances) {
  std::vector<std::pair<double, double>> v;
  for (double r : distances)
    for (double s : {-1.0, 1.0})
      for (double d : {0.25 * t, t, 4 * t}) {
        if (r == 0 && s < 0) continue;
        v.emplace_back(y + s * r, y + s * r + s * d);
      }
  return v;
}

inline double nearer(double a, double b, double y) { return std::abs(a - y) <= std::abs(b - y) ? a : b; }

//! Frozen-kernel level: the Fourier grid refines by doubling the oversampling and the extent.
inline std::shared_ptr<const FrozenModel> frozen_level(const VerifyContext& c, bool refined) {
  if (!refined && c.coarse) return c.coarse->table.frozen;
  FrozenConfig fc = c.coarse ? c.coarse->table.frozen->config() : FrozenConfig{};
  if (refined) {
    fc.oversample *= 2;
    fc.extent *= 2;
  }
  return std::make_shared<FrozenModel>(c.model, fc);
}

struct Ratios {
  double hi = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  void add(double v) {
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
};

//! Bounds on the frozen kernels Z^{κ(y,·)} and p₀.
inline Ratios frozen_ratios(const std::string& id, const VerifyContext& c, const FrozenModel& F) {
  Ratios R;
  const auto thetas = c.theta_list();
  for (double t : c.times)
    for (double y : c.centers) {
      auto S = F.slices(t, y, false);
      auto Z = [&](double w) { return S.z(w); };
      auto p0 = [&](double x) { return S.p0(x); };
      auto dint = [&](auto&& f, double x, std::vector<double> scales) {
        return radial_abs_integral([&](double z) { return delta(f, x, z); }, std::move(scales));
      };
      if (id == "p0" || id == "p1" || id == "p2") {
        for (double r : c.distances)
          for (double s : {-1.0, 1.0}) {
            const double w = s * r;
            if (id == "p0") R.add(Z(w) / rho(1, 0, t, w));
            if (id == "p1") R.add(std::abs(S.dz(w)) / rho(0, 0, t, w));
            if (id == "p2") R.add(dint(Z, w, {t, r}) / rho(0, 0, t, w));
          }
      } else if (id == "p00" || id == "frp0") {
        for (double r : c.distances)
          for (double s : {-1.0, 1.0}) {
            const double x = y + s * r;
            if (id == "p00") R.add(p0(x) / rho(1, 0, t, x - y));
            if (id == "frp0") R.add((std::abs(S.grad_p0(x)) + dint(p0, x, {t, r})) / rho(0, 0, t, x - y));
          }
      } else if (id == "p3" || id == "p02" || id == "p03") {
        // p3 is about the origin of Z, the others about y.
        const double o = id == "p3" ? 0.0 : y;
        auto f = [&](double x) { return id == "p3" ? Z(x) : p0(x); };
        auto g = [&](double x) { return id == "p3" ? S.dz(x) : S.grad_p0(x); };
        const std::vector<double> th = id == "p3" ? std::vector<double>{0.5, 1.0} : thetas;
        for (auto [x, x2] : holder_pairs(t, o, c.distances)) {
          double lhs;
          if (id == "p02")
            lhs = std::abs(g(x) - g(x2));
          else
            lhs = radial_abs_integral([&](double z) { return delta(f, x, z) - delta(f, x2, z); },
                                      {t, std::abs(x - o), std::abs(x2 - o), std::abs(x - x2)});
          const double xt = nearer(x, x2, o);
          for (double v : th) R.add(lhs / (std::pow(std::abs(x - x2), v) * rho(-v, 0, t, xt - o)));
        }
      } else if (id == "con1" || id == "con") {
        for (double y2 : c.centers) {
          if (y2 <= y) continue;
          double dk = 0.0;
          for (double z = 1e-3; z < 1e3; z *= 1.25)
            for (double s : {-1.0, 1.0}) dk = std::max(dk, std::abs(c.model.kappa(y, s * z) - c.model.kappa(y2, s * z)));
          if (dk == 0.0) {
            R.add(0.0);
            continue;
          }
          auto S2 = F.slices(t, y2, false);
          for (double r : c.distances)
            for (double s : {-1.0, 1.0}) {
              const double w = s * r;
              if (id == "con1")
                R.add(std::abs(Z(w) - S2.z(w)) / (dk * (rho(1, 0, t, w) + rho(1 - c.gamma, c.gamma, t, w))));
              else
                R.add(std::abs(S.dz(w) - S2.dz(w)) / (dk * (rho(0, 0, t, w) + rho(-c.gamma, c.gamma, t, w))));
            }
        }
      }
    }
  return R;
}

//! ∫ ∇_x p₀(t, x, y) dy, integrated against the y-independent reference ∇Z_{κ(x)}(x − y + b(x)t), whose integral is 0.
inline double drift_integral(const FrozenModel& F, double t, double x) {
  if (F.factorization().x_independent() && F.model().b_constant()) return 0.0;
  auto grid = F.grid_for(t);
  auto samples = F.symbol_samples(grid);
  auto Sx = F.slices(t, x, grid, samples, false);
  const double bx = F.model().b(x) * t;
  auto g = [&](double y) {
    auto Sy = F.slices(t, y, grid, samples, false);
    return Sy.grad_p0(x) - Sx.dz(x - y + bx);
  };
  std::vector<double> br;
  for (double s = t / 4; s < 64; s *= 2) {
    br.push_back(x - s);
    br.push_back(x + s);
  }
  auto v = integrate_panels(g, x - 64, x + 64, br, 1e-6, 8, 1e-12);
  return v.value;
}

inline Ratios drift_ratios(const std::string& id, const VerifyContext& c, const FrozenModel& F) {
  Ratios R;
  const double beta = std::min(c.model.beta, c.model.theta);
  for (double t : c.times) {
    std::vector<double> I;
    for (double x : c.centers) I.push_back(drift_integral(F, t, x));
    if (id == "00") {
      for (double v : I) R.add(std::abs(v) / std::pow(t, beta - 1));
      continue;
    }
    for (double th : c.theta_list())
      for (std::size_t a = 0; a < c.centers.size(); ++a)
        for (std::size_t b = a + 1; b < c.centers.size(); ++b) {
          const double dx = std::abs(c.centers[a] - c.centers[b]);
          R.add(std::abs(I[a] - I[b]) / (std::pow(dx, th) * std::pow(t, beta - th - 1)));
        }
  }
  return R;
}

//! p(t_k, ·, y_j) and its x-gradient: exact frozen part plus the interpolated 𝒬 column.
class KernelColumn {
 public:
  KernelColumn(const KernelTable& T, int k, int j)
      : T_(&T), j_(j), y_(T.lattice.nodes[j]), s_(T.frozen->slices(T.time.t(k), y_, false)),
        col_(T.conv[k].col(j).data(), T.conv[k].col(j).data() + T.lattice.size()) {}
  double y() const { return y_; }
  double p(double x) const { return s_.p0(x) + T_->lattice.interpolate(col_, x, y_); }
  double grad(double x) const { return s_.grad_p0(x) + T_->lattice.interpolate_derivative(col_, x); }

 private:
  const KernelTable* T_;
  int j_;
  double y_;
  FrozenSlices s_;
  std::vector<double> col_;
};

inline double cauchy_density(double t, double x) { return t / (pi * pi * t * t + x * x); }

inline Ratios table_ratios(const std::string& id, const VerifyContext& c, const KernelArtifacts& A,
                           std::vector<std::pair<std::string, double>>* details) {
  Ratios R;
  const auto& T = A.table;
  const auto& L = T.lattice;
  const double beta = std::min(c.model.beta, c.model.theta);
  double oracle = 0.0;
  for (double t : c.times) {
    const int k = T.time.index_of(t);
    require(k >= 1, ErrorKind::domain, "probe time is not on the kernel grid");
    for (double yc : c.centers) {
      if (std::abs(yc) + 1 > L.core) continue;
      const int j = L.nearest(yc);
      const double y = L.nodes[j];
      if (id == "eq16" || id == "eq17" || id == "f2") {
        KernelColumn P(T, k, j);
        if (id == "f2") {
          for (auto [x, x2] : holder_pairs(t, y, c.distances)) {
            const double xt = nearer(x, x2, y);
            const double lhs = std::abs(P.grad(x) - P.grad(x2));
            for (double th : c.theta_list())
              R.add(lhs / (std::pow(std::abs(x - x2), th) * std::pow(t, -th) * std::pow(std::abs(xt - y) + t, -2.0)));
          }
          continue;
        }
        for (double r : c.distances)
          for (double s : {-1.0, 1.0}) {
            const double x = y + s * r;
            const double env = std::pow(r + t, -2.0);
            if (id == "eq16") {
              R.add(P.p(x) / (t * env));
              oracle = std::max(oracle, cauchy_density(t, r) / (t * env));
            } else {
              R.add(std::abs(P.grad(x)) / env);
            }
          }
      } else if (id == "eq3" || id == "eq4") {
        const auto& q = A.state.q[k];
        for (double r : c.distances)
          for (double s : {-1.0, 1.0}) {
            const int i = L.nearest(y + s * r);
            const double d = L.nodes[i] - y;
            if (id == "eq3") {
              R.add(std::abs(q(i, j)) / (rho(0, beta, t, d) + rho(beta, 0, t, d)));
              continue;
            }
            for (int step : {1, 2, 4, 8}) {
              const int i2 = i + (s > 0 ? step : -step);
              if (i2 < 0 || i2 >= L.size()) continue;
              const double d2 = L.nodes[i2] - y, h = std::abs(d2 - d);
              for (double g : {0.25 * beta, 0.5 * beta}) {
                const double env = std::min(std::pow(h, beta - g), 1.0) *
                                   (rho(g, 0, t, d) + rho(g - beta, beta, t, d) + rho(g, 0, t, d2) + rho(g - beta, beta, t, d2));
                R.add(std::abs(q(i, j) - q(i2, j)) / env);
              }
            }
          }
      }
    }
  }
  if (details && id == "eq16") details->emplace_back("cauchy_oracle", oracle);
  return R;
}

//! sup over balls B of ∫₀^T 𝒯_s 1_B ds / ‖1_B‖_{L²}.
inline Ratios krylov_ratios(const VerifyContext& c, const KernelArtifacts& A) {
  Ratios R;
  const auto& T = A.table;
  const double H = T.time.horizon();
  for (double x0 : c.centers) {
    const int i = T.lattice.nearest(x0);
    const double x = T.lattice.nodes[i];
    for (double r : {0.125, 0.25, 0.5, 1.0}) {
      auto ball = [&](double y) { return std::abs(y - x) < r ? 1.0 : std::abs(y - x) == r ? 0.5 : 0.0; };
      R.add(kernel_krylov(T, x, ball, H) / std::sqrt(2 * r));
    }
  }
  return R;
}

}  // namespace detail

//! sup_x ∫|∇_x p(t, x, y)| dy = sup over ‖f‖_∞ ≤ 1 of |∇𝒯_t f(x)|, at the lattice rows nearest the probe points.
inline double semigroup_gradient_norm(const KernelTable& T, int k, std::span<const double> xs) {
  std::vector<int> rows;
  for (double x : xs) rows.push_back(T.lattice.nearest(x));
  const auto G = T.frozen->gradient_rows(T.time.t(k), T.lattice, rows);
  const int n = T.lattice.size();
  double best = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) v[j] = std::abs(G(r, j) + T.conv_grad_at(k, T.lattice.nodes[rows[r]], j));
    best = std::max(best, T.lattice.integrate(v, T.lattice.nodes[rows[r]]));
  }
  return best;
}

//! Named scaling families: "diagonal" p(t,x,x), "gradient" sup_x|∇_x p(t,·,y)|, "semigroup-gradient" ‖∇𝒯_t‖,
//! "resolvent-gradient" ‖∇u‖_∞ against λ.
inline ExponentFit exponent_family(const std::string& name, const VerifyContext& c, const KernelArtifacts& A,
                                   std::span<const double> ts = {}) {
  const auto& T = A.table;
  const auto& L = T.lattice;
  std::vector<double> t(ts.begin(), ts.end()), q;
  if (name == "resolvent-gradient") {
    if (!c.resolvent) detail::missing("resolvent-gradient", "resolvent");
    if (t.empty()) t = {8, 16, 32, 64, 128};
    for (double lam : t) q.push_back(resolvent_at(c.resolvent->data, lam, ResolventConfig{}.singular_nodes).grad_sup);
    return exponent_regression(t, q, name);
  }
  if (t.empty()) {
    if (name == "semigroup-gradient")
      for (double s = 1.0 / 16; s <= T.time.horizon() + 1e-12; s *= 2) t.push_back(s);
    else
      t = c.times;
  }
  for (double s : t) {
    const int k = T.time.index_of(s);
    require(k >= 1, ErrorKind::domain, "family time is not on the kernel grid");
    if (name == "diagonal") {
      double v = 0.0;
      for (double y : c.centers) {
        const int j = L.nearest(y);
        v = std::max(v, detail::KernelColumn(T, k, j).p(L.nodes[j]));
      }
      q.push_back(v);
    } else if (name == "gradient") {
      double v = 0.0;
      for (double y : c.centers) {
        const int j = L.nearest(y);
        detail::KernelColumn P(T, k, j);
        for (int m = -160; m <= 160; ++m) v = std::max(v, std::abs(P.grad(P.y() + m * s / 40.0)));
      }
      q.push_back(v);
    } else if (name == "semigroup-gradient") {
      q.push_back(semigroup_gradient_norm(T, k, c.centers));
    } else {
      fail(ErrorKind::invalid_spec, "unknown scaling family '" + name + "'");
    }
  }
  return exponent_regression(t, q, name);
}

inline const std::vector<std::string>& bound_ids() {
  static const std::vector<std::string> ids{"p0",  "p1",  "p2",  "p3",  "con1", "con", "p00", "frp0",
                                            "p02", "p03", "00",  "000", "eqn",  "eq3", "eq4", "eq16",
                                            "eq17", "f2", "es2", "upd", "b",    "g",   "kry2"};
  return ids;
}

namespace detail {

inline double relative_drift(double fine, double coarse) {
  if (fine == coarse) return 0.0;
  return std::abs(fine - coarse) / std::max(std::abs(fine), std::abs(coarse));
}

inline void finish(BoundReport& r, const Ratios& coarse, const Ratios& fine, bool two_sided = false) {
  auto fit = [&](const Ratios& R) { return two_sided ? std::max(R.hi, R.lo > 0 ? 1.0 / R.lo : INFINITY) : R.hi; };
  r.coarse_constant = fit(coarse);
  r.constant = fit(fine);
  r.lower = fine.lo;
  r.drift = relative_drift(r.constant, r.coarse_constant);
  r.passed = r.finite() && r.drift <= r.threshold;
}

inline std::vector<std::pair<double, double>> random_pairs(int n, double period, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> x(-period, period), d(1e-3, 1.0);
  std::vector<std::pair<double, double>> v;
  for (int i = 0; i < n; ++i) {
    const double a = x(g);
    v.emplace_back(a, a + d(g));
  }
  return v;
}

}  // namespace detail

inline BoundReport verify_bound(const std::string& id, const VerifyContext& c) {
  BoundReport r;
  r.id = id;
  r.threshold = c.threshold;
  const std::string grid = "t in {2^-6..2^-1}, |x-y| in {0,0.1,0.5,1,2,4}, y in centers";
  static const std::vector<std::string> frozen_ids{"p0", "p1", "p2", "p3", "con1", "con", "p00", "frp0", "p02", "p03"};
  if (std::find(frozen_ids.begin(), frozen_ids.end(), id) != frozen_ids.end()) {
    auto a = detail::frozen_ratios(id, c, *detail::frozen_level(c, false));
    auto b = detail::frozen_ratios(id, c, *detail::frozen_level(c, true));
    r.probes = grid + "; refinement doubles the Fourier oversampling and extent";
    detail::finish(r, a, b, id == "p0" || id == "p00");
    return r;
  }
  if (id == "00" || id == "000") {
    auto a = detail::drift_ratios(id, c, *detail::frozen_level(c, false));
    auto b = detail::drift_ratios(id, c, *detail::frozen_level(c, true));
    r.probes = "t in {2^-6..2^-1}, x in centers; refinement doubles the Fourier oversampling and extent";
    detail::finish(r, a, b);
    return r;
  }
  if (id == "eqn") {
    if (!c.coarse || !c.fine) detail::missing(id, "parametrix");
    r.coarse_constant = c.coarse->state.fitted_cd;
    r.constant = c.fine->state.fitted_cd;
    r.drift = detail::relative_drift(r.constant, r.coarse_constant);
    bool monotone = true;
    const auto& lr = c.fine->state.level_ratio;
    for (std::size_t n = 1; n < std::min<std::size_t>(lr.size(), 5); ++n) {
      monotone = monotone && lr[n] <= lr[n - 1] * (1 + 1e-12);
      r.details.emplace_back("level_ratio_" + std::to_string(n), lr[n]);
    }
    r.details.emplace_back("order", c.fine->state.order);
    r.details.emplace_back("tail_bound", c.fine->state.tail_bound);
    r.details.emplace_back("monotone", monotone ? 1.0 : 0.0);
    r.probes = "core lattice, all time nodes, levels n = 0..4";
    r.passed = r.finite() && monotone && r.drift <= r.threshold;
    return r;
  }
  if (id == "eq3" || id == "eq4" || id == "eq16" || id == "eq17" || id == "f2") {
    if (!c.coarse || !c.fine) detail::missing(id, "parametrix");
    auto a = detail::table_ratios(id, c, *c.coarse, nullptr);
    auto b = detail::table_ratios(id, c, *c.fine, &r.details);
    r.probes = grid + "; refinement halves the time step and the lattice step";
    detail::finish(r, a, b);
    if (id == "eq16") r.exponents.push_back(exponent_family("diagonal", c, *c.fine));
    if (id == "eq17") r.exponents.push_back(exponent_family("gradient", c, *c.fine));
    return r;
  }
  if (id == "kry2") {
    if (!c.coarse || !c.fine) detail::missing(id, "parametrix");
    r.probes = "balls of radius {1/8,1/4,1/2,1} about the centers, p = 2, T = table horizon";
    detail::finish(r, detail::krylov_ratios(c, *c.coarse), detail::krylov_ratios(c, *c.fine));
    return r;
  }
  if (id == "es2" || id == "upd" || id == "b" || id == "g") {
    if (!c.resolvent) detail::missing(id, "resolvent");
    const auto& s0 = c.resolvent->solution;
    if (id == "es2" || id == "upd") {
      const auto& s1 = c.fine_resolvent ? c.fine_resolvent->solution : s0;
      auto value = [&](const ResolventSolution& s) {
        if (id == "es2") return s.u_sup + s.grad_sup;
        return std::max(1 + s.grad_sup, 1 / (1 - s.grad_sup));
      };
      r.coarse_constant = value(s0);
      r.constant = value(s1);
      r.drift = detail::relative_drift(r.constant, r.coarse_constant);
      const double limit = id == "es2" ? 0.5 : 2.0;
      r.details.emplace_back("lambda", s1.lambda);
      r.details.emplace_back("limit", limit);
      r.probes = c.fine_resolvent ? "resolvent grid and its refinement" : "resolvent grid (no refinement supplied)";
      r.passed = r.finite() && r.constant <= limit && r.coarse_constant <= limit && r.drift <= r.threshold;
      return r;
    }
    TransformedCoefficients tc(ZvonkinMap(s0), c.model);
    const double P = c.model.period;
    auto p1 = detail::random_pairs(c.pairs, P, c.seed), p2 = detail::random_pairs(2 * c.pairs, P, c.seed + 1);
    if (id == "b") {
      r.coarse_constant = fit_btilde_constant(tc, p1);
      r.constant = fit_btilde_constant(tc, p2);
    } else {
      const double g = 0.5;
      std::vector<double> jumps;
      for (double z = 1.0 / 64; z <= 4.0; z *= 2) jumps.push_back(z);
      r.coarse_constant = fit_g_constant(tc, p1, jumps, g);
      r.constant = fit_g_constant(tc, p2, jumps, g);
      r.details.emplace_back("gamma", g);
    }
    r.threshold = 0.2;
    r.drift = detail::relative_drift(r.constant, r.coarse_constant);
    r.probes = std::to_string(c.pairs) + " random pairs, doubled";
    r.passed = r.finite() && r.drift <= r.threshold;
    return r;
  }
  fail(ErrorKind::invalid_spec, "unknown bound id '" + id + "'");
}

}  // namespace levi
