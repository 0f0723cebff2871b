#include <cmath>

#include <gtest/gtest.h>

#include "levi/frozen.hpp"

using namespace levi;

TEST(Frozen, LowRankFitOfDefaultModel) {
  FrozenModel f(presets::default_test());
  EXPECT_EQ(f.factorization().rank(), 2);
  EXPECT_LT(f.factorization().max_fit_error(), 1e-12);
  EXPECT_LT(f.factorization().fit_error(0.123), 1e-12);
}

TEST(Frozen, VacuousFreezingIsStableKernel) {
  auto m = presets::cauchy_constant();
  FrozenModel f(m);
  StableKernel1D k(IsotropicKernelSpec<1>::constant(1.0));
  for (double t : {0.1, 1.0})
    for (double x : {-1.0, 0.0, 2.5}) EXPECT_NEAR(f.p0(t, x, 0.3), k(t, x - 0.3), 1e-10);
}

TEST(Frozen, ConstantDriftIsShift) {
  auto m = presets::cauchy_constant();
  m.b = [](double) { return 0.7; };
  m.b_sup = 0.7;
  FrozenModel f(m);
  StableKernel1D k(IsotropicKernelSpec<1>::constant(1.0));
  for (double x : {-1.0, 0.0, 2.5}) EXPECT_NEAR(f.p0(0.5, x, 0.2), k(0.5, x - 0.2 + 0.7 * 0.5), 1e-10);
  // q₀ ≡ 0: both coefficient differences vanish.
  EXPECT_EQ(f.q0(0.5, 1.0, 0.2), 0.0);
}

TEST(Frozen, DiagonalQ0IsZero) {
  FrozenModel f(presets::default_test());
  EXPECT_EQ(f.q0(0.3, 0.4, 0.4), 0.0);
}

TEST(Frozen, GradientMatchesFiniteDifference) {
  FrozenConfig cfg;
  cfg.oversample = 4.0;
  FrozenModel f(presets::default_test(), cfg);
  auto s = f.slices(0.2, 0.5, false);
  for (double x : {-1.0, 0.45, 0.6, 3.0}) {
    const double h = 1e-4;
    EXPECT_NEAR(s.grad_p0(x), (s.p0(x + h) - s.p0(x - h)) / (2 * h), 2e-7) << x;
  }
}

TEST(Frozen, Q0MatchesNonlocalQuadrature) {
  auto m = presets::default_test();
  FrozenModel f(m);
  for (double t : {0.05, 0.3, 1.0})
    for (auto [x, y] : {std::pair{0.9, 0.2}, std::pair{-1.5, 1.0}, std::pair{0.25, 0.2}}) {
      auto s = f.slices(t, y);
      auto field = [&](const Vec<1>& v) { return s.p0(v[0]); };
      auto dk = [&](const Vec<1>& z) { return m.kappa(x, z[0]) - m.kappa(y, z[0]); };
      RadialQuadrature q;
      q.feature_radii = {std::abs(x - y + s.shift), t};
      Vec<1> xv;
      xv[0] = x;
      const double h = 1e-5;
      const double oracle = apply_nonlocal<1>(field, xv, dk, q).value +
                            (m.b(x) - m.b(y)) * (s.p0(x + h) - s.p0(x - h)) / (2 * h);
      EXPECT_NEAR(f.q0(s, x, f.factorization().coefficients(x)), oracle, 1e-6 * std::max(1.0, std::abs(oracle)))
          << t << " " << x << " " << y;
    }
}

TEST(Frozen, LatticeTablesMatchPointwise) {
  FrozenModel f(presets::default_test());
  auto L = Lattice::graded(2.0, 0.25, 20.0, 1.3);
  auto T = f.tables(0.25, L);
  for (int i : {0, 5, 8, L.size() - 1})
    for (int j : {3, 8, 12}) {
      EXPECT_NEAR(T.p0(i, j), f.p0(0.25, L.nodes[i], L.nodes[j]), 1e-12);
      EXPECT_NEAR(T.q0(i, j), f.q0(0.25, L.nodes[i], L.nodes[j]), 1e-12);
    }
}
