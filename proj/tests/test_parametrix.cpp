#include <gtest/gtest.h>

#include <cmath>

#include "levi/parametrix.hpp"

using namespace levi;

namespace {

ParametrixConfig small_config() {
  ParametrixConfig c;
  c.steps = 32;
  c.step = 1.0 / 16;
  c.core = 2.0;
  c.outer = 100.0;
  return c;
}

struct Built {
  ParametrixScheme scheme;
  ParametrixState state;
  KernelTable table;
};

const Built& default_model() {
  static const Built b = [] {
    ParametrixScheme s(presets::default_test(), small_config());
    auto st = sum_series(s);
    auto t = assemble_p(s, st);
    return Built{std::move(s), std::move(st), std::move(t)};
  }();
  return b;
}

}  // namespace

TEST(Parametrix, ConstantModelHasNoCorrection) {
  ParametrixScheme s(presets::cauchy_constant(), small_config());
  EXPECT_TRUE(s.trivial());
  auto st = sum_series(s);
  EXPECT_EQ(st.order, 0);
  EXPECT_EQ(detail::sup_abs(st.q), 0.0);
  auto t = assemble_p(s, st);
  for (int k = 1; k <= s.time().steps; ++k) EXPECT_TRUE((t.p_raw[k].array() == s.p0()[k].array()).all());
}

TEST(Parametrix, PicardStepOfZeroIsZero) {
  const auto& b = default_model();
  const int N = b.scheme.lattice().size();
  Sequence zero(b.scheme.time().steps + 1, Eigen::MatrixXd::Zero(N, N));
  EXPECT_EQ(detail::sup_abs(b.scheme.picard_step(zero, 2)), 0.0);
}

TEST(Parametrix, SeriesConvergesBelowTolerance) {
  const auto& b = default_model();
  EXPECT_GE(b.state.order, 1);
  EXPECT_LT(b.state.tail_bound, b.scheme.config().tolerance);
  EXPECT_LT(b.state.level_sup[1], b.state.level_sup[0]);
}

TEST(Parametrix, TailBoundDecreasesWithOrder) {
  double prev = picard_tail_bound(1.5, 0.6, 0);
  for (int n = 1; n < 30; ++n) {
    const double t = picard_tail_bound(1.5, 0.6, n);
    const double term = picard_majorant_coefficient(1.5, 0.6, n) / picard_majorant_coefficient(1.5, 0.6, 0);
    EXPECT_LT(t, prev);
    EXPECT_NEAR(prev - t, term, 1e-12 * prev);
    prev = t;
  }
}

TEST(Parametrix, RowsIntegrateToOne) {
  const auto& b = default_model();
  const auto& L = b.table.lattice;
  for (int k = 1; k <= b.table.time.steps; ++k)
    for (int i = 0; i < L.size(); ++i) {
      if (std::abs(L.nodes[i]) > L.core) continue;
      const double r = b.table.row_sum(k, i);
      EXPECT_NEAR(r, 1.0, 1e-2) << "t=" << b.table.time.t(k) << " x=" << L.nodes[i];
    }
}

TEST(Parametrix, KernelIsNonnegative) {
  const auto& b = default_model();
  EXPECT_EQ(b.table.clamped_cells, 0);
  EXPECT_GE(b.table.min_raw, -1e-3);
}

TEST(Parametrix, FixedPointResidualIsSmall) {
  const auto& b = default_model();
  const auto& L = b.scheme.lattice();
  std::vector<LatticeProbe> probes;
  for (double t : {0.5, 1.0})
    for (auto [x, y] : {std::pair{0.0, 0.5}, {1.0, 0.0}, {-0.75, 1.25}})
      probes.push_back({b.scheme.time().index_of(t), L.nearest(x), L.nearest(y)});
  auto r = q_equation_residual(b.scheme, b.state, probes, 8);
  EXPECT_LT(r.max_relative, 5e-3);
}

TEST(Parametrix, ChapmanKolmogorovWithinConservationError) {
  const auto& b = default_model();
  const auto& L = b.table.lattice;
  const auto& tg = b.table.time;
  struct Triple {
    double t, s, x, y;
  };
  for (auto p : {Triple{1, 0.5, 0, 0.5}, Triple{1, 0.25, 1, 0}, Triple{0.5, 0.25, -0.75, 1.25},
                 Triple{1, 0.75, 2, -1}, Triple{0.75, 0.5, 0.5, 0.5}}) {
    auto r = chapman_kolmogorov(b.table, tg.index_of(p.t), tg.index_of(p.s), L.nearest(p.x), L.nearest(p.y));
    EXPECT_LE(r.residual, r.tolerance) << "t=" << p.t << " s=" << p.s;
  }
}

namespace {

double constant_pde_residual(int per_unit) {
  ParametrixConfig c = small_config();
  c.steps = per_unit + 4;
  c.horizon = c.steps / static_cast<double>(per_unit);
  c.step = 1.0 / per_unit;
  ParametrixScheme s(presets::cauchy_constant(), c);
  auto T = assemble_p(s, sum_series(s));
  auto r = pde_residual(T, s.time().index_of(1.0), 1.0, s.lattice().nearest(0.0));
  EXPECT_TRUE(r.reliable);
  // Oracle: p = t / ((πt)² + x²), so ∂_t p = (x² − π²t²) / (π²t² + x²)² at t = x = 1.
  const double exact = (1.0 - pi * pi) / std::pow(pi * pi + 1.0, 2);
  EXPECT_NEAR(r.generator, exact, 1e-8);
  return r.relative;
}

}  // namespace

TEST(Parametrix, PdeResidualHalvesUnderRefinement) {
  const double coarse = constant_pde_residual(16);
  const double fine = constant_pde_residual(32);
  EXPECT_LE(coarse, 5e-3);
  EXPECT_LE(fine, 0.5 * coarse);
}

TEST(Parametrix, PdeResidualVariableModel) {
  ParametrixConfig c = small_config();
  c.steps = 36;
  c.horizon = 36.0 / 32;
  ParametrixScheme s(presets::default_test(), c);
  auto T = assemble_p(s, sum_series(s));
  for (double x : {1.0, -1.0}) {
    auto r = pde_residual(T, s.time().index_of(1.0), x, s.lattice().nearest(0.0));
    EXPECT_LE(r.relative, 5e-3) << "x=" << x;
  }
}
