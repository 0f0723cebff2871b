#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "levi/mc.hpp"

using namespace levi;

namespace {

ParametrixConfig small_kernel() {
  ParametrixConfig c;
  c.steps = 32;
  c.step = 1.0 / 16;
  c.core = 2.0;
  c.outer = 100.0;
  return c;
}

KernelTable build_table(const ModelSpec& m) {
  ParametrixScheme s(m, small_kernel());
  auto st = sum_series(s);
  return assemble_p(s, st);
}

const KernelTable& cauchy_table() {
  static const KernelTable T = build_table(presets::cauchy_constant());
  return T;
}

double cauchy_cdf(double x, double t) { return 0.5 + std::atan(x / (pi * t)) / pi; }

ModelSpec driftless_default() {
  auto m = presets::default_test();
  m.name = "default-test-driftless";
  m.b = [](double) { return 0.0; };
  m.b_sup = 0.0;
  m.b_holder = 0.0;
  return m;
}

}  // namespace

TEST(Noise, SameSeedSameRealization) {
  auto spec = LevyNoiseSpec::for_model(presets::default_test(), 1e-2);
  auto a = sample_noise(spec, 2.0, 42), b = sample_noise(spec, 2.0, 42), c = sample_noise(spec, 2.0, 43);
  EXPECT_EQ(a.t, b.t);
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.r, b.r);
  EXPECT_NE(a.t, c.t);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a.t[i - 1], a.t[i]);
}

TEST(Noise, LevyMeasureMasses) {
  const double eps = 1e-2;
  auto spec = LevyNoiseSpec::make(IsotropicKernelSpec<1>::constant(1.0), eps, 1.0);
  EXPECT_NEAR(spec.nu_big, 2.0, 1e-10);
  EXPECT_NEAR(spec.nu_mid, 2.0 * (1.0 / eps - 1.0), 1e-8);
  EXPECT_NEAR(spec.small_variance, 2.0 * eps, 1e-12);
  EXPECT_THROW(LevyNoiseSpec::make(IsotropicKernelSpec<1>::constant(1.0), 1.5, 1.0), Error);
}

TEST(Noise, BigJumpCountMatchesIntensity) {
  auto spec = LevyNoiseSpec::make(IsotropicKernelSpec<1>::constant(1.0), 1e-2, 1.0);
  const double T = 4.0;
  const int paths = 2000;
  long big = 0, mid = 0;
  for (int i = 0; i < paths; ++i) {
    auto n = sample_noise(spec, T, path_seed(11, i));
    for (double z : n.z) (std::abs(z) > 1 ? big : mid)++;
  }
  EXPECT_NEAR(static_cast<double>(big) / paths, 2 * T, 3 * std::sqrt(2 * T / paths));
  const double m = spec.nu_mid * T;
  EXPECT_NEAR(static_cast<double>(mid) / paths, m, 3 * std::sqrt(m / paths));
}

TEST(Noise, ThinningAtHalfIntensity) {
  auto spec = LevyNoiseSpec::make(IsotropicKernelSpec<1>::constant(1.0), 1e-2, 1.0);
  Dynamics d{[](double) { return 0.0; }, [](double x, double z) { return x + z; }, [](double, double) { return 0.5; }};
  long events = 0, accepted = 0;
  for (int i = 0; i < 200; ++i) {
    auto n = sample_noise(spec, 1.0, path_seed(5, i));
    events += static_cast<long>(n.size());
    accepted += simulate_path(0.0, d, n, 1.0 / 64, 1.0 / 8).accepted;
  }
  const double ratio = static_cast<double>(accepted) / events;
  EXPECT_NEAR(ratio, 0.5, 3 * std::sqrt(0.25 / events));
}

TEST(Simulation, EnsembleIsDeterministic) {
  EnsembleConfig c;
  c.paths = 64;
  c.horizon = 0.5;
  c.seed = 9;
  auto a = simulate_ensemble(presets::default_test(), c), b = simulate_ensemble(presets::default_test(), c);
  EXPECT_EQ(a.paths, b.paths);
  c.seed = 10;
  auto d = simulate_ensemble(presets::default_test(), c);
  EXPECT_NE(a.paths, d.paths);
}

TEST(Simulation, DriftOnlyPathIsEuler) {
  NoiseRealization none;
  none.horizon = 1.0;
  Dynamics d{[](double x) { return -x; }, [](double x, double z) { return x + z; }, [](double, double) { return 1.0; }};
  for (auto scheme : {DriftScheme::split, DriftScheme::frozen}) {
    auto tr = simulate_path(1.0, d, none, 1.0 / 8, 1.0 / 8, scheme);
    ASSERT_EQ(tr.x.size(), 9u);
    EXPECT_NEAR(tr.x.back(), std::pow(7.0 / 8, 8), 1e-14);
  }
}

TEST(Simulation, CauchyLawMatches) {
  EnsembleConfig c;
  c.paths = 20000;
  c.dt = 1.0 / 64;
  c.record_dt = 0.25;
  auto E = simulate_ensemble(presets::cauchy_constant(), c);
  for (double t : {0.25, 0.5, 1.0})
    EXPECT_LT(ks_distance(E.samples(E.time_index(t)), [t](double x) { return cauchy_cdf(x, t); }), 0.02) << t;
}

TEST(Density, RejectsSmallSamples) {
  EXPECT_THROW(DensityEstimate(std::vector<double>(9999, 0.0)), Error);
  try {
    DensityEstimate(std::vector<double>(100, 0.0));
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::too_few_samples);
  }
}

TEST(Density, GaussianSamples) {
  std::mt19937_64 g(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> s(20000);
  for (double& v : s) v = n(g);
  DensityEstimate f(s);
  EXPECT_NEAR(f.mass(), 1.0, 1e-6);
  EXPECT_NEAR(f.bandwidth(), 0.9 * std::pow(20000.0, -0.2), 0.02);
  for (double x : {-1.0, 0.0, 0.5, 2.0}) {
    const double exact = std::exp(-0.5 * x * x) / std::sqrt(2 * pi);
    EXPECT_NEAR(f(x), exact, 4 * f.standard_error(x) + 0.01) << x;
  }
}

TEST(Density, SymmetricModelGivesEvenDensity) {
  EnsembleConfig c;
  c.paths = 20000;
  c.horizon = 0.5;
  c.record_dt = 0.5;
  auto E = simulate_ensemble(driftless_default(), c);
  auto f = density_estimate(E, 0.5);
  int inside = 0;
  for (int i = 0; i < 10; ++i) {
    const double x = (i + 0.5) * f.bandwidth();
    inside += std::abs(f(x) - f(-x)) <= 2 * std::hypot(f.standard_error(x), f.standard_error(-x));
  }
  EXPECT_GE(inside, 8);
  std::vector<double> v(E.count());
  for (int i = 0; i < E.count(); ++i) v[i] = std::tanh(E.paths(i, 1));
  const double mean = pairwise_sum(v) / v.size();
  double var = 0.0;
  for (double a : v) var += (a - mean) * (a - mean);
  EXPECT_LT(std::abs(mean), 3 * std::sqrt(var / (v.size() - 1) / v.size()));
}

TEST(Density, CompareAgainstCauchyTable) {
  const auto& T = cauchy_table();
  EnsembleConfig c;
  c.paths = 20000;
  c.horizon = 0.5;
  c.dt = 1.0 / 64;
  c.record_dt = 1.0 / 32;
  auto E = simulate_ensemble(presets::cauchy_constant(), c);
  auto r = compare_density(E, T, 0.5);
  EXPECT_LT(r.l1, 0.08);
  EXPECT_LT(r.ks, 0.02);
  E.model_hash ^= 1;
  try {
    compare_density(E, T, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::model_mismatch);
  }
}

TEST(Kato, ConstantFunction) {
  const std::vector<double> probes{-1.0, 0.0, 2.5};
  for (double T : {0.1, 0.5, 2.0}) {
    auto k = kato_norm({[](double) { return 1.0; }}, T, probes);
    EXPECT_TRUE(k.finite);
    EXPECT_NEAR(k.value, 4 * T, 1e-8);
  }
}

TEST(Kato, IntegrableSingularity) {
  KatoFunction h{[](double x) { return 1.0 / std::sqrt(std::abs(x)); }, KatoFunction::Class::explicit_k1, {0.0}};
  const double T = 0.5;
  const std::vector<double> probes{0.0};
  auto k = kato_norm(h, T, probes);
  ASSERT_TRUE(k.finite);
  EXPECT_NEAR(k.value, 16.0 / 3.0 * std::sqrt(T), 1e-5);
}

TEST(Kato, NonIntegrableSingularityIsInfinite) {
  KatoFunction h{[](double x) { return 1.0 / std::abs(x); }, KatoFunction::Class::explicit_k1, {0.0}};
  const std::vector<double> probes{0.0};
  auto k = kato_norm(h, 0.5, probes);
  EXPECT_FALSE(k.finite);
  EXPECT_TRUE(std::isinf(k.value));
}

TEST(Krylov, UnitFunctionGivesHorizon) {
  EnsembleConfig c;
  c.paths = 100;
  c.horizon = 0.5;
  auto E = simulate_ensemble(presets::default_test(), c);
  auto m = krylov_functional(E, [](double) { return 1.0; }, 0.5);
  EXPECT_NEAR(m.mean, 0.5, 1e-12);
  EXPECT_NEAR(m.standard_error, 0.0, 1e-12);
  const auto& T = cauchy_table();
  double cons = 0.0;
  for (int k = 1; k <= T.time.steps; ++k) cons = std::max(cons, conservation_error(T, k));
  EXPECT_NEAR(kernel_krylov(T, 0.0, [](double) { return 1.0; }, 1.0), 1.0, cons + 1e-12);
}

TEST(Krylov, MonteCarloAgreesWithKernel) {
  const auto& T = cauchy_table();
  EnsembleConfig c;
  c.paths = 20000;
  c.horizon = 1.0;
  c.dt = 1.0 / 64;
  c.record_dt = 1.0 / 32;
  auto E = simulate_ensemble(presets::cauchy_constant(), c);
  auto ball = [](double x) { return std::abs(x) < 1 ? 1.0 : std::abs(x) == 1 ? 0.5 : 0.0; };
  auto mc = krylov_functional(E, ball, 1.0);
  EXPECT_NEAR(mc.mean, kernel_krylov(T, 0.0, ball, 1.0), 3 * mc.standard_error);
  auto twice = krylov_functional(E, [&](double x) { return 2 * ball(x); }, 1.0);
  EXPECT_NEAR(twice.mean, 2 * mc.mean, 1e-12);
}

TEST(Generator, CosineAtDefaultModel) {
  EnsembleConfig c;
  c.paths = 40000;
  c.horizon = 0.1;
  c.dt = 1.0 / 2048;
  c.record_dt = 0.01;
  c.x0 = 0.3;
  auto g = generator_check(presets::default_test(), c, [](double x) { return std::cos(x); },
                           [](double x) { return -std::sin(x); });
  EXPECT_LT(g.z_score(), 3.0) << g.estimate << " vs " << g.exact;
}

TEST(Uniqueness, HolderDriftErrorsDecrease) {
  auto m = presets::holder_drift();
  auto rep = pathwise_uniqueness_experiment(model_dynamics(m), LevyNoiseSpec::for_model(m, 1e-3), 0.0, 1.0,
                                            {1.0 / 512, 1.0 / 1024, 1.0 / 2048, 1.0 / 4096}, 1000, 3);
  ASSERT_EQ(rep.errors.size(), 3u);
  EXPECT_TRUE(rep.strictly_decreasing());
}

TEST(Coupling, IdentityMapWithoutDriftIsExact) {
  auto m = driftless_default();
  TransformedCoefficients c(ZvonkinMap::identity(2 * pi, 1.0 / 16), m);
  auto r = zvonkin_coupled_run(m, c, 1e-2, 0.3, 1.0, 1.0 / 256, 1.0 / 64, 50, 2);
  EXPECT_EQ(r.distance, 0.0);
}

TEST(Coupling, DefaultModelWithinBaseline) {
  auto m = presets::default_test();
  ResolventConfig cfg;
  cfg.kernel = small_kernel();
  cfg.kernel.core = 4.0;
  auto run = solve_resolvent(m, cfg);
  TransformedCoefficients c(ZvonkinMap(run.solution), m);
  auto r = zvonkin_coupled_run(m, c, 1e-3, 0.0, 1.0, 1.0 / 512, 1.0 / 64, 2000, 5);
  EXPECT_LE(r.distance, 3 * r.baseline);
}
