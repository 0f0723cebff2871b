#include <gtest/gtest.h>

#include <cmath>

#include "levi/verifiers.hpp"

using namespace levi;

namespace {

ParametrixConfig small_grid() {
  ParametrixConfig c;
  c.steps = 32;
  c.step = 1.0 / 8;
  c.core = 4.0;
  c.outer = 100.0;
  return c;
}

const VerifyContext& constant_context() {
  static const VerifyContext c = [] {
    VerifyContext v;
    v.model = presets::cauchy_constant();
    v.coarse = build_kernel(v.model, small_grid());
    v.fine = build_kernel(v.model, small_grid().refined());
    v.times = {1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2};
    return v;
  }();
  return c;
}

const VerifyContext& default_context() {
  static const VerifyContext c = [] {
    VerifyContext v;
    v.model = presets::default_test();
    ResolventConfig rc;
    rc.kernel = small_grid();
    rc.kernel.step = 1.0 / 16;
    v.resolvent = std::make_shared<const ResolventRun>(solve_resolvent(v.model, rc));
    return v;
  }();
  return c;
}

}  // namespace

TEST(ExponentRegression, RecoversExactPowerLaw) {
  std::vector<double> t, q;
  for (int k = 0; k < 6; ++k) {
    t.push_back(std::pow(2.0, -k));
    q.push_back(3.0 * std::pow(t.back(), -1.5));
  }
  const auto f = exponent_regression(t, q, "power");
  EXPECT_NEAR(f.slope, -1.5, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-12);
  EXPECT_NEAR(f.half_width, 0.0, 1e-12);
  EXPECT_TRUE(f.within(-1.5, 1e-9));
}

TEST(ExponentRegression, RefusesFewerThanFivePoints) {
  const std::vector<double> t{1, 2, 3, 4}, q{1, 2, 3, 4};
  try {
    exponent_regression(t, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_spec);
  }
}

TEST(Verifier, UnknownBoundIsRejected) {
  try {
    verify_bound("eq99", constant_context());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_spec);
  }
}

TEST(Verifier, MissingArtifactsRaiseDependencyErrors) {
  VerifyContext c;
  c.model = presets::cauchy_constant();
  for (const char* id : {"eq16", "eqn", "kry2", "es2", "b"}) {
    try {
      verify_bound(id, c);
      ADD_FAILURE() << id;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::dependency) << id;
    }
  }
}

TEST(Verifier, EveryIdIsKnown) {
  EXPECT_EQ(bound_ids().size(), 23u);
}

// Oracle: for κ ≡ 1 and b ≡ 0 the kernel is the Cauchy density, p(t,x,x) = 1/(π²t), so t·p(t,x,x) = 1/π².
TEST(ConstantModel, DiagonalAgainstCauchy) {
  const auto r = verify_bound("eq16", constant_context());
  EXPECT_TRUE(r.passed);
  ASSERT_EQ(r.exponents.size(), 1u);
  EXPECT_NEAR(r.exponents[0].slope, -1.0, 1e-6);
  double oracle = 0.0;
  for (const auto& [k, v] : r.details)
    if (k == "cauchy_oracle") oracle = v;
  ASSERT_GT(oracle, 0.0);
  EXPECT_NEAR(r.constant, oracle, 0.2 * oracle);
}

TEST(ConstantModel, GradientSlope) {
  const auto r = verify_bound("eq17", constant_context());
  EXPECT_TRUE(r.passed);
  ASSERT_EQ(r.exponents.size(), 1u);
  EXPECT_NEAR(r.exponents[0].slope, -2.0, 1e-6);
}

TEST(ConstantModel, VariableCoefficientTermsVanish) {
  for (const char* id : {"00", "000", "eq3", "eq4", "con1", "con"}) {
    const auto r = verify_bound(id, constant_context());
    EXPECT_EQ(r.constant, 0.0) << id;
    EXPECT_EQ(r.drift, 0.0) << id;
    EXPECT_TRUE(r.passed) << id;
  }
}

TEST(ConstantModel, FrozenBoundsAreTwoSided) {
  for (const char* id : {"p0", "p00"}) {
    const auto r = verify_bound(id, constant_context());
    EXPECT_TRUE(r.passed) << id;
    EXPECT_GT(r.lower, 0.0) << id;
    EXPECT_LE(r.lower, r.constant) << id;
  }
}

TEST(ConstantModel, TrivialSeriesHasNoCorrection) {
  const auto r = verify_bound("eqn", constant_context());
  EXPECT_TRUE(r.finite());
  EXPECT_EQ(r.constant, 0.0);
}

TEST(DefaultModel, ResolventBoundsHold) {
  const auto& c = default_context();
  const auto es2 = verify_bound("es2", c);
  EXPECT_TRUE(es2.passed);
  EXPECT_LE(es2.constant, 0.5);
  const auto upd = verify_bound("upd", c);
  EXPECT_TRUE(upd.passed);
  EXPECT_GE(upd.constant, 1.0);
}

TEST(DefaultModel, TransformedCoefficientConstantsAreStable) {
  const auto& c = default_context();
  for (const char* id : {"b", "g"}) {
    const auto r = verify_bound(id, c);
    EXPECT_TRUE(r.finite()) << id;
    EXPECT_EQ(r.threshold, 0.2) << id;
    EXPECT_LE(r.drift, 0.2) << id;
  }
}

TEST(DefaultModel, ResolventGradientDecays) {
  const auto f = exponent_family("resolvent-gradient", default_context(), KernelArtifacts{});
  EXPECT_LT(f.slope, 0.0);
  EXPECT_GE(f.points, 5);
}
