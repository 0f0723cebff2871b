#include <cmath>

#include <gtest/gtest.h>

#include "levi/nonlocal.hpp"
#include "levi/scale.hpp"

using namespace levi;

namespace {
Vec<1> v1(double x) {
  Vec<1> v;
  v[0] = x;
  return v;
}
}  // namespace

TEST(Symbol, ConstantKernelAtOneIsPi) {
  auto spec = IsotropicKernelSpec<1>::constant(1.0);
  EXPECT_NEAR(levy_symbol<1>(v1(1.0), spec), pi, 1e-6);
}

TEST(Symbol, ZeroFrequencyIsZero) {
  auto spec = IsotropicKernelSpec<1>::constant(1.0);
  EXPECT_EQ(levy_symbol<1>(v1(0.0), spec), 0.0);
}

TEST(Symbol, HomogeneousForConstantKernel) {
  auto spec = IsotropicKernelSpec<1>::constant(0.7);
  for (double xi : {0.01, 0.3, 1.0, 7.0, 250.0}) {
    const double a = levy_symbol<1>(v1(xi), spec), b = levy_symbol<1>(v1(2 * xi), spec);
    EXPECT_NEAR(b, 2 * a, 1e-8 * std::max(1.0, b)) << xi;
  }
}

TEST(Symbol, ExponentialModeMatchesClosedForm) {
  IsotropicKernelSpec<1> spec;
  spec.kappa_bar = [](const Vec<1>& z) { return std::exp(-std::abs(z[0])); };
  spec.lower = 1e-300;
  for (double xi : {0.05, 1.0, 3.0, 40.0}) {
    const double exact = 2.0 * (xi * std::atan(xi) - 0.5 * std::log1p(xi * xi));
    EXPECT_NEAR(levy_symbol<1>(v1(xi), spec), exact, 1e-9 * std::max(1.0, exact)) << xi;
  }
}

TEST(Symbol, TwoDimensionalConstant) {
  auto spec = IsotropicKernelSpec<2>::constant(1.0);
  EXPECT_NEAR(levy_symbol<2>(Vec<2>(0.6, 0.8), spec), 2 * pi, 1e-8);
  spec.angle_only = false;
  EXPECT_NEAR(levy_symbol<2>(Vec<2>(0.6, 0.8), spec), 2 * pi, 1e-7);
}

TEST(Nonlocal, CosineAtZero) {
  auto one = [](const Vec<1>&) { return 1.0; };
  auto f = [](const Vec<1>& x) { return std::cos(x[0]); };
  auto r = apply_nonlocal<1>(f, v1(0.0), one, RadialQuadrature{.far_radius = 256});
  EXPECT_NEAR(r.value, -pi, 1e-4);
}

TEST(Nonlocal, AffineAndConstantVanish) {
  auto one = [](const Vec<1>&) { return 1.0; };
  auto lin = [](const Vec<1>& x) { return 3.0 * x[0] - 1.0; };
  auto c = [](const Vec<1>&) { return 2.5; };
  EXPECT_NEAR(apply_nonlocal<1>(lin, v1(0.4), one).value, 0.0, 1e-10);
  EXPECT_EQ(apply_nonlocal<1>(c, v1(0.4), one).value, 0.0);
}

TEST(SecondDifference, QuadraticExact) {
  auto f = [](const Vec<1>& x) { return x[0] * x[0]; };
  EXPECT_NEAR(second_difference<1>(f, v1(1.7), v1(0.3)), 2 * 0.09, 1e-14);
}

TEST(Scale, BetaFunction) { EXPECT_NEAR(beta_function(0.5, 0.5), pi, 1e-12); }

#include "levi/fourier.hpp"

TEST(Poisson, ClosedFormAndMass) {
  EXPECT_NEAR(poisson_kernel(1.0, 0.0, 1), 1.0 / pi, 1e-15);
  EXPECT_EQ(poisson_kernel(0.3, 0.7, 1), poisson_kernel(0.3, -0.7, 1));
  auto m = integrate_adaptive([](double v) { return v <= 0 ? 0.0 : 2 * poisson_kernel(0.5, (1 - v) / v, 1) / (v * v); },
                              0.0, 1.0, 1e-13);
  EXPECT_NEAR(m.value, 1.0, 1e-8);
  EXPECT_THROW(poisson_kernel(0.0, 1.0, 1), Error);
}

TEST(StableKernel, CauchyAtOrigin) {
  auto spec = IsotropicKernelSpec<1>::constant(1.0);
  StableKernel1D k(spec);
  EXPECT_NEAR(k(1.0, 0.0), 1.0 / (pi * pi), 1e-4);
  for (double x : {0.3, 2.0, 11.0, 50.0}) {
    const double exact = (1 / pi) * pi / (pi * pi + x * x);
    EXPECT_NEAR(k(1.0, x), exact, 1e-10) << x;
    EXPECT_EQ(k(1.0, x), k(1.0, -x));
  }
}

TEST(StableKernel, VariableKernelMatchesDirectInversion) {
  IsotropicKernelSpec<1> spec;
  spec.kappa_bar = [](const Vec<1>& z) { return 1.0 + 0.5 * std::exp(-std::abs(z[0])); };
  spec.lower = 1.0;
  spec.upper = 1.5;
  StableKernel1D k(spec);
  for (double t : {0.05, 0.25, 1.0}) {
    auto z = k.slice(t);
    for (double x : {0.0, 0.1, 1.3, 6.0}) {
      // Oracle: adaptive cosine integral of exp(−tψ) with the closed-form symbol.
      auto psi = [](double xi) { return pi * xi + 0.5 * 2.0 * (xi * std::atan(xi) - 0.5 * std::log1p(xi * xi)); };
      static boost::math::quadrature::ooura_fourier_cos<double> oc;
      const double ref = x == 0.0 ? integrate_adaptive([&](double v) { return v <= 0 ? 0.0 : std::exp(-t * psi((1 - v) / v)) / (v * v); }, 0, 1, 1e-13).value / pi
                                  : oc.integrate([&](double xi) { return std::exp(-t * psi(xi)); }, x).first / pi;
      EXPECT_NEAR(z(x), ref, 1e-7 * std::max(1.0, ref)) << t << " " << x;
    }
  }
}

TEST(StableKernel, PlanarConstantIsPoisson) {
  auto spec = IsotropicKernelSpec<2>::constant(1.0);
  StableKernel2D k(spec);
  for (double r : {0.0, 0.4, 3.0})
    EXPECT_NEAR(k(0.5, Vec<2>(r * 0.6, r * 0.8)), poisson_kernel(2 * pi * 0.5, r, 2), 1e-10);
}

TEST(ConvolutionIdentity, ConstantKernel) {
  auto spec = IsotropicKernelSpec<1>::constant(1.0);
  EXPECT_LE(convolution_identity_check(1.0, spec).max_residual, 1e-3);
}

namespace {
IsotropicKernelSpec<1> bumpy_spec() {
  IsotropicKernelSpec<1> s;
  s.kappa_bar = [](const Vec<1>& z) { return 1.0 + 0.5 * std::exp(-std::abs(z[0])); };
  s.lower = 1.0;
  s.upper = 1.5;
  return s;
}

// ∫ f over ℝ with unit panels on [−L, L] and 1/v tails.
template <class F>
double line_integral(F&& f, double L = 64.0, std::vector<double> extra = {}) {
  for (double b = -L; b <= L; b += 1.0) extra.push_back(b);
  auto core = integrate_panels(f, -L, L, extra, 1e-13, 15);
  auto tails = integrate_adaptive([&](double v) { return v <= 0 ? 0.0 : (f(L / v) + f(-L / v)) * L / (v * v); }, 0.0,
                                  1.0, 1e-13, 12);
  return core.value + tails.value;
}
}  // namespace

TEST(Symbol, RejectsAsymmetricKernel) {
  IsotropicKernelSpec<1> s;
  s.kappa_bar = [](const Vec<1>& z) { return z[0] > 0 ? 1.0 : 1.2; };
  s.upper = 1.2;
  try {
    SymbolProfile::from_spec(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_spec);
  }
}

TEST(StableKernel, LatticeSumNormalization) {
  StableKernel1D k(bumpy_spec());
  auto z = k.slice(0.25);
  const double h = 1.0 / 8, L = 400.0;
  double s = 0.0;
  for (int i = -static_cast<int>(L / h); i <= static_cast<int>(L / h); ++i) s += h * z(i * h);
  s += 2.0 * z(L) * L;  // inverse-square tail
  EXPECT_NEAR(s, 1.0, 1e-4);
}

TEST(StableKernel, PlanarLatticeSumNormalization) {
  auto spec = IsotropicKernelSpec<2>::constant(1.0);
  spec.kappa_bar = [](const Vec<2>& z) { return 1.0 + 0.3 * z[0] * z[0] / z.squaredNorm(); };
  spec.upper = 1.3;
  spec.angle_only = true;
  StableKernel2D k(spec, 256);
  const double h = 0.1, L = 20.0, t = 0.25;
  const int n = static_cast<int>(L / h);
  double s = 0.0;
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j) {
      const double w = (std::abs(i) == n ? 0.5 : 1.0) * (std::abs(j) == n ? 0.5 : 1.0);
      s += w * h * h * k(t, Vec<2>(i * h, j * h));
    }
  // Outside the square, Z ≈ C|x|^{−3} with the direction average taken from the two axes.
  const double c = 0.5 * (k(t, Vec<2>(L, 0)) + k(t, Vec<2>(0, L))) * L * L * L;
  s += c * 4.0 * std::sqrt(2.0) / L;
  EXPECT_NEAR(s, 1.0, 1e-3);
}

TEST(StableKernel, ChapmanKolmogorov) {
  StableKernel1D k(bumpy_spec());
  for (double t : {0.25, 0.5})
    for (double s : {0.25, 0.5}) {
      auto zt = k.slice(t), zs = k.slice(s), zts = k.slice(t + s);
      for (double x : {0.0, 0.7, 3.0}) {
        const double c = line_integral([&](double y) { return zt(x - y) * zs(y); }, 64.0, {x, 0.0});
        EXPECT_NEAR(c, zts(x), 1e-6) << t << " " << s << " " << x;
      }
    }
}

TEST(StableKernel, TwoSidedAndGradientBoundsStable) {
  auto fit = [](double oversample) {
    StableKernel1D k(SymbolProfile::from_spec(bumpy_spec()), 32.0, oversample);
    double lo = 1e300, hi = 0, g = 0;
    for (double t : {1.0 / 64, 1.0 / 16, 0.25, 1.0}) {
      auto z = k.slice(t);
      auto dz = gradient_slice(k.symbol(), t, k.grid_for(t));
      for (double x = -16; x <= 16; x += 0.125) {
        const double r = z(x) / scale_function(1, 0, t, std::abs(x), 1);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        g = std::max(g, std::abs(dz(x)) / scale_function(0, 0, t, std::abs(x), 1));
      }
    }
    return std::array<double, 3>{hi, 1.0 / lo, g};
  };
  auto a = fit(4.0), b = fit(8.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(std::isfinite(a[i]));
    EXPECT_NEAR(a[i] / b[i], 1.0, 0.1) << i;
  }
}

TEST(StableKernel, GradientSliceMatchesFiniteDifference) {
  StableKernel1D k(bumpy_spec());
  const double t = 0.3;
  auto z = k.slice(t);
  auto dz = gradient_slice(k.symbol(), t, k.grid_for(t));
  for (double x : {-2.0, 0.05, 0.4, 5.0}) {
    const double h = 1e-4;
    EXPECT_NEAR(dz(x), (z(x + h) - z(x - h)) / (2 * h), 1e-6) << x;
  }
}

TEST(StableKernel, ScalingSlope) {
  StableKernel1D k(bumpy_spec());
  std::vector<double> lx, ly;
  for (int j = 1; j <= 6; ++j) {
    const double t = std::pow(2.0, -j);
    auto z = k.slice(t);
    double m = 0;
    for (double x = -1; x <= 1; x += 1e-3) m = std::max(m, z(x));
    lx.push_back(std::log(t));
    ly.push_back(std::log(m));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / lx.size(), my += ly[i] / ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  EXPECT_NEAR(sxy / sxx, -1.0, 0.1);
}

TEST(SecondDifference, KernelPeakIsConcave) {
  StableKernel1D k(IsotropicKernelSpec<1>::constant(1.0));
  auto z = k.slice(1.0);
  auto f = [&](const Vec<1>& x) { return z(x[0]); };
  EXPECT_LT(second_difference<1>(f, v1(0.0), v1(0.1)), 0.0);
}

TEST(ConvolutionIdentity, VariableKernelAndTimes) {
  auto s = bumpy_spec();
  const double r1 = convolution_identity_check(1.0, s).max_residual;
  const double r05 = convolution_identity_check(0.5, s).max_residual;
  EXPECT_LE(r1, 1e-6);
  EXPECT_LE(r05, 1e-6);
  EXPECT_EQ(convolution_identity_check(1.0, s, {}, 0.0).max_residual, 0.0);
}
