#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stratwalk/error.hpp"
#include "stratwalk/measure.hpp"

using namespace stratwalk;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

const ContinuedFraction& golden() {
  static const auto cf = ContinuedFraction::from_family(QuotientFamily{QuotientFamily::Kind::Constant, 1}, 40);
  return cf;
}

FourierSeries cos1(double a) { return FourierSeries{{0.0, a}, {}}; }

// f = u - T u for u = a cos(2 pi x).
FourierSeries planted_f(double a, const ContinuedFraction& cf) {
  const auto u = cos1(a);
  return u.plus(u.shifted(-cf.theta_double()).scaled(-1.0));
}

// CDF of the density e^{a cos(2 pi x)} / Z by the midpoint rule.
std::function<double(double)> tilted_cdf(double a) {
  const int M = 20000;
  auto cum = std::make_shared<std::vector<double>>(M + 1, 0.0);
  for (int i = 0; i < M; ++i) (*cum)[i + 1] = (*cum)[i] + std::exp(a * std::cos(kTwoPi * (i + 0.5) / M));
  const double Z = cum->back();
  return [cum, Z, M](double y) {
    const double p = std::clamp(y, 0.0, 1.0) * M;
    const int i = std::min(static_cast<int>(p), M - 1);
    return ((*cum)[i] + (p - i) * ((*cum)[i + 1] - (*cum)[i])) / Z;
  };
}

}  // namespace

TEST(NuF, ZeroCocycleIsEquidistributed) {
  const PiecewiseBV zero = PiecewiseBV::constant(0.0);
  const auto uniform = [](double y) { return y; };
  const auto m3 = nu_f_empirical(zero, golden(), 0.2, 1000);
  const auto m5 = nu_f_empirical(zero, golden(), 0.2, 100000);
  EXPECT_LT(m5.ks_distance(uniform), m3.ks_distance(uniform));
  EXPECT_LT(m5.ks_distance(uniform), 1e-3);
  for (double w : m5.weights) ASSERT_DOUBLE_EQ(w, m5.weights[0]);
}

TEST(NuF, PlantedCoboundaryHasDensityExpU) {
  const auto f = PiecewiseBV::fourier(planted_f(0.5, golden()));
  const auto m = nu_f_empirical(f, golden(), 0.31, 200000);
  EXPECT_LT(m.ks_distance(tilted_cdf(0.5)), 5e-3);
  EXPECT_GT(m.ks_distance(tilted_cdf(-0.5)), 0.05);  // the other orientation is far off
  long double tot = 0;
  for (double w : m.weights) {
    ASSERT_GT(w, 0.0);
    tot += w;
  }
  EXPECT_NEAR(static_cast<double>(tot), 1.0, 1e-14);
  const auto grid = m.cdf_grid(10);
  EXPECT_EQ(grid.front().second, 0.0);
  EXPECT_NEAR(grid.back().second, 1.0, 1e-14);
}

TEST(NuF, IntegralIsOrderInvariant) {
  const auto f = PiecewiseBV::sawtooth();
  auto m = nu_f_empirical(f, golden(), 0.1, 5000);
  const auto w = [](double y) { return std::sin(kTwoPi * y) + y * y; };
  const double a = m.integrate(w);
  std::mt19937_64 rng(1);
  std::vector<std::size_t> perm(m.locations.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  EmpiricalMeasure p;
  for (auto i : perm) {
    p.locations.push_back(m.locations[i]);
    p.weights.push_back(m.weights[i]);
  }
  EXPECT_NEAR(p.integrate(w), a, 1e-14);
}

TEST(ARatio, ConstantIsExact) {
  const auto f = PiecewiseBV::sawtooth();
  for (double c : {0.37, -2.5, 1e-7}) {
    const auto r = A_ratio(f, PiecewiseBV::constant(c), golden(), 0.123, 100000, {0.5, 0.9});
    EXPECT_EQ(r.value, c);
    EXPECT_EQ(r.spread_last_decade, 0.0);
    EXPECT_EQ(r.spread_x, 0.0);
  }
}

TEST(ARatio, ZeroCocycleCosineAveragesOut) {
  const auto r = A_ratio(PiecewiseBV::constant(0.0), PiecewiseBV::fourier(cos1(1.0)), golden(), 0.3, 1000000);
  EXPECT_LT(std::abs(r.value), 0.01);
  EXPECT_FALSE(r.trajectory.empty());
  EXPECT_EQ(r.trajectory.back().first, 1000000);
}

TEST(ARatio, TranslatedIntervalsDiffer) {
  // nu_f has density e^u / Z: nu(I) - nu(I + t) for I = [0, 0.1), t = 0.5.
  const auto f = PiecewiseBV::fourier(planted_f(0.5, golden()));
  const auto g = PiecewiseBV::indicator(0.0, 0.1).minus(PiecewiseBV::indicator(0.5, 0.6));
  const auto F = tilted_cdf(0.5);
  const double want = (F(0.1) - F(0.0)) - (F(0.6) - F(0.5));
  const auto small = A_ratio(f, g, golden(), 0.7, 100000);
  const auto large = A_ratio(f, g, golden(), 0.7, 1000000, {0.1, 0.4});
  EXPECT_NEAR(large.value, want, 2e-3);
  EXPECT_GT(std::abs(want), 0.05);
  EXPECT_LT(large.spread_x, 0.01);
  EXPECT_EQ(integral_sign(small, large), IntegralSign::Nonzero);

  const auto zero = PiecewiseBV::constant(0.0);
  const auto c = PiecewiseBV::fourier(cos1(1.0));
  EXPECT_EQ(integral_sign(A_ratio(zero, c, golden(), 0.3, 100000), A_ratio(zero, c, golden(), 0.3, 1000000)),
            IntegralSign::Centered);
}

TEST(FunctionalResidual, ZeroAndPlanted) {
  const PiecewiseBV zero = PiecewiseBV::constant(0.0);
  const auto tests = trig_test_set(4);
  ASSERT_EQ(tests.size(), 8u);
  const auto& cf = golden();
  // Along q_n horizons the Birkhoff discrepancy shrinks.
  const auto r10 = functional_residual(nu_f_empirical(zero, cf, 0.2, static_cast<std::int64_t>(cf.q(10))), zero, cf, tests);
  const auto r20 = functional_residual(nu_f_empirical(zero, cf, 0.2, static_cast<std::int64_t>(cf.q(20))), zero, cf, tests);
  EXPECT_LT(r20, r10);
  EXPECT_LT(r20, 1e-3);

  const auto f = PiecewiseBV::fourier(planted_f(0.5, cf));
  const double small = functional_residual(nu_f_empirical(f, cf, 0.3, 100), f, cf, tests);
  EXPECT_TRUE(std::isfinite(small));
  const double big = functional_residual(nu_f_empirical(f, cf, 0.3, 1000000), f, cf, tests);
  EXPECT_LT(big, 0.01);
  EXPECT_LT(big, small);
}

TEST(Coboundary, ConstructedAndGolden) {
  const auto& cf = golden();
  const auto r = fourier_coboundary(planted_f(1.0, cf), cf, 8);
  EXPECT_NEAR(r.u.cos_coef[1], 1.0, 1e-10);
  EXPECT_NEAR(r.u.sin_coef[1], 0.0, 1e-10);
  EXPECT_LT(r.residual, 1e-10);
  EXPECT_EQ(r.u.cos_coef[0], 0.0);

  // cos(2 pi x): u-hat(1) = 1 / (2 (1 - e^{2 pi i theta})).
  const auto c = fourier_coboundary(cos1(1.0), cf, 8);
  const double th = cf.theta_double();
  const double re = 1 - std::cos(kTwoPi * th), im = -std::sin(kTwoPi * th);
  const double den = 2 * (re * re + im * im);
  EXPECT_NEAR(c.u.cos_coef[1], 2 * re / den, 1e-12);
  EXPECT_NEAR(c.u.sin_coef[1], 2 * im / den, 1e-12);
  EXPECT_LT(c.residual, 1e-10);
  EXPECT_EQ(c.argmin_k, 1);

  // Random trigonometric polynomials round trip.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> N01;
  for (int trial = 0; trial < 5; ++trial) {
    FourierSeries f{{0.0}, {0.0}};
    for (int k = 1; k <= 20; ++k) {
      f.cos_coef.push_back(N01(rng) / (k * k));
      f.sin_coef.push_back(N01(rng) / (k * k));
    }
    EXPECT_LT(fourier_coboundary(f, cf, 20).residual, 1e-8);
  }
  try {
    fourier_coboundary(FourierSeries{{0.1, 1.0}, {}}, cf, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotCentered);
  }
}

TEST(Coboundary, LiouvilleLikeAngleBlowsUp) {
  const auto cf = ContinuedFraction::from_family(QuotientFamily{QuotientFamily::Kind::Doubling}, 6);
  FourierSeries f{{0.0}, {0.0}};
  for (int k = 1; k <= 4000; ++k) {
    f.cos_coef.push_back(1.0 / (static_cast<double>(k) * k));
    f.sin_coef.push_back(0.0);
  }
  try {
    fourier_coboundary(f, cf, 4000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SmallDivisorBlowup);
    const std::string what = e.what();
    EXPECT_NE(what.find("k = 3203"), std::string::npos) << what;
    EXPECT_NE(what.find("q = 3203"), std::string::npos) << what;
  }
  EXPECT_NO_THROW(fourier_coboundary(f, cf, 3000));
}

TEST(SolveH, AdditiveCasePlantedAndNotCentered) {
  const auto& cf = golden();
  const double th = cf.theta_double();
  const FourierSeries zero{{0.0}, {}};
  const auto r0 = solve_h(zero, [](double x) { return std::cos(kTwoPi * x); }, cf, 16);
  EXPECT_LT(r0.residual, 1e-9);

  const FourierSeries u0 = cos1(0.5);
  const FourierSeries H0{{0.0, 0.0, 0.1}, {0.0, 0.3}};
  const auto f = planted_f(0.5, cf);
  auto g = [&](double x) { return (H0(x) - H0(x + th)) * std::exp(-u0(x)); };
  const auto r = solve_h(f, g, cf, 32);
  EXPECT_LT(r.residual, 1e-8);
  double err = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x = (i + 0.5) / 1000;
    err = std::max(err, std::abs(r.h(x) - std::exp(-u0(x)) * H0(x)));
  }
  EXPECT_LT(err, 1e-8);

  try {
    solve_h(f, [](double) { return 1.0; }, cf, 16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotCentered);
  }
}

TEST(SampleFourier, RecoversTrigPolynomial) {
  const FourierSeries p{{0.3, -0.2, 0.0, 0.05}, {0.0, 0.7, -0.1}};
  const auto s = sample_fourier([&](double x) { return p(x); }, 5, 64);
  EXPECT_NEAR(s.cos_coef[0], 0.3, 1e-14);
  EXPECT_NEAR(s.cos_coef[1], -0.2, 1e-14);
  EXPECT_NEAR(s.cos_coef[3], 0.05, 1e-14);
  EXPECT_NEAR(s.sin_coef[1], 0.7, 1e-14);
  EXPECT_NEAR(s.sin_coef[2], -0.1, 1e-14);
  EXPECT_NEAR(s.cos_coef[5], 0.0, 1e-14);
}

TEST(RatioTrajectory, ZeroAndMildCoboundary) {
  const auto t0 = ratio_trajectory(PiecewiseBV::constant(0.0), golden(), 0.2, 10000);
  for (double r : t0.ratio) EXPECT_EQ(r, 1.0);
  const auto f = PiecewiseBV::fourier(planted_f(0.8, golden()));
  const auto t = ratio_trajectory(f, golden(), 0.45, 1000000);
  EXPECT_GT(t.tail_min, 0.0);
  EXPECT_LT(t.tail_max / t.tail_min, 1.05);
  EXPECT_LT(std::abs(t.log_slope), 0.01);
}

TEST(RatioTrajectory, PropiWeightsDominate) {
  // f = u - T u, so e^{f_k(x)} = e^{u(x) - u(T^k x)}. Along the orbit up to n,
  // v_+(n) <= (n + 1) e^{u(x) - min u} and w_+(n) >= e^{max u - u(x)}.
  const auto cf = ContinuedFraction::from_family(QuotientFamily{QuotientFamily::Kind::Power, 1, 6}, 8);
  const auto b = build_propi(cf, 3);
  const double x = 0.3;
  const std::int64_t N = 1000000;
  const auto t = ratio_trajectory(b.f, cf, x, N);
  const double ux = b.u(x);
  double umax = ux, umin = ux;
  std::size_t j = 0;
  const CirclePoint x0 = CirclePoint::from_double(x);
  for (std::int64_t k = 0; k <= N && j < t.n.size(); ++k) {
    const double uk = b.u(cf.rotate(x0, k));
    umax = std::max(umax, uk);
    umin = std::min(umin, uk);
    if (k == t.n[j]) {
      EXPECT_LE(t.ratio[j], (k + 1) * std::exp(2 * ux - umin - umax) * (1 + 1e-9)) << "n = " << k;
      ++j;
    }
  }
  // The orbit reaches the top half of the m = 3 pick: u >= m^2 / 2 there.
  EXPECT_GE(umax, 4.5);
  // Observed direction at this truncation: w_+ dominates, the ratio sinks below 1.
  EXPECT_LT(t.tail_min, 1.0);
  RecordProperty("propi_log_slope", std::to_string(t.log_slope));
  RecordProperty("propi_tail_max", std::to_string(t.tail_max));
}
