#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stratwalk/dispersion.hpp"
#include "stratwalk/error.hpp"

using namespace stratwalk;

namespace {

using ld = long double;

std::shared_ptr<const ContinuedFraction> golden() {
  return std::make_shared<ContinuedFraction>(
      ContinuedFraction::from_family(QuotientFamily{QuotientFamily::Kind::Constant, 1}, 40));
}

std::shared_ptr<const PiecewiseBV> fn(PiecewiseBV f) { return std::make_shared<PiecewiseBV>(std::move(f)); }

std::shared_ptr<Environment> cp_periodic() {
  const double t = 1.0 / 3.0;
  return Environment::periodic({StratumLaw::make(t, t, t, {{1, 1.0}}), StratumLaw::make(t, t, t, {{-1, 1.0}})}, 0.3);
}

std::shared_ptr<Environment> skew_periodic() {
  return Environment::periodic({StratumLaw::make(0.2, 0.5, 0.3, {{1, 1.0}}),
                                StratumLaw::make(0.45, 0.25, 0.3, {{-1, 0.5}, {2, 0.5}}),
                                StratumLaw::make(0.3, 0.3, 0.4, {{-1, 1.0}})},
                               0.1);
}

std::shared_ptr<Environment> general_saw() {
  return Environment::general(fn(PiecewiseBV::sawtooth().scaled(1.5)),
                              fn(PiecewiseBV::fourier({{0.1, 0.3}, {0.0, -0.2}})), golden(), 0.377, 0.25, 0.1);
}

std::shared_ptr<Environment> general_ind() {
  return Environment::general(fn(PiecewiseBV::indicator_pm().scaled(0.7)), fn(PiecewiseBV::indicator(0.0, 0.5).scaled(0.3)),
                              golden(), 0.61, 1.0 / 3.0, 0.1);
}

std::shared_ptr<Environment> flat_saw() {
  return Environment::vertically_flat(fn(PiecewiseBV::sawtooth()), golden(), 0.2, 1.0 / 3.0, 0.2);
}

std::shared_ptr<Environment> ramp() {
  return Environment::explicit_rule(
      [](std::int64_t n) {
        const double t = 1.0 / 3.0;
        return StratumLaw::make(t, t, t, {{n >= 1 ? 1 : -1, 1.0}});
      },
      0.3, true, "ramp");
}

// Independent per-index data straight from the strata.
struct Oracle {
  std::int64_t H;
  std::vector<ld> rho, g;
  ld pref;
  ld r(std::int64_t k) const { return rho[static_cast<std::size_t>(k + H)]; }
  ld gg(std::int64_t k) const { return g[static_cast<std::size_t>(k + H)]; }

  Oracle(const Environment& env, std::int64_t H_) : H(H_) {
    rho.assign(static_cast<std::size_t>(2 * H + 1), 1);
    g.assign(rho.size(), 0);
    auto ratio = [&](std::int64_t n) {
      const auto& s = env.stratum(n);
      return static_cast<ld>(s.beta) / s.alpha;
    };
    for (std::int64_t k = 1; k <= H; ++k) rho[static_cast<std::size_t>(k + H)] = r(k - 1) * ratio(k);
    for (std::int64_t k = -1; k >= -H; --k) rho[static_cast<std::size_t>(k + H)] = r(k + 1) / ratio(k + 1);
    for (std::int64_t k = -H; k <= H; ++k) {
      const auto& s = env.stratum(k);
      g[static_cast<std::size_t>(k + H)] = static_cast<ld>(s.gamma) * s.epsilon / s.alpha;
    }
    pref = ratio(0);
  }

  ld phi2(std::int64_t A, std::int64_t B, bool unit = false) const {
    ld tot = 0;
    for (std::int64_t k = -A; k <= B; ++k) {
      ld inner = 0;
      for (std::int64_t l = k; l <= B; ++l) {
        inner += (unit ? 1 : gg(l)) / r(l);
        const ld ratio_terms = unit ? 0 : r(l) / r(k) + r(k) / r(l);
        tot += ratio_terms + r(k) * r(l) * inner * inner;
      }
    }
    return tot;
  }
  std::int64_t end_plus(double y) const {
    ld v = 0;
    std::int64_t j = -1;
    for (std::int64_t k = 0; k <= H; ++k) {
      v += r(k);
      if (v <= y) j = k;
      else break;
    }
    return std::max<std::int64_t>(0, j);
  }
  std::int64_t end_minus(double y) const {
    ld v = 0;
    std::int64_t j = -1;
    for (std::int64_t k = 0; k < H; ++k) {
      v += r(-k - 1);
      if (pref * v <= y) j = k;
      else break;
    }
    return std::max<std::int64_t>(0, j);
  }
};

// f_k for the flat functions, from the strata.
std::vector<ld> flat_cocycle(const Environment& env, std::int64_t H) {
  std::vector<ld> F(static_cast<std::size_t>(2 * H + 1), 0);
  auto summand = [&](std::int64_t i) {
    const auto& s = env.stratum(i);
    return static_cast<ld>(s.epsilon) * s.gamma / (1 - s.gamma);
  };
  for (std::int64_t k = 1; k <= H; ++k) F[static_cast<std::size_t>(k + H)] = F[static_cast<std::size_t>(k - 1 + H)] + summand(k - 1);
  for (std::int64_t k = -1; k >= -H; --k) F[static_cast<std::size_t>(k + H)] = F[static_cast<std::size_t>(k + 1 + H)] - summand(k);
  return F;
}

ld brute_psi(const std::vector<ld>& F, std::int64_t H, std::int64_t a, std::int64_t b) {
  ld s = 0;
  for (std::int64_t k = a; k <= b; ++k)
    for (std::int64_t l = k + 1; l <= b; ++l) {
      const ld d = F[static_cast<std::size_t>(l + H)] - F[static_cast<std::size_t>(k + H)];
      s += d * d;
    }
  return s;
}

void expect_rel(double got, ld want, double tol, const std::string& what) {
  EXPECT_LE(std::abs(static_cast<ld>(got) - want), tol * std::max<ld>(1, std::abs(want))) << what << " got " << got
                                                                                          << " want " << static_cast<double>(want);
}

DispersionOptions general_mode() {
  DispersionOptions o;
  o.mode = DispersionOptions::Mode::General;
  return o;
}

}  // namespace

TEST(Rho, ZeroCocycleAndProducts) {
  auto zero = fn(PiecewiseBV::constant(0.0));
  auto env0 = Environment::general(zero, zero, golden(), 0.3, 1.0 / 3.0, 0.3);
  auto t0 = DispersionTable::build(*env0, 50, general_mode());
  for (std::int64_t k = -50; k <= 50; ++k) EXPECT_EQ(t0.log_rho(k), 0.0);

  auto env = general_saw();
  auto t = DispersionTable::build(*env, 50);
  EXPECT_EQ(t.log_rho(0), 0.0);
  ld prod = 1;
  for (int i = 1; i <= 3; ++i) prod *= static_cast<ld>(env->stratum(i).beta) / env->stratum(i).alpha;
  EXPECT_NEAR(std::exp(t.log_rho(3)), static_cast<double>(prod), 1e-12 * static_cast<double>(prod));
}

TEST(VW, ZeroAndBruteForce) {
  auto zero = fn(PiecewiseBV::constant(0.0));
  auto env0 = Environment::general(zero, zero, golden(), 0.3, 1.0 / 3.0, 0.3);
  auto t0 = DispersionTable::build(*env0, 40, general_mode());
  for (std::int64_t n = 0; n < 39; ++n) {
    const auto vw = t0.v_w(n);
    EXPECT_DOUBLE_EQ(vw.v_plus, n + 1.0);
    EXPECT_DOUBLE_EQ(vw.v_minus, n + 1.0);
    EXPECT_DOUBLE_EQ(vw.w_plus, n + 1.0);
    EXPECT_DOUBLE_EQ(vw.w_minus, n + 1.0);
  }
  auto env = general_saw();
  Oracle o(*env, 40);
  auto t = DispersionTable::build(*env, 40);
  const auto vw = t.v_w(2);
  expect_rel(vw.v_plus, o.r(0) + o.r(1) + o.r(2), 1e-13, "v+");
  expect_rel(vw.v_minus, o.pref * (o.r(-1) + o.r(-2) + o.r(-3)), 1e-13, "v-");
  expect_rel(vw.w_plus, 1 / o.r(0) + 1 / o.r(1) + 1 / o.r(2), 1e-13, "w+");
  expect_rel(vw.w_minus, (1 / o.pref) * (1 / o.r(-1) + 1 / o.r(-2) + 1 / o.r(-3)), 1e-13, "w-");
}

TEST(Psi, Examples) {
  DispersionInput in;
  in.H = 5;
  for (std::int64_t k = -5; k <= 5; ++k) in.flat_cocycle.push_back(static_cast<double>(k));
  auto t = DispersionTable::from_input(in);
  EXPECT_DOUBLE_EQ(t.psi(1, 3), 6.0);

  auto zero = Environment::vertically_flat(fn(PiecewiseBV::constant(0.0)), golden(), 0.1, 1.0 / 3.0, 0.3);
  auto tz = DispersionTable::build(*zero, 100);
  EXPECT_EQ(tz.psi(-100, 100), 0.0);
  EXPECT_THROW(tz.psi(3, 3), Error);
}

TEST(Psi, ClosedFormMatchesDoubleSumOnRandomWindows) {
  const std::int64_t H = 200000;
  std::mt19937_64 rng(2024);
  for (auto env : {flat_saw(), ramp()}) {
    auto t = DispersionTable::build(*env, H);
    const auto F = flat_cocycle(*env, H);
    for (int i = 0; i < 500; ++i) {
      const std::int64_t len = std::uniform_int_distribution<std::int64_t>(1, 199)(rng);
      const std::int64_t a = std::uniform_int_distribution<std::int64_t>(-H, H - len)(rng);
      const ld want = brute_psi(F, H, a, a + len);
      EXPECT_LE(std::abs(t.psi(a, a + len) - want), 1e-10 * std::max<ld>(1, want)) << a << " " << len;
    }
  }
}

TEST(FlatPhi, BruteForceAndZero) {
  for (auto env : {flat_saw(), ramp(), cp_periodic()}) {
    const std::int64_t H = 200;
    auto t = DispersionTable::build(*env, H);
    const auto F = flat_cocycle(*env, H);
    for (std::int64_t n = 0; n <= 120; n += 7) {
      const ld p2 = static_cast<ld>(n) * n + brute_psi(F, H, -n, n);
      const ld pp2 = static_cast<ld>(n) * n + brute_psi(F, H, -n, 0) + brute_psi(F, H, 0, n);
      const auto [p, pp] = t.flat_phi(n);
      expect_rel(p, std::sqrt(p2), 1e-10, "phi");
      expect_rel(pp, std::sqrt(pp2), 1e-10, "phi+");
    }
  }
  auto zero = Environment::vertically_flat(fn(PiecewiseBV::constant(0.0)), golden(), 0.1, 1.0 / 3.0, 0.3);
  auto tz = DispersionTable::build(*zero, 1000);
  for (std::int64_t n : {0, 1, 17, 1000}) {
    EXPECT_DOUBLE_EQ(tz.flat_phi(n).first, static_cast<double>(n));
    EXPECT_DOUBLE_EQ(tz.flat_phi(n).second, static_cast<double>(n));
  }
  auto general = general_saw();
  EXPECT_THROW(DispersionTable::build(*general, 10, [] {
    DispersionOptions o;
    o.mode = DispersionOptions::Mode::Flat;
    return o;
  }()),
               Error);
  auto tg = DispersionTable::build(*general, 10);
  try {
    tg.flat_phi(3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WrongKind);
  }
}

TEST(FlatPhi, RampGrowsQuadratically) {
  auto env = ramp();
  auto t = DispersionTable::build(*env, 20000);
  // f_k ~ |k|/2, so psi(-n, n) ~ (2n) (n^3/6) - (n^2/2)^2 = n^4/12.
  for (std::int64_t n : {1000, 10000, 20000}) {
    const double r = t.flat_phi(n).first / (static_cast<double>(n) * n);
    EXPECT_NEAR(r, 1.0 / std::sqrt(12.0), 2e-3 * 1000.0 / n);
  }
}

TEST(GeneralPhi, MatchesBruteForceOnFiveEnvironments) {
  const std::int64_t H = 220;
  std::mt19937_64 rng(9);
  for (auto env : {cp_periodic(), skew_periodic(), general_saw(), general_ind(), flat_saw()}) {
    Oracle o(*env, H);
    auto t = DispersionTable::build(*env, H, general_mode());
    // Explicit windows.
    for (int i = 0; i < 40; ++i) {
      const std::int64_t A = std::uniform_int_distribution<std::int64_t>(0, 100)(rng);
      const std::int64_t B = std::uniform_int_distribution<std::int64_t>(0, 100)(rng);
      expect_rel(static_cast<double>(t.window_phi2(A, B)), o.phi2(A, B), 1e-8, "Phi2");
      expect_rel(static_cast<double>(t.window_drift2(A, B, true)), o.phi2(A, B, true), 1e-8, "Psi2");
    }
    expect_rel(static_cast<double>(t.window_phi2(0, 0)), 2 + o.gg(0) * o.gg(0), 1e-14, "Phi(0,0)");
    // Level-indexed functions.
    for (std::int64_t n = 0; n <= 150; n += 5) {
      const auto A = o.end_minus(static_cast<double>(n)), B = o.end_plus(static_cast<double>(n));
      if (A > 150 || B > 150) continue;
      ASSERT_EQ(t.end_minus(static_cast<double>(n)), A) << n;
      ASSERT_EQ(t.end_plus(static_cast<double>(n)), B) << n;
      const auto A0 = o.end_minus(0.0);
      expect_rel(t.phi(n), std::sqrt(o.phi2(A, B)), 1e-8, "Phi");
      expect_rel(t.general_phi(static_cast<double>(n), 0.0), std::sqrt(o.phi2(A, 0)), 1e-8, "Phi(-n,0)");
      expect_rel(t.phi_plus(n), std::sqrt(o.phi2(A, 0) + o.phi2(A0, B)), 1e-8, "Phi+");
      ld I = 0;
      for (std::int64_t k = -A; k <= B; ++k) I += 1 / o.r(k);
      expect_rel(t.phi_str(n), std::sqrt(n * I), 1e-8, "Phi_str");
      const auto pv = t.psi_variants(n);
      const ld pp = o.phi2(0, B, true), pm = o.phi2(A, 0, true);
      expect_rel(pv.Psi, std::sqrt(o.phi2(A, B, true)), 1e-8, "Psi");
      expect_rel(pv.Psi_plusplus, std::sqrt(pp), 1e-8, "Psi++");
      expect_rel(pv.Psi_plusminus, std::sqrt(pm), 1e-8, "Psi+-");
      expect_rel(pv.Psi_plus, std::sqrt(pp + pm - 1), 1e-8, "Psi+");
    }
  }
}

TEST(GeneralPhi, ZeroEnvironmentForms) {
  auto zero = fn(PiecewiseBV::constant(0.0));
  auto one = fn(PiecewiseBV::constant(1.0));
  auto env = Environment::general(zero, zero, golden(), 0.3, 1.0 / 3.0, 0.3);
  auto t = DispersionTable::build(*env, 30000, general_mode());
  // Window [-(n-1), n-1], all terms 2: Phi^2 = 2 n (2n - 1).
  for (std::int64_t n : {1, 2, 10, 1000, 20000}) {
    EXPECT_NEAR(t.phi(n), std::sqrt(2.0 * n * (2.0 * n - 1.0)), 1e-9 * n);
    EXPECT_NEAR(t.phi_str(n), std::sqrt(n * (2.0 * n - 1.0)), 1e-9 * n);
  }
  EXPECT_NEAR(t.phi(20000) / 20000.0, 2.0, 1e-4);
  EXPECT_NEAR(t.phi_str(20000) / 20000.0, std::sqrt(2.0), 1e-4);
  // Psi_{++}^2(n) = sum_{0<=k<=l<=n-1} (l-k+1)^2 = sum_{d=1}^{n} (n-d+1) d^2.
  for (std::int64_t n : {1, 5, 300}) {
    ld want = 0;
    for (std::int64_t d = 1; d <= n; ++d) want += static_cast<ld>(n - d + 1) * d * d;
    expect_rel(t.psi_variants(n).Psi_plusplus, std::sqrt(want), 1e-12, "Psi++ zero");
  }
  // Phi_+ is sqrt 2 times the half window.
  for (std::int64_t n : {10, 500})
    EXPECT_NEAR(t.phi_plus(n), std::sqrt(2.0) * t.general_phi(0.0, static_cast<double>(n)), 1e-9 * n);
  EXPECT_NEAR(t.phi_plus(0), std::sqrt(2.0) * std::sqrt(2.0), 1e-15);

  // g = 1: inner sum is l - k + 1.
  auto env1 = Environment::general(zero, one, golden(), 0.3, 1.0 / 3.0, 0.1);
  Oracle o(*env1, 120);
  auto t1 = DispersionTable::build(*env1, 120, general_mode());
  for (std::int64_t n = 1; n <= 100; n += 9) {
    ld want = 0;
    for (std::int64_t k = -(n - 1); k <= n - 1; ++k)
      for (std::int64_t l = k; l <= n - 1; ++l) want += 2 + static_cast<ld>(l - k + 1) * (l - k + 1);
    expect_rel(t1.phi(n), std::sqrt(want), 1e-12, "g=1");
  }
}

TEST(Monotone, AllFunctionsNondecreasing) {
  for (auto env : {skew_periodic(), general_saw(), general_ind()}) {
    auto t = DispersionTable::build(*env, 4000);
    for (Fn f : {Fn::Phi, Fn::PhiPlus, Fn::PhiStr, Fn::PhiEq, Fn::PhiPlusEq, Fn::Psi, Fn::PsiPlus, Fn::PsiPlusPlus,
                 Fn::PsiPlusMinus}) {
      const auto h = std::min<std::int64_t>(t.level_horizon(f), 3000);
      double prev = -1;
      for (std::int64_t n = 0; n <= h; ++n) {
        const double v = t.value(f, n);
        ASSERT_GE(v, prev) << to_string(f) << " n=" << n;
        prev = v;
      }
    }
  }
  for (auto env : {flat_saw(), ramp()}) {
    auto t = DispersionTable::build(*env, 5000);
    double p = -1, pp = -1;
    for (std::int64_t n = 0; n <= 5000; ++n) {
      const auto [a, b] = t.flat_phi(n);
      ASSERT_GE(a, p);
      ASSERT_GE(b, pp);
      ASSERT_GE(b, static_cast<double>(n));
      ASSERT_LE(b, a * (1 + 1e-15));
      p = a;
      pp = b;
    }
  }
}

TEST(Ordering, StructureBelowPhiPlusAndEquivalentForms) {
  for (auto env : {skew_periodic(), general_saw(), general_ind(), cp_periodic()}) {
    auto t = DispersionTable::build(*env, 20000, general_mode());
    const auto h = std::min<std::int64_t>(t.level_horizon(Fn::Phi), 10000);
    double lo = 1e300, hi = 0, str = 0;
    for (std::int64_t n = 1; n <= h; n = n + 1 + n / 20) {
      const double r = t.value(Fn::PhiPlusEq, n) / t.phi_plus(n);
      const double r2 = t.value(Fn::PhiEq, n) / t.phi(n);
      lo = std::min({lo, r, r2});
      hi = std::max({hi, r, r2});
      str = std::max(str, t.phi_str(n) / t.phi_plus(n));
      // The (0,0) term is counted in both halves.
      EXPECT_LE(t.phi_plus(n), std::sqrt(2.0) * t.phi(n) * (1 + 1e-12));
    }
    EXPECT_GT(lo, 0.2);
    EXPECT_LT(hi, 5.0);
    EXPECT_LT(str, 2.0);
  }
}

TEST(Psi, ReverseTriangleAndSuperadditivity) {
  const std::int64_t H = 50000;
  std::mt19937_64 rng(77);
  for (auto env : {flat_saw(), ramp()}) {
    auto t = DispersionTable::build(*env, H);
    std::uniform_int_distribution<std::int64_t> pick(-H, H);
    int tested = 0;
    while (tested < 10000) {
      std::int64_t a = pick(rng), b = pick(rng), c = pick(rng);
      if (a > b) std::swap(a, b);
      if (b > c) std::swap(b, c);
      if (a > b) std::swap(a, b);
      if (!(a < b - 1 && b + 1 < c)) continue;
      ++tested;
      const double ac = t.psi(a, c), ab = t.psi(a, b - 1), bc = t.psi(b + 1, c);
      ASSERT_GE(std::sqrt(ac) + 1e-12 * std::sqrt(ac), std::sqrt(ab) + std::sqrt(bc)) << a << " " << b << " " << c;
      const double lhs = ac / static_cast<double>(c - a);
      const double rhs = ab / static_cast<double>(b - a) + bc / static_cast<double>(c - b);
      ASSERT_GE(lhs * (1 + 1e-12) + 1e-12, rhs) << a << " " << b << " " << c;
    }
  }
}

TEST(FlatPhi, DoublingThreshold) {
  // phi_+(2n) >= 2^{1/4} phi_+(n) past some n0.
  const std::int64_t N = 100000;
  auto env = Environment::vertically_flat(fn(PiecewiseBV::indicator_pm().scaled(0.5)), golden(), 0.3, 1.0 / 3.0, 0.2);
  auto t = DispersionTable::build(*env, 2 * N);
  const double k = std::pow(2.0, 0.25);
  std::int64_t n0 = 1;
  for (std::int64_t n = 1; n <= N; ++n)
    if (t.flat_phi(2 * n).second < k * t.flat_phi(n).second) n0 = n + 1;
  RecordProperty("n0", std::to_string(n0));
  EXPECT_LE(n0, N);
  auto zero = Environment::vertically_flat(fn(PiecewiseBV::constant(0.0)), golden(), 0.1, 1.0 / 3.0, 0.3);
  auto tz = DispersionTable::build(*zero, 2000);
  for (std::int64_t n = 1; n <= 1000; ++n) EXPECT_GE(tz.flat_phi(2 * n).second, k * tz.flat_phi(n).second);
}

TEST(FlatPhi, ConvergentMultiplesBounded) {
  // (phi^2(m q_n) - 2 phi_+^2(m q_n)) / (m^4 q_n^2) over a grid of convergents and m <= 4 a_{n+1}.
  auto cf = golden();
  auto env = Environment::vertically_flat(fn(PiecewiseBV::indicator_pm().scaled(0.5)), cf, 0.3, 1.0 / 3.0, 0.2);
  const std::int64_t H = 400000;
  auto t = DispersionTable::build(*env, H);
  double worst = -1e300;
  for (int n = 1; n < 30; ++n) {
    const auto q = static_cast<std::int64_t>(cf->q(n));
    const int amax = 4 * static_cast<int>(cf->a(n + 1));
    for (int m = 1; m <= amax; ++m) {
      if (m * q > H) break;
      const auto [p, pp] = t.flat_phi(m * q);
      const double v = (p * p - 2 * pp * pp) / (std::pow(m, 4.0) * static_cast<double>(q) * q);
      worst = std::max(worst, v);
    }
  }
  EXPECT_TRUE(std::isfinite(worst));
  EXPECT_LT(worst, 1.0);
}

TEST(Inverse, Examples) {
  LevelFunction id{[](std::int64_t n) { return static_cast<double>(n); }, 100};
  EXPECT_EQ(inverse(id, 7.3), 7);
  EXPECT_EQ(inverse(id, 0.0), 0);
  try {
    inverse(id, 100.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HorizonExceeded);
  }
  LevelFunction shifted{[](std::int64_t n) { return n + 1.0; }, 100};
  try {
    inverse(shifted, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NumericRange);
  }

  auto zero = Environment::vertically_flat(fn(PiecewiseBV::constant(0.0)), golden(), 0.1, 1.0 / 3.0, 0.3);
  auto tz = DispersionTable::build(*zero, 1000001);
  EXPECT_EQ(tz.inverse(Fn::FlatPhi, 1e6), 1000000);
}

TEST(Inverse, SandwichAndRoundTrip) {
  std::mt19937_64 rng(3);
  auto flat = DispersionTable::build(*flat_saw(), 20000);
  auto gen = DispersionTable::build(*general_saw(), 20000);
  struct Case {
    const DispersionTable* t;
    Fn f;
  };
  for (auto [t, f] : {Case{&flat, Fn::FlatPhi}, Case{&flat, Fn::FlatPhiPlus}, Case{&gen, Fn::Phi},
                      Case{&gen, Fn::PhiPlus}, Case{&gen, Fn::PhiStr}, Case{&gen, Fn::Psi}}) {
    const auto g = t->level_function(f);
    const double top = g.value(g.horizon);
    for (int i = 0; i < 200; ++i) {
      const double y = std::uniform_real_distribution<double>(g.value(0), top * 0.999)(rng);
      const auto n = inverse(g, y);
      ASSERT_LE(g.value(n), y);
      ASSERT_GT(g.value(n + 1), y);
    }
  }
  for (std::int64_t n = 10; n <= 20000; n += 37) EXPECT_EQ(flat.inverse(Fn::FlatPhi, flat.flat_phi(n).first), n);
}

TEST(DominatedVariation, LinearAndQuadratic) {
  LevelFunction lin{[](std::int64_t n) { return static_cast<double>(n); }, 10000000};
  std::vector<double> grid;
  for (int y = 1000; y <= 1000000; y = y * 11 / 10) grid.push_back(y);
  const auto d1 = dominated_variation(lin, 2.0, grid);
  EXPECT_DOUBLE_EQ(d1.C, 2.0);
  for (double r : d1.per_decade) EXPECT_DOUBLE_EQ(r, 2.0);

  LevelFunction sq{[](std::int64_t n) { return static_cast<double>(n) * n; }, 10000000};
  const auto d2 = dominated_variation(sq, 2.0, grid, 1.5);
  EXPECT_NEAR(d2.C, std::sqrt(2.0), 0.05);
  EXPECT_EQ(d2.violations, 0);
  EXPECT_NEAR(d2.per_decade.back(), std::sqrt(2.0), 5e-3);

  // The flat phi_+ inverse has a finite constant stable across decades.
  auto t = DispersionTable::build(*flat_saw(), 200000);
  std::vector<double> ys;
  for (double y = 100; y < 1e5; y *= 1.1) ys.push_back(y);
  const auto d3 = dominated_variation(t.level_function(Fn::FlatPhiPlus), 2.0, ys);
  EXPECT_LT(d3.C, 4.0);
  EXPECT_GE(d3.per_decade.size(), 3u);
}

TEST(WindowSums, CalibrationAtLevels) {
  // sum of rho over v_+^{-1}(n/4) <= l <= v_+^{-1}(n) is comparable to n.
  for (auto env : {general_saw(), general_ind(), skew_periodic()}) {
    auto t = DispersionTable::build(*env, 20000);
    const auto h = t.level_horizon(Fn::Phi);
    for (std::int64_t n = 16; n <= h; n *= 2) {
      const auto b = t.end_plus(static_cast<double>(n)), a = t.end_plus(n / 4.0);
      const double s = t.v_w(b).v_plus - (a > 0 ? t.v_w(a - 1).v_plus : 0.0);
      EXPECT_GT(s, n / 4.0);
      EXPECT_LT(s, 4.0 * n);
    }
  }
}

TEST(LevelHorizon, WindowsStayInsideTable) {
  auto env = general_saw();
  auto t = DispersionTable::build(*env, 1000);
  const auto h = t.level_horizon(Fn::Phi);
  EXPECT_LT(t.end_plus(static_cast<double>(h)), 1000);
  EXPECT_LT(t.end_minus(static_cast<double>(h)), 999);
  EXPECT_NO_THROW(t.phi(h));
}
