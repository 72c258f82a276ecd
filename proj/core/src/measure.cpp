#include "stratwalk/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stratwalk/error.hpp"

namespace stratwalk {

namespace {

constexpr std::string_view kModule = "measure";
constexpr double kTwoPi = 2.0 * std::numbers::pi;
using ld = long double;

// Weights 1/rho_k = e^{-f_k(x)}, k = 0..N, scaled so the largest is 1.
std::vector<ld> inverse_rho(const PiecewiseBV& f, const ContinuedFraction& cf, double x, std::int64_t N) {
  const auto F = birkhoff_stream(Cocycle(std::make_shared<PiecewiseBV>(f), std::make_shared<ContinuedFraction>(cf), x), 0, N);
  const double lo = *std::min_element(F.begin(), F.end());
  std::vector<ld> w(F.size());
  for (std::size_t k = 0; k < F.size(); ++k) w[k] = std::exp(-(static_cast<ld>(F[k]) - lo));
  return w;
}

std::vector<double> orbit(const ContinuedFraction& cf, double x, std::int64_t N) {
  std::vector<double> loc(static_cast<std::size_t>(N + 1));
  CirclePoint p = CirclePoint::from_double(x - std::floor(x));
  for (auto& l : loc) {
    l = p.to_double();
    p = p + cf.theta();
  }
  return loc;
}

// Signed distance from k theta to the nearest integer.
double signed_frac(const ContinuedFraction& cf, std::int64_t k) {
  const auto p = cf.theta().times(k);
  const double d = p.dist_to_z();
  return p.to_double() < 0.5 ? d : -d;
}

std::int64_t nearby_q(const ContinuedFraction& cf, std::int64_t k) {
  std::int64_t best = 1;
  for (int n = 0; n <= cf.max_index(); ++n) {
    if (cf.q(n) > BigInt(k)) break;
    best = static_cast<std::int64_t>(cf.q(n));
  }
  return best;
}

double sup_on_grid(const std::function<double(double)>& fn, int points = 4096) {
  double s = 0;
  for (int i = 0; i < points; ++i) s = std::max(s, std::abs(fn((i + 0.5) / points)));
  return s;
}

}  // namespace

void EmpiricalMeasure::index() {
  std::vector<std::size_t> ord(locations.size());
  for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
  std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return locations[a] < locations[b]; });
  by_location.resize(ord.size());
  ld acc = 0;
  for (std::size_t i = 0; i < ord.size(); ++i) {
    acc += weights[ord[i]];
    by_location[i] = {locations[ord[i]], static_cast<double>(acc)};
  }
}

double EmpiricalMeasure::integrate(const std::function<double(double)>& w) const {
  ld s = 0;
  for (std::size_t i = 0; i < locations.size(); ++i) s += static_cast<ld>(weights[i]) * w(locations[i]);
  return static_cast<double>(s);
}

double EmpiricalMeasure::cdf(double y) const {
  if (by_location.size() != locations.size()) throw Error(ErrorCode::NumericRange, kModule, "measure not indexed");
  const auto it = std::lower_bound(by_location.begin(), by_location.end(), y,
                                   [](const std::pair<double, double>& a, double v) { return a.first < v; });
  return it == by_location.begin() ? 0.0 : std::prev(it)->second;
}

std::vector<std::pair<double, double>> EmpiricalMeasure::cdf_grid(int points) const {
  std::vector<std::pair<double, double>> g;
  for (int i = 0; i <= points; ++i) {
    const double y = static_cast<double>(i) / points;
    g.emplace_back(y, cdf(y));
  }
  return g;
}

double EmpiricalMeasure::ks_distance(const std::function<double(double)>& F) const {
  if (by_location.size() != locations.size()) throw Error(ErrorCode::NumericRange, kModule, "measure not indexed");
  double d = 0, before = 0;
  for (const auto& [y, after] : by_location) {
    const double ref = F(y);
    d = std::max({d, std::abs(before - ref), std::abs(after - ref)});
    before = after;
  }
  return d;
}

EmpiricalMeasure nu_f_empirical(const PiecewiseBV& f, const ContinuedFraction& cf, double x, std::int64_t N) {
  if (N < 0) throw Error(ErrorCode::NumericRange, kModule, "negative horizon");
  EmpiricalMeasure m;
  m.N = N;
  m.locations = orbit(cf, x, N);
  const auto w = inverse_rho(f, cf, x, N);
  ld tot = 0;
  for (ld v : w) tot += v;
  m.weights.resize(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) m.weights[k] = static_cast<double>(w[k] / tot);
  m.index();
  return m;
}

ARatio A_ratio(const PiecewiseBV& f, const PiecewiseBV& g, const ContinuedFraction& cf, double x, std::int64_t N,
               const std::vector<double>& extra_x) {
  if (N < 0) throw Error(ErrorCode::NumericRange, kModule, "negative horizon");
  auto one = [&](double x0, ARatio* detail) {
    const auto w = inverse_rho(f, cf, x0, N);
    const auto loc = orbit(cf, x0, N);
    const double anchor = g(loc[0]);
    ld num = 0, den = 0;
    double next = 1, lo = 1e300, hi = -1e300;
    double A = anchor;
    for (std::int64_t k = 0; k <= N; ++k) {
      const auto i = static_cast<std::size_t>(k);
      num += w[i] * (g(loc[i]) - anchor);
      den += w[i];
      A = anchor + static_cast<double>(num / den);
      if (detail) {
        if (k >= N / 10) {
          lo = std::min(lo, A);
          hi = std::max(hi, A);
        }
        if (static_cast<double>(k) >= next || k == N) {
          detail->trajectory.emplace_back(k, A);
          next = std::max(next + 1, next * 1.1);
        }
      }
    }
    if (detail) detail->spread_last_decade = hi - lo;
    return A;
  };
  ARatio r;
  r.value = one(x, &r);
  double lo = r.value, hi = r.value;
  for (double x0 : extra_x) {
    const double a = one(x0, nullptr);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  r.spread_x = hi - lo;
  return r;
}

IntegralSign integral_sign(const ARatio& a, const ARatio& b) {
  const bool big_a = std::abs(a.value) > 3 * a.spread_last_decade;
  const bool big_b = std::abs(b.value) > 3 * b.spread_last_decade;
  if (big_a && big_b) return IntegralSign::Nonzero;
  if (!big_a && !big_b) return IntegralSign::Centered;
  return IntegralSign::Inconclusive;
}

std::vector<FourierSeries> trig_test_set(int K) {
  std::vector<FourierSeries> t;
  for (int k = 1; k <= K; ++k) {
    FourierSeries c, s;
    c.cos_coef.assign(static_cast<std::size_t>(k + 1), 0.0);
    c.cos_coef[static_cast<std::size_t>(k)] = 1.0;
    s.sin_coef.assign(static_cast<std::size_t>(k + 1), 0.0);
    s.sin_coef[static_cast<std::size_t>(k)] = 1.0;
    t.push_back(c);
    t.push_back(s);
  }
  return t;
}

double functional_residual(const EmpiricalMeasure& mu, const PiecewiseBV& f, const ContinuedFraction& cf,
                           const std::vector<FourierSeries>& tests) {
  // e^{-f} at each atom and the rotated location, shared across test functions.
  const double th = cf.theta_double();
  std::vector<double> ef(mu.locations.size()), shifted(mu.locations.size());
  for (std::size_t i = 0; i < ef.size(); ++i) {
    ef[i] = std::exp(-f(mu.locations[i]));
    const double y = mu.locations[i] + th;
    shifted[i] = y - std::floor(y);
  }
  double worst = 0;
  for (const auto& w : tests) {
    ld s = 0;
    for (std::size_t i = 0; i < ef.size(); ++i) s += static_cast<ld>(mu.weights[i]) * (w(mu.locations[i]) - ef[i] * w(shifted[i]));
    worst = std::max(worst, static_cast<double>(std::abs(s)));
  }
  return worst;
}

CoboundaryResult fourier_coboundary(const FourierSeries& f, const ContinuedFraction& cf, int n_modes,
                                    double divisor_floor) {
  if (std::abs(f.mean()) > 1e-12)
    throw Error(ErrorCode::NotCentered, kModule, "coboundary equation needs a zero-mean right-hand side");
  const int K = std::min(n_modes, f.modes());
  CoboundaryResult r;
  r.u.cos_coef.assign(static_cast<std::size_t>(std::max(K, 0) + 1), 0.0);
  r.u.sin_coef.assign(r.u.cos_coef.size(), 0.0);
  r.min_divisor = 2.0;
  for (int k = 1; k <= K; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const double c = ks < f.cos_coef.size() ? f.cos_coef[ks] : 0.0;
    const double s = ks < f.sin_coef.size() ? f.sin_coef[ks] : 0.0;
    if (c == 0.0 && s == 0.0) continue;
    const double d = signed_frac(cf, k);
    // 1 - e^{2 pi i k theta} = 2 sin^2(pi d) - i sin(2 pi d).
    const double re = 2.0 * std::sin(std::numbers::pi * d) * std::sin(std::numbers::pi * d);
    const double im = -std::sin(kTwoPi * d);
    const double mod = std::hypot(re, im);
    if (mod < r.min_divisor) {
      r.min_divisor = mod;
      r.argmin_k = k;
    }
    if (mod < divisor_floor)
      throw Error(ErrorCode::SmallDivisorBlowup, kModule,
                  "divisor " + std::to_string(mod) + " at k = " + std::to_string(k) + " (near q = " +
                      std::to_string(nearby_q(cf, k)) + ")");
    // f-hat(k) = (c - i s)/2; u-hat = f-hat / D; u = 2 Re(u-hat) cos - 2 Im(u-hat) sin.
    const double fr = c / 2, fi = -s / 2;
    const double den = re * re + im * im;
    const double ur = (fr * re + fi * im) / den, ui = (fi * re - fr * im) / den;
    r.u.cos_coef[ks] = 2 * ur;
    r.u.sin_coef[ks] = -2 * ui;
  }
  const double th = cf.theta_double();
  const auto u = r.u;
  r.residual = sup_on_grid([&](double x) { return f(x) - (u(x) - u(x + th)); });
  return r;
}

FourierSeries sample_fourier(const std::function<double(double)>& fn, int K, int M) {
  if (M < 2 * K + 2) throw Error(ErrorCode::NumericRange, kModule, "too few samples for the requested modes");
  std::vector<double> v(static_cast<std::size_t>(M)), cs(static_cast<std::size_t>(M)), sn(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) {
    v[static_cast<std::size_t>(j)] = fn(static_cast<double>(j) / M);
    cs[static_cast<std::size_t>(j)] = std::cos(kTwoPi * j / M);
    sn[static_cast<std::size_t>(j)] = std::sin(kTwoPi * j / M);
  }
  FourierSeries s;
  s.cos_coef.assign(static_cast<std::size_t>(K + 1), 0.0);
  s.sin_coef.assign(static_cast<std::size_t>(K + 1), 0.0);
  for (int k = 0; k <= K; ++k) {
    ld c = 0, d = 0;
    for (int j = 0; j < M; ++j) {
      const auto idx = static_cast<std::size_t>((static_cast<std::int64_t>(k) * j) % M);
      c += v[static_cast<std::size_t>(j)] * cs[idx];
      d += v[static_cast<std::size_t>(j)] * sn[idx];
    }
    s.cos_coef[static_cast<std::size_t>(k)] = static_cast<double>((k == 0 ? 1 : 2) * c / M);
    s.sin_coef[static_cast<std::size_t>(k)] = static_cast<double>(k == 0 ? 0 : 2 * d / M);
  }
  return s;
}

SolveHResult solve_h(const FourierSeries& f, const std::function<double(double)>& g, const ContinuedFraction& cf,
                     int n_modes, double tol, double divisor_floor) {
  SolveHResult r;
  r.u = fourier_coboundary(f, cf, n_modes, divisor_floor).u;
  const auto u = r.u;
  auto G = sample_fourier([&](double x) { return g(x) * std::exp(u(x)); }, n_modes, std::max(4096, 4 * n_modes + 4));
  r.mean_g_eu = G.cos_coef[0];
  if (std::abs(r.mean_g_eu) > tol)
    throw Error(ErrorCode::NotCentered, kModule,
                "int g e^u dx = " + std::to_string(r.mean_g_eu) + " is not zero within tolerance");
  G.cos_coef[0] = 0.0;
  r.H = fourier_coboundary(G, cf, n_modes, divisor_floor).u;
  const auto H = r.H;
  r.h = [u, H](double x) { return std::exp(-u(x)) * H(x); };
  const double th = cf.theta_double();
  const auto h = r.h;
  r.residual = sup_on_grid([&](double x) { return g(x) - (h(x) - std::exp(-f(x)) * h(x + th)); });
  return r;
}

RatioTrajectory ratio_trajectory(const PiecewiseBV& f, const ContinuedFraction& cf, double x, std::int64_t N,
                                 double grid_ratio) {
  RatioTrajectory t;
  const auto F = birkhoff_stream(Cocycle(std::make_shared<PiecewiseBV>(f), std::make_shared<ContinuedFraction>(cf), x), 0, N);
  ld v = 0, w = 0;
  double next = 0;
  for (std::int64_t k = 0; k <= N; ++k) {
    const ld fk = F[static_cast<std::size_t>(k)];
    v += std::exp(fk);
    w += std::exp(-fk);
    if (static_cast<double>(k) >= next || k == N) {
      t.n.push_back(k);
      t.ratio.push_back(static_cast<double>(v / w));
      next = std::max(next + 1, next * grid_ratio);
    }
  }
  const std::size_t half = t.ratio.size() / 2;
  t.tail_max = *std::max_element(t.ratio.begin() + static_cast<std::ptrdiff_t>(half), t.ratio.end());
  t.tail_min = *std::min_element(t.ratio.begin() + static_cast<std::ptrdiff_t>(half), t.ratio.end());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < t.n.size(); ++i) {
    if (t.n[i] < std::max<std::int64_t>(1, N / 10)) continue;
    const double a = std::log(static_cast<double>(t.n[i])), b = std::log(t.ratio[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
    ++m;
  }
  if (m >= 2 && sxx - sx * sx / m > 0) t.log_slope = (sxy - sx * sy / m) / (sxx - sx * sx / m);
  return t;
}

}  // namespace stratwalk
