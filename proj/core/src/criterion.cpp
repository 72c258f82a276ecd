#include "stratwalk/criterion.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "stratwalk/error.hpp"

namespace stratwalk {

namespace {

constexpr std::string_view kModule = "criterion";

std::int64_t ipow10(int d) {
  std::int64_t p = 1;
  for (int i = 0; i < d; ++i) p *= 10;
  return p;
}

// Evaluates fn(i) for i in [0, n) over `threads` contiguous chunks.
template <class F>
void parallel_for(std::size_t n, int threads, F fn) {
  const auto T = static_cast<std::size_t>(std::max(1, threads));
  if (T == 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(T);
  const std::size_t chunk = (n + T - 1) / T;
  for (std::size_t t = 0; t < T; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t * chunk; i < std::min(n, (t + 1) * chunk); ++i) fn(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::RecurrentLikely: return "RecurrentLikely";
    case Verdict::TransientLikely: return "TransientLikely";
    case Verdict::Inconclusive: return "Inconclusive";
    case Verdict::ExactRecurrent: return "ExactRecurrent";
    case Verdict::ExactTransient: return "ExactTransient";
  }
  return "?";
}

PeriodicResult periodic_exact(const Environment& env) {
  if (env.kind() != Environment::Kind::Periodic || !env.vertically_flat())
    throw Error(ErrorCode::WrongKind, kModule, "the exact test needs a periodic vertically flat environment");
  BigRational sum(0);
  const auto& exact = env.periodic_exact_laws();
  if (!exact.empty()) {
    for (const auto& s : exact) sum += s.epsilon() * s.gamma / (BigRational(1) - s.gamma);
  } else {
    for (const auto& s : env.periodic_laws()) {
      BigRational eps(0);
      for (auto [r, p] : s.mu) eps += BigRational(r) * BigRational(p);
      const BigRational g(s.gamma);
      sum += eps * g / (BigRational(1) - g);
    }
  }
  PeriodicResult r;
  r.verdict = sum == 0 ? Verdict::ExactRecurrent : Verdict::ExactTransient;
  r.period_sum = sum.str();
  r.period_sum_approx = sum.convert_to<double>();
  return r;
}

std::vector<std::int64_t> series_grid(std::int64_t N, const GridOptions& opt) {
  if (N < 1) throw Error(ErrorCode::NumericRange, kModule, "series needs N >= 1");
  if (!(opt.ratio > 1.0)) throw Error(ErrorCode::InvalidConfig, kModule, "grid ratio must exceed 1");
  std::vector<std::int64_t> g;
  const std::int64_t E = std::min(N, std::max<std::int64_t>(1, opt.exact_terms));
  for (std::int64_t n = 1; n <= E; ++n) g.push_back(n);
  std::int64_t n = E;
  std::int64_t next_pow = 10;
  while (next_pow <= n) next_pow *= 10;
  while (n < N) {
    auto m = std::max<std::int64_t>(n + 1, static_cast<std::int64_t>(std::llround(static_cast<double>(n) * opt.ratio)));
    // Powers of ten are grid points so decade increments are read off exactly.
    if (m > next_pow && n < next_pow) m = next_pow;
    m = std::min(m, N);
    g.push_back(m);
    n = m;
    while (next_pow <= n) next_pow *= 10;
  }
  return g;
}

SeriesResult sum_series(const std::function<double(std::int64_t)>& term, std::int64_t N, const GridOptions& opt) {
  SeriesResult s;
  s.grid = series_grid(N, opt);
  s.terms.assign(s.grid.size(), 0.0);
  parallel_for(s.grid.size(), opt.threads, [&](std::size_t i) { s.terms[i] = term(s.grid[i]); });
  s.partial.assign(s.grid.size(), 0.0);
  long double acc = 0;
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    if (std::isnan(s.terms[i])) {
      s.terms[i] = 0.0;
      ++s.zero_terms;
    }
    if (i == 0 || s.grid[i] == s.grid[i - 1] + 1)
      acc += s.terms[i];
    else
      acc += static_cast<long double>(s.grid[i] - s.grid[i - 1]) * (s.terms[i - 1] + s.terms[i]) / 2;
    s.partial[i] = static_cast<double>(acc);
  }
  s.total = s.partial.back();
  auto P = [&](std::int64_t n) {
    const auto it = std::lower_bound(s.grid.begin(), s.grid.end(), n);
    return s.partial[static_cast<std::size_t>(it - s.grid.begin())];
  };
  // Decade d covers (10^d, 10^{d+1}].
  for (int d = 0; ipow10(d + 1) <= N; ++d) s.per_decade.push_back(P(ipow10(d + 1)) - P(ipow10(d)));
  return s;
}

SeriesResult main_series(const LevelFunction& phi, const LevelFunction& phi_plus, std::int64_t N,
                         const GridOptions& opt) {
  // Levels below the value at 0 (Phi(0) = sqrt(2 + g_0^2) on general tables) have inverse 0.
  auto level = [](const LevelFunction& g, double y) { return y < g.value(0) ? 0.0 : static_cast<double>(inverse(g, y)); };
  return sum_series(
      [&](std::int64_t n) {
        const double y = static_cast<double>(n);
        const auto a = level(phi, y);
        const auto b = level(phi_plus, y);
        if (b == 0.0) return std::nan("");
        return a * a / (y * y * b);
      },
      N, opt);
}

SeriesResult reciprocal_series(const LevelFunction& g, std::int64_t N, const GridOptions& opt) {
  if (g.horizon < N) throw Error(ErrorCode::HorizonExceeded, kModule, "series runs past the table");
  return sum_series([&](std::int64_t n) { return 1.0 / g.value(n); }, N, opt);
}

TailFit fit_tail(const SeriesResult& s, std::int64_t lo, std::int64_t hi) {
  TailFit f;
  f.lo = lo;
  f.hi = hi;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    if (s.grid[i] < lo || s.grid[i] > hi || !(s.terms[i] > 0)) continue;
    const double x = std::log(static_cast<double>(s.grid[i])), y = std::log(s.terms[i]);
    pts.emplace_back(x, y);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  f.points = static_cast<int>(pts.size());
  if (f.points < 3) return f;
  const double m = f.points;
  const double Sxx = sxx - sx * sx / m;
  if (!(Sxx > 0)) return f;
  const double b = (sxy - sx * sy / m) / Sxx;
  const double a = (sy - b * sx) / m;
  double rss = 0;
  for (auto [x, y] : pts) rss += (y - a - b * x) * (y - a - b * x);
  f.slope = -b;
  f.stderr_ = std::sqrt(rss / (m - 2) / Sxx);
  return f;
}

Verdict decide(const SeriesResult& main, const TailFit& fit, const Thresholds& th, std::string* rule) {
  auto say = [&](const char* r) {
    if (rule) *rule = r;
  };
  if (fit.points < 3) {
    say("too few positive terms in the fit window");
    return Verdict::Inconclusive;
  }
  if (fit.slope < th.recurrent_below) {
    say("tail slope below the recurrent threshold");
    return Verdict::RecurrentLikely;
  }
  if (fit.slope > th.transient_above) {
    say("tail slope above the transient threshold");
    return Verdict::TransientLikely;
  }
  const auto k = static_cast<std::size_t>(std::max(2, th.tie_decades));
  if (main.per_decade.size() < k) {
    say("slope near 1 and too few full decades for the tie-break");
    return Verdict::Inconclusive;
  }
  const std::vector<double> inc(main.per_decade.end() - static_cast<std::ptrdiff_t>(k), main.per_decade.end());
  const double lo = *std::min_element(inc.begin(), inc.end());
  const double hi = *std::max_element(inc.begin(), inc.end());
  if (hi > 0 && lo / hi >= th.flat_ratio) {
    say("slope near 1; decade increments bounded below");
    return Verdict::RecurrentLikely;
  }
  bool geometric = hi > 0;
  for (std::size_t i = 1; i < inc.size(); ++i)
    if (!(inc[i] < th.decay_ratio * inc[i - 1])) geometric = false;
  if (geometric) {
    say("slope near 1; decade increments decay geometrically");
    return Verdict::TransientLikely;
  }
  say("slope near 1; decade increments neither flat nor geometric");
  return Verdict::Inconclusive;
}

TransienceTests transience_tests(const DispersionTable& t, std::int64_t N, const GridOptions& opt,
                                 double slope_threshold) {
  TransienceTests r;
  const auto P = t.level_function(t.primary()), Pp = t.level_function(t.primary_plus());
  r.inv_phi_plus = reciprocal_series(Pp, N, opt);
  r.inv_phi = reciprocal_series(P, N, opt);
  const auto fit = fit_tail(r.inv_phi_plus, std::max<std::int64_t>(1, N / 10), N);
  r.slope_inv_phi_plus = fit.slope;
  r.converging_trend = fit.points >= 3 && fit.slope > slope_threshold;
  for (std::size_t i = 0; i < r.inv_phi.grid.size(); ++i)
    r.phi_over_phi_plus = std::max(r.phi_over_phi_plus, r.inv_phi_plus.terms[i] / r.inv_phi.terms[i]);
  return r;
}

CondensedSeries condensed_series(const DispersionTable& t, double K, int J) {
  if (!(K > 1.0)) throw Error(ErrorCode::InvalidConfig, kModule, "condensation base must exceed 1");
  CondensedSeries c;
  const auto H = static_cast<double>(t.level_horizon(Fn::Phi));
  double y = 1, acc = 0;
  for (int j = 1; j <= J; ++j) {
    y *= K;
    if (y > H) break;
    double wp, wm;
    try {
      wp = t.v_w(t.end_plus(y)).w_plus;
      wm = t.v_w(t.end_minus(y)).w_minus;
    } catch (const Error&) {
      break;
    }
    const double term = std::sqrt(y) / std::sqrt(wp + wm);
    c.terms.push_back(term);
    acc += term;
    c.partial.push_back(acc);
  }
  const std::size_t q = c.terms.size() / 4;
  if (q > 0) {
    double head = 0, tail = 0;
    for (std::size_t i = 0; i < q; ++i) {
      head += c.terms[i];
      tail += c.terms[c.terms.size() - 1 - i];
    }
    c.tail_over_head = tail / head;
  }
  return c;
}

CriterionReport classify_table(const DispersionTable& t, const Budget& budget) {
  CriterionReport r;
  r.horizon = t.horizon();
  r.series_terms = budget.series_terms;
  r.functions = t.has_flat() ? "flat" : "general";
  r.caveat = "Likely verdicts are numerical evidence at a finite horizon, not proofs.";
  const std::int64_t N = budget.series_terms;
  const auto P = t.level_function(t.primary()), Pp = t.level_function(t.primary_plus());
  r.main = main_series(P, Pp, N, budget.grid);
  r.fit = fit_tail(r.main, std::max<std::int64_t>(1, N / 10), N);
  r.verdict = decide(r.main, r.fit, budget.thresholds, &r.rule);
  if (N <= std::min(P.horizon, Pp.horizon)) r.transience = transience_tests(t, N, budget.grid, budget.thresholds.transient_above);

  std::vector<double> ys;
  for (double y = 10; 2 * y <= static_cast<double>(N); y *= 1.1) ys.push_back(y);
  const auto dv = dominated_variation(Pp, 2.0, ys);
  r.dominated_variation_C2 = dv.C;
  r.dominated_variation_per_decade = dv.per_decade;
  return r;
}

CriterionReport classify(const Environment& env, const Budget& budget) {
  if (env.kind() == Environment::Kind::Periodic && env.vertically_flat()) {
    CriterionReport r;
    r.env_name = env.name();
    r.env_kind = env.kind_name();
    r.functions = "periodic";
    r.periodic = periodic_exact(env);
    r.verdict = r.periodic->verdict;
    r.rule = "exact periodic dichotomy";
    return r;
  }
  const auto t = DispersionTable::build(env, budget.dispersion_horizon, budget.dispersion);
  auto r = classify_table(t, budget);
  r.env_name = env.name();
  r.env_kind = env.kind_name();
  return r;
}

}  // namespace stratwalk
