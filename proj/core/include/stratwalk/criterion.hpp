#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stratwalk/dispersion.hpp"
#include "stratwalk/environment.hpp"

namespace stratwalk {

enum class Verdict { RecurrentLikely, TransientLikely, Inconclusive, ExactRecurrent, ExactTransient };
std::string to_string(Verdict v);

/// Exact dichotomy for periodic vertically flat environments: recurrent iff the
/// period sum of eps gamma / (1 - gamma) vanishes. Rational when exact laws are
/// attached, otherwise on the exact values of the stored doubles.
struct PeriodicResult {
  Verdict verdict = Verdict::Inconclusive;
  std::string period_sum;  // exact rational as "p/q"
  double period_sum_approx = 0.0;
};
PeriodicResult periodic_exact(const Environment& env);

struct GridOptions {
  double ratio = 1.05;            // geometric grid ratio past the exact range
  std::int64_t exact_terms = 1000;
  int threads = 1;
};

/// Partial sums of a positive series sum_{n<=N} t(n), exact up to exact_terms and
/// trapezoidal between geometric grid points beyond.
struct SeriesResult {
  std::vector<std::int64_t> grid;     // evaluation points, increasing, last = N
  std::vector<double> terms;          // t at each grid point
  std::vector<double> partial;        // partial sum up to each grid point
  std::vector<double> per_decade;     // increment over [10^d, 10^{d+1}) for full decades d = 0, 1, ...
  double total = 0.0;
  std::int64_t zero_terms = 0;        // terms set to 0 because a denominator inverse vanished
};

std::vector<std::int64_t> series_grid(std::int64_t N, const GridOptions& opt);
SeriesResult sum_series(const std::function<double(std::int64_t)>& term, std::int64_t N, const GridOptions& opt);

/// sum n^{-2} (phi^{-1}(n))^2 / phi_+^{-1}(n).
SeriesResult main_series(const LevelFunction& phi, const LevelFunction& phi_plus, std::int64_t N,
                         const GridOptions& opt = {});
/// sum 1 / g(n) over n = 1..N for a level function g.
SeriesResult reciprocal_series(const LevelFunction& g, std::int64_t N, const GridOptions& opt = {});

struct TransienceTests {
  SeriesResult inv_phi_plus;   // sum 1/Phi_+(n)
  SeriesResult inv_phi;        // sum 1/Phi(n)
  double slope_inv_phi_plus = 0.0;  // tail decay exponent of 1/Phi_+
  bool converging_trend = false;
  double phi_over_phi_plus = 0.0;   // sup over the grid of Phi / Phi_+
};
TransienceTests transience_tests(const DispersionTable& t, std::int64_t N, const GridOptions& opt = {},
                                 double slope_threshold = 1.1);

/// Condensed terms sqrt(K^j) / sqrt(w_+(v_+^{-1}(K^j)) + w_-(v_-^{-1}(K^j))), j = 1..J.
struct CondensedSeries {
  std::vector<double> terms;
  std::vector<double> partial;
  double tail_over_head = 0.0;  // mean of the last quarter of terms over the mean of the first quarter
};
CondensedSeries condensed_series(const DispersionTable& t, double K, int J);

struct TailFit {
  double slope = 0.0;  // p in term ~ n^{-p}
  double stderr_ = 0.0;
  std::int64_t lo = 0, hi = 0;
  int points = 0;
};
/// Least squares of log t against log n over grid points in [lo, hi] with t > 0.
TailFit fit_tail(const SeriesResult& s, std::int64_t lo, std::int64_t hi);

struct Thresholds {
  double recurrent_below = 0.9;
  double transient_above = 1.1;
  int tie_decades = 3;
  double flat_ratio = 0.5;       // min/max of per-decade increments for a recurrent tie-break
  double decay_ratio = 0.8;      // consecutive increment ratio below which decay counts as geometric
};

struct Budget {
  std::int64_t dispersion_horizon = 1000000;
  std::int64_t series_terms = 100000;
  GridOptions grid;
  Thresholds thresholds;
  DispersionOptions dispersion;
};

struct CriterionReport {
  std::string env_name;
  std::string env_kind;
  std::int64_t horizon = 0;
  std::int64_t series_terms = 0;
  std::string functions;  // "flat" (phi, phi_+) or "general" (Phi, Phi_+)
  std::optional<PeriodicResult> periodic;
  SeriesResult main;
  std::optional<TransienceTests> transience;
  TailFit fit;
  std::string rule;  // which rule decided the verdict
  Verdict verdict = Verdict::Inconclusive;
  double dominated_variation_C2 = 0.0;
  std::vector<double> dominated_variation_per_decade;
  std::string caveat;
};

/// Decision layer over a computed main series.
Verdict decide(const SeriesResult& main, const TailFit& fit, const Thresholds& th, std::string* rule = nullptr);

CriterionReport classify_table(const DispersionTable& t, const Budget& budget);
/// Exact test for periodic flat environments, otherwise the series criterion on a
/// table of the budgeted horizon.
CriterionReport classify(const Environment& env, const Budget& budget);

}  // namespace stratwalk
