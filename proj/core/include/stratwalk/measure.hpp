#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stratwalk/diophantine.hpp"
#include "stratwalk/dynamics.hpp"

namespace stratwalk {

/// Weighted orbit measure sum_k delta_{T^k x} / rho_k, normalized, k = 0..N.
struct EmpiricalMeasure {
  std::vector<double> locations;  // x + k theta mod 1
  std::vector<double> weights;    // positive, sum to 1
  std::int64_t N = 0;

  double integrate(const std::function<double(double)>& w) const;
  /// Mass of [0, y).
  double cdf(double y) const;
  /// (y_i, F(y_i)) on a uniform grid of `points` values.
  std::vector<std::pair<double, double>> cdf_grid(int points) const;
  /// sup_y |F_emp(y) - F(y)| against a continuous reference CDF.
  double ks_distance(const std::function<double(double)>& F) const;

  /// Sorts the atoms by location; called by nu_f_empirical, needed by cdf queries.
  void index();
  std::vector<std::pair<double, double>> by_location;  // (location, mass of [0, location])
};

EmpiricalMeasure nu_f_empirical(const PiecewiseBV& f, const ContinuedFraction& cf, double x, std::int64_t N);

struct ARatio {
  double value = 0.0;
  double spread_last_decade = 0.0;  // max - min of A(n, g, x) over n in [N/10, N]
  double spread_x = 0.0;            // max - min over the sampled base points (0 for a single x)
  std::vector<std::pair<std::int64_t, double>> trajectory;  // A at geometric n
};

/// A(N, g, x) = sum g(T^k x)/rho_k / sum 1/rho_k, anchored at g(x) so that a
/// constant g returns its value exactly.
ARatio A_ratio(const PiecewiseBV& f, const PiecewiseBV& g, const ContinuedFraction& cf, double x, std::int64_t N,
               const std::vector<double>& extra_x = {});

enum class IntegralSign { Nonzero, Centered, Inconclusive };
/// |A| > 3 x spread at both horizons: Nonzero; |A| <= 3 x spread at both: Centered.
IntegralSign integral_sign(const ARatio& at_small, const ARatio& at_large);

/// max over the test set of |int w dmu - int e^{-f} T w dmu|.
double functional_residual(const EmpiricalMeasure& mu, const PiecewiseBV& f, const ContinuedFraction& cf,
                           const std::vector<FourierSeries>& tests);
/// cos(2 pi k x), sin(2 pi k x) for k = 1..K.
std::vector<FourierSeries> trig_test_set(int K);

struct CoboundaryResult {
  FourierSeries u;
  double min_divisor = 0.0;  // min |1 - e^{2 pi i k theta}| over the used modes
  int argmin_k = 0;
  double residual = 0.0;     // sup |f - (u - T u)| on a 4096-point grid
};

/// u with u - T u = f (f centered), u-hat(0) = 0.
CoboundaryResult fourier_coboundary(const FourierSeries& f, const ContinuedFraction& cf, int n_modes,
                                    double divisor_floor = 1e-6);

struct SolveHResult {
  std::function<double(double)> h;  // e^{-u} H
  FourierSeries u, H;
  double residual = 0.0;            // sup |g - (h - e^{-f} T h)| on a grid
  double mean_g_eu = 0.0;           // int g e^u dx
};

/// h with g = h - e^{-f} T h, through g e^u = H - T H. NotCentered when
/// |int g e^u| exceeds `tol`.
SolveHResult solve_h(const FourierSeries& f, const std::function<double(double)>& g, const ContinuedFraction& cf,
                     int n_modes, double tol = 1e-9, double divisor_floor = 1e-6);

/// Fourier coefficients of a smooth function from M uniform samples (modes 0..K).
FourierSeries sample_fourier(const std::function<double(double)>& fn, int K, int M = 4096);

struct RatioTrajectory {
  std::vector<std::int64_t> n;
  std::vector<double> ratio;  // v_+(n) / w_+(n)
  double tail_max = 0.0, tail_min = 0.0;  // over the second half of the samples
  double log_slope = 0.0;                 // slope of log ratio against log n over the last decade
};
RatioTrajectory ratio_trajectory(const PiecewiseBV& f, const ContinuedFraction& cf, double x, std::int64_t N,
                                 double grid_ratio = 1.1);

}  // namespace stratwalk
