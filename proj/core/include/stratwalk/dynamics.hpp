#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "stratwalk/diophantine.hpp"

namespace stratwalk {

/// Finite trigonometric polynomial sum_k c_k cos(2 pi k x) + s_k sin(2 pi k x),
/// plus the constant term cos_coef[0].
struct FourierSeries {
  std::vector<double> cos_coef;  // cos_coef[k], k = 0..K
  std::vector<double> sin_coef;  // sin_coef[k], sin_coef[0] ignored

  int modes() const { return static_cast<int>(std::max(cos_coef.size(), sin_coef.size())) - 1; }
  double operator()(double x) const;
  double derivative(double x) const;
  double mean() const { return cos_coef.empty() ? 0.0 : cos_coef[0]; }
  /// Sum of 2 pi k (|c_k| + |s_k|): an upper bound for the Lipschitz constant.
  double lipschitz() const;
  FourierSeries scaled(double c) const;
  FourierSeries plus(const FourierSeries& o) const;
  /// x -> g(x - s)
  FourierSeries shifted(double s) const;
  /// x -> g(2 x0 - x)
  FourierSeries reflected(double x0) const;
};

/// Bounded-variation observable on the circle: a right-continuous piecewise
/// affine part plus an optional smooth trigonometric part.
class PiecewiseBV {
 public:
  PiecewiseBV();  // zero function

  /// Affine pieces: on [breaks[i], breaks[i+1]) the value is
  /// values[i] + slopes[i] * (x - breaks[i]). breaks[0] must be 0.
  static PiecewiseBV affine(std::vector<double> breaks, std::vector<double> values, std::vector<double> slopes);
  static PiecewiseBV constant(double c);
  /// 1_[0,1/2) - 1_[1/2,1).
  static PiecewiseBV indicator_pm();
  /// 1_[a,b) on the circle (a > b wraps through 0).
  static PiecewiseBV indicator(double a, double b);
  /// x - 1/2 on [0,1).
  static PiecewiseBV sawtooth();
  static PiecewiseBV fourier(FourierSeries s);
  /// Generic Lipschitz callable with declared constant K on each of the
  /// given pieces; variation and mean are computed numerically.
  static PiecewiseBV callable(std::function<double(double)> fn, double K, std::vector<double> breaks = {});

  double operator()(double x) const;
  double operator()(const CirclePoint& p) const { return (*this)(p.to_double()); }

  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& slopes() const { return slopes_; }
  const std::optional<FourierSeries>& smooth() const { return smooth_; }
  bool has_callable() const { return static_cast<bool>(callable_); }
  /// True when the affine part is identically zero and no callable is present.
  bool is_pure_fourier() const;
  bool is_piecewise_constant() const;

  double variation_interval() const { return var_interval_; }
  double variation_circle() const { return var_circle_; }
  double mean() const { return mean_; }
  double sup_norm() const { return sup_; }
  std::size_t pieces() const { return breaks_.size(); }
  bool centered(double tol = 1e-12) const { return std::abs(mean_) <= tol; }

  PiecewiseBV scaled(double c) const;
  PiecewiseBV plus(const PiecewiseBV& o) const;
  PiecewiseBV minus(const PiecewiseBV& o) const { return plus(o.scaled(-1.0)); }
  /// x -> f(x - s): the graph moved right by s.
  PiecewiseBV shifted(double s) const;
  /// x -> f(2 x0 - x).
  PiecewiseBV reflected(double x0) const;
  /// x -> f(x + n theta), i.e. T^n f.
  PiecewiseBV rotated(const ContinuedFraction& cf, std::int64_t n) const;
  /// Subtracts the mean.
  PiecewiseBV centered_copy() const;

  /// Lebesgue measure of {f != 0} computed from the piecewise description.
  double support_length(double tol = 0.0) const;

 private:
  void finalize();
  double affine_at(double x) const;

  std::vector<double> breaks_{0.0};
  std::vector<double> values_{0.0};
  std::vector<double> slopes_{0.0};
  std::optional<FourierSeries> smooth_;
  std::function<double(double)> callable_;
  double callable_K_ = 0.0;
  double var_interval_ = 0.0;
  double var_circle_ = 0.0;
  double mean_ = 0.0;
  double sup_ = 0.0;
};

/// One tent B (1 - ||x - center|| / Delta)_+ scaled by weight.
struct Pick {
  double center = 0.0;
  double weight = 1.0;
  double B = 1.0;
  double Delta = 0.25;
};

/// h_{B,Delta}(x) = B (1 - ||x|| / Delta)_+.
PiecewiseBV pick_function(double B, double Delta);
/// Sum of tents, built by a slope-change sweep. Throws TruncationTooDeep past
/// `budget` picks.
PiecewiseBV pick_sum(const std::vector<Pick>& picks, std::size_t budget = 5'000'000);

/// Birkhoff sums along x + k theta.
class Cocycle {
 public:
  Cocycle(std::shared_ptr<const PiecewiseBV> f, std::shared_ptr<const ContinuedFraction> cf, double x);
  Cocycle(std::shared_ptr<const PiecewiseBV> f, std::shared_ptr<const ContinuedFraction> cf, const CirclePoint& x);

  const PiecewiseBV& f() const { return *f_; }
  const ContinuedFraction& cf() const { return *cf_; }
  const CirclePoint& x() const { return x_; }
  double x_double() const { return x_.to_double(); }
  /// The same cocycle based at x + n theta.
  Cocycle moved(std::int64_t n) const;

 private:
  std::shared_ptr<const PiecewiseBV> f_;
  std::shared_ptr<const ContinuedFraction> cf_;
  CirclePoint x_;
};

/// Neumaier compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

/// f_n(x): sum_{0<=i<n} f(x+i theta) for n >= 1, 0 for n = 0 and
/// -sum_{n<=i<0} f(x+i theta) for n <= -1.
double birkhoff(const Cocycle& c, std::int64_t n);
/// f_n(x) for n in [lo, hi]; element i holds f_{lo+i}(x).
std::vector<double> birkhoff_stream(const Cocycle& c, std::int64_t lo, std::int64_t hi);
/// V(f) * sum of the Ostrowski digits of |n|, with the circle variation.
double ostrowski_bound(const Cocycle& c, std::int64_t n);

struct PropiStats {
  int m = 0;
  BigInt q;
  double B = 0.0;
  double Delta = 0.0;
  double variation = 0.0;       // V(f^m) on the circle
  double bound = 0.0;           // 4 q (B/Delta) ||q theta||
  double support_u = 0.0;       // |{u^m != 0}|
  double support_bound = 0.0;   // 2 q Delta, as stated for the construction
  double support_pairs = 0.0;   // 2 q Delta + (q - 1) ||q theta||
};

struct PropiBuild {
  PiecewiseBV f;
  PiecewiseBV u;
  std::vector<PropiStats> per_m;
};

/// Truncation at M of the construction with pick heights B_m = m^2/q_m and
/// widths Delta_m = 1/(m^2 q_m): f = sum f^m, u = sum u^m, f = u - T u.
PropiBuild build_propi(const ContinuedFraction& cf, int M, std::size_t pick_budget = 5'000'000);

/// First n >= 1 with ||x + n theta|| < r, searching up to `horizon`.
std::int64_t hitting_time(double x, double r, const ContinuedFraction& cf, std::int64_t horizon = 1'000'000'000);

}  // namespace stratwalk
