#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "stratwalk/environment.hpp"

namespace stratwalk {

/// Dispersion functions served by a table.
enum class Fn {
  Phi,           // Phi(n) = Phi(-n, n)
  PhiPlus,       // sqrt(Phi^2(-n,0) + Phi^2(0,n))
  PhiStr,        // structure function
  PhiEq,         // Phi_str + (all-pair drift part)^{1/2}, the asymptotically equivalent form of Phi
  PhiPlusEq,     // same with pairs k l >= 0, the equivalent form of Phi_+
  Psi,           // g = 1 analogues
  PsiPlus,
  PsiPlusPlus,
  PsiPlusMinus,
  FlatPhi,       // vertically flat phi(n), integer index n
  FlatPhiPlus,
};

std::string to_string(Fn fn);

/// A nondecreasing function on the integers 0..horizon.
struct LevelFunction {
  std::function<double(std::int64_t)> value;
  std::int64_t horizon = 0;
};

/// The unique n >= 0 with g(n) <= y < g(n+1). HorizonExceeded when g(horizon) <= y,
/// NumericRange when y < g(0).
std::int64_t inverse(const LevelFunction& g, double y);

struct DominatedVariation {
  double C = 0.0;             // sup over the grid of g^{-1}(K y) / g^{-1}(y)
  double argmax_y = 0.0;
  int violations = 0;         // grid points whose ratio exceeds `cap`
  std::vector<double> per_decade;  // sup ratio within each decade of y
};

/// Empirical dominated-variation constant of g^{-1} over the grid; grid points
/// whose K y leaves the horizon are skipped.
DominatedVariation dominated_variation(const LevelFunction& g, double K, const std::vector<double>& grid,
                                       double cap = 1e300);

struct DispersionOptions {
  enum class Mode { Auto, Flat, General, Both };
  Mode mode = Mode::Auto;  // Auto: flat table for flat environments, general otherwise
  bool psi = true;         // also accumulate the g = 1 sums
  bool unit_prefactor = false;  // v_-/w_- prefactors set to 1 instead of beta_0/alpha_0, alpha_0/beta_0
};

/// Raw per-index data over k in [-H, H], stored at k + H.
struct DispersionInput {
  std::int64_t H = 0;
  std::vector<double> log_rho;       // f_k(x); log_rho[H] = 0
  std::vector<double> drift;         // g_k = gamma_k eps_k / alpha_k
  std::vector<double> flat_cocycle;  // f_k for the flat functions; empty when not built
  double pref_v = 1.0;
  double pref_w = 1.0;
};

DispersionInput dispersion_input(const Environment& env, std::int64_t H, const DispersionOptions& opt = {});

struct VW {
  double v_plus, v_minus, w_plus, w_minus;
};

struct PsiVariants {
  double Psi, Psi_plus, Psi_plusplus, Psi_plusminus;
};

/// Incrementally accumulated dispersion sums. Every window query is O(1)
/// given the window ends; level functions add one binary search per end.
class DispersionTable {
 public:
  static DispersionTable build(const Environment& env, std::int64_t H, const DispersionOptions& opt = {});
  static DispersionTable from_input(DispersionInput in, const DispersionOptions& opt = {});

  std::int64_t horizon() const { return H_; }
  bool has_flat() const { return !F_.empty(); }
  bool has_general() const { return !pos_.empty(); }
  bool has_psi() const { return psi_; }

  /// log rho_k = f_k(x).
  double log_rho(std::int64_t k) const { return log_rho_.at(static_cast<std::size_t>(k + H_)); }
  double cocycle(std::int64_t k) const;
  double drift(std::int64_t k) const { return drift_.at(static_cast<std::size_t>(k + H_)); }
  VW v_w(std::int64_t n) const;

  /// sum_{a <= k < l <= b} (f_l - f_k)^2 by the closed form, with f the flat
  /// cocycle (or log rho when no flat data is held).
  double psi(std::int64_t a, std::int64_t b) const;
  /// (phi(n), phi_+(n)).
  std::pair<double, double> flat_phi(std::int64_t n) const;

  /// Window ends at a level: v_+^{-1}(n) and v_-^{-1}(n), 0 below v(0).
  std::int64_t end_plus(double level) const;
  std::int64_t end_minus(double level) const;
  /// Phi(-m, n) at levels m, n.
  double general_phi(double m, double n) const;
  /// Phi^2 over the explicit index window [-A, B].
  long double window_phi2(std::int64_t A, std::int64_t B) const;
  /// Drift part sum rho_k rho_l (sum g_s / rho_s)^2 over [-A, B]; unit = g replaced by 1.
  long double window_drift2(std::int64_t A, std::int64_t B, bool unit) const;
  double phi_str(std::int64_t n) const;
  double phi(std::int64_t n) const { return value(Fn::Phi, n); }
  double phi_plus(std::int64_t n) const { return value(Fn::PhiPlus, n); }
  PsiVariants psi_variants(std::int64_t n) const;

  double value(Fn fn, std::int64_t n) const;
  /// Largest level whose window lies inside the table.
  std::int64_t level_horizon(Fn fn) const;
  LevelFunction level_function(Fn fn) const;
  std::int64_t inverse(Fn fn, double y) const { return stratwalk::inverse(level_function(fn), y); }

  /// The pair used by the series criterion: (phi, phi_+) on flat tables, (Phi, Phi_+) otherwise.
  Fn primary() const { return has_flat() ? Fn::FlatPhi : Fn::Phi; }
  Fn primary_plus() const { return has_flat() ? Fn::FlatPhiPlus : Fn::PhiPlus; }

 private:
  struct Side {
    double R, I;       // sum rho, sum 1/rho
    double PR;         // pairs: rho_l/rho_k + rho_k/rho_l
    double PS, m, M2;  // pairs: rho_k rho_l (sum g/rho)^2; weighted mean / M2 of the one-sided partial sums
    double PS1, m1, M21;
  };
  long double cross(const Side& n, const Side& p, bool unit) const;
  long double ratio_part(std::int64_t A, std::int64_t B) const;
  void build_flat();
  void build_general();
  void build_prefix() const;

  std::int64_t H_ = 0;
  bool psi_ = true;
  double pref_v_ = 1.0, pref_w_ = 1.0;
  std::vector<double> log_rho_, drift_, F_;
  std::vector<Side> pos_;  // pos_[B]: indices 0..B
  std::vector<Side> neg_;  // neg_[A]: indices -A..-1, neg_[0] empty
  std::vector<double> phi_, phi_plus_;
  // Quad-precision prefix sums of f_k and f_k^2 for psi(a, b), built on first use.
#if defined(__SIZEOF_FLOAT128__)
  using Wide = __float128;
#else
  using Wide = long double;
#endif
  mutable std::shared_ptr<std::once_flag> prefix_once_ = std::make_shared<std::once_flag>();
  mutable std::vector<Wide> pre1_, pre2_;
};

}  // namespace stratwalk
