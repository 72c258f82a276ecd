#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stratwalk/diophantine.hpp"
#include "stratwalk/dynamics.hpp"

namespace stratwalk {

/// Finite-support probability mass function on Z, sorted by atom.
using Pmf = std::vector<std::pair<int, double>>;

/// Transition law on the line Z x {n}: up with alpha, down with beta, and a
/// horizontal jump r with gamma * mu(r).
struct StratumLaw {
  double alpha = 1.0 / 3.0;
  double beta = 1.0 / 3.0;
  double gamma = 1.0 / 3.0;
  Pmf mu{{-1, 0.5}, {1, 0.5}};
  double epsilon = 0.0;

  static StratumLaw make(double alpha, double beta, double gamma, Pmf mu);
  double mu_at(int r) const;
  /// "r:p;r:p" with full round-trip precision.
  std::string mu_string() const;
};

/// Exactly represented periodic entry, kept alongside the double law so the
/// periodic dichotomy can be decided in rational arithmetic.
struct ExactStratum {
  BigRational alpha, beta, gamma;
  std::vector<std::pair<int, BigRational>> mu;
  BigRational epsilon() const;
};

/// Canonical two-point law with the given mean: ((1+e)/2) delta_L + ((1-e)/2) delta_{-L},
/// L = max(ceil|t|, 1), e = t / L.
Pmf realize_mu(double target_mean, double eta);

struct EtaCertificate {
  double eta = 0.0;          // largest eta' valid on the window, to 1e-6
  std::int64_t argmin = 0;   // stratum attaining it
  std::string clause;        // which clause binds there
};

/// Largest eta with min{a,b,g} >= eta, mu(0) <= 1 - eta, supp mu in (-1/eta, 1/eta).
EtaCertificate eta_of(const StratumLaw& s);

class Environment {
 public:
  enum class Kind { Periodic, VerticallyFlatQP, GeneralQP, Explicit };
  static constexpr int kWindowBits = 16;

  static std::shared_ptr<Environment> periodic(std::vector<StratumLaw> laws, double eta,
                                               std::vector<ExactStratum> exact = {});
  static std::shared_ptr<Environment> vertically_flat(std::shared_ptr<const PiecewiseBV> f,
                                                      std::shared_ptr<const ContinuedFraction> cf,
                                                      double x, double gamma0, double eta);
  static std::shared_ptr<Environment> general(std::shared_ptr<const PiecewiseBV> f,
                                              std::shared_ptr<const PiecewiseBV> g,
                                              std::shared_ptr<const ContinuedFraction> cf,
                                              double x, double gamma0, double eta);
  /// Arbitrary rule n -> law. `flat` declares alpha_n = beta_n for all n.
  static std::shared_ptr<Environment> explicit_rule(std::function<StratumLaw(std::int64_t)> rule,
                                                    double eta, bool flat, std::string name);

  Kind kind() const { return kind_; }
  std::string kind_name() const;
  const std::string& name() const { return name_; }
  double eta() const { return eta_; }
  double gamma0() const { return gamma0_; }
  double x() const { return x_; }
  bool vertically_flat() const { return flat_; }

  const std::vector<StratumLaw>& periodic_laws() const { return periodic_; }
  const std::vector<ExactStratum>& periodic_exact_laws() const { return periodic_exact_; }
  const std::shared_ptr<const PiecewiseBV>& f() const { return f_; }
  const std::shared_ptr<const PiecewiseBV>& g() const { return g_; }
  const std::shared_ptr<const ContinuedFraction>& cf() const { return cf_; }

  /// Memoized stratum; the reference stays valid for the lifetime of the environment.
  const StratumLaw& stratum(std::int64_t n) const;
  /// The whole cache window holding n (2^16 consecutive strata starting at a
  /// multiple of 2^16).
  std::shared_ptr<const std::vector<StratumLaw>> window(std::int64_t n) const;

  /// eps_n gamma_n / (1 - gamma_n): f(x + n theta) for the flat kind.
  double flat_summand(std::int64_t n) const;
  /// log(beta_n / alpha_n): f(x + (n-1) theta) for the general kind.
  double log_ratio(std::int64_t n) const;
  /// gamma_n eps_n / alpha_n: g(x + n theta) for the general kind.
  double drift_weight(std::int64_t n) const;

  /// Same kind and data with base point x (QP kinds only).
  std::shared_ptr<Environment> with_x(double x) const;

 private:
  Environment() = default;
  StratumLaw compute(std::int64_t n) const;

  Kind kind_ = Kind::Periodic;
  std::string name_;
  double eta_ = 0.0;
  double gamma0_ = 1.0 / 3.0;
  double x_ = 0.0;
  CirclePoint xp_;
  bool flat_ = true;
  std::vector<StratumLaw> periodic_;
  std::vector<ExactStratum> periodic_exact_;
  std::shared_ptr<const PiecewiseBV> f_, g_;
  std::shared_ptr<const ContinuedFraction> cf_;
  std::function<StratumLaw(std::int64_t)> rule_;

  mutable std::mutex mu_;
  mutable std::map<std::int64_t, std::shared_ptr<const std::vector<StratumLaw>>> cache_;
};

/// Certificate over [lo, hi]; throws HypothesisViolation below the environment's eta floor.
EtaCertificate validate(const Environment& env, std::int64_t lo, std::int64_t hi);

/// Embedded vertical chain: (alpha / (alpha + beta), beta / (alpha + beta)).
std::pair<double, double> vertical_law(const Environment& env, std::int64_t n);

/// Stratum checks used by validate and by the tests: probabilities sum to
/// one within 1e-12 and epsilon is the mean of mu.
bool law_consistent(const StratumLaw& s, double tol = 1e-12);

}  // namespace stratwalk
