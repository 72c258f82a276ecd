#include "stratwalk/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stratwalk/error.hpp"

namespace stratwalk {

namespace {

constexpr std::string_view kModule = "environment";

Pmf normalize_pmf(Pmf mu) {
  std::sort(mu.begin(), mu.end());
  Pmf out;
  for (const auto& [r, p] : mu) {
    if (p == 0.0) continue;
    if (!out.empty() && out.back().first == r)
      out.back().second += p;
    else
      out.emplace_back(r, p);
  }
  return out;
}

}  // namespace

StratumLaw StratumLaw::make(double alpha, double beta, double gamma, Pmf mu) {
  StratumLaw s;
  s.alpha = alpha;
  s.beta = beta;
  s.gamma = gamma;
  s.mu = normalize_pmf(std::move(mu));
  s.epsilon = 0.0;
  for (const auto& [r, p] : s.mu) s.epsilon += r * p;
  return s;
}

double StratumLaw::mu_at(int r) const {
  for (const auto& [a, p] : mu)
    if (a == r) return p;
  return 0.0;
}

std::string StratumLaw::mu_string() const {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [r, p] : mu) {
    if (!first) os << ';';
    os << r << ':' << p;
    first = false;
  }
  return os.str();
}

BigRational ExactStratum::epsilon() const {
  BigRational e(0);
  for (const auto& [r, p] : mu) e += BigRational(r) * p;
  return e;
}

Pmf realize_mu(double target_mean, double eta) {
  if (!(eta > 0.0) || !(eta < 1.0))
    throw Error(ErrorCode::RealizabilityError, kModule, "eta must lie in (0,1)");
  const double a = std::abs(target_mean);
  if (!std::isfinite(target_mean) || !(a < 1.0 / eta - 1.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "target mean " << target_mean << " needs |mean| < 1/eta - 1 = " << 1.0 / eta - 1.0;
    throw Error(ErrorCode::RealizabilityError, kModule, os.str());
  }
  const int L = std::max(1, static_cast<int>(std::ceil(a)));
  const double e = target_mean / L;
  // (1+e)/2 L - (1-e)/2 L = e L = target.
  Pmf mu{{-L, 0.5 * (1.0 - e)}, {L, 0.5 * (1.0 + e)}};
  return normalize_pmf(std::move(mu));
}

EtaCertificate eta_of(const StratumLaw& s) {
  EtaCertificate c;
  c.eta = s.alpha;
  c.clause = "alpha";
  auto take = [&](double v, const char* clause) {
    if (v < c.eta) {
      c.eta = v;
      c.clause = clause;
    }
  };
  take(s.beta, "beta");
  take(s.gamma, "gamma");
  take(1.0 - s.mu_at(0), "mu(0) <= 1 - eta");
  int R = 0;
  for (const auto& [r, p] : s.mu) R = std::max(R, std::abs(r));
  // Open support condition |r| < 1/eta; report just inside it.
  if (R > 0) take(1.0 / R - 1e-6, "supp(mu) in (-1/eta, 1/eta)");
  return c;
}

bool law_consistent(const StratumLaw& s, double tol) {
  if (std::abs(s.alpha + s.beta + s.gamma - 1.0) > tol) return false;
  double tot = 0.0, mean = 0.0;
  for (const auto& [r, p] : s.mu) {
    if (!(p >= 0.0)) return false;
    tot += p;
    mean += r * p;
  }
  return std::abs(tot - 1.0) <= tol && std::abs(mean - s.epsilon) <= tol * std::max(1.0, std::abs(mean));
}

// ---- Environment ----

std::shared_ptr<Environment> Environment::periodic(std::vector<StratumLaw> laws, double eta,
                                                   std::vector<ExactStratum> exact) {
  if (laws.empty()) throw Error(ErrorCode::InvalidConfig, kModule, "periodic environment needs at least one law");
  if (!exact.empty() && exact.size() != laws.size())
    throw Error(ErrorCode::InvalidConfig, kModule, "exact laws must match the period");
  std::shared_ptr<Environment> e(new Environment());
  e->kind_ = Kind::Periodic;
  e->name_ = "periodic";
  e->eta_ = eta;
  e->flat_ = true;
  for (auto& l : laws) {
    if (!law_consistent(l))
      throw Error(ErrorCode::InvalidConfig, kModule, "periodic law does not sum to one");
    if (l.alpha != l.beta) e->flat_ = false;
  }
  e->gamma0_ = laws.front().gamma;
  e->periodic_ = std::move(laws);
  e->periodic_exact_ = std::move(exact);
  return e;
}

std::shared_ptr<Environment> Environment::vertically_flat(std::shared_ptr<const PiecewiseBV> f,
                                                          std::shared_ptr<const ContinuedFraction> cf,
                                                          double x, double gamma0, double eta) {
  if (!f || !cf) throw Error(ErrorCode::InvalidConfig, kModule, "flat QP environment needs f and theta");
  if (!(gamma0 > 0.0 && gamma0 < 1.0)) throw Error(ErrorCode::InvalidConfig, kModule, "gamma0 must lie in (0,1)");
  std::shared_ptr<Environment> e(new Environment());
  e->kind_ = Kind::VerticallyFlatQP;
  e->name_ = "vertically_flat_qp";
  e->f_ = std::move(f);
  e->cf_ = std::move(cf);
  e->x_ = x;
  e->xp_ = CirclePoint::from_double(x - std::floor(x));
  e->gamma0_ = gamma0;
  e->eta_ = eta;
  e->flat_ = true;
  return e;
}

std::shared_ptr<Environment> Environment::general(std::shared_ptr<const PiecewiseBV> f,
                                                  std::shared_ptr<const PiecewiseBV> g,
                                                  std::shared_ptr<const ContinuedFraction> cf, double x,
                                                  double gamma0, double eta) {
  if (!f || !g || !cf) throw Error(ErrorCode::InvalidConfig, kModule, "general QP environment needs f, g and theta");
  if (!(gamma0 > 0.0 && gamma0 < 1.0)) throw Error(ErrorCode::InvalidConfig, kModule, "gamma0 must lie in (0,1)");
  std::shared_ptr<Environment> e(new Environment());
  e->kind_ = Kind::GeneralQP;
  e->name_ = "general_qp";
  e->f_ = std::move(f);
  e->g_ = std::move(g);
  e->cf_ = std::move(cf);
  e->x_ = x;
  e->xp_ = CirclePoint::from_double(x - std::floor(x));
  e->gamma0_ = gamma0;
  e->eta_ = eta;
  e->flat_ = e->f_->sup_norm() == 0.0;
  return e;
}

std::shared_ptr<Environment> Environment::explicit_rule(std::function<StratumLaw(std::int64_t)> rule, double eta,
                                                        bool flat, std::string name) {
  std::shared_ptr<Environment> e(new Environment());
  e->kind_ = Kind::Explicit;
  e->name_ = std::move(name);
  e->rule_ = std::move(rule);
  e->eta_ = eta;
  e->flat_ = flat;
  e->gamma0_ = e->rule_(0).gamma;
  return e;
}

std::shared_ptr<Environment> Environment::with_x(double x) const {
  switch (kind_) {
    case Kind::VerticallyFlatQP: {
      auto e = vertically_flat(f_, cf_, x, gamma0_, eta_);
      e->name_ = name_;
      return e;
    }
    case Kind::GeneralQP: {
      auto e = general(f_, g_, cf_, x, gamma0_, eta_);
      e->name_ = name_;
      return e;
    }
    default:
      throw Error(ErrorCode::WrongKind, kModule, "with_x applies to quasi-periodic kinds only");
  }
}

std::string Environment::kind_name() const {
  switch (kind_) {
    case Kind::Periodic: return "periodic";
    case Kind::VerticallyFlatQP: return "vertically_flat_qp";
    case Kind::GeneralQP: return "general_qp";
    case Kind::Explicit: return "explicit";
  }
  return "?";
}

StratumLaw Environment::compute(std::int64_t n) const {
  switch (kind_) {
    case Kind::Periodic: {
      const auto N = static_cast<std::int64_t>(periodic_.size());
      return periodic_[static_cast<std::size_t>(((n % N) + N) % N)];
    }
    case Kind::Explicit:
      return rule_(n);
    case Kind::VerticallyFlatQP: {
      const double fv = (*f_)(cf_->rotate(xp_, n));
      const double a = 0.5 * (1.0 - gamma0_);
      return StratumLaw::make(a, a, gamma0_, realize_mu(fv * (1.0 - gamma0_) / gamma0_, eta_));
    }
    case Kind::GeneralQP: {
      const double fv = (*f_)(cf_->rotate(xp_, n - 1));
      const double gv = (*g_)(cf_->rotate(xp_, n));
      const double a = (1.0 - gamma0_) / (1.0 + std::exp(fv));
      const double b = (1.0 - gamma0_) - a;
      return StratumLaw::make(a, b, gamma0_, realize_mu(gv * a / gamma0_, eta_));
    }
  }
  throw Error(ErrorCode::WrongKind, kModule, "unknown kind");
}

std::shared_ptr<const std::vector<StratumLaw>> Environment::window(std::int64_t n) const {
  const std::int64_t key = n >> kWindowBits;  // arithmetic shift: floor division
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  const std::int64_t start = key * (std::int64_t{1} << kWindowBits);
  auto w = std::make_shared<std::vector<StratumLaw>>();
  w->reserve(std::size_t{1} << kWindowBits);
  for (std::int64_t i = 0; i < (std::int64_t{1} << kWindowBits); ++i) {
    try {
      w->push_back(compute(start + i));
    } catch (const Error& err) {
      throw Error(err.code(), kModule, "stratum n = " + std::to_string(start + i) + ": " + err.what());
    }
  }
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = cache_.emplace(key, std::move(w));
  return it->second;
}

const StratumLaw& Environment::stratum(std::int64_t n) const {
  auto w = window(n);
  const std::int64_t start = (n >> kWindowBits) * (std::int64_t{1} << kWindowBits);
  // The cache owns the window for the lifetime of *this.
  return (*w)[static_cast<std::size_t>(n - start)];
}

double Environment::flat_summand(std::int64_t n) const {
  if (kind_ == Kind::VerticallyFlatQP) return (*f_)(cf_->rotate(xp_, n));
  const auto& s = stratum(n);
  return s.epsilon * s.gamma / (1.0 - s.gamma);
}

double Environment::log_ratio(std::int64_t n) const {
  if (kind_ == Kind::GeneralQP) return (*f_)(cf_->rotate(xp_, n - 1));
  if (kind_ == Kind::VerticallyFlatQP) return 0.0;
  const auto& s = stratum(n);
  return std::log(s.beta / s.alpha);
}

double Environment::drift_weight(std::int64_t n) const {
  if (kind_ == Kind::GeneralQP) return (*g_)(cf_->rotate(xp_, n));
  const auto& s = stratum(n);
  return s.gamma * s.epsilon / s.alpha;
}

EtaCertificate validate(const Environment& env, std::int64_t lo, std::int64_t hi) {
  EtaCertificate best;
  best.eta = std::numeric_limits<double>::infinity();
  for (std::int64_t n = lo; n <= hi; ++n) {
    const StratumLaw* s = nullptr;
    try {
      s = &env.stratum(n);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::RealizabilityError) throw;
      throw Error(ErrorCode::HypothesisViolation, kModule,
                  "n = " + std::to_string(n) + ": clause supp(mu) in (-1/eta, 1/eta): " + err.what());
    }
    if (!law_consistent(*s))
      throw Error(ErrorCode::HypothesisViolation, kModule,
                  "n = " + std::to_string(n) + ": probabilities do not sum to one");
    auto c = eta_of(*s);
    if (c.eta < best.eta) {
      best = c;
      best.argmin = n;
    }
  }
  if (best.eta < env.eta() - 1e-12)
    throw Error(ErrorCode::HypothesisViolation, kModule,
                "n = " + std::to_string(best.argmin) + ": clause " + best.clause + " gives eta " +
                    std::to_string(best.eta) + " below the floor " + std::to_string(env.eta()));
  return best;
}

std::pair<double, double> vertical_law(const Environment& env, std::int64_t n) {
  const auto& s = env.stratum(n);
  const double t = s.alpha + s.beta;
  return {s.alpha / t, s.beta / t};
}

}  // namespace stratwalk
