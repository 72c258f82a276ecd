#include "stratwalk/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stratwalk/error.hpp"

namespace stratwalk {

namespace {

constexpr std::string_view kModule = "dispersion";
using ld = long double;

// Weighted Welford accumulator.
struct Moments {
  ld W = 0, mean = 0, M2 = 0;
  void add(ld y, ld w) {
    W += w;
    const ld d = y - mean;
    mean += d * w / W;
    M2 += w * d * (y - mean);
  }
  // sum w (c - y)^2
  ld spread_around(ld c) const { return M2 + W * (c - mean) * (c - mean); }
};

struct Plain {
  ld n = 0, mean = 0, M2 = 0;
  void add(ld y) {
    n += 1;
    const ld d = y - mean;
    mean += d / n;
    M2 += d * (y - mean);
  }
  // (count) * sum (y - mean)^2 = sum_{k<l} (y_l - y_k)^2
  ld pair_sum() const { return n * M2; }
};

std::int64_t ceil_level(double v) {
  if (!(v < 4e18)) return std::int64_t{4'000'000'000'000'000'000};
  return static_cast<std::int64_t>(std::ceil(v));
}

}  // namespace

std::string to_string(Fn fn) {
  switch (fn) {
    case Fn::Phi: return "phi";
    case Fn::PhiPlus: return "phi_plus";
    case Fn::PhiStr: return "phi_str";
    case Fn::PhiEq: return "phi_eq";
    case Fn::PhiPlusEq: return "phi_plus_eq";
    case Fn::Psi: return "psi";
    case Fn::PsiPlus: return "psi_plus";
    case Fn::PsiPlusPlus: return "psi_plusplus";
    case Fn::PsiPlusMinus: return "psi_plusminus";
    case Fn::FlatPhi: return "flat_phi";
    case Fn::FlatPhiPlus: return "flat_phi_plus";
  }
  return "?";
}

std::int64_t inverse(const LevelFunction& g, double y) {
  if (y < g.value(0)) throw Error(ErrorCode::NumericRange, kModule, "inverse below the value at 0");
  if (g.value(g.horizon) <= y)
    throw Error(ErrorCode::HorizonExceeded, kModule,
                "inverse needs the table past level " + std::to_string(g.horizon));
  std::int64_t lo = 0, hi = g.horizon;  // g(lo) <= y < g(hi)
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (g.value(mid) <= y)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

DominatedVariation dominated_variation(const LevelFunction& g, double K, const std::vector<double>& grid, double cap) {
  DominatedVariation dv;
  int last_decade = std::numeric_limits<int>::min();
  for (double y : grid) {
    std::int64_t a, b;
    try {
      a = inverse(g, y);
      b = inverse(g, K * y);
    } catch (const Error&) {
      continue;
    }
    if (a <= 0) continue;
    const double r = static_cast<double>(b) / static_cast<double>(a);
    if (r > dv.C) {
      dv.C = r;
      dv.argmax_y = y;
    }
    if (r > cap) ++dv.violations;
    const int d = static_cast<int>(std::floor(std::log10(y)));
    if (d != last_decade) {
      dv.per_decade.push_back(r);
      last_decade = d;
    } else {
      dv.per_decade.back() = std::max(dv.per_decade.back(), r);
    }
  }
  return dv;
}

DispersionInput dispersion_input(const Environment& env, std::int64_t H, const DispersionOptions& opt) {
  if (H < 2) throw Error(ErrorCode::NumericRange, kModule, "dispersion horizon must be at least 2");
  using Mode = DispersionOptions::Mode;
  const bool flat = opt.mode == Mode::Flat || opt.mode == Mode::Both || (opt.mode == Mode::Auto && env.vertically_flat());
  const bool general = opt.mode == Mode::General || opt.mode == Mode::Both || (opt.mode == Mode::Auto && !env.vertically_flat());
  if (flat && !env.vertically_flat())
    throw Error(ErrorCode::WrongKind, kModule, "flat dispersion requires a vertically flat environment");

  DispersionInput in;
  in.H = H;
  const auto N = static_cast<std::size_t>(2 * H + 1);
  auto idx = [H](std::int64_t k) { return static_cast<std::size_t>(k + H); };

  if (flat) {
    if (env.kind() == Environment::Kind::VerticallyFlatQP) {
      in.flat_cocycle = birkhoff_stream(Cocycle(env.f(), env.cf(), env.x()), -H, H);
    } else {
      in.flat_cocycle.assign(N, 0.0);
      CompensatedSum acc;
      for (std::int64_t k = 0; k < H; ++k) {
        acc.add(env.flat_summand(k));
        in.flat_cocycle[idx(k + 1)] = acc.value();
      }
      CompensatedSum neg;
      for (std::int64_t k = -1; k >= -H; --k) {
        neg.add(env.flat_summand(k));
        in.flat_cocycle[idx(k)] = -neg.value();
      }
    }
  }
  if (general) {
    in.log_rho.assign(N, 0.0);
    in.drift.assign(N, 0.0);
    if (env.kind() == Environment::Kind::GeneralQP) {
      in.log_rho = birkhoff_stream(Cocycle(env.f(), env.cf(), env.x()), -H, H);
      const auto th = env.cf()->theta();
      CirclePoint p = env.cf()->rotate(CirclePoint::from_double(env.x() - std::floor(env.x())), -H);
      for (std::size_t i = 0; i < N; ++i) {
        in.drift[i] = (*env.g())(p);
        p = p + th;
      }
    } else {
      // log rho_k = sum_{1<=i<=k} log(beta_i/alpha_i), and -sum_{k<i<=0} for k < 0.
      CompensatedSum acc;
      for (std::int64_t k = 1; k <= H; ++k) {
        acc.add(env.log_ratio(k));
        in.log_rho[idx(k)] = acc.value();
      }
      CompensatedSum neg;
      for (std::int64_t k = -1; k >= -H; --k) {
        neg.add(env.log_ratio(k + 1));
        in.log_rho[idx(k)] = -neg.value();
      }
      for (std::int64_t k = -H; k <= H; ++k) in.drift[idx(k)] = env.drift_weight(k);
    }
    if (!opt.unit_prefactor) {
      in.pref_v = std::exp(env.log_ratio(0));
      in.pref_w = 1.0 / in.pref_v;
    }
  }
  return in;
}

DispersionTable DispersionTable::build(const Environment& env, std::int64_t H, const DispersionOptions& opt) {
  return from_input(dispersion_input(env, H, opt), opt);
}

DispersionTable DispersionTable::from_input(DispersionInput in, const DispersionOptions& opt) {
  DispersionTable t;
  t.H_ = in.H;
  t.psi_ = opt.psi;
  t.pref_v_ = in.pref_v;
  t.pref_w_ = in.pref_w;
  const auto N = static_cast<std::size_t>(2 * in.H + 1);
  if (!in.flat_cocycle.empty() && in.flat_cocycle.size() != N)
    throw Error(ErrorCode::NumericRange, kModule, "flat cocycle size mismatch");
  if (!in.log_rho.empty() && (in.log_rho.size() != N || in.drift.size() != N))
    throw Error(ErrorCode::NumericRange, kModule, "general input size mismatch");
  t.F_ = std::move(in.flat_cocycle);
  t.log_rho_ = std::move(in.log_rho);
  t.drift_ = std::move(in.drift);
  if (!t.F_.empty()) t.build_flat();
  if (!t.log_rho_.empty()) t.build_general();
  return t;
}

double DispersionTable::cocycle(std::int64_t k) const {
  const auto i = static_cast<std::size_t>(k + H_);
  return F_.empty() ? log_rho_.at(i) : F_.at(i);
}

void DispersionTable::build_flat() {
  const auto n1 = static_cast<std::size_t>(H_ + 1);
  phi_.assign(n1, 0.0);
  phi_plus_.assign(n1, 0.0);
  Plain both, right, left;
  const ld f0 = F_[static_cast<std::size_t>(H_)];
  both.add(f0);
  right.add(f0);
  left.add(f0);
  for (std::int64_t n = 1; n <= H_; ++n) {
    const ld fp = F_[static_cast<std::size_t>(H_ + n)];
    const ld fm = F_[static_cast<std::size_t>(H_ - n)];
    both.add(fp);
    both.add(fm);
    right.add(fp);
    left.add(fm);
    const ld n2 = static_cast<ld>(n) * n;
    phi_[static_cast<std::size_t>(n)] = static_cast<double>(std::sqrt(n2 + both.pair_sum()));
    phi_plus_[static_cast<std::size_t>(n)] = static_cast<double>(std::sqrt(n2 + right.pair_sum() + left.pair_sum()));
  }
}

void DispersionTable::build_general() {
  pos_.clear();
  neg_.assign(1, Side{});

  auto run = [&](bool positive) {
    ld R = 0, I = 0, PR = 0, PS = 0, PS1 = 0;
    ld G = 0, G1 = 0;  // one-sided partial sums of g/rho and 1/rho
    Moments y, y1, c, c1;
    for (std::int64_t j = positive ? 0 : 1; j <= H_; ++j) {
      const std::int64_t k = positive ? j : -j;
      const auto i = static_cast<std::size_t>(k + H_);
      const ld rho = std::exp(static_cast<ld>(log_rho_[i]));
      const ld g = drift_[i];
      R += rho;
      I += 1 / rho;
      PR += rho * I + R / rho;
      // Pairs ending at the new index: sum over earlier w = rho of (G_new - y)^2,
      // where y is the partial sum just before each earlier index.
      y.add(G, rho);
      G += g / rho;
      PS += rho * y.spread_around(G);
      c.add(G, rho);
      if (psi_) {
        y1.add(G1, rho);
        G1 += 1 / rho;
        PS1 += rho * y1.spread_around(G1);
        c1.add(G1, rho);
      }
      Side s{static_cast<double>(R), static_cast<double>(I), static_cast<double>(PR),
             static_cast<double>(PS), static_cast<double>(c.mean), static_cast<double>(c.M2),
             static_cast<double>(PS1), static_cast<double>(c1.mean), static_cast<double>(c1.M2)};
      // Past the double range the levels are far beyond any usable horizon; the side stops there.
      if (!std::isfinite(s.R * s.I) || !std::isfinite(s.PR + s.PS + s.PS1 + s.M2 + s.M21)) break;
      (positive ? pos_ : neg_).push_back(s);
    }
  };
  run(true);
  run(false);
}

void DispersionTable::build_prefix() const {
  std::call_once(*prefix_once_, [this] {
    const auto N = static_cast<std::size_t>(2 * H_ + 1);
    pre1_.assign(N + 1, 0);
    pre2_.assign(N + 1, 0);
    Wide s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const Wide f = F_.empty() ? log_rho_[i] : F_[i];
      s1 += f;
      s2 += f * f;
      pre1_[i + 1] = s1;
      pre2_[i + 1] = s2;
    }
  });
}

double DispersionTable::psi(std::int64_t a, std::int64_t b) const {
  if (!(a < b)) throw Error(ErrorCode::NumericRange, kModule, "psi needs a < b");
  if (a < -H_ || b > H_) throw Error(ErrorCode::HorizonExceeded, kModule, "psi window outside the table");
  build_prefix();
  const auto lo = static_cast<std::size_t>(a + H_), hi = static_cast<std::size_t>(b + H_ + 1);
  const Wide W = static_cast<Wide>(b - a + 1);
  const Wide S1 = pre1_[hi] - pre1_[lo];
  const Wide S2 = pre2_[hi] - pre2_[lo];
  // Shift by the first value; W sum f^2 - (sum f)^2 is shift invariant and the
  // shifted sums keep the final subtraction well conditioned.
  const Wide c = cocycle(a);
  const Wide P = S1 - W * c;
  const Wide Q = S2 - 2 * c * S1 + W * c * c;
  const Wide v = W * Q - P * P;
  return v > 0 ? static_cast<double>(v) : 0.0;
}

std::pair<double, double> DispersionTable::flat_phi(std::int64_t n) const {
  if (F_.empty()) throw Error(ErrorCode::WrongKind, kModule, "flat_phi needs a vertically flat table");
  if (n < 0 || n > H_) throw Error(ErrorCode::HorizonExceeded, kModule, "flat_phi outside the table");
  return {phi_[static_cast<std::size_t>(n)], phi_plus_[static_cast<std::size_t>(n)]};
}

VW DispersionTable::v_w(std::int64_t n) const {
  if (pos_.empty()) throw Error(ErrorCode::WrongKind, kModule, "v_w needs a general table");
  if (n < 0 || n + 1 >= static_cast<std::int64_t>(std::min(pos_.size(), neg_.size())))
    throw Error(ErrorCode::HorizonExceeded, kModule, "v_w outside the table");
  const auto& p = pos_[static_cast<std::size_t>(n)];
  const auto& m = neg_[static_cast<std::size_t>(n + 1)];
  return {p.R, pref_v_ * m.R, p.I, pref_w_ * m.I};
}

std::int64_t DispersionTable::end_plus(double level) const {
  // Largest j with v_+(j) <= level.
  auto it = std::upper_bound(pos_.begin(), pos_.end(), level, [](double y, const Side& s) { return y < s.R; });
  const auto j = static_cast<std::int64_t>(it - pos_.begin()) - 1;
  return std::max<std::int64_t>(0, j);
}

std::int64_t DispersionTable::end_minus(double level) const {
  // v_-(j) = pref * neg_[j+1].R; largest j with v_-(j) <= level.
  const double y = level / pref_v_;
  auto it = std::upper_bound(neg_.begin() + 1, neg_.end(), y, [](double v, const Side& s) { return v < s.R; });
  const auto j = static_cast<std::int64_t>(it - (neg_.begin() + 1)) - 1;
  return std::max<std::int64_t>(0, j);
}

long double DispersionTable::cross(const Side& n, const Side& p, bool unit) const {
  const ld mn = unit ? n.m1 : n.m, mp = unit ? p.m1 : p.m;
  const ld Mn = unit ? n.M21 : n.M2, Mp = unit ? p.M21 : p.M2;
  const ld s = mn + mp;
  return static_cast<ld>(n.R) * Mp + static_cast<ld>(p.R) * Mn + static_cast<ld>(n.R) * p.R * s * s;
}

long double DispersionTable::ratio_part(std::int64_t A, std::int64_t B) const {
  const auto& p = pos_[static_cast<std::size_t>(B)];
  ld v = p.PR;
  if (A > 0) {
    const auto& n = neg_[static_cast<std::size_t>(A)];
    v += static_cast<ld>(n.PR) + static_cast<ld>(n.I) * p.R + static_cast<ld>(n.R) * p.I;
  }
  return v;
}

long double DispersionTable::window_drift2(std::int64_t A, std::int64_t B, bool unit) const {
  if (pos_.empty()) throw Error(ErrorCode::WrongKind, kModule, "window sums need a general table");
  if (unit && !psi_) throw Error(ErrorCode::WrongKind, kModule, "table built without the g = 1 sums");
  if (A < 0 || B < 0 || A >= static_cast<std::int64_t>(neg_.size()) || B >= static_cast<std::int64_t>(pos_.size()))
    throw Error(ErrorCode::HorizonExceeded, kModule, "window outside the table");
  const auto& p = pos_[static_cast<std::size_t>(B)];
  ld v = unit ? p.PS1 : p.PS;
  if (A > 0) {
    const auto& n = neg_[static_cast<std::size_t>(A)];
    v += static_cast<ld>(unit ? n.PS1 : n.PS) + cross(n, p, unit);
  }
  return v;
}

long double DispersionTable::window_phi2(std::int64_t A, std::int64_t B) const {
  const ld drift = window_drift2(A, B, false);  // range-checks the window
  return ratio_part(A, B) + drift;
}

double DispersionTable::general_phi(double m, double n) const {
  return static_cast<double>(std::sqrt(window_phi2(end_minus(m), end_plus(n))));
}

double DispersionTable::phi_str(std::int64_t n) const {
  if (pos_.empty()) throw Error(ErrorCode::WrongKind, kModule, "phi_str needs a general table");
  const auto A = end_minus(static_cast<double>(n)), B = end_plus(static_cast<double>(n));
  const ld I = static_cast<ld>(pos_[static_cast<std::size_t>(B)].I) + (A > 0 ? neg_[static_cast<std::size_t>(A)].I : 0.0);
  return static_cast<double>(std::sqrt(static_cast<ld>(n) * I));
}

PsiVariants DispersionTable::psi_variants(std::int64_t n) const {
  const auto A = end_minus(static_cast<double>(n)), B = end_plus(static_cast<double>(n));
  const ld all = window_drift2(A, B, true);
  const ld pp = window_drift2(0, B, true);
  const ld pm = window_drift2(A, 0, true);
  const ld zero = window_drift2(0, 0, true);
  return {static_cast<double>(std::sqrt(all)), static_cast<double>(std::sqrt(pp + pm - zero)),
          static_cast<double>(std::sqrt(pp)), static_cast<double>(std::sqrt(pm))};
}

double DispersionTable::value(Fn fn, std::int64_t n) const {
  if (fn == Fn::FlatPhi) return flat_phi(n).first;
  if (fn == Fn::FlatPhiPlus) return flat_phi(n).second;
  const double lv = static_cast<double>(n);
  const auto A = end_minus(lv), B = end_plus(lv);
  switch (fn) {
    case Fn::Phi:
      return static_cast<double>(std::sqrt(window_phi2(A, B)));
    case Fn::PhiPlus:
      return static_cast<double>(std::sqrt(window_phi2(A, 0) + window_phi2(0, B)));
    case Fn::PhiStr:
      return phi_str(n);
    case Fn::PhiEq:
      return phi_str(n) + static_cast<double>(std::sqrt(window_drift2(A, B, false)));
    case Fn::PhiPlusEq:
      return phi_str(n) + static_cast<double>(std::sqrt(window_drift2(A, 0, false) + window_drift2(0, B, false) -
                                                        window_drift2(0, 0, false)));
    case Fn::Psi:
      return psi_variants(n).Psi;
    case Fn::PsiPlus:
      return psi_variants(n).Psi_plus;
    case Fn::PsiPlusPlus:
      return psi_variants(n).Psi_plusplus;
    case Fn::PsiPlusMinus:
      return psi_variants(n).Psi_plusminus;
    default:
      break;
  }
  throw Error(ErrorCode::WrongKind, kModule, "unknown function");
}

std::int64_t DispersionTable::level_horizon(Fn fn) const {
  if (fn == Fn::FlatPhi || fn == Fn::FlatPhiPlus) {
    if (F_.empty()) throw Error(ErrorCode::WrongKind, kModule, "no flat data in this table");
    return H_;
  }
  if (pos_.empty()) throw Error(ErrorCode::WrongKind, kModule, "no general data in this table");
  // Levels n with v_+^{-1}(n) below the last positive entry and v_-^{-1}(n) two below
  // the last negative one, so both ends are certified.
  const double vp = pos_.back().R;
  const double vm = pref_v_ * neg_.back().R;
  return std::max<std::int64_t>(0, std::min(ceil_level(vp), ceil_level(vm)) - 1);
}

LevelFunction DispersionTable::level_function(Fn fn) const {
  return LevelFunction{[this, fn](std::int64_t n) { return value(fn, n); }, level_horizon(fn)};
}

}  // namespace stratwalk
