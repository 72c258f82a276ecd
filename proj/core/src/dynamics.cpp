#include "stratwalk/dynamics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <numbers>

#include "stratwalk/error.hpp"

namespace stratwalk {

namespace {

constexpr std::string_view kModule = "dynamics";
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap01(double x) {
  double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

// An arc of an affine piece on the circle, possibly crossing 0.
struct Arc {
  double start;
  double len;
  double value;
  double slope;
};

}  // namespace

// ---- FourierSeries ----

double FourierSeries::operator()(double x) const {
  double v = cos_coef.empty() ? 0.0 : cos_coef[0];
  for (std::size_t k = 1; k < cos_coef.size(); ++k)
    if (cos_coef[k] != 0.0) v += cos_coef[k] * std::cos(kTwoPi * static_cast<double>(k) * x);
  for (std::size_t k = 1; k < sin_coef.size(); ++k)
    if (sin_coef[k] != 0.0) v += sin_coef[k] * std::sin(kTwoPi * static_cast<double>(k) * x);
  return v;
}

double FourierSeries::derivative(double x) const {
  double v = 0.0;
  for (std::size_t k = 1; k < cos_coef.size(); ++k)
    v -= cos_coef[k] * kTwoPi * static_cast<double>(k) * std::sin(kTwoPi * static_cast<double>(k) * x);
  for (std::size_t k = 1; k < sin_coef.size(); ++k)
    v += sin_coef[k] * kTwoPi * static_cast<double>(k) * std::cos(kTwoPi * static_cast<double>(k) * x);
  return v;
}

double FourierSeries::lipschitz() const {
  double L = 0.0;
  for (std::size_t k = 1; k < cos_coef.size(); ++k) L += kTwoPi * static_cast<double>(k) * std::abs(cos_coef[k]);
  for (std::size_t k = 1; k < sin_coef.size(); ++k) L += kTwoPi * static_cast<double>(k) * std::abs(sin_coef[k]);
  return L;
}

FourierSeries FourierSeries::scaled(double c) const {
  FourierSeries r = *this;
  for (auto& v : r.cos_coef) v *= c;
  for (auto& v : r.sin_coef) v *= c;
  return r;
}

FourierSeries FourierSeries::plus(const FourierSeries& o) const {
  FourierSeries r;
  r.cos_coef.assign(std::max(cos_coef.size(), o.cos_coef.size()), 0.0);
  r.sin_coef.assign(std::max(sin_coef.size(), o.sin_coef.size()), 0.0);
  for (std::size_t k = 0; k < cos_coef.size(); ++k) r.cos_coef[k] += cos_coef[k];
  for (std::size_t k = 0; k < o.cos_coef.size(); ++k) r.cos_coef[k] += o.cos_coef[k];
  for (std::size_t k = 0; k < sin_coef.size(); ++k) r.sin_coef[k] += sin_coef[k];
  for (std::size_t k = 0; k < o.sin_coef.size(); ++k) r.sin_coef[k] += o.sin_coef[k];
  return r;
}

FourierSeries FourierSeries::shifted(double s) const {
  std::size_t K = static_cast<std::size_t>(std::max(modes(), 0));
  FourierSeries r;
  r.cos_coef.assign(K + 1, 0.0);
  r.sin_coef.assign(K + 1, 0.0);
  if (!cos_coef.empty()) r.cos_coef[0] = cos_coef[0];
  for (std::size_t k = 1; k <= K; ++k) {
    double c = k < cos_coef.size() ? cos_coef[k] : 0.0;
    double d = k < sin_coef.size() ? sin_coef[k] : 0.0;
    double phi = kTwoPi * static_cast<double>(k) * s;
    r.cos_coef[k] = c * std::cos(phi) - d * std::sin(phi);
    r.sin_coef[k] = c * std::sin(phi) + d * std::cos(phi);
  }
  return r;
}

FourierSeries FourierSeries::reflected(double x0) const {
  FourierSeries r = *this;
  for (std::size_t k = 1; k < r.sin_coef.size(); ++k) r.sin_coef[k] = -r.sin_coef[k];
  return r.shifted(2.0 * x0);
}

// ---- PiecewiseBV ----

PiecewiseBV::PiecewiseBV() { finalize(); }

PiecewiseBV PiecewiseBV::affine(std::vector<double> breaks, std::vector<double> values, std::vector<double> slopes) {
  if (breaks.empty() || breaks.size() != values.size() || breaks.size() != slopes.size())
    throw Error(ErrorCode::InvalidConfig, kModule, "affine pieces need matching breaks/values/slopes");
  if (breaks[0] != 0.0) throw Error(ErrorCode::InvalidConfig, kModule, "first breakpoint must be 0");
  for (std::size_t i = 1; i < breaks.size(); ++i)
    if (!(breaks[i] > breaks[i - 1]) || breaks[i] >= 1.0)
      throw Error(ErrorCode::InvalidConfig, kModule, "breakpoints must be increasing in [0,1)");
  PiecewiseBV f;
  f.breaks_ = std::move(breaks);
  f.values_ = std::move(values);
  f.slopes_ = std::move(slopes);
  f.finalize();
  return f;
}

PiecewiseBV PiecewiseBV::constant(double c) { return affine({0.0}, {c}, {0.0}); }

PiecewiseBV PiecewiseBV::indicator_pm() { return affine({0.0, 0.5}, {1.0, -1.0}, {0.0, 0.0}); }

PiecewiseBV PiecewiseBV::indicator(double a, double b) {
  a = wrap01(a);
  b = wrap01(b);
  if (a == b) return constant(0.0);
  if (a < b) {
    if (a == 0.0) return affine({0.0, b}, {1.0, 0.0}, {0.0, 0.0});
    return affine({0.0, a, b}, {0.0, 1.0, 0.0}, {0.0, 0.0, 0.0});
  }
  // wraps: [a,1) u [0,b)
  if (b == 0.0) return affine({0.0, a}, {0.0, 1.0}, {0.0, 0.0});
  return affine({0.0, b, a}, {1.0, 0.0, 1.0}, {0.0, 0.0, 0.0});
}

PiecewiseBV PiecewiseBV::sawtooth() { return affine({0.0}, {-0.5}, {1.0}); }

PiecewiseBV PiecewiseBV::fourier(FourierSeries s) {
  PiecewiseBV f;
  f.smooth_ = std::move(s);
  f.finalize();
  return f;
}

PiecewiseBV PiecewiseBV::callable(std::function<double(double)> fn, double K, std::vector<double> breaks) {
  PiecewiseBV f;
  breaks.push_back(0.0);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  f.breaks_ = breaks;
  f.values_.assign(breaks.size(), 0.0);
  f.slopes_.assign(breaks.size(), 0.0);
  f.callable_ = std::move(fn);
  f.callable_K_ = K;
  f.finalize();
  return f;
}

double PiecewiseBV::affine_at(double x) const {
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - breaks_.begin()) - 1;
  return values_[i] + slopes_[i] * (x - breaks_[i]);
}

double PiecewiseBV::operator()(double x) const {
  x = wrap01(x);
  double v = breaks_.size() == 1 ? values_[0] + slopes_[0] * x : affine_at(x);
  if (smooth_) v += (*smooth_)(x);
  if (callable_) v += callable_(x);
  return v;
}

bool PiecewiseBV::is_pure_fourier() const {
  if (callable_) return false;
  for (std::size_t i = 0; i < breaks_.size(); ++i)
    if (values_[i] != 0.0 || slopes_[i] != 0.0) return false;
  return true;
}

bool PiecewiseBV::is_piecewise_constant() const {
  if (callable_ || smooth_) return false;
  return std::all_of(slopes_.begin(), slopes_.end(), [](double s) { return s == 0.0; });
}

void PiecewiseBV::finalize() {
  const std::size_t P = breaks_.size();
  auto seg_len = [&](std::size_t i) { return (i + 1 < P ? breaks_[i + 1] : 1.0) - breaks_[i]; };
  const bool numeric = smooth_.has_value() || static_cast<bool>(callable_);
  auto full = [&](double x) { return (*this)(x); };
  long double var = 0.0L, mean = 0.0L;
  double sup = 0.0;
  // Jumps between consecutive affine segments (smooth parts are continuous,
  // callables declare their discontinuities as breakpoints).
  auto left_limit_end = [&](std::size_t i) {
    double len = seg_len(i);
    double v = values_[i] + slopes_[i] * len;
    return v;
  };
  for (std::size_t i = 0; i < P; ++i) {
    double len = seg_len(i);
    if (!numeric) {
      var += std::abs(static_cast<long double>(slopes_[i])) * len;
      mean += (static_cast<long double>(values_[i]) + 0.5L * slopes_[i] * len) * len;
      sup = std::max({sup, std::abs(values_[i]), std::abs(values_[i] + slopes_[i] * len)});
    }
    if (i > 0 && !callable_) var += std::abs(values_[i] - left_limit_end(i - 1));
  }
  double wrap_jump = 0.0;
  if (!numeric) {
    wrap_jump = std::abs(values_[0] - left_limit_end(P - 1));
  } else {
    // Numerical pass over each segment: total variation by fine sampling,
    // mean by adaptive Gauss-Kronrod on the combined function.
    var = 0.0L;
    mean = 0.0L;
    double K = callable_K_ + (smooth_ ? smooth_->lipschitz() : 0.0);
    double prev_end = 0.0;
    double first_start = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      double a = breaks_[i], len = seg_len(i), b = a + len;
      int n = std::max(16, static_cast<int>(std::ceil(len * std::max(4096.0, 64.0 * K))));
      n = std::min(n, 1 << 16);
      double prev = full(a);
      if (i == 0) first_start = prev;
      if (i > 0) var += std::abs(prev - prev_end);
      sup = std::max(sup, std::abs(prev));
      for (int j = 1; j <= n; ++j) {
        double x = j == n ? std::nextafter(b, a) : a + len * j / n;
        double v = full(x);
        var += std::abs(v - prev);
        sup = std::max(sup, std::abs(v));
        prev = v;
      }
      prev_end = prev;
      auto g = [&](double x) { return full(std::min(x, std::nextafter(b, a))); };
      mean += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 8, 1e-13);
    }
    wrap_jump = std::abs(first_start - prev_end);
  }
  var_interval_ = static_cast<double>(var);
  var_circle_ = var_interval_ + wrap_jump;
  mean_ = static_cast<double>(mean);
  sup_ = sup;
}

PiecewiseBV PiecewiseBV::scaled(double c) const {
  PiecewiseBV r = *this;
  for (auto& v : r.values_) v *= c;
  for (auto& v : r.slopes_) v *= c;
  if (r.smooth_) r.smooth_ = r.smooth_->scaled(c);
  if (r.callable_) {
    auto fn = r.callable_;
    r.callable_ = [fn, c](double x) { return c * fn(x); };
    r.callable_K_ *= std::abs(c);
  }
  r.finalize();
  return r;
}

PiecewiseBV PiecewiseBV::plus(const PiecewiseBV& o) const {
  std::vector<double> br;
  br.reserve(breaks_.size() + o.breaks_.size());
  std::merge(breaks_.begin(), breaks_.end(), o.breaks_.begin(), o.breaks_.end(), std::back_inserter(br));
  br.erase(std::unique(br.begin(), br.end()), br.end());
  PiecewiseBV r;
  r.breaks_ = br;
  r.values_.resize(br.size());
  r.slopes_.resize(br.size());
  std::size_t i = 0, j = 0;
  for (std::size_t k = 0; k < br.size(); ++k) {
    double x = br[k];
    while (i + 1 < breaks_.size() && breaks_[i + 1] <= x) ++i;
    while (j + 1 < o.breaks_.size() && o.breaks_[j + 1] <= x) ++j;
    r.values_[k] = values_[i] + slopes_[i] * (x - breaks_[i]) + o.values_[j] + o.slopes_[j] * (x - o.breaks_[j]);
    r.slopes_[k] = slopes_[i] + o.slopes_[j];
  }
  if (smooth_ && o.smooth_)
    r.smooth_ = smooth_->plus(*o.smooth_);
  else if (smooth_)
    r.smooth_ = smooth_;
  else if (o.smooth_)
    r.smooth_ = o.smooth_;
  if (callable_ && o.callable_) {
    auto a = callable_, b = o.callable_;
    r.callable_ = [a, b](double x) { return a(x) + b(x); };
  } else if (callable_) {
    r.callable_ = callable_;
  } else if (o.callable_) {
    r.callable_ = o.callable_;
  }
  r.callable_K_ = callable_K_ + o.callable_K_;
  r.finalize();
  return r;
}

namespace {

PiecewiseBV from_arcs(std::vector<Arc> arcs) {
  std::vector<Arc> parts;
  parts.reserve(arcs.size() + 1);
  for (auto a : arcs) {
    a.start = wrap01(a.start);
    double end = a.start + a.len;
    if (end > 1.0 && end - 1.0 > 1e-15) {
      double l1 = 1.0 - a.start;
      parts.push_back({a.start, l1, a.value, a.slope});
      parts.push_back({0.0, a.len - l1, a.value + a.slope * l1, a.slope});
    } else {
      parts.push_back(a);
    }
  }
  std::sort(parts.begin(), parts.end(), [](const Arc& x, const Arc& y) { return x.start < y.start; });
  std::vector<double> br, va, sl;
  for (const auto& p : parts) {
    if (p.len <= 0.0) continue;
    if (!br.empty() && p.start == br.back()) {
      va.back() = p.value;
      sl.back() = p.slope;
      continue;
    }
    br.push_back(p.start);
    va.push_back(p.value);
    sl.push_back(p.slope);
  }
  if (br.empty() || br[0] != 0.0) {
    // Rounding left a sliver before the first start: extend the last arc.
    const auto& last = parts.back();
    br.insert(br.begin(), 0.0);
    double off = 1.0 - last.start;
    va.insert(va.begin(), last.value + last.slope * off);
    sl.insert(sl.begin(), last.slope);
  }
  return PiecewiseBV::affine(std::move(br), std::move(va), std::move(sl));
}

}  // namespace

PiecewiseBV PiecewiseBV::shifted(double s) const {
  s = wrap01(s);
  const std::size_t P = breaks_.size();
  std::vector<Arc> arcs;
  arcs.reserve(P);
  for (std::size_t i = 0; i < P; ++i) {
    double len = (i + 1 < P ? breaks_[i + 1] : 1.0) - breaks_[i];
    arcs.push_back({breaks_[i] + s, len, values_[i], slopes_[i]});
  }
  PiecewiseBV r = s == 0.0 ? *this : from_arcs(std::move(arcs));
  if (smooth_) r.smooth_ = smooth_->shifted(s);
  if (callable_) {
    auto fn = callable_;
    r.callable_ = [fn, s](double x) { return fn(wrap01(x - s)); };
    r.callable_K_ = callable_K_;
  }
  r.finalize();
  return r;
}

PiecewiseBV PiecewiseBV::reflected(double x0) const {
  const std::size_t P = breaks_.size();
  std::vector<Arc> arcs;
  arcs.reserve(P);
  for (std::size_t i = 0; i < P; ++i) {
    double len = (i + 1 < P ? breaks_[i + 1] : 1.0) - breaks_[i];
    double end_val = values_[i] + slopes_[i] * len;
    arcs.push_back({2.0 * x0 - breaks_[i] - len, len, end_val, -slopes_[i]});
  }
  PiecewiseBV r = from_arcs(std::move(arcs));
  if (smooth_) r.smooth_ = smooth_->reflected(x0);
  if (callable_) {
    auto fn = callable_;
    r.callable_ = [fn, x0](double x) { return fn(wrap01(2.0 * x0 - x)); };
    r.callable_K_ = callable_K_;
  }
  r.finalize();
  return r;
}

PiecewiseBV PiecewiseBV::rotated(const ContinuedFraction& cf, std::int64_t n) const {
  // f(x + n theta) = f(x - s) with s = -n theta.
  return shifted((-cf.theta().times(n)).to_double());
}

PiecewiseBV PiecewiseBV::centered_copy() const { return plus(constant(-mean_)); }

double PiecewiseBV::support_length(double tol) const {
  const std::size_t P = breaks_.size();
  long double total = 0.0L;
  for (std::size_t i = 0; i < P; ++i) {
    double len = (i + 1 < P ? breaks_[i + 1] : 1.0) - breaks_[i];
    double v0 = values_[i], v1 = values_[i] + slopes_[i] * len;
    if (std::max(std::abs(v0), std::abs(v1)) > tol) total += len;
  }
  return static_cast<double>(total);
}

// ---- picks ----

PiecewiseBV pick_function(double B, double Delta) {
  if (!(B > 0.0) || !(Delta > 0.0)) throw Error(ErrorCode::NumericRange, kModule, "pick needs B > 0 and Delta > 0");
  return pick_sum({Pick{0.0, 1.0, B, Delta}});
}

PiecewiseBV pick_sum(const std::vector<Pick>& picks, std::size_t budget) {
  if (picks.size() > budget)
    throw Error(ErrorCode::TruncationTooDeep, kModule,
                std::to_string(picks.size()) + " picks exceed the budget of " + std::to_string(budget));
  struct Event {
    double pos;
    long double dslope;
    int dcount;
  };
  std::vector<Event> ev;
  ev.reserve(picks.size() * 3);
  long double v0 = 0.0L, s0 = 0.0L;
  long count0 = 0;
  for (const auto& p : picks) {
    if (!(p.Delta > 0.0)) throw Error(ErrorCode::NumericRange, kModule, "pick width must be positive");
    const long double k = static_cast<long double>(p.weight) * p.B / p.Delta;
    const double c = wrap01(p.center);
    // Value and right-derivative at 0.
    double y = wrap01(-c);  // position of 0 relative to the centre
    double d = std::min(y, 1.0 - y);
    int dprime = y < 0.5 ? 1 : -1;
    if (d < p.Delta) v0 += static_cast<long double>(p.weight) * p.B * (1.0L - d / static_cast<long double>(p.Delta));
    bool active = dprime > 0 ? d < p.Delta : d <= p.Delta;
    if (active) {
      s0 += -dprime * k;
      if (p.Delta < 0.5) ++count0;
    }
    auto push = [&](double pos, long double ds, int dc) {
      pos = wrap01(pos);
      if (pos > 0.0) ev.push_back({pos, ds, dc});
    };
    if (p.Delta < 0.5) {
      push(c - p.Delta, k, 1);
      push(c, -2.0L * k, 0);
      push(c + p.Delta, k, -1);
    } else {
      push(c, -2.0L * k, 0);
      push(c + 0.5, 2.0L * k, 0);
    }
  }
  bool has_wide = std::any_of(picks.begin(), picks.end(), [](const Pick& p) { return p.Delta >= 0.5; });
  std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.pos < b.pos; });
  std::vector<double> br{0.0}, va{static_cast<double>(v0)}, sl{static_cast<double>(s0)};
  long double val = v0, slope = s0, pos = 0.0L;
  long count = count0;
  for (std::size_t i = 0; i < ev.size();) {
    double p = ev[i].pos;
    long double ds = 0.0L;
    while (i < ev.size() && ev[i].pos == p) {
      ds += ev[i].dslope;
      count += ev[i].dcount;
      ++i;
    }
    val += slope * (static_cast<long double>(p) - pos);
    pos = p;
    slope += ds;
    if (count == 0 && !has_wide) {
      // Outside every tent: reset exactly, so rounding does not leak into the gaps.
      val = 0.0L;
      slope = 0.0L;
    }
    br.push_back(p);
    va.push_back(static_cast<double>(val));
    sl.push_back(static_cast<double>(slope));
  }
  return PiecewiseBV::affine(std::move(br), std::move(va), std::move(sl));
}

// ---- Cocycle ----

Cocycle::Cocycle(std::shared_ptr<const PiecewiseBV> f, std::shared_ptr<const ContinuedFraction> cf, double x)
    : Cocycle(std::move(f), std::move(cf), CirclePoint::from_double(x)) {}

Cocycle::Cocycle(std::shared_ptr<const PiecewiseBV> f, std::shared_ptr<const ContinuedFraction> cf, const CirclePoint& x)
    : f_(std::move(f)), cf_(std::move(cf)), x_(x) {
  if (!f_ || !cf_) throw Error(ErrorCode::InvalidConfig, kModule, "cocycle needs a function and an angle");
}

Cocycle Cocycle::moved(std::int64_t n) const { return Cocycle(f_, cf_, cf_->rotate(x_, n)); }

double birkhoff(const Cocycle& c, std::int64_t n) {
  if (n == 0) return 0.0;
  const auto& f = c.f();
  const CirclePoint th = c.cf().theta();
  CompensatedSum acc;
  if (n > 0) {
    CirclePoint p = c.x();
    for (std::int64_t i = 0; i < n; ++i) {
      acc.add(f(p));
      p = p + th;
    }
    return acc.value();
  }
  CirclePoint p = c.x() - th;
  for (std::int64_t i = -1; i >= n; --i) {
    acc.add(f(p));
    p = p - th;
  }
  return -acc.value();
}

std::vector<double> birkhoff_stream(const Cocycle& c, std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw Error(ErrorCode::NumericRange, kModule, "empty birkhoff range");
  std::vector<double> out(static_cast<std::size_t>(hi - lo + 1), 0.0);
  const auto& f = c.f();
  const CirclePoint th = c.cf().theta();
  auto put = [&](std::int64_t n, double v) {
    if (n >= lo && n <= hi) out[static_cast<std::size_t>(n - lo)] = v;
  };
  put(0, 0.0);
  if (hi > 0) {
    CompensatedSum acc;
    CirclePoint p = c.x();
    for (std::int64_t k = 0; k < hi; ++k) {
      acc.add(f(p));
      p = p + th;
      put(k + 1, acc.value());
    }
  }
  if (lo < 0) {
    CompensatedSum acc;
    CirclePoint p = c.x() - th;
    for (std::int64_t k = -1; k >= lo; --k) {
      acc.add(f(p));
      p = p - th;
      put(k, -acc.value());
    }
  }
  return out;
}

double ostrowski_bound(const Cocycle& c, std::int64_t n) {
  if (!c.f().centered(1e-9)) throw Error(ErrorCode::NotCentered, kModule, "Ostrowski bound needs a centered observable");
  if (n == 0) return 0.0;
  auto m = static_cast<std::uint64_t>(n < 0 ? -n : n);
  auto d = ostrowski(m, c.cf());
  return c.f().variation_circle() * static_cast<double>(d.digit_sum());
}

// ---- propi ----

PropiBuild build_propi(const ContinuedFraction& cf, int M, std::size_t pick_budget) {
  if (M < 1) throw Error(ErrorCode::NumericRange, kModule, "truncation M must be >= 1");
  if (cf.depth() < M) throw Error(ErrorCode::DepthExceeded, kModule, "angle depth below the truncation");
  std::size_t total = 0;
  for (int m = 1; m <= M; ++m) {
    if (cf.a(m) != boost::multiprecision::pow(BigInt(m), 6u))
      throw Error(ErrorCode::HypothesisViolation, kModule, "construction needs a_m = m^6 (fails at m=" + std::to_string(m) + ")");
    if (cf.q(m) > BigInt(pick_budget))
      throw Error(ErrorCode::TruncationTooDeep, kModule, "q_" + std::to_string(m) + " = " + cf.q(m).str() + " exceeds the pick budget");
    total += 4 * static_cast<std::size_t>(cf.q(m));
  }
  if (total > pick_budget)
    throw Error(ErrorCode::TruncationTooDeep, kModule, std::to_string(total) + " picks exceed the budget of " + std::to_string(pick_budget));

  PropiBuild out;
  std::vector<Pick> fpicks, upicks;
  const CirclePoint th = cf.theta();
  for (int m = 1; m <= M; ++m) {
    const auto q = static_cast<std::int64_t>(cf.q(m));
    const double qd = static_cast<double>(q);
    const double B = static_cast<double>(m) * m / qd;
    const double Delta = 1.0 / (static_cast<double>(m) * m * qd);
    std::vector<Pick> fm, um;
    fm.reserve(static_cast<std::size_t>(2 * q));
    um.reserve(static_cast<std::size_t>(2 * q));
    // T^j h is the tent centred at -j theta.
    auto centre = [&](std::int64_t j) { return (-th.times(j)).to_double(); };
    for (std::int64_t j = -(q - 1); j <= 0; ++j) fm.push_back({centre(j), 1.0, B, Delta});
    for (std::int64_t j = 1; j <= q; ++j) fm.push_back({centre(j), -1.0, B, Delta});
    for (std::int64_t j = -(q - 1); j <= q - 1; ++j)
      um.push_back({centre(j), static_cast<double>(q - (j < 0 ? -j : j)), B, Delta});
    PiecewiseBV fmf = pick_sum(fm, pick_budget);
    PiecewiseBV umf = pick_sum(um, pick_budget);
    PropiStats st;
    st.m = m;
    st.q = cf.q(m);
    st.B = B;
    st.Delta = Delta;
    st.variation = fmf.variation_circle();
    st.bound = 4.0 * qd * (B / Delta) * cf.q_distance(m);
    st.support_u = umf.support_length(0.0);
    st.support_bound = 2.0 * qd * Delta;
    // Tents j and j+q sit ||q theta|| apart, so the union is q-1 near-coincident
    // pairs plus the tent at 0.
    st.support_pairs = 2.0 * qd * Delta + (qd - 1.0) * cf.q_distance(m);
    out.per_m.push_back(st);
    fpicks.insert(fpicks.end(), fm.begin(), fm.end());
    upicks.insert(upicks.end(), um.begin(), um.end());
  }
  out.f = pick_sum(fpicks, pick_budget);
  out.u = pick_sum(upicks, pick_budget);
  return out;
}

std::int64_t hitting_time(double x, double r, const ContinuedFraction& cf, std::int64_t horizon) {
  if (!(r > 0.0) || r >= 0.25) throw Error(ErrorCode::NumericRange, kModule, "hitting radius must lie in (0, 1/4)");
  CirclePoint p = CirclePoint::from_double(x);
  const CirclePoint th = cf.theta();
  for (std::int64_t n = 1; n <= horizon; ++n) {
    p = p + th;
    if (p.dist_to_z() < r) return n;
  }
  throw Error(ErrorCode::HorizonExceeded, kModule, "no visit within radius " + std::to_string(r) + " before n=" + std::to_string(horizon));
}

}  // namespace stratwalk
