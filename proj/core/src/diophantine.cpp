#include "stratwalk/diophantine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stratwalk/error.hpp"

namespace stratwalk {

namespace {

constexpr std::string_view kModule = "diophantine";
// q_n beyond this many bits is refused rather than slowly ground through.
constexpr unsigned kMaxBits = 1u << 22;

__extension__ using u128 = unsigned __int128;

unsigned bits_of(const BigInt& v) { return v == 0 ? 0u : static_cast<unsigned>(boost::multiprecision::msb(v)) + 1u; }

BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) q -= 1;
  return q;
}

BigInt floor_rat(const BigRational& r) {
  return floor_div(boost::multiprecision::numerator(r), boost::multiprecision::denominator(r));
}

std::string str(const BigInt& v) { return v.str(); }

}  // namespace

double ldexp_big(const BigInt& v, int e) {
  if (v == 0) return 0.0;
  BigInt a = v < 0 ? BigInt(-v) : v;
  int b = static_cast<int>(bits_of(a));
  int shift = std::max(0, b - 64);
  BigInt top = a >> shift;
  double d = std::ldexp(static_cast<double>(static_cast<std::uint64_t>(top)), shift + e);
  return v < 0 ? -d : d;
}

double log_big(const BigInt& v) {
  if (v <= 0) return -std::numeric_limits<double>::infinity();
  int b = static_cast<int>(bits_of(v));
  int shift = std::max(0, b - 64);
  BigInt top = v >> shift;
  return std::log(static_cast<double>(static_cast<std::uint64_t>(top))) + shift * std::log(2.0);
}

BigRational parse_decimal(std::string_view text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  auto bad = [&] { return Error(ErrorCode::InvalidConfig, kModule, "cannot parse angle '" + std::string(text) + "'"); };
  if (s.empty()) throw bad();
  auto slash = s.find('/');
  auto digits_only = [](const std::string& t) {
    return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (slash != std::string::npos) {
    std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    if (!digits_only(num) || !digits_only(den)) throw bad();
    auto strip = [](const std::string& t) {
      auto nz = t.find_first_not_of('0');
      return nz == std::string::npos ? BigInt(0) : BigInt(t.substr(nz));
    };
    BigInt d = strip(den);
    if (d == 0) throw bad();
    return BigRational(strip(num), d);
  }
  auto dot = s.find('.');
  std::string ip = dot == std::string::npos ? s : s.substr(0, dot);
  std::string fp = dot == std::string::npos ? "" : s.substr(dot + 1);
  if (ip.empty()) ip = "0";
  if (!digits_only(ip) || (!fp.empty() && !digits_only(fp))) throw bad();
  BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(fp.size()));
  std::string digits = ip + fp;
  // cpp_int reads a leading 0 as an octal prefix
  auto nz = digits.find_first_not_of('0');
  BigInt num = nz == std::string::npos ? BigInt(0) : BigInt(digits.substr(nz));
  return BigRational(num, scale);
}

// ---- CirclePoint ----

CirclePoint CirclePoint::from_double(double x) {
  CirclePoint p;
  if (!std::isfinite(x)) throw Error(ErrorCode::NumericRange, kModule, "non-finite circle point");
  double f = x - std::floor(x);
  if (f <= 0.0) return p;
  int e = 0;
  double mant = std::frexp(f, &e);  // f = mant * 2^e, mant in [0.5, 1)
  auto m = static_cast<std::uint64_t>(std::ldexp(mant, 53));
  int shift = 203 + e;  // 256 - 53 + e
  if (shift >= 0) {
    int idx = shift / 64, bit = shift % 64;
    p.w_[idx] |= m << bit;
    if (bit > 0 && idx + 1 < kWords) p.w_[idx + 1] |= m >> (64 - bit);
  } else if (-shift < 64) {
    p.w_[0] = m >> (-shift);
  }
  return p;
}

CirclePoint CirclePoint::from_rational(const BigRational& r) {
  BigInt num = boost::multiprecision::numerator(r), den = boost::multiprecision::denominator(r);
  BigInt v = floor_div(num << 256, den);
  BigInt mod = BigInt(1) << 256;
  v %= mod;
  if (v < 0) v += mod;
  CirclePoint p;
  for (int i = 0; i < kWords; ++i) {
    p.w_[i] = static_cast<std::uint64_t>(v & BigInt(std::numeric_limits<std::uint64_t>::max()));
    v >>= 64;
  }
  return p;
}

CirclePoint CirclePoint::operator+(const CirclePoint& o) const {
  CirclePoint r;
  std::uint64_t carry = 0;
  for (int i = 0; i < kWords; ++i) {
    u128 s = static_cast<u128>(w_[i]) + o.w_[i] + carry;
    r.w_[i] = static_cast<std::uint64_t>(s);
    carry = static_cast<std::uint64_t>(s >> 64);
  }
  return r;
}

CirclePoint CirclePoint::operator-() const {
  CirclePoint r;
  std::uint64_t carry = 1;
  for (int i = 0; i < kWords; ++i) {
    u128 s = static_cast<u128>(~w_[i]) + carry;
    r.w_[i] = static_cast<std::uint64_t>(s);
    carry = static_cast<std::uint64_t>(s >> 64);
  }
  return r;
}

CirclePoint CirclePoint::times(std::int64_t n) const {
  bool neg = n < 0;
  std::uint64_t m = neg ? static_cast<std::uint64_t>(0) - static_cast<std::uint64_t>(n) : static_cast<std::uint64_t>(n);
  CirclePoint r;
  std::uint64_t carry = 0;
  for (int i = 0; i < kWords; ++i) {
    u128 s = static_cast<u128>(w_[i]) * m + carry;
    r.w_[i] = static_cast<std::uint64_t>(s);
    carry = static_cast<std::uint64_t>(s >> 64);
  }
  return neg ? -r : r;
}

double CirclePoint::to_double() const {
  double d = std::ldexp(static_cast<double>(w_[3]), -64) + std::ldexp(static_cast<double>(w_[2]), -128);
  if (d >= 1.0) d = std::nextafter(1.0, 0.0);
  return d;
}

double CirclePoint::dist_to_z() const {
  if (w_[3] >> 63) return (-*this).to_double();
  return to_double();
}

BigInt CirclePoint::to_bigint() const {
  BigInt v = 0;
  for (int i = kWords - 1; i >= 0; --i) {
    v <<= 64;
    v += w_[i];
  }
  return v;
}

// ---- families ----

std::string QuotientFamily::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Constant: os << "constant(" << k << ")"; break;
    case Kind::Power: os << "power(n^" << s << ")"; break;
    case Kind::Doubling: os << "doubling(2^(2^(n-1)-1))"; break;
    case Kind::Prop1: os << "prop1(a1=" << a1 << ",a2=" << a2 << ",delta=" << delta << ")"; break;
    case Kind::Explicit: os << "explicit(" << explicit_terms.size() << " terms)"; break;
  }
  return os.str();
}

BigInt QuotientFamily::term(int n) const {
  if (n < 1) throw Error(ErrorCode::NumericRange, kModule, "partial quotient index must be >= 1");
  switch (kind) {
    case Kind::Constant: return BigInt(k);
    case Kind::Power: return boost::multiprecision::pow(BigInt(n), static_cast<unsigned>(s));
    case Kind::Doubling: {
      if (n > 23) throw Error(ErrorCode::Overflow, kModule, "doubling family term " + std::to_string(n) + " too large");
      unsigned e = (1u << (n - 1)) - 1u;
      return BigInt(1) << e;
    }
    case Kind::Prop1: {
      BigInt a = a1;
      if (n == 1) return a;
      a = a2;
      double rd = std::round(delta);
      for (int i = 3; i <= n; ++i) {
        if (std::fabs(delta - rd) < 1e-12) {
          a = boost::multiprecision::pow(a, static_cast<unsigned>(rd));
        } else {
          double la = log_big(a) * delta;
          if (la > 60.0) throw Error(ErrorCode::Overflow, kModule, "prop1 family with fractional delta exceeds 64 bits");
          a = BigInt(static_cast<std::uint64_t>(std::ceil(std::exp(la))));
        }
        if (a % 2 != 0) a += 1;
        if (bits_of(a) > kMaxBits) throw Error(ErrorCode::Overflow, kModule, "prop1 family term too large");
      }
      return a;
    }
    case Kind::Explicit:
      if (static_cast<std::size_t>(n) > explicit_terms.size())
        throw Error(ErrorCode::DepthExceeded, kModule, "explicit quotient list has only " + std::to_string(explicit_terms.size()) + " terms");
      return explicit_terms[static_cast<std::size_t>(n - 1)];
  }
  return BigInt(1);
}

std::optional<bool> QuotientFamily::divergence_known() const {
  switch (kind) {
    case Kind::Constant: return true;                 // terms ~ log(1+k)/(k n)
    case Kind::Power: return s == 0;                  // n^s: terms ~ log n / n^{s+1}
    case Kind::Doubling: return false;                // terms vanish super-exponentially
    case Kind::Prop1: return delta > 1.0 ? std::optional<bool>(false) : std::nullopt;
    case Kind::Explicit: return std::nullopt;
  }
  return std::nullopt;
}

std::uint64_t OstrowskiDigits::digit_sum() const {
  std::uint64_t s = 0;
  for (auto v : b) s += v;
  return s;
}

// ---- ContinuedFraction ----

ContinuedFraction ContinuedFraction::build(std::vector<BigInt> a_ext, int depth) {
  ContinuedFraction cf;
  cf.p_ = {BigInt(1), BigInt(0)};
  cf.q_ = {BigInt(0), BigInt(1)};
  for (const auto& ai : a_ext) {
    if (ai < 1) throw Error(ErrorCode::NumericRange, kModule, "partial quotients must be >= 1");
    std::size_t k = cf.p_.size();
    cf.p_.push_back(ai * cf.p_[k - 1] + cf.p_[k - 2]);
    cf.q_.push_back(ai * cf.q_[k - 1] + cf.q_[k - 2]);
    if (bits_of(cf.q_.back()) > kMaxBits)
      throw Error(ErrorCode::Overflow, kModule, "q_n exceeds " + std::to_string(kMaxBits) + " bits at n=" + std::to_string(k - 1));
  }
  cf.a_.assign(a_ext.begin(), a_ext.begin() + depth);
  return cf;
}

void ContinuedFraction::set_angle(const BigInt& p, const BigInt& q) {
  theta_num_ = floor_div(p << prec_bits_, q);
  theta_ = CirclePoint::from_words({});
  BigInt top = theta_num_ >> (prec_bits_ - 256);
  std::array<std::uint64_t, CirclePoint::kWords> w{};
  for (int i = 0; i < CirclePoint::kWords; ++i) {
    w[i] = static_cast<std::uint64_t>(top & BigInt(std::numeric_limits<std::uint64_t>::max()));
    top >>= 64;
  }
  theta_ = CirclePoint::from_words(w);
}

namespace {

// Precision that separates the sandwich margins at every exposed index.
int precision_for(const BigInt& q_top) {
  int bits = 2 * static_cast<int>(bits_of(q_top)) + 64;
  bits = std::max(bits, 256);
  return (bits + 63) / 64 * 64;
}

}  // namespace

ContinuedFraction ContinuedFraction::expand(std::string_view decimal, int depth, const BigRational& half_width) {
  return expand(parse_decimal(decimal), depth, half_width);
}

ContinuedFraction ContinuedFraction::expand(const BigRational& value, int depth, const BigRational& half_width) {
  if (depth < 1) throw Error(ErrorCode::NumericRange, kModule, "depth must be >= 1");
  if (value <= 0 || value >= 1) throw Error(ErrorCode::NumericRange, kModule, "theta must lie in (0,1)");
  if (half_width < 0) throw Error(ErrorCode::NumericRange, kModule, "negative uncertainty");
  const bool exact = half_width == 0;
  BigRational lo = value - half_width, hi = value + half_width;
  if (lo <= 0 || hi >= 1) throw Error(ErrorCode::PrecisionExhausted, kModule, "uncertainty interval leaves (0,1)");
  std::vector<BigInt> a;
  for (int k = 1; k <= depth; ++k) {
    BigRational ilo = 1 / hi, ihi = 1 / lo;  // 1/x reverses the order
    BigInt alo = floor_rat(ilo), ahi = floor_rat(ihi);
    if (alo != ahi || (!exact && BigRational(alo) == ilo))
      throw Error(ErrorCode::PrecisionExhausted, kModule, "partial quotient " + std::to_string(k) + " is not certified by the input precision");
    a.push_back(alo);
    lo = ilo - alo;
    hi = ihi - alo;
    if (exact && lo == 0)
      throw Error(ErrorCode::RationalInput, kModule,
                  "Gauss orbit reaches 0 after " + std::to_string(k) + " steps (requested depth " + std::to_string(depth) + ")");
  }
  // One more certified quotient, when available, lets the sandwich be checked at n = depth.
  std::vector<BigInt> a_ext = a;
  if (lo > 0) {
    BigInt alo = floor_rat(1 / hi), ahi = floor_rat(1 / lo);
    if (alo == ahi) a_ext.push_back(alo);
  }
  ContinuedFraction cf = build(a_ext, depth);
  cf.prec_bits_ = precision_for(cf.q_.back());
  cf.set_angle(boost::multiprecision::numerator(value), boost::multiprecision::denominator(value));
  if (exact) cf.exact_ = value;
  return cf;
}

namespace {

// Extends the quotient list past `depth` until the convergent pins the angle
// below 2^-prec, where prec separates the sandwich margins up to n = depth+1.
template <class Next>
std::pair<std::vector<BigInt>, int> extend_for_precision(std::vector<BigInt> a, int depth, Next next_term) {
  while (static_cast<int>(a.size()) < depth + 2) a.push_back(next_term(static_cast<int>(a.size()) + 1));
  BigInt qm1 = 0, q = 1;
  for (int n = 0; n < depth + 1; ++n) {
    BigInt qn = a[static_cast<std::size_t>(n)] * q + qm1;
    qm1 = q;
    q = qn;
    if (bits_of(q) > kMaxBits) throw Error(ErrorCode::Overflow, kModule, "q_n exceeds the integer width policy");
  }
  int prec = precision_for(q) + static_cast<int>(bits_of(a[static_cast<std::size_t>(depth + 1)]));
  prec = (prec + 63) / 64 * 64;
  std::size_t n = static_cast<std::size_t>(depth + 1);
  while (true) {
    if (n >= a.size()) a.push_back(next_term(static_cast<int>(n) + 1));
    BigInt qn = a[n] * q + qm1;
    qm1 = q;
    q = qn;
    ++n;
    if (static_cast<int>(bits_of(q)) > prec / 2 + 8 && n >= static_cast<std::size_t>(depth + 3)) break;
    if (bits_of(q) > kMaxBits) throw Error(ErrorCode::Overflow, kModule, "q_n exceeds the integer width policy");
  }
  a.resize(n);
  return {std::move(a), prec};
}

}  // namespace

ContinuedFraction ContinuedFraction::from_quotients(std::vector<BigInt> a, int depth) {
  if (a.empty()) throw Error(ErrorCode::NumericRange, kModule, "empty quotient list");
  if (depth < 0) depth = static_cast<int>(a.size());
  if (depth > static_cast<int>(a.size()))
    throw Error(ErrorCode::DepthExceeded, kModule, "depth exceeds the supplied quotient list");
  for (const auto& v : a)
    if (v < 1) throw Error(ErrorCode::NumericRange, kModule, "partial quotients must be >= 1");
  auto [ext, prec] = extend_for_precision(std::move(a), depth, [](int) { return BigInt(1); });
  ContinuedFraction cf = build(std::move(ext), depth);
  cf.prec_bits_ = prec;
  cf.set_angle(cf.p_.back(), cf.q_.back());
  return cf;
}

ContinuedFraction ContinuedFraction::from_quotients(const std::vector<std::int64_t>& a, int depth) {
  std::vector<BigInt> b;
  b.reserve(a.size());
  for (auto v : a) b.emplace_back(v);
  return from_quotients(std::move(b), depth);
}

ContinuedFraction ContinuedFraction::from_family(const QuotientFamily& family, int depth) {
  if (depth < 1) throw Error(ErrorCode::NumericRange, kModule, "depth must be >= 1");
  if (family.kind == QuotientFamily::Kind::Explicit) {
    auto cf = from_quotients(family.explicit_terms, depth);
    cf.family_ = family;
    return cf;
  }
  std::vector<BigInt> a;
  for (int n = 1; n <= depth; ++n) a.push_back(family.term(n));
  auto next = [&](int n) {
    try {
      return family.term(n);
    } catch (const Error&) {
      return BigInt(1);  // too large to continue exactly; the exposed prefix is unaffected
    }
  };
  auto [ext, prec] = extend_for_precision(std::move(a), depth, next);
  ContinuedFraction cf = build(std::move(ext), depth);
  cf.prec_bits_ = prec;
  cf.set_angle(cf.p_.back(), cf.q_.back());
  cf.family_ = family;
  return cf;
}

double ContinuedFraction::q_distance(int n) const {
  if (n < 0 || n > max_index()) throw Error(ErrorCode::DepthExceeded, kModule, "q_" + std::to_string(n) + " not computed");
  if (exact_) {
    BigRational v = BigRational(q(n)) * *exact_;
    BigRational fr = v - BigRational(floor_rat(v));
    if (fr > BigRational(1, 2)) fr = 1 - fr;
    return boost::multiprecision::numerator(fr) == 0 ? 0.0
               : std::exp(log_big(boost::multiprecision::numerator(fr)) - log_big(boost::multiprecision::denominator(fr)));
  }
  BigInt mod = BigInt(1) << prec_bits_;
  BigInt x = (q(n) * theta_num_) % mod;
  BigInt d = std::min(x, BigInt(mod - x));
  return ldexp_big(d, -prec_bits_);
}

bool ContinuedFraction::sandwich_holds(int n) const {
  if (n < 0 || n + 1 > max_index())
    throw Error(ErrorCode::DepthExceeded, kModule, "q_" + std::to_string(n + 1) + " not computed");
  const BigInt& qn = q(n);
  const BigInt& qn1 = q(n + 1);
  if (exact_) {
    BigRational v = BigRational(qn) * *exact_;
    BigRational fr = v - BigRational(floor_rat(v));
    if (fr > BigRational(1, 2)) fr = 1 - fr;
    return BigRational(1, qn + qn1) <= fr && fr <= BigRational(1, qn1);
  }
  BigInt mod = BigInt(1) << prec_bits_;
  BigInt x = (qn * theta_num_) % mod;
  BigInt d = std::min(x, BigInt(mod - x));
  return d * (qn + qn1) >= mod && d * qn1 <= mod;
}

// ---- Ostrowski ----

OstrowskiDigits ostrowski(std::uint64_t n, const ContinuedFraction& cf) {
  OstrowskiDigits out;
  out.n = n;
  if (n == 0) {
    out.b = {0};
    out.m = 0;
    return out;
  }
  const int d = cf.depth();
  if (BigInt(n) >= cf.q(d))
    throw Error(ErrorCode::DepthExceeded, kModule, std::to_string(n) + " >= q_" + std::to_string(d) + " = " + str(cf.q(d)));
  int m = 0;
  while (m + 1 <= d && cf.q(m + 1) <= n) ++m;
  out.m = m;
  out.b.assign(static_cast<std::size_t>(m) + 1, 0);
  std::uint64_t r = n;
  for (int k = m; k >= 0; --k) {
    auto qk = static_cast<std::uint64_t>(cf.q(k));
    out.b[static_cast<std::size_t>(k)] = r / qk;
    r %= qk;
  }
  return out;
}

bool ostrowski_valid(const OstrowskiDigits& d, const ContinuedFraction& cf) {
  if (d.b.size() != static_cast<std::size_t>(d.m) + 1) return false;
  BigInt sum = 0;
  for (int k = 0; k <= d.m; ++k) sum += BigInt(d.b[static_cast<std::size_t>(k)]) * cf.q(k);
  if (sum != d.n) return false;
  if (d.n == 0) return d.m == 0 && d.b[0] == 0;
  if (d.m + 1 > cf.depth()) return false;
  if (BigInt(d.b[0]) > cf.a(1) - 1 && d.m > 0) return false;
  for (int j = 1; j < d.m; ++j)
    if (BigInt(d.b[static_cast<std::size_t>(j)]) > cf.a(j + 1)) return false;
  const auto top = d.b[static_cast<std::size_t>(d.m)];
  return top >= 1 && BigInt(top) <= cf.a(d.m + 1);
}

// ---- type and Thm-1 series ----

DiophantineTypeEstimate diophantine_type(const ContinuedFraction& cf) {
  const int d = cf.depth();
  if (d < 3) throw Error(ErrorCode::DepthExceeded, kModule, "diophantine_type needs depth >= 3");
  DiophantineTypeEstimate est;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  est.ratios.assign(static_cast<std::size_t>(d), nan);
  est.leading_ratios.assign(static_cast<std::size_t>(d), nan);
  double best = 1.0;
  bool any = false;
  for (int n = 0; n + 1 <= d; ++n) {
    if (cf.q(n) < 2) continue;
    double lq = log_big(cf.q(n));
    est.ratios[static_cast<std::size_t>(n)] = log_big(cf.q(n + 1)) / lq;
    double lead = 1.0 + log_big(cf.a(n + 1)) / lq;
    est.leading_ratios[static_cast<std::size_t>(n)] = lead;
    if (2 * n >= d) {
      best = any ? std::max(best, lead) : lead;
      any = true;
    }
  }
  if (!any) {
    for (double v : est.leading_ratios)
      if (!std::isnan(v)) best = std::max(best, v);
  }
  est.estimate = best;
  return est;
}

SeriesTrend thm1_condition(const std::vector<BigInt>& a, int depth, const std::optional<QuotientFamily>& family) {
  if (depth < 1 || depth > static_cast<int>(a.size()))
    throw Error(ErrorCode::DepthExceeded, kModule, "thm1_condition depth outside the computed quotients");
  SeriesTrend t;
  BigInt s = 0;
  double acc = 0.0;
  for (int n = 1; n <= depth; ++n) {
    const BigInt& an = a[static_cast<std::size_t>(n - 1)];
    s += an;
    double num = log_big(an + 1);
    double term = std::exp(std::log(num) - log_big(s));
    acc += term;
    t.terms.push_back(term);
    t.partial_sums.push_back(acc);
  }
  std::optional<bool> known = family ? family->divergence_known() : std::nullopt;
  if (known) {
    t.diverging = *known;
    t.rigorous = true;
    t.basis = "declared by family " + family->name();
    return t;
  }
  if (depth < 4) {
    t.diverging = false;
    t.basis = "finite-depth evidence (too few terms)";
    return t;
  }
  int h = depth / 2;
  double head = t.partial_sums[static_cast<std::size_t>(h - 1)];
  double tail = acc - head;
  t.diverging = tail >= 0.1 * head;
  t.basis = "finite-depth evidence (non-rigorous)";
  return t;
}

SeriesTrend thm1_condition(const ContinuedFraction& cf, int depth) {
  return thm1_condition(cf.quotients(), depth, cf.family());
}

}  // namespace stratwalk
