#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace stratwalk {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// A point of the circle R/Z stored as a 256-bit binary fraction. Addition
/// and integer multiplication wrap modulo one, so orbit points x + n*theta
/// are computed exactly from the stored angle with no accumulated drift.
class CirclePoint {
 public:
  static constexpr int kWords = 4;

  CirclePoint() = default;
  static CirclePoint from_double(double x);
  static CirclePoint from_rational(const BigRational& r);
  static CirclePoint from_words(const std::array<std::uint64_t, kWords>& w) {
    CirclePoint p;
    p.w_ = w;
    return p;
  }

  CirclePoint operator+(const CirclePoint& o) const;
  CirclePoint operator-() const;
  CirclePoint operator-(const CirclePoint& o) const { return *this + (-o); }
  CirclePoint times(std::int64_t n) const;

  /// Representative in [0, 1).
  double to_double() const;
  /// Distance to the nearest integer, in [0, 1/2].
  double dist_to_z() const;
  /// The 256-bit integer floor(value * 2^256).
  BigInt to_bigint() const;

  const std::array<std::uint64_t, kWords>& words() const { return w_; }
  bool operator==(const CirclePoint&) const = default;

 private:
  std::array<std::uint64_t, kWords> w_{};  // little-endian
};

/// Named closed-form quotient families.
struct QuotientFamily {
  enum class Kind { Constant, Power, Doubling, Prop1, Explicit };
  Kind kind = Kind::Constant;
  std::int64_t k = 1;         // Constant: a_n = k
  int s = 6;                  // Power: a_n = n^s
  std::int64_t a1 = 1;        // Prop1: a_1 (odd)
  std::int64_t a2 = 2;        // Prop1: a_2 (even)
  double delta = 2.0;         // Prop1: a_{n+1} = a_n^delta rounded up to even
  std::vector<BigInt> explicit_terms;

  std::string name() const;
  /// Partial quotient a_n, n >= 1.
  BigInt term(int n) const;
  /// Whether the hypothesis sum log(1+a_n)/(a_1+...+a_n) = inf holds for the
  /// family, known in closed form. Empty for explicit lists.
  std::optional<bool> divergence_known() const;
};

struct OstrowskiDigits {
  std::uint64_t n = 0;
  std::vector<std::uint64_t> b;  // b_0 .. b_m
  int m = 0;

  std::uint64_t digit_sum() const;
};

/// Continued-fraction expansion theta = [0; a_1, a_2, ...] with convergents
/// p_n / q_n. Index conventions follow p_0 = 0, q_0 = 1, p_{-1} = 1, q_{-1} = 0.
class ContinuedFraction {
 public:
  /// Gauss-map expansion of a decimal string, read as the exact rational it
  /// denotes. With a nonzero half_width the input is the interval
  /// [value - half_width, value + half_width] and a quotient is only accepted
  /// when both ends agree on it.
  static ContinuedFraction expand(std::string_view decimal, int depth,
                                  const BigRational& half_width = BigRational(0));
  static ContinuedFraction expand(const BigRational& value, int depth,
                                  const BigRational& half_width = BigRational(0));

  /// Builds from explicit partial quotients. The list is continued by ones
  /// internally, so the stored angle is an irrational with the given prefix.
  static ContinuedFraction from_quotients(std::vector<BigInt> a, int depth = -1);
  static ContinuedFraction from_quotients(const std::vector<std::int64_t>& a, int depth = -1);

  /// Builds from a closed-form family. `depth` terms are exposed; further
  /// terms are used internally so that the stored angle resolves q_depth.
  static ContinuedFraction from_family(const QuotientFamily& family, int depth);

  int depth() const { return static_cast<int>(a_.size()); }
  /// Partial quotient a_n, 1 <= n <= depth.
  const BigInt& a(int n) const { return a_.at(static_cast<std::size_t>(n - 1)); }
  /// Convergent numerator p_n for -1 <= n <= depth (one further index is
  /// available when known).
  const BigInt& p(int n) const { return p_.at(static_cast<std::size_t>(n + 1)); }
  /// Convergent denominator q_n, same range as p.
  const BigInt& q(int n) const { return q_.at(static_cast<std::size_t>(n + 1)); }
  /// Largest n for which q(n) is available.
  int max_index() const { return static_cast<int>(q_.size()) - 2; }
  const std::vector<BigInt>& quotients() const { return a_; }

  const CirclePoint& theta() const { return theta_; }
  double theta_double() const { return theta_.to_double(); }
  /// Exact rational value when the angle was supplied as one.
  const std::optional<BigRational>& exact_value() const { return exact_; }
  /// The angle to full internal precision: theta ~ numerator / 2^bits.
  const BigInt& theta_numerator() const { return theta_num_; }
  int precision_bits() const { return prec_bits_; }
  const std::optional<QuotientFamily>& family() const { return family_; }

  /// rotate(x, n) = x + n*theta mod 1.
  CirclePoint rotate(const CirclePoint& x, std::int64_t n) const { return x + theta_.times(n); }
  double rotate(double x, std::int64_t n) const { return rotate(CirclePoint::from_double(x), n).to_double(); }

  /// ||q_n theta|| to double precision.
  double q_distance(int n) const;
  /// Whether 1/(q_n + q_{n+1}) <= ||q_n theta|| <= 1/q_{n+1} holds, checked
  /// exactly on the full-precision angle (rational arithmetic for rational input).
  bool sandwich_holds(int n) const;

 private:
  static ContinuedFraction build(std::vector<BigInt> a_ext, int depth);
  void set_angle(const BigInt& p, const BigInt& q);

  std::vector<BigInt> a_;
  std::vector<BigInt> p_;  // index n+1, extended beyond depth internally
  std::vector<BigInt> q_;
  CirclePoint theta_;
  BigInt theta_num_;
  int prec_bits_ = 256;
  std::optional<BigRational> exact_;
  std::optional<QuotientFamily> family_;
};

/// Greedy Ostrowski digits of n in the base (q_k).
OstrowskiDigits ostrowski(std::uint64_t n, const ContinuedFraction& cf);
/// Checks n = sum b_k q_k and the digit constraints.
bool ostrowski_valid(const OstrowskiDigits& d, const ContinuedFraction& cf);

struct DiophantineTypeEstimate {
  double estimate = 1.0;
  /// log q_{n+1} / log q_n, indexed by n for n with q_n >= 2 (others NaN).
  std::vector<double> ratios;
  /// 1 + log a_{n+1} / log q_n, same indexing.
  std::vector<double> leading_ratios;
};

/// Finite-depth surrogate of limsup log q_{n+1} / log q_n: the supremum of
/// log(a_{n+1} q_n) / log q_n over the upper half of the computed indices.
DiophantineTypeEstimate diophantine_type(const ContinuedFraction& cf);

struct SeriesTrend {
  std::vector<double> terms;
  std::vector<double> partial_sums;
  bool diverging = false;
  /// True when the flag is read from a declared closed-form family rather
  /// than from finite-depth evidence.
  bool rigorous = false;
  std::string basis;
};

/// Partial sums of sum log(1 + a_n) / (a_1 + ... + a_n).
SeriesTrend thm1_condition(const ContinuedFraction& cf, int depth);
SeriesTrend thm1_condition(const std::vector<BigInt>& a, int depth,
                           const std::optional<QuotientFamily>& family = std::nullopt);

double log_big(const BigInt& v);
/// v * 2^e as a double without intermediate overflow.
double ldexp_big(const BigInt& v, int e);
BigRational parse_decimal(std::string_view text);

}  // namespace stratwalk
