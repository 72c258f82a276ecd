#include "stratwalk/montecarlo.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <exception>
#include <thread>

#include "stratwalk/error.hpp"

namespace stratwalk {

namespace {

constexpr std::string_view kModule = "montecarlo";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// Cached strata for the window around the walker.
class LawCursor {
 public:
  explicit LawCursor(const Environment& env) : env_(env) {}
  const StratumLaw& at(std::int64_t n) {
    const std::int64_t base = n >> Environment::kWindowBits;
    if (!win_ || base != base_) {
      win_ = env_.window(n);
      base_ = base;
    }
    return (*win_)[static_cast<std::size_t>(n - (base << Environment::kWindowBits))];
  }

 private:
  const Environment& env_;
  std::shared_ptr<const std::vector<StratumLaw>> win_;
  std::int64_t base_ = 0;
};

void validate_checkpoints(const RunOptions& opt, std::int64_t horizon) {
  for (std::size_t i = 0; i < opt.checkpoints.size(); ++i) {
    if (opt.checkpoints[i] < 0 || opt.checkpoints[i] > horizon)
      throw Error(ErrorCode::InvalidConfig, kModule, "checkpoint outside [0, horizon]");
    if (i > 0 && opt.checkpoints[i] <= opt.checkpoints[i - 1])
      throw Error(ErrorCode::InvalidConfig, kModule, "checkpoints must increase");
  }
}

}  // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t stream) : stream_(stream) {
  const std::uint64_t k = splitmix64(seed);
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

Philox4x32::Counter Philox4x32::block(Counter c, Key k) {
  constexpr std::uint32_t M0 = 0xD2511F53, M1 = 0xCD9E8D57, W0 = 0x9E3779B9, W1 = 0xBB67AE85;
  for (int r = 0; r < 10; ++r) {
    std::uint32_t h0, l0, h1, l1;
    mulhilo(M0, c[0], h0, l0);
    mulhilo(M1, c[2], h1, l1);
    c = {h1 ^ c[1] ^ k[0], l1, h0 ^ c[3] ^ k[1], l0};
    k[0] += W0;
    k[1] += W1;
  }
  return c;
}

Philox4x32::result_type Philox4x32::operator()() {
  if (used_ == 4) {
    buf_ = block({static_cast<std::uint32_t>(pos_), static_cast<std::uint32_t>(pos_ >> 32),
                  static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                 key_);
    ++pos_;
    used_ = 0;
  }
  return buf_[static_cast<std::size_t>(used_++)];
}

double Philox4x32::uniform() {
  const std::uint64_t hi = (*this)() >> 5, lo = (*this)() >> 6;  // 27 + 26 bits
  return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
}

void step(WalkState& s, const StratumLaw& law, Philox4x32& rng) {
  const double u = rng.uniform();
  ++s.t;
  if (u < law.alpha) {
    ++s.n;
    return;
  }
  if (u < law.alpha + law.beta) {
    --s.n;
    return;
  }
  // Horizontal jump: inverse CDF over gamma mu; rounding mass falls on the last atom.
  double acc = law.alpha + law.beta;
  for (std::size_t i = 0; i + 1 < law.mu.size(); ++i) {
    acc += law.gamma * law.mu[i].second;
    if (u < acc) {
      s.m += law.mu[i].first;
      return;
    }
  }
  s.m += law.mu.back().first;
}

WalkStats run(const Environment& env, std::int64_t horizon, std::uint64_t seed, std::uint64_t stream,
              const RunOptions& opt) {
  if (horizon < 0) throw Error(ErrorCode::InvalidConfig, kModule, "negative horizon");
  validate_checkpoints(opt, horizon);
  WalkStats st;
  st.seed = seed;
  st.horizon = horizon;
  st.checkpoints = opt.checkpoints;
  Philox4x32 rng(seed, stream);
  LawCursor laws(env);
  WalkState s;
  std::int64_t occ = 0;
  std::size_t next_cp = 0;
  auto flush = [&] {
    while (next_cp < opt.checkpoints.size() && opt.checkpoints[next_cp] == s.t) {
      st.returns_at.push_back(st.returns);
      st.occupation_at.push_back(occ);
      ++next_cp;
    }
  };
  flush();
  while (s.t < horizon) {
    step(s, laws.at(s.n), rng);
    const std::int64_t am = s.m < 0 ? -s.m : s.m, an = s.n < 0 ? -s.n : s.n;
    if (am <= opt.box && an <= opt.box) {
      ++occ;
      if (am == 0 && an == 0) {
        ++st.returns;
        st.last_return = s.t;
      }
    }
    st.max_abs_m = std::max(st.max_abs_m, am);
    st.max_abs_n = std::max(st.max_abs_n, an);
    flush();
  }
  st.final_m = s.m;
  st.final_n = s.n;
  return st;
}

std::vector<WalkState> trajectory(const Environment& env, std::int64_t horizon, std::uint64_t seed,
                                  std::uint64_t stream, std::int64_t stride) {
  if (horizon < 0 || stride < 1) throw Error(ErrorCode::InvalidConfig, kModule, "need horizon >= 0 and stride >= 1");
  Philox4x32 rng(seed, stream);
  LawCursor laws(env);
  WalkState s;
  std::vector<WalkState> out{s};
  while (s.t < horizon) {
    step(s, laws.at(s.n), rng);
    if (s.t % stride == 0 || s.t == horizon) out.push_back(s);
  }
  return out;
}

std::vector<WalkStats> run_many(const Environment& env, std::int64_t horizon, std::uint64_t seed, int count,
                                const RunOptions& opt, int threads) {
  std::vector<WalkStats> out(static_cast<std::size_t>(std::max(count, 0)));
  const int T = std::max(1, std::min(threads, count));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < count; i += T)
          out[static_cast<std::size_t>(i)] = run(env, horizon, seed, static_cast<std::uint64_t>(i), opt);
      } catch (...) {
        errs[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

WalkStats vertical_run(const Environment& env, std::int64_t horizon, std::uint64_t seed, std::uint64_t stream,
                       const RunOptions& opt) {
  if (horizon < 0) throw Error(ErrorCode::InvalidConfig, kModule, "negative horizon");
  validate_checkpoints(opt, horizon);
  WalkStats st;
  st.seed = seed;
  st.horizon = horizon;
  st.checkpoints = opt.checkpoints;
  Philox4x32 rng(seed, stream);
  LawCursor laws(env);
  std::int64_t n = 0, occ = 0, t = 0;
  std::size_t next_cp = 0;
  auto flush = [&] {
    while (next_cp < opt.checkpoints.size() && opt.checkpoints[next_cp] == t) {
      st.returns_at.push_back(st.returns);
      st.occupation_at.push_back(occ);
      ++next_cp;
    }
  };
  flush();
  while (t < horizon) {
    const auto& law = laws.at(n);
    n += rng.uniform() * (law.alpha + law.beta) < law.alpha ? 1 : -1;
    ++t;
    const std::int64_t an = n < 0 ? -n : n;
    if (an <= opt.box) ++occ;
    if (n == 0) {
      ++st.returns;
      st.last_return = t;
    }
    st.max_abs_n = std::max(st.max_abs_n, an);
    flush();
  }
  st.final_n = n;
  return st;
}

PairedTest paired_one_sided(const std::vector<double>& earlier, const std::vector<double>& later, double level) {
  if (earlier.size() != later.size() || earlier.size() < 2)
    throw Error(ErrorCode::InvalidConfig, kModule, "paired test needs two equal samples of size >= 2");
  PairedTest r;
  r.samples = static_cast<int>(earlier.size());
  double mean = 0, m2 = 0;
  for (std::size_t i = 0; i < earlier.size(); ++i) {
    const double d = later[i] - earlier[i];
    const double delta = d - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (d - mean);
  }
  r.mean_diff = mean;
  r.sd = std::sqrt(m2 / (r.samples - 1));
  if (r.sd == 0.0) {
    r.t = mean > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    r.p_value = mean > 0 ? 0.0 : 1.0;
  } else {
    r.t = mean / (r.sd / std::sqrt(static_cast<double>(r.samples)));
    const boost::math::students_t dist(r.samples - 1);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.t));
  }
  r.significant = r.p_value < 1.0 - level;
  return r;
}

PairedTest return_growth(const std::vector<WalkStats>& runs, std::size_t i, std::size_t j, double level) {
  std::vector<double> a, b;
  for (const auto& s : runs) {
    if (j >= s.returns_at.size() || i >= j) throw Error(ErrorCode::InvalidConfig, kModule, "bad checkpoint pair");
    a.push_back(static_cast<double>(s.returns_at[i]));
    b.push_back(static_cast<double>(s.returns_at[j]));
  }
  return paired_one_sided(a, b, level);
}

}  // namespace stratwalk
