#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "stratwalk/environment.hpp"

namespace stratwalk {

/// Philox4x32-10 counter-based generator. The 128-bit counter is split into a
/// 64-bit position and a 64-bit stream id, so independent streams come from the
/// same key by changing the stream.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);
  static Counter block(Counter ctr, Key key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

 private:
  Key key_{};
  std::uint64_t pos_ = 0, stream_ = 0;
  Counter buf_{};
  int used_ = 4;
};

struct WalkState {
  std::int64_t m = 0, n = 0;
  std::int64_t t = 0;
};

/// One transition from the stratum law at the current height.
void step(WalkState& s, const StratumLaw& law, Philox4x32& rng);

struct WalkStats {
  std::uint64_t seed = 0;
  std::int64_t horizon = 0;
  std::int64_t returns = 0;           // visits to (0,0) at times 1..horizon
  std::int64_t last_return = 0;
  std::vector<std::int64_t> checkpoints;
  std::vector<std::int64_t> returns_at;    // returns up to each checkpoint
  std::vector<std::int64_t> occupation_at; // visits to the box |m|,|n| <= box up to each checkpoint
  std::int64_t max_abs_m = 0, max_abs_n = 0;
  std::int64_t final_m = 0, final_n = 0;
};

struct RunOptions {
  std::vector<std::int64_t> checkpoints;
  std::int64_t box = 5;
};

/// Trajectory `stream` of the seed; deterministic in (env, horizon, seed, stream).
WalkStats run(const Environment& env, std::int64_t horizon, std::uint64_t seed, std::uint64_t stream = 0,
              const RunOptions& opt = {});
/// Positions (t, m, n) every `stride` steps, starting at t = 0.
std::vector<WalkState> trajectory(const Environment& env, std::int64_t horizon, std::uint64_t seed,
                                  std::uint64_t stream, std::int64_t stride);
/// Streams 0..count-1, in parallel; results in stream order.
std::vector<WalkStats> run_many(const Environment& env, std::int64_t horizon, std::uint64_t seed, int count,
                                const RunOptions& opt = {}, int threads = 1);

/// The embedded vertical birth-death chain n -> n+1 with alpha/(alpha+beta).
WalkStats vertical_run(const Environment& env, std::int64_t horizon, std::uint64_t seed, std::uint64_t stream = 0,
                       const RunOptions& opt = {});

struct PairedTest {
  int samples = 0;
  double mean_diff = 0.0, sd = 0.0, t = 0.0, p_value = 1.0;
  bool significant = false;
};
/// One-sided paired t-test of later > earlier.
PairedTest paired_one_sided(const std::vector<double>& earlier, const std::vector<double>& later, double level = 0.99);

/// Return growth between checkpoints i and j (i < j) across trajectories.
PairedTest return_growth(const std::vector<WalkStats>& runs, std::size_t i, std::size_t j, double level = 0.99);

}  // namespace stratwalk
