// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "stratwalk/dispersion.hpp"
#include "stratwalk/error.hpp"
#include "stratwalk/experiment.hpp"
#include "stratwalk/measure.hpp"

using namespace stratwalk;
namespace fs = std::filesystem;
using ld = long double;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

int failures = 0;

void report(int id, const char* title, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "exception: " << e.what();
  }
  const double s = seconds_since(t0);
  if (!o.pass) ++failures;
  std::printf("criterion %2d %-28s %s  (%.2f s)  %s\n", id, title, o.pass ? "PASS" : "FAIL", s, o.detail.str().c_str());
  std::fflush(stdout);
}

std::shared_ptr<const ContinuedFraction> share_cf(ContinuedFraction cf) {
  return std::make_shared<const ContinuedFraction>(std::move(cf));
}
std::shared_ptr<const PiecewiseBV> fn(PiecewiseBV f) { return std::make_shared<const PiecewiseBV>(std::move(f)); }

ContinuedFraction family(QuotientFamily::Kind k, int depth, std::int64_t s = 0) {
  QuotientFamily fam;
  fam.kind = k;
  if (k == QuotientFamily::Kind::Constant) fam.k = 1;
  if (k == QuotientFamily::Kind::Power) fam.s = s;
  return ContinuedFraction::from_family(fam, depth);
}

const char* kGolden = "0.618033988749894848204586834365638117720309179805762862135448622705260462818902449707207204";
const char* kSqrt2m1 = "0.414213562373095048801688724209698078569671875376948073176679737990732478462107038850387534";

// ---- 1 --------------------------------------------------------------------

void diophantine_exactness(Outcome& o) {
  const auto t0 = Clock::now();
  std::vector<std::pair<std::string, ContinuedFraction>> cfs = {
      {"golden", ContinuedFraction::expand(kGolden, 25)},
      {"sqrt2-1", ContinuedFraction::expand(kSqrt2m1, 25)},
      {"m^6", family(QuotientFamily::Kind::Power, 25, 6)}};
  std::mt19937_64 rng(1);
  long checks = 0;
  for (const auto& [name, cf] : cfs) {
    o.require(cf.depth() == 25, name + " depth");
    for (int n = 1; n < cf.depth(); ++n) {
      o.require(cf.sandwich_holds(n), name + " sandwich n=" + std::to_string(n));
      ++checks;
    }
    const auto top = static_cast<std::uint64_t>(std::min<BigInt>(cf.q(cf.depth()), BigInt(1) << 62));
    auto check = [&](std::uint64_t n) {
      const auto d = ostrowski(n, cf);
      BigInt sum = 0;
      for (int k = 0; k <= d.m; ++k) sum += BigInt(d.b[static_cast<std::size_t>(k)]) * cf.q(k);
      o.require(sum == BigInt(n) && ostrowski_valid(d, cf), name + " ostrowski n=" + std::to_string(n));
      ++checks;
    };
    for (std::uint64_t n = 0; n < 5000; ++n) check(n);
    for (int i = 0; i < 5000; ++i) check(rng() % top);
  }
  const double s = seconds_since(t0);
  o.require(s < 1.0, "runtime " + std::to_string(s) + " s");
  o.detail << checks << " exact checks";
}

// ---- 2 --------------------------------------------------------------------

void denjoy_koksma(Outcome& o) {
  const auto t0 = Clock::now();
  std::vector<std::pair<std::string, std::shared_ptr<const ContinuedFraction>>> angles = {
      {"golden", share_cf(family(QuotientFamily::Kind::Constant, 40))},
      {"sqrt2-1", share_cf(ContinuedFraction::expand(kSqrt2m1, 30))},
      {"m^6", share_cf(family(QuotientFamily::Kind::Power, 8, 6))}};
  std::vector<std::pair<std::string, std::shared_ptr<const PiecewiseBV>>> fs = {
      {"indicator_pm", fn(PiecewiseBV::indicator_pm().centered_copy())},
      {"sawtooth", fn(PiecewiseBV::sawtooth().centered_copy())}};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  long evaluations = 0, violations = 0;
  for (const auto& [an, cf] : angles)
    for (const auto& [name, f] : fs) {
      o.require(f->centered(), name + " centered");
      for (int t = 0; t < 100; ++t) {
        Cocycle c(f, cf, U(rng));
        for (int k = 1; k <= cf->depth() && cf->q(k) <= 1000000; ++k) {
          const double v = birkhoff(c, static_cast<std::int64_t>(cf->q(k)));
          ++evaluations;
          if (std::abs(v) > f->variation_circle()) ++violations;
        }
      }
    }
  o.require(violations == 0, std::to_string(violations) + " violations");
  const double s = seconds_since(t0);
  o.require(s < 30.0, "runtime");
  o.detail << evaluations << " Birkhoff sums at q_n <= 1e6, " << violations << " violations";
}

// ---- 3, 4, 5: dispersion oracles --------------------------------------------

std::shared_ptr<const ContinuedFraction> golden() { return share_cf(family(QuotientFamily::Kind::Constant, 40)); }

std::vector<std::pair<std::string, std::shared_ptr<Environment>>> five_environments() {
  const double t = 1.0 / 3.0;
  return {
      {"periodic_pm1",
       Environment::periodic({StratumLaw::make(t, t, t, {{1, 1.0}}), StratumLaw::make(t, t, t, {{-1, 1.0}})}, 0.3)},
      {"periodic_skew", Environment::periodic({StratumLaw::make(0.2, 0.5, 0.3, {{1, 1.0}}),
                                               StratumLaw::make(0.45, 0.25, 0.3, {{-1, 0.5}, {2, 0.5}}),
                                               StratumLaw::make(0.3, 0.3, 0.4, {{-1, 1.0}})},
                                              0.1)},
      {"general_sawtooth", Environment::general(fn(PiecewiseBV::sawtooth().scaled(1.5)),
                                                fn(PiecewiseBV::fourier({{0.1, 0.3}, {0.0, -0.2}})), golden(), 0.377,
                                                0.25, 0.1)},
      {"general_indicator", Environment::general(fn(PiecewiseBV::indicator_pm().scaled(0.7)),
                                                 fn(PiecewiseBV::indicator(0.0, 0.5).scaled(0.3)), golden(), 0.61,
                                                 1.0 / 3.0, 0.1)},
      {"flat_sawtooth", Environment::vertically_flat(fn(PiecewiseBV::sawtooth()), golden(), 0.2, 1.0 / 3.0, 0.2)}};
}

std::shared_ptr<Environment> ramp() {
  return Environment::explicit_rule(
      [](std::int64_t n) {
        const double t = 1.0 / 3.0;
        return StratumLaw::make(t, t, t, {{n >= 1 ? 1 : -1, 1.0}});
      },
      0.3, true, "ramp");
}

// Per-index quantities read straight off the strata, summed naively.
struct Oracle {
  std::int64_t H;
  std::vector<ld> rho, g, F;
  ld pref;
  ld r(std::int64_t k) const { return rho[static_cast<std::size_t>(k + H)]; }
  ld gg(std::int64_t k) const { return g[static_cast<std::size_t>(k + H)]; }
  ld f(std::int64_t k) const { return F[static_cast<std::size_t>(k + H)]; }

  Oracle(const Environment& env, std::int64_t H_) : H(H_) {
    const auto size = static_cast<std::size_t>(2 * H + 1);
    rho.assign(size, 1);
    g.assign(size, 0);
    F.assign(size, 0);
    auto ratio = [&](std::int64_t n) {
      const auto& s = env.stratum(n);
      return static_cast<ld>(s.beta) / s.alpha;
    };
    auto drift = [&](std::int64_t i) {
      const auto& s = env.stratum(i);
      return static_cast<ld>(s.epsilon) * s.gamma / (1 - s.gamma);
    };
    for (std::int64_t k = 1; k <= H; ++k) {
      rho[static_cast<std::size_t>(k + H)] = r(k - 1) * ratio(k);
      F[static_cast<std::size_t>(k + H)] = f(k - 1) + drift(k - 1);
    }
    for (std::int64_t k = -1; k >= -H; --k) {
      rho[static_cast<std::size_t>(k + H)] = r(k + 1) / ratio(k + 1);
      F[static_cast<std::size_t>(k + H)] = f(k + 1) - drift(k);
    }
    for (std::int64_t k = -H; k <= H; ++k) {
      const auto& s = env.stratum(k);
      g[static_cast<std::size_t>(k + H)] = static_cast<ld>(s.gamma) * s.epsilon / s.alpha;
    }
    pref = ratio(0);
  }

  ld phi2(std::int64_t A, std::int64_t B, bool unit = false) const {
    ld tot = 0;
    B = std::min(B, H);
    for (std::int64_t k = -A; k <= B; ++k) {
      ld inner = 0;
      for (std::int64_t l = k; l <= B; ++l) {
        inner += (unit ? 1 : gg(l)) / r(l);
        const ld ratio_terms = unit ? 0 : r(l) / r(k) + r(k) / r(l);
        tot += ratio_terms + r(k) * r(l) * inner * inner;
      }
    }
    return tot;
  }
  ld psi(std::int64_t a, std::int64_t b) const {
    ld s = 0;
    for (std::int64_t k = a; k <= b; ++k)
      for (std::int64_t l = k + 1; l <= b; ++l) s += (f(l) - f(k)) * (f(l) - f(k));
    return s;
  }
  std::int64_t end_plus(double y) const {
    ld v = 0;
    std::int64_t j = -1;
    for (std::int64_t k = 0; k <= H; ++k) {
      v += r(k);
      if (v <= y) j = k;
      else break;
    }
    return std::max<std::int64_t>(0, j);
  }
  std::int64_t end_minus(double y) const {
    ld v = 0;
    std::int64_t j = -1;
    for (std::int64_t k = 0; k < H; ++k) {
      v += r(-k - 1);
      if (pref * v <= y) j = k;
      else break;
    }
    return std::max<std::int64_t>(0, j);
  }
};

struct RelCheck {
  Outcome& o;
  double tol;
  long count = 0;
  double worst = 0;
  void operator()(double got, ld want, const std::string& what) {
    const double err = static_cast<double>(std::abs(static_cast<ld>(got) - want) / std::max<ld>(1, std::abs(want)));
    worst = std::max(worst, err);
    ++count;
    o.require(err <= tol, what + " rel err " + std::to_string(err));
  }
};

void oracle_equivalence(Outcome& o) {
  const std::int64_t H = 220, W = 200;
  RelCheck rel{o, 1e-8};
  std::mt19937_64 rng(3);
  DispersionOptions general;
  general.mode = DispersionOptions::Mode::General;
  for (const auto& [name, env] : five_environments()) {
    const Oracle orc(*env, H);
    const auto t = DispersionTable::build(*env, H, general);
    // Every window length 1..200 with a random split around 0.
    for (std::int64_t len = 1; len <= W; ++len) {
      const std::int64_t A = std::uniform_int_distribution<std::int64_t>(0, len - 1)(rng), B = len - 1 - A;
      rel(static_cast<double>(t.window_phi2(A, B)), orc.phi2(A, B), name + " Phi2 window");
      rel(static_cast<double>(t.window_drift2(A, B, true)), orc.phi2(A, B, true), name + " Psi2 window");
    }
    // Level-indexed functions whose windows stay within 200.
    const auto A0 = orc.end_minus(0.0);
    for (std::int64_t n = 0; n <= 200; ++n) {
      const auto A = orc.end_minus(static_cast<double>(n)), B = orc.end_plus(static_cast<double>(n));
      if (A + B + 1 > W) break;
      o.require(t.end_minus(static_cast<double>(n)) == A && t.end_plus(static_cast<double>(n)) == B, name + " ends");
      rel(t.phi(n), std::sqrt(orc.phi2(A, B)), name + " Phi");
      rel(t.phi_plus(n), std::sqrt(orc.phi2(A, 0) + orc.phi2(A0, B)), name + " Phi+");
      const auto m = std::uniform_int_distribution<std::int64_t>(0, n)(rng);
      const auto Am = orc.end_minus(static_cast<double>(m));
      rel(t.general_phi(static_cast<double>(m), static_cast<double>(n)), std::sqrt(orc.phi2(Am, B)), name + " Phi(-m,n)");
      const auto pv = t.psi_variants(n);
      const ld pp = orc.phi2(0, B, true), pm = orc.phi2(A, 0, true);
      rel(pv.Psi, std::sqrt(orc.phi2(A, B, true)), name + " Psi");
      rel(pv.Psi_plusplus, std::sqrt(pp), name + " Psi++");
      rel(pv.Psi_plusminus, std::sqrt(pm), name + " Psi+-");
      rel(pv.Psi_plus, std::sqrt(pp + pm - 1), name + " Psi+");
    }
    if (!env->vertically_flat()) continue;
    // Flat functions phi, phi_+ and psi.
    const auto tf = DispersionTable::build(*env, H);
    for (std::int64_t n = 0; 2 * n + 1 <= W; ++n) {
      const auto [p, pp] = tf.flat_phi(n);
      rel(p, std::sqrt(static_cast<ld>(n) * n + orc.psi(-n, n)), name + " phi");
      rel(pp, std::sqrt(static_cast<ld>(n) * n + orc.psi(-n, 0) + orc.psi(0, n)), name + " phi+");
    }
    for (std::int64_t len = 2; len <= W; ++len) {
      const std::int64_t a = std::uniform_int_distribution<std::int64_t>(-H, H - len + 1)(rng);
      rel(tf.psi(a, a + len - 1), orc.psi(a, a + len - 1), name + " psi");
    }
  }
  o.detail << rel.count << " comparisons, worst relative error " << rel.worst;
}

void psi_identity(Outcome& o) {
  const std::int64_t H = 200000;
  RelCheck rel{o, 1e-10};
  std::mt19937_64 rng(4);
  auto flat = Environment::vertically_flat(fn(PiecewiseBV::sawtooth()), golden(), 0.2, 1.0 / 3.0, 0.2);
  int i = 0;
  for (const auto& env : {flat, ramp()}) {
    const auto t = DispersionTable::build(*env, H);
    const Oracle orc(*env, H);
    for (; i < (env == flat ? 500 : 1000); ++i) {
      const std::int64_t len = std::uniform_int_distribution<std::int64_t>(1, 199)(rng);
      const std::int64_t a = std::uniform_int_distribution<std::int64_t>(-H, H - len)(rng);
      rel(t.psi(a, a + len), orc.psi(a, a + len), "psi window");
    }
  }
  o.detail << rel.count << " windows, worst relative error " << rel.worst;
}

void structural(Outcome& o) {
  const std::int64_t H = 50000;
  std::mt19937_64 rng(5);
  auto flat = Environment::vertically_flat(fn(PiecewiseBV::sawtooth()), golden(), 0.2, 1.0 / 3.0, 0.2);
  long triples = 0;
  for (const auto& env : {flat, ramp()}) {
    const auto t = DispersionTable::build(*env, H);
    std::uniform_int_distribution<std::int64_t> pick(-H, H);
    int tested = 0;
    while (tested < 10000) {
      std::int64_t a = pick(rng), b = pick(rng), c = pick(rng);
      if (a > b) std::swap(a, b);
      if (b > c) std::swap(b, c);
      if (a > b) std::swap(a, b);
      if (!(a < b - 1 && b + 1 < c)) continue;
      ++tested;
      const double ac = t.psi(a, c), ab = t.psi(a, b - 1), bc = t.psi(b + 1, c);
      o.require(std::sqrt(ac) * (1 + 1e-12) >= std::sqrt(ab) + std::sqrt(bc), "reverse triangle");
      const double lhs = ac / static_cast<double>(c - a);
      const double rhs = ab / static_cast<double>(b - a) + bc / static_cast<double>(c - b);
      o.require(lhs * (1 + 1e-12) + 1e-12 >= rhs, "superadditivity");
    }
    triples += tested;
  }
  // phi_+(2n) >= 2^{1/4} phi_+(n) on [n0, 1e5].
  const std::int64_t N = 100000;
  const double k = std::pow(2.0, 0.25);
  auto env = Environment::vertically_flat(fn(PiecewiseBV::indicator_pm().scaled(0.5)), golden(), 0.3, 1.0 / 3.0, 0.2);
  const auto t = DispersionTable::build(*env, 2 * N);
  std::int64_t n0 = 1;
  for (std::int64_t n = 1; n <= N; ++n)
    if (t.flat_phi(2 * n).second < k * t.flat_phi(n).second) n0 = n + 1;
  o.require(n0 <= N, "no doubling threshold below 1e5");
  o.detail << triples << " triples; doubling bound holds on [" << n0 << ", 1e5]";
}

// ---- 6 --------------------------------------------------------------------

std::string config_path(const std::string& name) { return std::string(STRATWALK_CONFIG_DIR) + "/" + name + ".json"; }

void exact_dichotomy(Outcome& o) {
  const auto t0 = Clock::now();
  const auto m = build_model(load_config(config_path("campanino_periodic")));
  const auto cp = periodic_exact(*m.environment(0.0));
  o.require(cp.verdict == Verdict::ExactRecurrent, "campanino_periodic gave " + to_string(cp.verdict));
  const double t = 1.0 / 3.0;
  ExactStratum ex{BigRational(1, 3), BigRational(1, 3), BigRational(1, 3), {{1, BigRational(1)}}};
  auto drift = Environment::periodic({StratumLaw::make(t, t, t, {{1, 1.0}})}, 0.3, {ex});
  const auto d = periodic_exact(*drift);
  o.require(d.verdict == Verdict::ExactTransient, "constant drift gave " + to_string(d.verdict));
  const double s = seconds_since(t0);
  o.require(s < 1.0, "runtime");
  o.detail << "campanino_periodic " << to_string(cp.verdict) << " (sum " << cp.period_sum << "), constant drift "
           << to_string(d.verdict) << " (sum " << d.period_sum << ")";
}

// ---- 7, 8, 10: full pipeline through the CLI ------------------------------

const std::vector<std::string> kConfigs = {"campanino_periodic", "flat_zero",        "cp_ramp",
                                           "thm1_lipschitz",     "prop1_transient",  "thm2_integral_nonzero",
                                           "thm2_coboundary_symmetric", "propi_transient"};

struct PipelineRun {
  Json report;
  double seconds = 0;
  bool identical = false;
  std::string difference;
};
std::map<std::string, PipelineRun> runs;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void run_cli(const std::string& config, const fs::path& out) {
  fs::remove_all(out);
  const int threads = std::max(1u, std::thread::hardware_concurrency());
  const std::string cmd = std::string(STRATWALK_BIN) + " run --config " + config_path(config) + " --deterministic --threads " +
                          std::to_string(threads) + " --out " + out.string() + " 2> /dev/null";
  if (std::system(cmd.c_str()) != 0) throw std::runtime_error("stratwalk run failed on " + config);
}

void run_pipelines() {
  const auto root = fs::temp_directory_path() / "stratwalk_acceptance";
  for (const auto& name : kConfigs) {
    PipelineRun r;
    const auto a = root / name / "a", b = root / name / "b";
    const auto t0 = Clock::now();
    run_cli(name, a);
    r.seconds = seconds_since(t0);
    run_cli(name, b);
    r.identical = true;
    for (const auto& e : fs::directory_iterator(a)) {
      const auto other = b / e.path().filename();
      if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
        r.identical = false;
        r.difference = e.path().filename().string();
      }
    }
    r.report = Json::parse(slurp(a / "report.json"));
    runs[name] = std::move(r);
  }
}

std::map<std::string, int> verdicts(const Json& report) {
  std::map<std::string, int> out;
  for (const auto& e : report["criterion"]["per_x"]) ++out[e["verdict"].get<std::string>()];
  return out;
}

void classification(Outcome& o) {
  struct Expect {
    std::string config, verdict;
    int at_least;  // 0: majority verdict
  };
  const std::vector<Expect> expect = {{"flat_zero", "RecurrentLikely", 0},
                                      {"cp_ramp", "TransientLikely", 0},
                                      {"thm1_lipschitz", "RecurrentLikely", 14},
                                      {"prop1_transient", "TransientLikely", 14},
                                      {"thm2_integral_nonzero", "TransientLikely", 16},
                                      {"thm2_coboundary_symmetric", "RecurrentLikely", 14},
                                      {"propi_transient", "TransientLikely", 14}};
  double total = 0;
  for (const auto& e : expect) {
    const auto& r = runs.at(e.config);
    total += r.seconds;
    const auto& cfg = r.report["config"];
    o.require(cfg["budget"]["dispersion_horizon"] == 1000000 && cfg["budget"]["series_terms"] == 100000,
              e.config + " budget");
    const auto v = verdicts(r.report);
    int n = 0;
    for (const auto& [_, c] : v) n += c;
    const int hit = v.count(e.verdict) ? v.at(e.verdict) : 0;
    if (e.at_least == 0) {
      o.require(r.report["criterion"]["majority"] == e.verdict, e.config + " majority");
      o.detail << e.config << " " << r.report["criterion"]["majority"].get<std::string>() << "; ";
    } else {
      o.require(n >= 16, e.config + " has fewer than 16 base points");
      o.require(hit >= e.at_least, e.config + " below " + std::to_string(e.at_least) + "/" + std::to_string(n));
      o.detail << e.config << " " << hit << "/" << n << "; ";
    }
  }
  o.require(total < 1800, "runtime");
  o.detail << "pipeline wall time " << total << " s";
}

void montecarlo_corroboration(Outcome& o) {
  for (const auto& [name, want] : std::vector<std::pair<std::string, std::string>>{{"flat_zero", "growth"},
                                                                                   {"cp_ramp", "plateau"}}) {
    const auto& mc = runs.at(name).report["montecarlo"];
    o.require(mc["seeds"] == 64 && mc["horizon"] == 1000000 && mc["growth_test"]["level"] == 0.99, name + " settings");
    const auto sig = mc["growth_test"]["signature"].get<std::string>();
    o.require(sig == want, name + " " + sig);
    o.detail << name << " " << sig << " (p = " << mc["growth_test"]["p_value"].dump() << "); ";
  }
}

void determinism(Outcome& o) {
  for (const auto& name : kConfigs) {
    const auto& r = runs.at(name);
    o.require(r.identical, name + " differs in " + r.difference);
  }
  o.detail << kConfigs.size() << " bundled configs, every output file byte-identical across two runs";
}

// ---- 9 --------------------------------------------------------------------

void measure_module(Outcome& o) {
  const auto t0 = Clock::now();
  const auto& cf = *golden();
  for (const auto& f : {PiecewiseBV::sawtooth(), PiecewiseBV::indicator_pm(), PiecewiseBV::constant(0.0)})
    for (double c : {0.37, -2.5, 1e-7, 3.0}) {
      const auto r = A_ratio(f, PiecewiseBV::constant(c), cf, 0.123, 100000);
      o.require(r.value == c, "A_ratio(g = c) != c");
    }

  // Planted u: f = u - T u must give back u, and random polynomials must round trip.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N01;
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    FourierSeries u{{0.0}, {0.0}};
    for (int k = 1; k <= 12; ++k) {
      u.cos_coef.push_back(N01(rng) / (k * k));
      u.sin_coef.push_back(N01(rng) / (k * k));
    }
    const auto f = u.plus(u.shifted(-cf.theta_double()).scaled(-1.0));
    const auto r = fourier_coboundary(f, cf, 12);
    double sup = r.residual;
    for (int i = 0; i < 1000; ++i) sup = std::max(sup, std::abs(r.u((i + 0.5) / 1000) - u((i + 0.5) / 1000)));
    worst = std::max(worst, sup);
  }
  o.require(worst < 1e-8, "coboundary round trip " + std::to_string(worst));

  const FourierSeries u1{{0.0, 0.5}, {}};
  const auto planted = PiecewiseBV::fourier(u1.plus(u1.shifted(-cf.theta_double()).scaled(-1.0)));
  const double res = functional_residual(nu_f_empirical(planted, cf, 0.3, 1000000), planted, cf, trig_test_set(4));
  o.require(res < 0.01, "functional residual " + std::to_string(res));
  const double s = seconds_since(t0);
  o.require(s < 300, "runtime");
  o.detail << "A_ratio exact; coboundary sup error " << worst << "; functional residual " << res;
}

}  // namespace

int main() {
  report(1, "diophantine exactness", diophantine_exactness);
  report(2, "Denjoy-Koksma", denjoy_koksma);
  report(3, "oracle equivalence", oracle_equivalence);
  report(4, "psi closed form", psi_identity);
  report(5, "structural inequalities", structural);
  report(6, "exact dichotomy", exact_dichotomy);
  const auto t0 = Clock::now();
  bool pipelines = true;
  try {
    run_pipelines();
  } catch (const std::exception& e) {
    std::printf("pipeline runs failed: %s\n", e.what());
    pipelines = false;
  }
  std::printf("(pipeline runs for criteria 7, 8, 10: %.1f s)\n", seconds_since(t0));
  auto guarded = [&](void (*body)(Outcome&)) {
    return [&, body](Outcome& o) {
      if (!pipelines) throw std::runtime_error("no pipeline output");
      body(o);
    };
  };
  report(7, "classification agreement", guarded(classification));
  report(8, "Monte Carlo corroboration", guarded(montecarlo_corroboration));
  report(9, "measure module", measure_module);
  report(10, "determinism", guarded(determinism));
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
