#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "stratwalk/dispersion.hpp"
#include "stratwalk/error.hpp"
#include "stratwalk/experiment.hpp"
#include "stratwalk/measure.hpp"

using namespace stratwalk;

namespace {

std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Common {
  std::string config;
  std::string out;
  bool deterministic = false;
  int threads = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory (default: stdout)");
  sub->add_flag("--deterministic", c.deterministic, "omit timestamps and timings");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1, 1024));
}

// Writes to --out/name, or to stdout when no directory was given.
void emit(const Common& c, const std::string& name, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(c.out);
  std::ofstream f(std::filesystem::path(c.out) / name, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidConfig, "cli", "cannot write " + name + " in " + c.out);
  f << text;
}

Json header(const ExperimentConfig& cfg) {
  Json j;
  j["artifact"] = {{"name", "stratwalk"}, {"version", artifact_version()}};
  j["config"] = to_json(cfg);
  return j;
}

double pick_x(const Model& m, std::optional<double> x) { return x ? *x : m.base_points().front(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recurrence and transience of stratified random walks over circle rotations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", artifact_version());

  Common c;
  std::optional<double> x;
  std::int64_t from = -10, to = 10, horizon = 0, stride = 0;
  int points = 200, modes = 0, test_set = 0, seeds = 0;
  std::string emit_kind = "stats";
  std::int64_t budget_terms = 0;
  double grid_ratio = 0;
  std::vector<double> thresholds;

  auto* theta = app.add_subcommand("inspect-theta", "continued fraction, convergents and Diophantine diagnostics");
  add_common(theta, c);

  auto* env = app.add_subcommand("dump-env", "stratum laws over a range of heights as CSV");
  add_common(env, c);
  env->add_option("--x", x, "base point (default: first configured point)");
  env->add_option("--from", from, "first height");
  env->add_option("--to", to, "last height");

  auto* disp = app.add_subcommand("dump-dispersion", "dispersion functions on a geometric grid as CSV");
  add_common(disp, c);
  disp->add_option("--x", x, "base point");
  disp->add_option("--horizon", horizon, "table horizon (default: budget.dispersion_horizon)");
  disp->add_option("--points", points, "grid points")->check(CLI::Range(2, 100000));

  auto* cls = app.add_subcommand("classify", "series criterion at every configured base point");
  add_common(cls, c);
  cls->add_option("--budget-terms", budget_terms, "series terms (default: budget.series_terms)")
      ->check(CLI::PositiveNumber);
  cls->add_option("--grid-ratio", grid_ratio, "geometric grid ratio past the exact range")
      ->check(CLI::Range(1.0000001, 10.0));
  cls->add_option("--thresholds", thresholds, "tail slope cut points LOW,HIGH")->delimiter(',')->expected(2);

  auto* meas = app.add_subcommand("measure", "weighted orbit measure, A ratio and functional residuals");
  add_common(meas, c);
  meas->add_option("--horizon", horizon, "orbit length (default: measure.horizon)");
  meas->add_option("--modes", modes, "Fourier modes for the coboundary report (pure Fourier f only)");
  meas->add_option("--test-set", test_set, "trig test functions k = 1..K (default: measure.test_modes)");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo trajectories");
  add_common(sim, c);
  sim->add_option("--horizon", horizon, "steps (default: montecarlo.horizon)");
  sim->add_option("--seeds", seeds, "trajectories (default: montecarlo.seeds)");
  sim->add_option("--emit", emit_kind, "trajectories|stats")->check(CLI::IsMember({"trajectories", "stats"}));
  sim->add_option("--stride", stride, "sampling stride for --emit trajectories (default: horizon/1000)");

  auto* run = app.add_subcommand("run", "full pipeline: validate, dispersion, criterion, measure, Monte Carlo");
  add_common(run, c);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = load_config(c.config);
    RunFlags flags;
    flags.deterministic = c.deterministic;
    flags.threads = c.threads;

    if (*run) {
      auto b = run_experiment(cfg, flags);
      const std::string dir = !c.out.empty() ? c.out : cfg.output_dir;
      if (dir.empty()) {
        std::cout << b.report.dump(2) << "\n";
      } else {
        write_bundle(b, dir);
        std::cerr << "wrote " << (std::filesystem::path(dir) / "report.json").string() << "\n";
      }
      return 0;
    }

    if (!thresholds.empty() && !(thresholds[0] > 0 && thresholds[0] <= thresholds[1]))
      throw Error(ErrorCode::InvalidConfig, "cli", "--thresholds needs 0 < LOW <= HIGH");
    auto tuned = cfg;
    if (budget_terms > 0) tuned.budget.series_terms = budget_terms;
    if (grid_ratio > 0) tuned.budget.grid.ratio = grid_ratio;
    if (!thresholds.empty()) {
      tuned.budget.thresholds.recurrent_below = thresholds[0];
      tuned.budget.thresholds.transient_above = thresholds[1];
    }
    const Model m = build_model(tuned);

    if (*theta) {
      if (!m.quasi_periodic()) throw Error(ErrorCode::WrongKind, "cli", "environment kind has no rotation angle");
      Json j = header(cfg);
      j["angle"] = angle_section(*m.cf, cfg.angle.depth);
      emit(c, "theta.json", j.dump(2) + "\n");
    } else if (*env) {
      if (to < from) throw Error(ErrorCode::InvalidConfig, "cli", "--to must not be below --from");
      const auto e = m.environment(pick_x(m, x));
      std::ostringstream os;
      os << "n,alpha,beta,gamma,epsilon,mu\n";
      for (std::int64_t n = from; n <= to; ++n) {
        const auto& s = e->stratum(n);
        os << n << ',' << num(s.alpha) << ',' << num(s.beta) << ',' << num(s.gamma) << ',' << num(s.epsilon) << ','
           << s.mu_string() << '\n';
      }
      emit(c, "env.csv", os.str());
    } else if (*disp) {
      const std::int64_t H = horizon > 0 ? horizon : cfg.budget.dispersion_horizon;
      const auto e = m.environment(pick_x(m, x));
      const auto t = DispersionTable::build(*e, H, cfg.budget.dispersion);
      std::vector<Fn> fns;
      if (t.has_flat()) fns = {Fn::FlatPhi, Fn::FlatPhiPlus};
      if (t.has_general()) {
        for (Fn f : {Fn::Phi, Fn::PhiPlus, Fn::PhiStr}) fns.push_back(f);
        if (t.has_psi())
          for (Fn f : {Fn::Psi, Fn::PsiPlus, Fn::PsiPlusPlus, Fn::PsiPlusMinus}) fns.push_back(f);
      }
      std::int64_t top = H;
      for (Fn f : fns) top = std::min(top, t.level_horizon(f));
      std::ostringstream os;
      os << "n";
      for (Fn f : fns) os << ',' << to_string(f);
      os << '\n';
      std::int64_t last = -1;
      for (int i = 0; i < points; ++i) {
        const auto n = static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(top), i / (points - 1.0))));
        if (n <= last) continue;
        last = n;
        os << n;
        for (Fn f : fns) os << ',' << num(t.value(f, n));
        os << '\n';
      }
      emit(c, "dispersion.csv", os.str());
    } else if (*cls) {
      Json j = header(tuned);
      std::map<std::string, std::string> tables;
      j["criterion"] = criterion_section(m, flags, c.out.empty() ? nullptr : &tables);
      emit(c, "classify.json", j.dump(2) + "\n");
      for (const auto& [name, text] : tables) emit(c, name, text);
    } else if (*meas) {
      Model mm = m;
      if (horizon > 0) mm.config.measure.horizon = horizon;
      if (test_set > 0) mm.config.measure.test_modes = test_set;
      Json j = header(mm.config);
      std::map<std::string, std::string> tables;
      j["measure"] = measure_section(mm, &tables);
      if (modes > 0) {
        if (!mm.f || !mm.f->is_pure_fourier() || !mm.f->smooth())
          throw Error(ErrorCode::WrongKind, "cli", "--modes needs a pure Fourier f");
        const auto cob = fourier_coboundary(*mm.f->smooth(), *mm.cf, modes);
        j["coboundary"] = {{"modes", modes}, {"min_divisor", cob.min_divisor}, {"argmin_k", cob.argmin_k},
                           {"residual", cob.residual}};
      }
      if (mm.config.environment.kind == EnvironmentSpec::Kind::General) {
        std::ostringstream rs;
        rs << "N,functional_residual\n";
        const auto tests = trig_test_set(mm.config.measure.test_modes);
        const double x0 = mm.base_points().front();
        for (std::int64_t N = std::max<std::int64_t>(mm.config.measure.horizon / 1000, 10); N <= mm.config.measure.horizon;
             N *= 10)
          rs << N << ',' << num(functional_residual(nu_f_empirical(*mm.f, *mm.cf, x0, N), *mm.f, *mm.cf, tests)) << '\n';
        tables["residuals.csv"] = rs.str();
      }
      if (c.out.empty()) {
        std::cout << j.dump(2) << "\n";
      } else {
        emit(c, "measure.json", j.dump(2) + "\n");
        for (const auto& [name, text] : tables) emit(c, name, text);
      }
    } else if (*sim) {
      const std::int64_t H = horizon > 0 ? horizon : cfg.montecarlo.horizon;
      const int S = seeds > 0 ? seeds : cfg.montecarlo.seeds;
      const auto e = m.environment(m.base_points().front());
      if (emit_kind == "stats") {
        const auto runs = run_many(*e, H, cfg.montecarlo.seed, S, {}, c.threads);
        emit(c, "simulate.csv", walk_stats_csv(runs));
      } else {
        const std::int64_t st = stride > 0 ? stride : std::max<std::int64_t>(1, H / 1000);
        std::ostringstream os;
        os << "seed,stream,t,m,n\n";
        for (int s = 0; s < S; ++s)
          for (const auto& p : trajectory(*e, H, cfg.montecarlo.seed, static_cast<std::uint64_t>(s), st))
            os << cfg.montecarlo.seed << ',' << s << ',' << p.t << ',' << p.m << ',' << p.n << '\n';
        emit(c, "trajectories.csv", os.str());
      }
    }
  } catch (const Error& e) {
    std::cerr << "stratwalk: error in " << e.module() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "stratwalk: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
