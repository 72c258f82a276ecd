#include "stratwalk/experiment.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "stratwalk/error.hpp"
#include "stratwalk/measure.hpp"
#include "stratwalk/version.hpp"

namespace stratwalk {

namespace {

constexpr std::string_view kModule = "experiment";

std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// NaN and infinities are not JSON numbers.
Json jnum(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

template <class F>
void parallel_indices(std::size_t n, int threads, F&& body) {
  const std::size_t T = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n));
  if (T == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(T);
  for (std::size_t t = 0; t < T; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += T) body(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

Json series_json(const SeriesResult& s) {
  Json per = Json::array();
  for (double d : s.per_decade) per.push_back(jnum(d));
  return {{"total", jnum(s.total)}, {"grid_points", s.grid.size()}, {"zero_terms", s.zero_terms}, {"per_decade", per}};
}

}  // namespace

std::string artifact_version() { return STRATWALK_VERSION; }

Json angle_section(const ContinuedFraction& cf, int depth) {
  Json j;
  Json a = Json::array(), q = Json::array();
  const int d = std::min(depth, cf.depth());
  for (int n = 1; n <= d; ++n) a.push_back(cf.a(n).str());
  for (int n = 0; n <= std::min(d, cf.max_index()); ++n) q.push_back(cf.q(n).str());
  j["theta"] = jnum(cf.theta_double());
  j["quotients"] = a;
  j["q"] = q;
  const auto type = diophantine_type(cf);
  j["diophantine_type_estimate"] = jnum(type.estimate);
  const auto t1 = thm1_condition(cf, d);
  j["lipschitz_recurrence_series"] = {{"diverging", t1.diverging}, {"rigorous", t1.rigorous}, {"basis", t1.basis}};
  int sandwich = 0;
  for (int n = 1; n < std::min(d, cf.max_index()); ++n) sandwich += cf.sandwich_holds(n) ? 1 : 0;
  j["sandwich_checked"] = std::max(0, std::min(d, cf.max_index()) - 1);
  j["sandwich_holds"] = sandwich;
  return j;
}

Json environment_section(const Model& m, double x, std::int64_t window) {
  const auto env = m.environment(x);
  Json j;
  j["kind"] = env->kind_name();
  j["name"] = env->name();
  j["vertically_flat"] = env->vertically_flat();
  if (m.quasi_periodic()) {
    j["x"] = x;
    j["f"] = {{"mean", jnum(m.f->mean())}, {"variation", jnum(m.f->variation_circle())}, {"sup", jnum(m.f->sup_norm())},
              {"pieces", m.f->pieces()}};
    if (m.g)
      j["g"] = {{"mean", jnum(m.g->mean())}, {"variation", jnum(m.g->variation_circle())}, {"sup", jnum(m.g->sup_norm())}};
  }
  const auto cert = validate(*env, -window, window);
  j["validated_window"] = window;
  j["eta"] = {{"certified", jnum(cert.eta)}, {"floor", env->eta()}, {"argmin", cert.argmin}, {"clause", cert.clause}};
  return j;
}

Json criterion_section(const Model& m, const RunFlags& flags, std::map<std::string, std::string>* tables) {
  const auto xs = m.base_points();
  std::vector<CriterionReport> reps(xs.size());
  Budget budget = m.config.budget;
  // Parallelism goes to the base points when there are several.
  budget.grid.threads = xs.size() > 1 ? 1 : flags.threads;
  parallel_indices(xs.size(), flags.threads, [&](std::size_t i) { reps[i] = classify(*m.environment(xs[i]), budget); });

  Json per = Json::array();
  std::map<std::string, int> dist;
  std::ostringstream csv;
  csv << "x,verdict,rule,slope,slope_stderr,main_total,zero_terms\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& r = reps[i];
    Json e;
    if (m.quasi_periodic()) e["x"] = xs[i];
    e["verdict"] = to_string(r.verdict);
    e["rule"] = r.rule;
    e["functions"] = r.functions;
    if (r.periodic) {
      e["period_sum"] = r.periodic->period_sum;
      e["period_sum_approx"] = jnum(r.periodic->period_sum_approx);
    } else {
      e["horizon"] = r.horizon;
      e["series_terms"] = r.series_terms;
      e["tail_slope"] = jnum(r.fit.slope);
      e["tail_slope_stderr"] = jnum(r.fit.stderr_);
      e["tail_points"] = r.fit.points;
      e["main_series"] = series_json(r.main);
      if (r.transience) {
        e["transience"] = {{"sum_inv_phi_plus", series_json(r.transience->inv_phi_plus)},
                           {"slope_inv_phi_plus", jnum(r.transience->slope_inv_phi_plus)},
                           {"converging_trend", r.transience->converging_trend},
                           {"sup_phi_over_phi_plus", jnum(r.transience->phi_over_phi_plus)}};
      }
      e["dominated_variation_C2"] = jnum(r.dominated_variation_C2);
    }
    if (!r.caveat.empty()) e["caveat"] = r.caveat;
    per.push_back(e);
    ++dist[to_string(r.verdict)];
    csv << (m.quasi_periodic() ? num(xs[i]) : std::string("")) << ',' << to_string(r.verdict) << ",\"" << r.rule << "\","
        << num(r.fit.slope) << ',' << num(r.fit.stderr_) << ',' << num(r.main.total) << ',' << r.main.zero_terms << '\n';
  }
  Json j;
  j["base_points"] = xs.size();
  Json d;
  for (const auto& [k, v] : dist) d[k] = v;
  j["distribution"] = d;
  std::string majority;
  int best = -1;
  for (const auto& [k, v] : dist)
    if (v > best) best = v, majority = k;
  j["majority"] = majority;
  j["majority_count"] = best;
  j["per_x"] = per;
  if (tables) {
    (*tables)["criterion_x.csv"] = csv.str();
    const auto& s = reps.front().main;
    if (!s.grid.empty()) {
      std::ostringstream ms;
      ms << "n,term,partial\n";
      for (std::size_t k = 0; k < s.grid.size(); ++k)
        ms << s.grid[k] << ',' << num(s.terms[k]) << ',' << num(s.partial[k]) << '\n';
      (*tables)["main_series.csv"] = ms.str();
    }
  }
  return j;
}

Json measure_section(const Model& m, std::map<std::string, std::string>* tables) {
  Json j;
  if (m.config.environment.kind != EnvironmentSpec::Kind::General) {
    j["skipped"] = "the weighted orbit measure applies to the general quasi-periodic kind";
    return j;
  }
  const auto& cf = *m.cf;
  const auto xs = m.base_points();
  const double x0 = xs.front();
  const std::int64_t N = m.config.measure.horizon;
  std::vector<double> extra(xs.begin() + 1, xs.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(xs.size(), 5)));

  const auto mu = nu_f_empirical(*m.f, cf, x0, N);
  j["x"] = x0;
  j["horizon"] = N;
  j["ks_to_lebesgue"] = jnum(mu.ks_distance([](double y) { return y; }));
  const auto tests = trig_test_set(m.config.measure.test_modes);
  j["functional_residual"] = jnum(functional_residual(mu, *m.f, cf, tests));
  j["test_functions"] = tests.size();

  const auto small = A_ratio(*m.f, *m.g, cf, x0, std::max<std::int64_t>(N / 10, 10), extra);
  const auto large = A_ratio(*m.f, *m.g, cf, x0, N, extra);
  const auto sign = integral_sign(small, large);
  j["A_ratio"] = {{"small_horizon", std::max<std::int64_t>(N / 10, 10)},
                  {"at_small", jnum(small.value)},
                  {"at_large", jnum(large.value)},
                  {"spread_last_decade", jnum(large.spread_last_decade)},
                  {"spread_over_x", jnum(large.spread_x)},
                  {"integral_sign", sign == IntegralSign::Nonzero    ? "nonzero"
                                    : sign == IntegralSign::Centered ? "centered"
                                                                     : "inconclusive"}};

  const auto rt = ratio_trajectory(*m.f, cf, x0, N);
  j["ratio_trajectory"] = {{"tail_max", jnum(rt.tail_max)}, {"tail_min", jnum(rt.tail_min)}, {"log_slope", jnum(rt.log_slope)},
                           {"note", "exploratory; no classification is claimed"}};
  if (tables) {
    std::ostringstream c;
    c << "y,cdf\n";
    for (const auto& [y, F] : mu.cdf_grid(101)) c << num(y) << ',' << num(F) << '\n';
    (*tables)["measure_cdf.csv"] = c.str();
    std::ostringstream a;
    a << "n,A\n";
    for (const auto& [n, v] : large.trajectory) a << n << ',' << num(v) << '\n';
    (*tables)["a_ratio.csv"] = a.str();
    std::ostringstream r;
    r << "n,v_plus_over_w_plus\n";
    for (std::size_t i = 0; i < rt.n.size(); ++i) r << rt.n[i] << ',' << num(rt.ratio[i]) << '\n';
    (*tables)["ratio_trajectory.csv"] = r.str();
  }
  return j;
}

Json montecarlo_section(const Model& m, const RunFlags& flags, std::map<std::string, std::string>* tables) {
  const auto& M = m.config.montecarlo;
  const double x0 = m.base_points().front();
  const auto env = m.environment(x0);
  RunOptions opt;
  opt.checkpoints = M.checkpoints;
  opt.box = M.box;
  const auto runs = run_many(*env, M.horizon, M.seed, M.seeds, opt, flags.threads);
  Json j;
  if (m.quasi_periodic()) j["x"] = x0;
  j["horizon"] = M.horizon;
  j["seeds"] = M.seeds;
  j["seed"] = M.seed;
  Json cps = Json::array();
  for (std::size_t c = 0; c < M.checkpoints.size(); ++c) {
    double r = 0, o = 0;
    for (const auto& s : runs) r += static_cast<double>(s.returns_at[c]), o += static_cast<double>(s.occupation_at[c]);
    cps.push_back({{"t", M.checkpoints[c]}, {"mean_returns", jnum(r / runs.size())}, {"mean_box_visits", jnum(o / runs.size())}});
  }
  j["checkpoints"] = cps;
  double total = 0;
  for (const auto& s : runs) total += static_cast<double>(s.returns);
  j["mean_returns"] = jnum(total / runs.size());
  if (M.checkpoints.size() >= 2) {
    const auto t = return_growth(runs, 0, M.checkpoints.size() - 1, M.level);
    j["growth_test"] = {{"from", M.checkpoints.front()},
                        {"to", M.checkpoints.back()},
                        {"mean_diff", jnum(t.mean_diff)},
                        {"sd", jnum(t.sd)},
                        {"t", jnum(t.t)},
                        {"p_value", jnum(t.p_value)},
                        {"level", M.level},
                        {"signature", t.significant ? "growth" : "plateau"}};
  }
  j["note"] = "corroboration only; the verdict comes from the criterion";
  if (tables) (*tables)["montecarlo.csv"] = walk_stats_csv(runs);
  return j;
}

std::string walk_stats_csv(const std::vector<WalkStats>& runs) {
  std::ostringstream os;
  os << "seed,stream,returns,last_return,max_abs_m,max_abs_n\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& s = runs[i];
    os << s.seed << ',' << i << ',' << s.returns << ',' << s.last_return << ',' << s.max_abs_m << ',' << s.max_abs_n << '\n';
  }
  return os.str();
}

ReportBundle run_experiment(const ExperimentConfig& config, const RunFlags& flags) {
  ReportBundle b;
  auto& r = b.report;
  r["artifact"] = {{"name", "stratwalk"}, {"version", artifact_version()}};
  if (!flags.deterministic) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    r["generated_at"] = buf;
  }
  r["config"] = to_json(config);
  const auto t0 = std::chrono::steady_clock::now();
  Json timings;
  auto lap = [&](const char* name, auto t) {
    timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
  };

  const Model m = build_model(config);
  if (m.quasi_periodic()) r["angle"] = angle_section(*m.cf, config.angle.depth);
  r["environment"] =
      environment_section(m, m.base_points().front(), std::min<std::int64_t>(config.budget.dispersion_horizon, 1 << 17));
  lap("setup", t0);

  std::optional<std::string> majority;
  if (flags.criterion) {
    const auto t = std::chrono::steady_clock::now();
    r["criterion"] = criterion_section(m, flags, &b.tables);
    majority = r["criterion"]["majority"].get<std::string>();
    lap("criterion", t);
  }
  if (flags.measure && config.measure.enabled) {
    const auto t = std::chrono::steady_clock::now();
    r["measure"] = measure_section(m, &b.tables);
    lap("measure", t);
  }
  if (flags.montecarlo && config.montecarlo.enabled) {
    const auto t = std::chrono::steady_clock::now();
    auto mc = montecarlo_section(m, flags, &b.tables);
    if (majority && mc.contains("growth_test")) {
      const bool growth = mc["growth_test"]["signature"] == "growth";
      const bool rec = *majority == to_string(Verdict::RecurrentLikely) || *majority == to_string(Verdict::ExactRecurrent);
      const bool tra = *majority == to_string(Verdict::TransientLikely) || *majority == to_string(Verdict::ExactTransient);
      mc["agrees_with_criterion"] = rec ? growth : (tra ? !growth : false);
    }
    r["montecarlo"] = mc;
    lap("montecarlo", t);
  }
  if (!flags.deterministic) r["timings_seconds"] = timings;
  return b;
}

void write_bundle(const ReportBundle& b, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::InvalidConfig, kModule, "cannot create output directory '" + dir + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidConfig, kModule, "cannot write '" + name + "' in '" + dir + "'");
    out << text;
  };
  write("report.json", b.report.dump(2) + "\n");
  for (const auto& [name, text] : b.tables) write(name, text);
}

}  // namespace stratwalk
