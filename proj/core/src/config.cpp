#include "stratwalk/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "stratwalk/error.hpp"
#include "stratwalk/montecarlo.hpp"

namespace stratwalk {

namespace {

constexpr std::string_view kModule = "config";

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::InvalidConfig, kModule, "field '" + field + "': " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Strict object reader: every key must be consumed, unknown keys are errors.
class Obj {
 public:
  Obj(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }
  ~Obj() = default;

  bool has(const std::string& k) const { return j_.contains(k); }
  const Json& raw(const std::string& k) {
    if (!j_.contains(k)) fail(join(path_, k), "missing");
    seen_.insert(k);
    return j_.at(k);
  }
  std::string field(const std::string& k) const { return join(path_, k); }

  template <class T>
  T get(const std::string& k, T def) {
    if (!j_.contains(k)) return def;
    return as<T>(raw(k), join(path_, k));
  }
  template <class T>
  T req(const std::string& k) {
    return as<T>(raw(k), join(path_, k));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(join(path_, it.key()), "unknown field");
  }

  template <class T>
  static T as(const Json& v, const std::string& field) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(field, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (v.is_number_integer()) return v.get<T>();
      if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::floor(d) == d && std::abs(d) < 9e18) return static_cast<T>(d);
      }
      fail(field, "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(field, "expected a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) fail(field, "expected a finite number");
      return d;
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(field, "expected a string");
      return v.get<std::string>();
    } else {
      static_assert(sizeof(T) == 0, "unsupported");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string number_string(const Json& v, const std::string& field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  fail(field, "expected a rational string or a number");
}

BigRational parse_rational(const std::string& s, const std::string& field) {
  try {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return parse_decimal(s);
    const BigRational num = parse_decimal(s.substr(0, slash)), den = parse_decimal(s.substr(slash + 1));
    if (den == 0) fail(field, "zero denominator");
    return num / den;
  } catch (const Error&) {
    fail(field, "cannot parse '" + s + "' as a rational");
  }
}

AngleSpec parse_angle(const Json& j) {
  Obj o(j, "angle");
  AngleSpec a;
  a.depth = o.get<int>("depth", 40);
  const int given = int(o.has("theta")) + int(o.has("quotients")) + int(o.has("family"));
  if (given != 1) fail("angle", "give exactly one of theta, quotients, family");
  if (o.has("theta")) {
    a.kind = AngleSpec::Kind::Decimal;
    a.theta = o.req<std::string>("theta");
  } else if (o.has("quotients")) {
    a.kind = AngleSpec::Kind::Quotients;
    const auto& q = o.raw("quotients");
    if (!q.is_array() || q.empty()) fail("angle.quotients", "expected a nonempty array");
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto v = Obj::as<std::int64_t>(q[i], "angle.quotients[" + std::to_string(i) + "]");
      if (v < 1) fail("angle.quotients[" + std::to_string(i) + "]", "partial quotients must be >= 1");
      a.quotients.push_back(v);
    }
  } else {
    a.kind = AngleSpec::Kind::Family;
    Obj f(o.raw("family"), "angle.family");
    const auto name = f.req<std::string>("name");
    auto& fam = a.family;
    if (name == "constant") {
      fam.kind = QuotientFamily::Kind::Constant;
      fam.k = f.get<std::int64_t>("k", 1);
      if (fam.k < 1) fail("angle.family.k", "must be >= 1");
    } else if (name == "power") {
      fam.kind = QuotientFamily::Kind::Power;
      fam.s = f.get<int>("s", 6);
      if (fam.s < 0) fail("angle.family.s", "must be >= 0");
    } else if (name == "doubling") {
      fam.kind = QuotientFamily::Kind::Doubling;
    } else if (name == "prop1") {
      fam.kind = QuotientFamily::Kind::Prop1;
      fam.a1 = f.get<std::int64_t>("a1", 1);
      fam.a2 = f.get<std::int64_t>("a2", 2);
      fam.delta = f.get<double>("delta", 2.0);
      if (fam.a1 % 2 == 0 || fam.a1 < 1) fail("angle.family.a1", "must be odd and positive");
      if (fam.a2 % 2 != 0 || fam.a2 < 2) fail("angle.family.a2", "must be even and >= 2");
      if (fam.delta <= 1.0) fail("angle.family.delta", "must exceed 1");
    } else {
      fail("angle.family.name", "unknown family '" + name + "'");
    }
    f.finish();
  }
  if (a.depth < 2 || a.depth > 200) fail("angle.depth", "must lie in [2, 200]");
  o.finish();
  return a;
}

Json angle_json(const AngleSpec& a) {
  Json j;
  switch (a.kind) {
    case AngleSpec::Kind::Decimal: j["theta"] = a.theta; break;
    case AngleSpec::Kind::Quotients: j["quotients"] = a.quotients; break;
    case AngleSpec::Kind::Family: {
      Json f;
      const auto& fam = a.family;
      switch (fam.kind) {
        case QuotientFamily::Kind::Constant: f["name"] = "constant"; f["k"] = fam.k; break;
        case QuotientFamily::Kind::Power: f["name"] = "power"; f["s"] = fam.s; break;
        case QuotientFamily::Kind::Doubling: f["name"] = "doubling"; break;
        case QuotientFamily::Kind::Prop1:
          f["name"] = "prop1";
          f["a1"] = fam.a1;
          f["a2"] = fam.a2;
          f["delta"] = fam.delta;
          break;
        case QuotientFamily::Kind::Explicit: break;
      }
      j["family"] = f;
      break;
    }
  }
  j["depth"] = a.depth;
  return j;
}

const char* env_kind_name(EnvironmentSpec::Kind k) {
  switch (k) {
    case EnvironmentSpec::Kind::Periodic: return "periodic";
    case EnvironmentSpec::Kind::VerticallyFlat: return "vertically_flat";
    case EnvironmentSpec::Kind::General: return "general";
    case EnvironmentSpec::Kind::Ramp: return "ramp";
  }
  return "?";
}

bool needs_angle(EnvironmentSpec::Kind k) {
  return k == EnvironmentSpec::Kind::VerticallyFlat || k == EnvironmentSpec::Kind::General;
}

// Function spec validation without an angle (propi and coboundary need one).
void check_function(const Json& spec, const std::string& field);

EnvironmentSpec parse_environment(const Json& j) {
  Obj o(j, "environment");
  EnvironmentSpec e;
  const auto kind = o.req<std::string>("kind");
  if (kind == "periodic") e.kind = EnvironmentSpec::Kind::Periodic;
  else if (kind == "vertically_flat") e.kind = EnvironmentSpec::Kind::VerticallyFlat;
  else if (kind == "general") e.kind = EnvironmentSpec::Kind::General;
  else if (kind == "ramp") e.kind = EnvironmentSpec::Kind::Ramp;
  else fail("environment.kind", "unknown kind '" + kind + "'");
  e.gamma0 = o.get<double>("gamma0", 1.0 / 3.0);
  e.eta = o.get<double>("eta", 0.05);
  if (!(e.gamma0 > 0 && e.gamma0 < 1)) fail("environment.gamma0", "must lie in (0, 1)");
  if (!(e.eta > 0 && e.eta <= 1.0 / 3.0)) fail("environment.eta", "must lie in (0, 1/3]");
  if (needs_angle(e.kind)) {
    e.f = o.raw("f");
    check_function(e.f, "environment.f");
    if (e.kind == EnvironmentSpec::Kind::General) {
      e.g = o.has("g") ? o.raw("g") : Json(0.0);
      check_function(e.g, "environment.g");
    }
  }
  if (e.kind == EnvironmentSpec::Kind::Periodic) {
    const auto& p = o.raw("period");
    if (!p.is_array() || p.empty()) fail("environment.period", "expected a nonempty array of strata");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string path = "environment.period[" + std::to_string(i) + "]";
      Obj s(p[i], path);
      PeriodicEntry pe;
      pe.alpha = number_string(s.raw("alpha"), s.field("alpha"));
      pe.beta = number_string(s.raw("beta"), s.field("beta"));
      pe.gamma = number_string(s.raw("gamma"), s.field("gamma"));
      parse_rational(pe.alpha, s.field("alpha"));
      parse_rational(pe.beta, s.field("beta"));
      parse_rational(pe.gamma, s.field("gamma"));
      const auto& mu = s.raw("mu");
      if (!mu.is_array() || mu.empty()) fail(s.field("mu"), "expected a nonempty array of [r, p] pairs");
      for (std::size_t k = 0; k < mu.size(); ++k) {
        const std::string mf = s.field("mu") + "[" + std::to_string(k) + "]";
        if (!mu[k].is_array() || mu[k].size() != 2) fail(mf, "expected [r, p]");
        const int r = Obj::as<int>(mu[k][0], mf);
        const auto pr = number_string(mu[k][1], mf);
        parse_rational(pr, mf);
        pe.mu.emplace_back(r, pr);
      }
      s.finish();
      e.period.push_back(std::move(pe));
    }
  }
  o.finish();
  return e;
}

Json environment_json(const EnvironmentSpec& e) {
  Json j;
  j["kind"] = env_kind_name(e.kind);
  j["gamma0"] = e.gamma0;
  j["eta"] = e.eta;
  if (needs_angle(e.kind)) j["f"] = e.f;
  if (e.kind == EnvironmentSpec::Kind::General) j["g"] = e.g;
  if (e.kind == EnvironmentSpec::Kind::Periodic) {
    Json arr = Json::array();
    for (const auto& pe : e.period) {
      Json s;
      s["alpha"] = pe.alpha;
      s["beta"] = pe.beta;
      s["gamma"] = pe.gamma;
      Json mu = Json::array();
      for (const auto& [r, p] : pe.mu) mu.push_back(Json::array({r, p}));
      s["mu"] = mu;
      arr.push_back(s);
    }
    j["period"] = arr;
  }
  return j;
}

double lipschitz_of(const PiecewiseBV& h) {
  double L = 0;
  for (double s : h.slopes()) L = std::max(L, std::abs(s));
  if (h.smooth()) L += h.smooth()->lipschitz();
  return L;
}

PiecewiseBV build_impl(const Json& spec, const ContinuedFraction* cf, const PiecewiseBV* f, const std::string& field) {
  if (spec.is_number()) return PiecewiseBV::constant(Obj::as<double>(spec, field));
  if (spec.is_string()) {
    const auto s = spec.get<std::string>();
    if (s == "indicator_pm") return PiecewiseBV::indicator_pm();
    if (s == "sawtooth") return PiecewiseBV::sawtooth();
    if (s == "zero") return PiecewiseBV::constant(0.0);
    fail(field, "unknown primitive '" + s + "'");
  }
  Obj o(spec, field);
  const auto type = o.req<std::string>("type");
  auto sub = [&](const char* key) { return build_impl(o.raw(key), cf, f, o.field(key)); };
  PiecewiseBV out;
  if (type == "constant") {
    out = PiecewiseBV::constant(o.req<double>("value"));
  } else if (type == "indicator_pm") {
    out = PiecewiseBV::indicator_pm();
  } else if (type == "sawtooth") {
    out = PiecewiseBV::sawtooth();
  } else if (type == "indicator") {
    const double a = o.req<double>("a"), b = o.req<double>("b");
    if (a < 0 || a >= 1 || b < 0 || b > 1) fail(field, "indicator ends must lie in [0, 1]");
    out = PiecewiseBV::indicator(a, b);
  } else if (type == "cos" || type == "sin") {
    const int k = o.get<int>("k", 1);
    const double amp = o.get<double>("amplitude", 1.0);
    if (k < 1 || k > 100000) fail(o.field("k"), "must lie in [1, 100000]");
    FourierSeries s;
    s.cos_coef.assign(static_cast<std::size_t>(k + 1), 0.0);
    s.sin_coef.assign(static_cast<std::size_t>(k + 1), 0.0);
    (type == "cos" ? s.cos_coef : s.sin_coef)[static_cast<std::size_t>(k)] = amp;
    out = PiecewiseBV::fourier(s);
  } else if (type == "fourier") {
    FourierSeries s;
    for (const char* key : {"cos", "sin"}) {
      if (!o.has(key)) continue;
      const auto& arr = o.raw(key);
      if (!arr.is_array()) fail(o.field(key), "expected an array");
      auto& dst = std::string(key) == "cos" ? s.cos_coef : s.sin_coef;
      for (std::size_t i = 0; i < arr.size(); ++i)
        dst.push_back(Obj::as<double>(arr[i], o.field(key) + "[" + std::to_string(i) + "]"));
    }
    if (s.cos_coef.empty() && s.sin_coef.empty()) fail(field, "fourier needs cos or sin coefficients");
    if (s.cos_coef.empty()) s.cos_coef.push_back(0.0);
    out = PiecewiseBV::fourier(s);
  } else if (type == "affine") {
    auto list = [&](const char* key) {
      std::vector<double> v;
      const auto& arr = o.raw(key);
      if (!arr.is_array()) fail(o.field(key), "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i)
        v.push_back(Obj::as<double>(arr[i], o.field(key) + "[" + std::to_string(i) + "]"));
      return v;
    };
    auto br = list("breaks"), va = list("values");
    auto sl = o.has("slopes") ? list("slopes") : std::vector<double>(va.size(), 0.0);
    if (br.empty() || br.size() != va.size() || br.size() != sl.size())
      fail(field, "breaks, values and slopes must have equal nonzero length");
    if (br[0] != 0.0) fail(o.field("breaks"), "must start at 0");
    for (std::size_t i = 1; i < br.size(); ++i)
      if (!(br[i] > br[i - 1] && br[i] < 1.0)) fail(o.field("breaks"), "must increase within [0, 1)");
    out = PiecewiseBV::affine(br, va, sl);
  } else if (type == "pick") {
    const double B = o.req<double>("B"), D = o.req<double>("Delta");
    const double c = o.get<double>("center", 0.0);
    if (!(D > 0 && D <= 0.5)) fail(o.field("Delta"), "must lie in (0, 1/2]");
    out = pick_function(B, D).shifted(c);
  } else if (type == "propi" || type == "propi_u") {
    const int M = o.req<int>("M");
    if (M < 1 || M > 12) fail(o.field("M"), "must lie in [1, 12]");
    if (!cf) fail(field, "propi needs an angle");
    auto b = build_propi(*cf, M);
    out = type == "propi" ? b.f : b.u;
  } else if (type == "scaled") {
    out = sub("of").scaled(o.req<double>("by"));
  } else if (type == "sum") {
    const auto& arr = o.raw("of");
    if (!arr.is_array() || arr.empty()) fail(o.field("of"), "expected a nonempty array");
    out = build_impl(arr[0], cf, f, o.field("of") + "[0]");
    for (std::size_t i = 1; i < arr.size(); ++i)
      out = out.plus(build_impl(arr[i], cf, f, o.field("of") + "[" + std::to_string(i) + "]"));
  } else if (type == "shift") {
    out = sub("of").shifted(o.req<double>("by"));
  } else if (type == "reflect") {
    out = sub("of").reflected(o.req<double>("about"));
  } else if (type == "centered") {
    out = sub("of").centered_copy();
  } else if (type == "coboundary") {
    // g = h - e^{-f} T h, with f the environment's f.
    if (!cf) fail(field, "coboundary needs an angle");
    if (!f) fail(field, "coboundary is only available for g (it uses f)");
    auto h = std::make_shared<PiecewiseBV>(sub("h"));
    auto ff = std::make_shared<PiecewiseBV>(*f);
    const double th = cf->theta_double();
    std::vector<double> breaks;
    for (double b : h->breakpoints()) breaks.push_back(b), breaks.push_back(std::fmod(b - th + 1.0, 1.0));
    for (double b : ff->breakpoints()) breaks.push_back(b);
    const double K = lipschitz_of(*h) * (1.0 + std::exp(ff->sup_norm())) + lipschitz_of(*ff) * std::exp(ff->sup_norm()) * h->sup_norm();
    out = PiecewiseBV::callable([h, ff, th](double x) { return (*h)(x) - std::exp(-(*ff)(x)) * (*h)(x + th); }, K,
                                breaks);
  } else {
    fail(o.field("type"), "unknown function type '" + type + "'");
  }
  o.finish();
  return out;
}

void check_function(const Json& spec, const std::string& field) {
  // Structural check only: angle-dependent pieces are validated when built.
  if (spec.is_number() || spec.is_string()) {
    if (spec.is_string()) build_impl(spec, nullptr, nullptr, field);
    return;
  }
  if (!spec.is_object()) fail(field, "expected a number, a primitive name or an object");
  if (!spec.contains("type") || !spec["type"].is_string()) fail(field + ".type", "missing");
  const auto type = spec["type"].get<std::string>();
  if (type == "propi" || type == "propi_u" || type == "coboundary") {
    for (auto it = spec.begin(); it != spec.end(); ++it) {
      const auto k = it.key();
      if (type == "coboundary" && k == "h") check_function(*it, field + ".h");
      else if (k != "type" && k != "M") fail(field + "." + k, "unknown field");
    }
    if (type != "coboundary" && !spec.contains("M")) fail(field + ".M", "missing");
    if (type == "coboundary" && !spec.contains("h")) fail(field + ".h", "missing");
    return;
  }
  for (const char* key : {"of", "h"})
    if (spec.contains(key)) {
      const auto& v = spec[key];
      if (v.is_array())
        for (std::size_t i = 0; i < v.size(); ++i) check_function(v[i], field + "." + key + "[" + std::to_string(i) + "]");
      else
        check_function(v, field + "." + key);
    }
  // Leaf types are fully validated by building them without an angle.
  bool nested = false;
  std::function<void(const Json&)> scan = [&](const Json& s) {
    if (!s.is_object()) return;
    const auto t = s.value("type", std::string());
    if (t == "propi" || t == "propi_u" || t == "coboundary") nested = true;
    for (const char* key : {"of", "h"})
      if (s.contains(key)) {
        if (s[key].is_array())
          for (const auto& e : s[key]) scan(e);
        else
          scan(s[key]);
      }
  };
  scan(spec);
  if (!nested) build_impl(spec, nullptr, nullptr, field);
}

}  // namespace

PiecewiseBV build_function(const Json& spec, const ContinuedFraction* cf, const PiecewiseBV* f,
                           const std::string& field) {
  return build_impl(spec, cf, f, field);
}

ExperimentConfig parse_config(const Json& j) {
  Obj o(j, "");
  ExperimentConfig c;
  c.name = o.req<std::string>("name");
  c.description = o.get<std::string>("description", "");
  c.environment = parse_environment(o.raw("environment"));
  if (needs_angle(c.environment.kind)) c.angle = parse_angle(o.raw("angle"));
  else if (o.has("angle")) c.angle = parse_angle(o.raw("angle"));

  if (o.has("x")) {
    const auto& xj = o.raw("x");
    if (xj.is_number()) {
      c.x.value = Obj::as<double>(xj, "x");
    } else {
      Obj x(xj, "x");
      if (x.has("value")) c.x.value = x.req<double>("value");
      c.x.count = x.get<int>("count", 16);
      c.x.seed = x.get<std::uint64_t>("seed", 1);
      x.finish();
    }
    if (c.x.value && (*c.x.value < 0 || *c.x.value >= 1)) fail("x.value", "must lie in [0, 1)");
    if (c.x.count < 1 || c.x.count > 100000) fail("x.count", "must lie in [1, 100000]");
  }

  if (o.has("budget")) {
    Obj b(o.raw("budget"), "budget");
    auto& B = c.budget;
    B.dispersion_horizon = b.get<std::int64_t>("dispersion_horizon", B.dispersion_horizon);
    B.series_terms = b.get<std::int64_t>("series_terms", B.series_terms);
    B.grid.ratio = b.get<double>("grid_ratio", B.grid.ratio);
    B.grid.exact_terms = b.get<std::int64_t>("exact_terms", B.grid.exact_terms);
    B.dispersion.unit_prefactor = b.get<bool>("unit_prefactor", false);
    if (B.dispersion_horizon < 10 || B.dispersion_horizon > 200000000) fail("budget.dispersion_horizon", "must lie in [10, 2e8]");
    if (B.series_terms < 10) fail("budget.series_terms", "must be >= 10");
    if (!(B.grid.ratio > 1.0)) fail("budget.grid_ratio", "must exceed 1");
    if (B.grid.exact_terms < 1) fail("budget.exact_terms", "must be >= 1");
    b.finish();
  }
  if (o.has("thresholds")) {
    Obj t(o.raw("thresholds"), "thresholds");
    auto& T = c.budget.thresholds;
    T.recurrent_below = t.get<double>("recurrent_below", T.recurrent_below);
    T.transient_above = t.get<double>("transient_above", T.transient_above);
    T.tie_decades = t.get<int>("tie_decades", T.tie_decades);
    T.flat_ratio = t.get<double>("flat_ratio", T.flat_ratio);
    T.decay_ratio = t.get<double>("decay_ratio", T.decay_ratio);
    if (T.recurrent_below > T.transient_above) fail("thresholds.recurrent_below", "must not exceed transient_above");
    if (T.tie_decades < 1) fail("thresholds.tie_decades", "must be >= 1");
    t.finish();
  }
  if (o.has("measure")) {
    Obj m(o.raw("measure"), "measure");
    c.measure.enabled = m.get<bool>("enabled", true);
    c.measure.horizon = m.get<std::int64_t>("horizon", c.measure.horizon);
    c.measure.test_modes = m.get<int>("test_modes", c.measure.test_modes);
    if (c.measure.horizon < 10) fail("measure.horizon", "must be >= 10");
    if (c.measure.test_modes < 1 || c.measure.test_modes > 64) fail("measure.test_modes", "must lie in [1, 64]");
    m.finish();
  }
  if (o.has("montecarlo")) {
    Obj m(o.raw("montecarlo"), "montecarlo");
    auto& M = c.montecarlo;
    M.enabled = m.get<bool>("enabled", true);
    M.horizon = m.get<std::int64_t>("horizon", M.horizon);
    M.seeds = m.get<int>("seeds", M.seeds);
    M.seed = m.get<std::uint64_t>("seed", M.seed);
    M.box = m.get<std::int64_t>("box", M.box);
    M.level = m.get<double>("level", M.level);
    if (m.has("checkpoints")) {
      M.checkpoints.clear();
      const auto& arr = m.raw("checkpoints");
      if (!arr.is_array()) fail("montecarlo.checkpoints", "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i)
        M.checkpoints.push_back(Obj::as<std::int64_t>(arr[i], "montecarlo.checkpoints[" + std::to_string(i) + "]"));
    }
    if (M.horizon < 0) fail("montecarlo.horizon", "must be >= 0");
    if (M.seeds < 2) fail("montecarlo.seeds", "must be >= 2");
    if (!(M.level > 0 && M.level < 1)) fail("montecarlo.level", "must lie in (0, 1)");
    for (std::size_t i = 0; i < M.checkpoints.size(); ++i)
      if (M.checkpoints[i] < 0 || M.checkpoints[i] > M.horizon || (i && M.checkpoints[i] <= M.checkpoints[i - 1]))
        fail("montecarlo.checkpoints", "must increase within [0, horizon]");
    m.finish();
  }
  if (o.has("output")) {
    Obj out(o.raw("output"), "output");
    c.output_dir = out.get<std::string>("dir", "");
    out.finish();
  }
  o.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, kModule, "cannot open config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, kModule, "'" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["description"] = c.description;
  if (needs_angle(c.environment.kind)) j["angle"] = angle_json(c.angle);
  j["environment"] = environment_json(c.environment);
  Json x;
  if (c.x.value) x["value"] = *c.x.value;
  x["count"] = c.x.count;
  x["seed"] = c.x.seed;
  j["x"] = x;
  const auto& B = c.budget;
  j["budget"] = {{"dispersion_horizon", B.dispersion_horizon},
                 {"series_terms", B.series_terms},
                 {"grid_ratio", B.grid.ratio},
                 {"exact_terms", B.grid.exact_terms},
                 {"unit_prefactor", B.dispersion.unit_prefactor}};
  const auto& T = B.thresholds;
  j["thresholds"] = {{"recurrent_below", T.recurrent_below},
                     {"transient_above", T.transient_above},
                     {"tie_decades", T.tie_decades},
                     {"flat_ratio", T.flat_ratio},
                     {"decay_ratio", T.decay_ratio}};
  j["measure"] = {{"enabled", c.measure.enabled}, {"horizon", c.measure.horizon}, {"test_modes", c.measure.test_modes}};
  const auto& M = c.montecarlo;
  j["montecarlo"] = {{"enabled", M.enabled}, {"horizon", M.horizon}, {"seeds", M.seeds}, {"seed", M.seed},
                     {"checkpoints", M.checkpoints}, {"box", M.box}, {"level", M.level}};
  j["output"] = {{"dir", c.output_dir}};
  return j;
}

std::shared_ptr<const ContinuedFraction> build_angle(const AngleSpec& a) {
  switch (a.kind) {
    case AngleSpec::Kind::Decimal:
      return std::make_shared<ContinuedFraction>(ContinuedFraction::expand(a.theta, a.depth));
    case AngleSpec::Kind::Quotients:
      return std::make_shared<ContinuedFraction>(ContinuedFraction::from_quotients(a.quotients, a.depth));
    case AngleSpec::Kind::Family:
      return std::make_shared<ContinuedFraction>(ContinuedFraction::from_family(a.family, a.depth));
  }
  return nullptr;
}

std::vector<double> Model::base_points() const {
  if (!quasi_periodic()) return {0.0};
  if (config.x.value) return {*config.x.value};
  std::vector<double> xs;
  Philox4x32 rng(config.x.seed, 0);
  const int n = config.x.count;
  for (int i = 0; i < n; ++i) xs.push_back((i + rng.uniform()) / n);
  return xs;
}

std::shared_ptr<Environment> Model::environment(double x) const {
  const auto& e = config.environment;
  switch (e.kind) {
    case EnvironmentSpec::Kind::VerticallyFlat:
      return Environment::vertically_flat(f, cf, x, e.gamma0, e.eta);
    case EnvironmentSpec::Kind::General:
      return Environment::general(f, g, cf, x, e.gamma0, e.eta);
    case EnvironmentSpec::Kind::Ramp: {
      const double a = (1.0 - e.gamma0) / 2.0, gm = e.gamma0;
      return Environment::explicit_rule(
          [a, gm](std::int64_t n) { return StratumLaw::make(a, a, gm, {{n >= 1 ? 1 : -1, 1.0}}); }, e.eta, true,
          "ramp");
    }
    case EnvironmentSpec::Kind::Periodic: {
      std::vector<StratumLaw> laws;
      std::vector<ExactStratum> exact;
      for (std::size_t i = 0; i < e.period.size(); ++i) {
        const auto& pe = e.period[i];
        const std::string path = "environment.period[" + std::to_string(i) + "]";
        ExactStratum s{parse_rational(pe.alpha, path + ".alpha"), parse_rational(pe.beta, path + ".beta"),
                       parse_rational(pe.gamma, path + ".gamma"), {}};
        Pmf mu;
        for (const auto& [r, p] : pe.mu) {
          s.mu.emplace_back(r, parse_rational(p, path + ".mu"));
          mu.emplace_back(r, static_cast<double>(s.mu.back().second));
        }
        if (s.alpha + s.beta + s.gamma != 1) fail(path, "alpha + beta + gamma must equal 1 exactly");
        BigRational total = 0;
        for (const auto& [r, p] : s.mu) total += p;
        if (total != 1) fail(path + ".mu", "probabilities must sum to 1 exactly");
        laws.push_back(StratumLaw::make(static_cast<double>(s.alpha), static_cast<double>(s.beta),
                                        static_cast<double>(s.gamma), mu));
        exact.push_back(std::move(s));
      }
      return Environment::periodic(std::move(laws), e.eta, std::move(exact));
    }
  }
  return nullptr;
}

Model build_model(const ExperimentConfig& c) {
  Model m;
  m.config = c;
  if (needs_angle(c.environment.kind)) {
    m.cf = build_angle(c.angle);
    auto f = std::make_shared<PiecewiseBV>(build_function(c.environment.f, m.cf.get(), nullptr, "environment.f"));
    m.f = f;
    if (c.environment.kind == EnvironmentSpec::Kind::General)
      m.g = std::make_shared<PiecewiseBV>(build_function(c.environment.g, m.cf.get(), f.get(), "environment.g"));
  }
  // Fail early on unrealizable laws.
  (void)m.environment(m.base_points().front());
  return m;
}

}  // namespace stratwalk
