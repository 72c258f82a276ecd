#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stratwalk/criterion.hpp"
#include "stratwalk/dynamics.hpp"
#include "stratwalk/environment.hpp"

namespace stratwalk {

using Json = nlohmann::ordered_json;

struct AngleSpec {
  enum class Kind { Decimal, Quotients, Family };
  Kind kind = Kind::Family;
  std::string theta;                  // Decimal
  std::vector<std::int64_t> quotients;  // Quotients
  QuotientFamily family;              // Family
  int depth = 40;
};

struct PeriodicEntry {
  std::string alpha, beta, gamma;                   // exact rationals "p/q" or decimals
  std::vector<std::pair<int, std::string>> mu;
};

struct EnvironmentSpec {
  enum class Kind { Periodic, VerticallyFlat, General, Ramp };
  Kind kind = Kind::VerticallyFlat;
  double gamma0 = 1.0 / 3.0;
  double eta = 0.05;
  Json f = 0.0;  // function specs, validated at parse time
  Json g = 0.0;
  std::vector<PeriodicEntry> period;
};

struct BaseSpec {
  std::optional<double> value;  // single base point
  int count = 16;               // otherwise sampled: (i + U_i) / count
  std::uint64_t seed = 1;
};

struct MeasureSpec {
  bool enabled = false;
  std::int64_t horizon = 1000000;
  int test_modes = 4;   // trig test set cos/sin k = 1..test_modes
};

struct MonteCarloSpec {
  bool enabled = false;
  std::int64_t horizon = 1000000;
  int seeds = 64;
  std::uint64_t seed = 1;
  std::vector<std::int64_t> checkpoints{100000, 400000};
  std::int64_t box = 5;
  double level = 0.99;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string description;
  AngleSpec angle;
  EnvironmentSpec environment;
  BaseSpec x;
  Budget budget;
  MeasureSpec measure;
  MonteCarloSpec montecarlo;
  std::string output_dir;
};

/// Parses and validates; InvalidConfig names the offending field.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);
/// Fully resolved form with every default spelled out.
Json to_json(const ExperimentConfig& c);

std::shared_ptr<const ContinuedFraction> build_angle(const AngleSpec& a);
/// Function spec grammar: a number, a primitive name, or an object with "type".
PiecewiseBV build_function(const Json& spec, const ContinuedFraction* cf, const PiecewiseBV* f = nullptr,
                           const std::string& field = "f");

/// Everything needed to instantiate the environment at any base point.
struct Model {
  ExperimentConfig config;
  std::shared_ptr<const ContinuedFraction> cf;  // null for non-QP kinds
  std::shared_ptr<const PiecewiseBV> f, g;
  bool quasi_periodic() const { return cf != nullptr; }
  /// Base points used for the classification: the fixed value or the jittered grid.
  std::vector<double> base_points() const;
  std::shared_ptr<Environment> environment(double x) const;
};

Model build_model(const ExperimentConfig& c);

}  // namespace stratwalk
