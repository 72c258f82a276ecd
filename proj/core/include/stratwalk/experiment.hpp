#pragma once

#include <map>
#include <string>

#include "stratwalk/config.hpp"
#include "stratwalk/montecarlo.hpp"

namespace stratwalk {

struct RunFlags {
  bool deterministic = false;  // omit timestamps and timings
  int threads = 1;
  bool criterion = true;
  bool measure = true;         // still gated by config.measure.enabled
  bool montecarlo = true;      // still gated by config.montecarlo.enabled
};

/// JSON report plus named CSV tables.
struct ReportBundle {
  Json report;
  std::map<std::string, std::string> tables;  // file name -> CSV text
  int exit_code = 0;
};

std::string artifact_version();

/// Sections of the pipeline, usable on their own by the CLI.
Json angle_section(const ContinuedFraction& cf, int depth);
Json environment_section(const Model& m, double x, std::int64_t window);
/// Criterion at every base point, with the verdict distribution.
Json criterion_section(const Model& m, const RunFlags& flags, std::map<std::string, std::string>* tables);
Json measure_section(const Model& m, std::map<std::string, std::string>* tables);
Json montecarlo_section(const Model& m, const RunFlags& flags, std::map<std::string, std::string>* tables);

/// validate -> dispersion -> criterion -> optional measure -> optional Monte Carlo.
ReportBundle run_experiment(const ExperimentConfig& config, const RunFlags& flags = {});

/// Writes report.json and the tables into dir (created if needed).
void write_bundle(const ReportBundle& b, const std::string& dir);

/// "seed,returns,last_return,max_abs_m,max_abs_n" rows.
std::string walk_stats_csv(const std::vector<WalkStats>& runs);

}  // namespace stratwalk
