#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "smpc/sim_harness.hpp"

namespace smpc {

struct ExperimentConfig {
  ControllerSpec controller;
  Vec x0;
  int T = 10;
  int n_sim = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct OutputConfig {
  std::string directory = "out";
  bool svg = true;
};

struct RunConfig {
  DesignConfig design;
  ExperimentConfig experiment;
  OutputConfig output;
};

/// JSON document with blocks system, constraints, design, experiment, output
/// (see README). Throws ConfigError on schema or dimension problems.
RunConfig parse_config(const std::string& text);
/// Throws IoError when the file cannot be read.
RunConfig load_config(const std::string& path);
/// Re-emits a configuration that parses back to the same values.
std::string emit_config(const RunConfig& cfg);

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec);
void write_diagnostics_csv(std::ostream& os, const TrajectoryRecord& rec);
void write_summary_csv(std::ostream& os, const McSummary& m);
void write_table1_csv(std::ostream& os, const std::vector<Table1Column>& cols);
void write_costs_csv(std::ostream& os, const std::vector<std::pair<std::string, const McSummary*>>& runs);
/// State path (first two coordinates) and the tube boundaries of the k = 0 plan.
void write_svg(std::ostream& os, const DesignParams& d, const std::vector<const TrajectoryRecord*>& recs);

/// Writes `content` to `path`, creating parent directories. Throws IoError.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace smpc
