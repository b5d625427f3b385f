#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "smpc/config_io.hpp"
#include "smpc/format.hpp"

namespace {

using namespace smpc;

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kSolver = 3;
constexpr int kIo = 4;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::SolverFailure:
    case ErrorKind::NumericalBreakdown:
    case ErrorKind::NoConvergence:
    case ErrorKind::InfeasibleAtStart:
      return kSolver;
    case ErrorKind::IoError:
      return kIo;
    default:
      return kValidation;
  }
}

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> strategy;
  std::optional<std::string> controller;
};

RunConfig load(const Overrides& o) {
  RunConfig cfg = load_config(o.config);
  if (o.seed) cfg.experiment.seed = *o.seed;
  if (o.out) cfg.output.directory = *o.out;
  if (o.strategy) cfg.experiment.controller.strategy = parse_strategy(*o.strategy);
  if (o.controller)
    cfg.experiment.controller.kind = *o.controller == "is" ? ControllerSpec::Kind::Is : ControllerSpec::Kind::Ms;
  return cfg;
}

std::string path_in(const RunConfig& cfg, const std::string& name) { return cfg.output.directory + "/" + name; }

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

int cmd_design(const RunConfig& cfg) {
  DesignResult res;
  try {
    res = build_design(cfg.design);
  } catch (const Error& e) {
    write_text_file(path_in(cfg, "validation.txt"), std::string(e.what()) + "\n");
    throw;
  }
  const std::string report = res.report.to_text();
  write_text_file(path_in(cfg, "validation.txt"), report);
  write_text_file(path_in(cfg, "design.txt"), design_dump(res.params));
  std::cout << report << design_dump(res.params);
  return res.report.all_passed() ? kOk : kValidation;
}

int cmd_simulate(const RunConfig& cfg) {
  const DesignParams d = build_design(cfg.design).params;
  RolloutOptions opts;
  opts.continue_on_error = true;
  const ExperimentConfig& ex = cfg.experiment;
  const TrajectoryRecord rec = rollout(d, ex.controller, ex.x0, ex.T, trajectory_seed(ex.seed, 0), opts);
  if (!rec.valid) {
    std::cerr << "error: " << rec.invalid_reason << "\n";
    return kSolver;
  }
  write_text_file(path_in(cfg, "trajectory.csv"), render([&](std::ostream& os) { write_trajectory_csv(os, rec); }));
  write_text_file(path_in(cfg, "diagnostics.csv"), render([&](std::ostream& os) { write_diagnostics_csv(os, rec); }));
  if (cfg.output.svg)
    write_text_file(path_in(cfg, "trajectory.svg"), render([&](std::ostream& os) { write_svg(os, d, {&rec}); }));
  int errors = 0;
  for (const auto& s : rec.steps) errors += !s.error.empty();
  std::cout << "controller " << ex.controller.name() << ", " << rec.steps.size() << " steps, cost "
            << fmt17(rec.cost) << ", controller errors " << errors << "\n";
  return kOk;
}

int cmd_montecarlo(const RunConfig& cfg) {
  const DesignParams d = build_design(cfg.design).params;
  const ExperimentConfig& ex = cfg.experiment;
  const McSummary m = monte_carlo(d, ex.controller, ex.x0, ex.T, ex.n_sim, ex.seed, ex.threads);
  write_text_file(path_in(cfg, "summary.csv"), render([&](std::ostream& os) { write_summary_csv(os, m); }));
  write_text_file(path_in(cfg, "costs.csv"),
                  render([&](std::ostream& os) { write_costs_csv(os, {{ex.controller.name(), &m}}); }));
  std::cout << "controller " << ex.controller.name() << ", valid " << m.n_valid << "/" << m.n_sim
            << ", mean cost " << fmt17(m.mean_cost) << "\n";
  return m.n_valid > 0 ? kOk : kSolver;
}

int cmd_compare(const RunConfig& cfg) {
  const DesignParams d = build_design(cfg.design).params;
  const ExperimentConfig& ex = cfg.experiment;
  const CompareResult r = compare_ms_is(d, ex.x0, ex.T, ex.n_sim, ex.seed, ex.controller.strategy, ex.threads);
  if (r.ms.n_sim == 0) {
    std::cerr << "error: " << r.reason << "\n";
    return kSolver;
  }
  const std::string ms_name = ControllerSpec::ms(ex.controller.strategy).name();
  write_text_file(path_in(cfg, "costs.csv"),
                  render([&](std::ostream& os) { write_costs_csv(os, {{ms_name, &r.ms}, {"is", &r.is}}); }));
  std::cout << ms_name << " mean cost " << fmt17(r.ms.mean_cost) << "\nis mean cost " << fmt17(r.is.mean_cost)
            << "\n";
  if (!r.comparable) {
    std::cout << "not comparable: " << r.reason << "\n";
    return kSolver;
  }
  std::cout << "ratio " << fmt17(r.ratio) << "\n";
  return kOk;
}

int cmd_table1(const RunConfig& cfg) {
  const DesignParams d = build_design(cfg.design).params;
  const ExperimentConfig& ex = cfg.experiment;
  std::vector<Table1Column> cols;
  for (Strategy s : {Strategy::A, Strategy::B, Strategy::C})
    cols.push_back(table1_column(d, s, ex.x0, ex.T, ex.n_sim, ex.seed, ex.threads));
  write_text_file(path_in(cfg, "table1.csv"), render([&](std::ostream& os) { write_table1_csv(os, cols); }));
  std::vector<std::pair<std::string, const McSummary*>> runs;
  for (const auto& c : cols) runs.emplace_back(ControllerSpec::ms(c.strategy).name(), &c.summary);
  write_text_file(path_in(cfg, "costs.csv"), render([&](std::ostream& os) { write_costs_csv(os, runs); }));
  std::cout << "ell is read as the realised time step k = ell from x0\n";
  write_table1_csv(std::cout, cols);
  for (const auto& [name, m] : runs) std::cout << name << " mean cost " << fmt17(m->mean_cost) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic MPC with ellipsoidal reachable-set tightening"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration file")->required();
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--strategy", o.strategy, "first-input strategy")->check(CLI::IsMember({"A", "B", "C"}));
    sub->add_option("--controller", o.controller, "controller")->check(CLI::IsMember({"ms", "is"}));
  };
  CLI::App* design = app.add_subcommand("design", "offline design and validation report");
  CLI::App* simulate = app.add_subcommand("simulate", "one closed-loop trajectory");
  CLI::App* mc = app.add_subcommand("montecarlo", "Monte-Carlo frequencies and cost samples");
  CLI::App* compare = app.add_subcommand("compare", "MS against IS mean cost on common noise");
  CLI::App* table1 = app.add_subcommand("table1", "probability bounds and frequencies for A, B and C");
  for (CLI::App* sub : {design, simulate, mc, compare, table1}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    const RunConfig cfg = load(o);
    if (*design) return cmd_design(cfg);
    if (*simulate) return cmd_simulate(cfg);
    if (*mc) return cmd_montecarlo(cfg);
    if (*compare) return cmd_compare(cfg);
    return cmd_table1(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
}
