#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smpc/smpc_controllers.hpp"

namespace smpc {

struct ControllerSpec {
  enum class Kind { Ms, Is };
  Kind kind = Kind::Ms;
  Strategy strategy = Strategy::A;

  static ControllerSpec ms(Strategy s) { return {Kind::Ms, s}; }
  static ControllerSpec is() { return {Kind::Is, Strategy::A}; }
  std::string name() const;
};

/// splitmix64 finaliser applied to master + golden-ratio increment * (index + 1).
std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index);

/// count samples L xi with L L^T = Gamma_w and xi standard normal
/// (std::mt19937_64 + std::normal_distribution).
std::vector<Vec> gaussian_noise(const SymMatrix& gamma_w, std::uint64_t seed, int count);

struct StepRecord {
  Vec x, u, w;
  double gamma_x = 1.0, gamma_u = 1.0, delta_r = 0.0;
  double rbar_x = 0.0, rbar_u = 0.0;
  double tracking_cost = 0.0, objective = 0.0;
  int solver_iterations = 0;
  bool basic_feasible = false;
  bool in_Ex = false, in_Eu = false, in_X = false, in_U = false;
  std::optional<IsMode> mode;
  std::string error;  // empty unless the controller failed and the local gain was applied
};

/// Steps k = 0..T. The controller is also evaluated at x_T so that the
/// input at the final time is available; w_T is zero.
struct TrajectoryRecord {
  std::vector<StepRecord> steps;
  double cost = 0.0;  // sum over k < T of |x_k|_Q^2 + |u_k|_R^2
  bool valid = true;
  std::string invalid_reason;
  std::optional<ControllerStep> first_step;  // full diagnostics at k = 0
};

struct RolloutOptions {
  /// Record controller failures and apply u = K x instead of rethrowing.
  bool continue_on_error = false;
  SolverOptions solver;
};

TrajectoryRecord rollout(const DesignParams& d, const ControllerSpec& c, const Vec& x0, int T,
                         std::uint64_t seed, const RolloutOptions& opts = {});

struct McSummary {
  int n_sim = 0;
  int n_valid = 0;
  std::uint64_t seed = 0;
  // index k = 0..T
  std::vector<double> f_x, f_u;  // ellipsoid membership
  std::vector<double> f_X, f_U;  // polytope membership
  std::vector<double> costs;     // one per valid trajectory, ordered by index
  double mean_cost = 0.0;
};

/// Runs N_sim independent rollouts with seeds trajectory_seed(seed, i) on
/// `threads` workers (0: hardware concurrency) and reduces in index order.
McSummary monte_carlo(const DesignParams& d, const ControllerSpec& c, const Vec& x0, int T, int n_sim,
                      std::uint64_t seed, unsigned threads = 0);

struct CompareResult {
  bool comparable = false;
  std::string reason;
  McSummary ms, is;
  double ratio = 0.0;  // mean MS cost / mean IS cost
};

/// MS (strategy s) against the dual-mode comparator on common random numbers.
CompareResult compare_ms_is(const DesignParams& d, const Vec& x0, int T, int n_sim, std::uint64_t seed,
                            Strategy s = Strategy::A, unsigned threads = 0);

struct Table1Row {
  int ell = 0;
  double p_x = 0.0, p_u = 0.0;
  double f_x = 0.0, f_u = 0.0;
};

struct Table1Column {
  Strategy strategy = Strategy::A;
  std::vector<Table1Row> rows;  // ell = 1..T
  McSummary summary;
};

/// Probability bounds from the k = 0 plan and frequencies at realised time k = ell.
Table1Column table1_column(const DesignParams& d, Strategy s, const Vec& x0, int T, int n_sim,
                           std::uint64_t seed, unsigned threads = 0);

}  // namespace smpc
