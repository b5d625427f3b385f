#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smpc/conic_solver.hpp"
#include "smpc/offline_design.hpp"
#include "smpc/prs_tightening.hpp"

namespace smpc {

/// Treatment of the first nominal input: A none, B hard bound v_0 in U,
/// C bound scaled with the relaxed input radius.
enum class Strategy { A, B, C };

Strategy parse_strategy(const std::string& s);
std::string to_string(Strategy s);

/// Index map of the decision vector (z_1..z_N, v_0..v_{N-1}[, rbar_x, rbar_u, t]).
struct PlanLayout {
  Eigen::Index n = 0, m = 0;
  int N = 0;
  bool relaxed = false;

  PlanLayout(const DesignParams& d, bool with_radii);
  Eigen::Index z(int l) const { return (l - 1) * n; }  // l = 1..N
  Eigen::Index v(int l) const { return N * n + l * m; }  // l = 0..N-1
  Eigen::Index rx() const { return N * (n + m); }
  Eigen::Index ru() const { return rx() + 1; }
  Eigen::Index t() const { return rx() + 2; }
  Eigen::Index size() const { return N * (n + m) + (relaxed ? 3 : 0); }
};

struct Plan {
  std::vector<Vec> z;  // z_0..z_N
  std::vector<Vec> v;  // v_0..v_{N-1}
};

Plan extract_plan(const Vec& y, const Vec& z0, const PlanLayout& layout);
Vec pack_plan(const Plan& plan, const PlanLayout& layout);

/// Fixed radii r_x, r_u. Strategies B and C both reduce to the hard bound on
/// v_0 when the input radius is not relaxed.
ConicProgram build_basic(const Vec& x_init, const DesignParams& d, Strategy s = Strategy::B);

/// minimize max{rbar_x - r_x, rbar_u - r_u, 0} over the relaxed constraints.
ConicProgram build_backup(const Vec& x_k, const DesignParams& d, Strategy s);

/// Tracking cost plus mu max{rbar_x - r_x, rbar_u - r_u, 0}.
ConicProgram build_ms(const Vec& x_k, const DesignParams& d, Strategy s);

/// Comparator with the polytopes tightened by the reachable sets,
/// v_0 in U and terminal set E_{W_x}(r_N - rho).
ConicProgram build_is(const Vec& z_init, const DesignParams& d);

/// Smallest radii for which a plan satisfies the relaxed constraints.
struct TightRadii {
  double rbar_x = 0.0;
  double rbar_u = 0.0;
};

TightRadii tight_radii(const Plan& plan, const DesignParams& d, Strategy s);

enum class IsMode { ClosedLoop, OpenLoop, Shifted };
std::string to_string(IsMode m);

struct ControllerStep {
  Vec u;
  Plan plan;
  double rbar_x = 0.0, rbar_u = 0.0;
  double gamma_x = 1.0, gamma_u = 1.0;
  double delta_r = 0.0;
  double tracking_cost = 0.0;
  double objective = 0.0;
  bool basic_feasible = false;
  PosteriorReport posterior;
  int solver_iterations = 0;
  std::optional<IsMode> is_mode;
};

ControllerStep step_ms(const Vec& x_k, const DesignParams& d, Strategy s, const SolverOptions& opts = {});

struct IsControllerState {
  std::optional<Vec> z1_prev;  // z_{1|k-1}
  std::optional<Plan> plan_prev;
  IsMode mode = IsMode::ClosedLoop;
  bool started = false;
};

/// Dual-mode step: measured-state initialisation when feasible, otherwise
/// z_0 = z_{1|k-1}. The applied input is v_0 + K (x_k - z_0). If even the
/// open-loop program fails numerically, the shifted previous plan is used.
std::pair<ControllerStep, IsControllerState> step_is(const Vec& x_k, const IsControllerState& state,
                                                     const DesignParams& d, const SolverOptions& opts = {});

/// Quadratic tracking part of the objective for a plan (including the z_0 term).
double tracking_cost(const Plan& plan, const DesignParams& d);

}  // namespace smpc
