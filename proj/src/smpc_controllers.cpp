#include "smpc/smpc_controllers.hpp"

#include <algorithm>
#include <cmath>

namespace smpc {

Strategy parse_strategy(const std::string& s) {
  if (s == "A" || s == "a") return Strategy::A;
  if (s == "B" || s == "b") return Strategy::B;
  if (s == "C" || s == "c") return Strategy::C;
  throw Error(ErrorKind::InvalidArgument, "unknown strategy '" + s + "' (expected A, B or C)");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::A: return "A";
    case Strategy::B: return "B";
    case Strategy::C: return "C";
  }
  return "?";
}

std::string to_string(IsMode m) {
  switch (m) {
    case IsMode::ClosedLoop: return "closed_loop";
    case IsMode::OpenLoop: return "open_loop";
    case IsMode::Shifted: return "shifted";
  }
  return "?";
}

PlanLayout::PlanLayout(const DesignParams& d, bool with_radii)
    : n(d.n()), m(d.m()), N(d.horizon), relaxed(with_radii) {}

Plan extract_plan(const Vec& y, const Vec& z0, const PlanLayout& L) {
  Plan p;
  p.z.push_back(z0);
  for (int l = 1; l <= L.N; ++l) p.z.push_back(y.segment(L.z(l), L.n));
  for (int l = 0; l < L.N; ++l) p.v.push_back(y.segment(L.v(l), L.m));
  return p;
}

Vec pack_plan(const Plan& plan, const PlanLayout& L) {
  Vec y = Vec::Zero(L.size());
  for (int l = 1; l <= L.N; ++l) y.segment(L.z(l), L.n) = plan.z[l];
  for (int l = 0; l < L.N; ++l) y.segment(L.v(l), L.m) = plan.v[l];
  return y;
}

namespace {

void check_inputs(const Vec& x, const DesignParams& d) {
  if (x.size() != d.n()) throw Error(ErrorKind::InvalidArgument, "state has wrong dimension");
  if (!x.allFinite()) throw Error(ErrorKind::InvalidArgument, "state is not finite");
  if (d.horizon < 1) throw Error(ErrorKind::DesignInvalid, "horizon must be at least 1");
  if (!(d.rho <= d.r_x && d.rho <= d.r_u)) throw Error(ErrorKind::DesignInvalid, "rho exceeds r_x or r_u");
}

// ||F y[at : at + F.cols()]|| <= y[radius] + offset (radius < 0: constant bound).
SocConstraint ball(const PlanLayout& L, Eigen::Index at, const Mat& F, Eigen::Index radius, double offset) {
  SocConstraint c;
  c.c = Vec::Zero(L.size());
  if (radius >= 0) c.c(radius) = 1.0;
  c.d = offset;
  c.F = Mat::Zero(F.rows(), L.size());
  c.F.block(0, at, F.rows(), F.cols()) = F;
  c.g = Vec::Zero(F.rows());
  return c;
}

void add_dynamics(ConicProgram& prog, const PlanLayout& L, const DesignParams& d, const Vec& x) {
  const Vec ax = d.A * x;
  for (int l = 0; l < L.N; ++l) {
    for (Eigen::Index i = 0; i < L.n; ++i) {
      Vec row = Vec::Zero(L.size());
      row(L.z(l + 1) + i) = 1.0;
      row.segment(L.v(l), L.m) = -d.B.row(i).transpose();
      double rhs = 0.0;
      if (l == 0) {
        rhs = ax(i);
      } else {
        row.segment(L.z(l), L.n) -= d.A.row(i).transpose();
      }
      prog.add_equality(row, rhs);
    }
  }
}

void add_tracking(ConicProgram& prog, const PlanLayout& L, const DesignParams& d, const Vec& x) {
  for (int l = 1; l < L.N; ++l) prog.P.block(L.z(l), L.z(l), L.n, L.n) = 2.0 * d.Q.mat();
  prog.P.block(L.z(L.N), L.z(L.N), L.n, L.n) = 2.0 * d.terminal_weight_matrix();
  for (int l = 0; l < L.N; ++l) prog.P.block(L.v(l), L.v(l), L.m, L.m) = 2.0 * d.R.mat();
  prog.offset = x.dot(d.Q.mat() * x);
}

void add_first_input(ConicProgram& prog, const PlanLayout& L, const DesignParams& d, Strategy s) {
  if (s == Strategy::A) return;
  const Polytope& U = d.input_set;
  for (Eigen::Index i = 0; i < U.H.rows(); ++i) {
    Vec row = Vec::Zero(L.size());
    row.segment(L.v(0), L.m) = U.H.row(i).transpose();
    if (s == Strategy::C && L.relaxed) {
      row(L.ru()) = -U.h(i) / d.r_u;
      prog.add_linear(row, 0.0);
    } else {
      prog.add_linear(row, U.h(i));
    }
  }
}

// Ellipsoidal tube; radii are the variables rbar when the layout is relaxed.
ConicProgram build_tube_program(const Vec& x, const DesignParams& d, Strategy s, bool relaxed) {
  check_inputs(x, d);
  const PlanLayout L(d, relaxed);
  ConicProgram prog(L.size());
  add_dynamics(prog, L, d, x);
  const Eigen::Index irx = relaxed ? L.rx() : -1;
  const Eigen::Index iru = relaxed ? L.ru() : -1;
  const double bx = relaxed ? 0.0 : d.r_x;
  const double bu = relaxed ? 0.0 : d.r_u;
  for (int l = 1; l < L.N; ++l) {
    const double pr = prs_radius(d.rho, d.lambda, l);
    prog.add_soc(ball(L, L.z(l), d.F_x, irx, bx - pr));
    prog.add_soc(ball(L, L.v(l), d.F_u, iru, bu - pr));
  }
  const double prN = prs_radius(d.rho, d.lambda, L.N);
  prog.add_soc(ball(L, L.z(L.N), d.F_x, irx, bx - prN));
  prog.add_soc(ball(L, L.z(L.N), d.F_x, iru, bu - prN));
  if (relaxed) {
    auto unit = [&](Eigen::Index i, double a) {
      Vec r = Vec::Zero(L.size());
      r(i) = a;
      return r;
    };
    prog.add_linear(unit(L.rx(), -1.0), -d.r_x);
    prog.add_linear(unit(L.ru(), -1.0), -d.r_u);
    Vec r = unit(L.rx(), 1.0);
    r(L.t()) = -1.0;
    prog.add_linear(r, d.r_x);
    r = unit(L.ru(), 1.0);
    r(L.t()) = -1.0;
    prog.add_linear(r, d.r_u);
    prog.add_linear(unit(L.t(), -1.0), 0.0);
  }
  add_first_input(prog, L, d, s);
  return prog;
}

}  // namespace

ConicProgram build_basic(const Vec& x_init, const DesignParams& d, Strategy s) {
  ConicProgram prog = build_tube_program(x_init, d, s, false);
  add_tracking(prog, PlanLayout(d, false), d, x_init);
  return prog;
}

ConicProgram build_backup(const Vec& x_k, const DesignParams& d, Strategy s) {
  ConicProgram prog = build_tube_program(x_k, d, s, true);
  prog.q(PlanLayout(d, true).t()) = 1.0;
  return prog;
}

ConicProgram build_ms(const Vec& x_k, const DesignParams& d, Strategy s) {
  if (!(d.mu > 0)) throw Error(ErrorKind::DesignInvalid, "penalty weight mu must be positive");
  ConicProgram prog = build_tube_program(x_k, d, s, true);
  const PlanLayout L(d, true);
  add_tracking(prog, L, d, x_k);
  prog.q(L.t()) = d.mu;
  return prog;
}

ConicProgram build_is(const Vec& z_init, const DesignParams& d) {
  check_inputs(z_init, d);
  if (!(d.r_N > d.rho)) throw Error(ErrorKind::DesignInvalid, "terminal radius r_N does not exceed rho");
  const PlanLayout L(d, false);
  ConicProgram prog(L.size());
  add_dynamics(prog, L, d, z_init);
  add_tracking(prog, L, d, z_init);
  const Polytope& X = d.state_set;
  const Polytope& U = d.input_set;
  Vec sx(X.H.rows()), su(U.H.rows());
  for (Eigen::Index i = 0; i < X.H.rows(); ++i) sx(i) = std::sqrt(X.H.row(i).dot(d.W_x.mat() * X.H.row(i).transpose()));
  for (Eigen::Index i = 0; i < U.H.rows(); ++i) su(i) = std::sqrt(U.H.row(i).dot(d.W_u.mat() * U.H.row(i).transpose()));
  for (int l = 0; l < L.N; ++l) {
    const double pr = prs_radius(d.rho, d.lambda, l);
    if (l >= 1) {
      for (Eigen::Index i = 0; i < X.H.rows(); ++i) {
        Vec row = Vec::Zero(L.size());
        row.segment(L.z(l), L.n) = X.H.row(i).transpose();
        prog.add_linear(row, X.h(i) - pr * sx(i));
      }
    }
    for (Eigen::Index i = 0; i < U.H.rows(); ++i) {
      Vec row = Vec::Zero(L.size());
      row.segment(L.v(l), L.m) = U.H.row(i).transpose();
      prog.add_linear(row, U.h(i) - pr * su(i));
    }
  }
  prog.add_soc(ball(L, L.z(L.N), d.F_x, -1, d.r_N - d.rho));
  return prog;
}

TightRadii tight_radii(const Plan& plan, const DesignParams& d, Strategy s) {
  const int N = d.horizon;
  TightRadii r{d.r_x, d.r_u};
  for (int l = 1; l < N; ++l) {
    const double pr = prs_radius(d.rho, d.lambda, l);
    r.rbar_x = std::max(r.rbar_x, (d.F_x * plan.z[l]).norm() + pr);
    r.rbar_u = std::max(r.rbar_u, (d.F_u * plan.v[l]).norm() + pr);
  }
  const double tail = (d.F_x * plan.z[N]).norm() + prs_radius(d.rho, d.lambda, N);
  r.rbar_x = std::max(r.rbar_x, tail);
  r.rbar_u = std::max(r.rbar_u, tail);
  if (s == Strategy::C) {
    const Polytope& U = d.input_set;
    const Vec hv = U.H * plan.v[0];
    for (Eigen::Index i = 0; i < U.H.rows(); ++i) r.rbar_u = std::max(r.rbar_u, d.r_u * hv(i) / U.h(i));
  }
  return r;
}

double tracking_cost(const Plan& plan, const DesignParams& d) {
  double c = 0.0;
  const int N = d.horizon;
  for (int l = 0; l < N; ++l) c += plan.z[l].dot(d.Q.mat() * plan.z[l]) + plan.v[l].dot(d.R.mat() * plan.v[l]);
  return c + plan.z[N].dot(d.terminal_weight_matrix() * plan.z[N]);
}

ControllerStep step_ms(const Vec& x_k, const DesignParams& d, Strategy s, const SolverOptions& opts) {
  const ConicProgram prog = build_ms(x_k, d, s);
  const ConicSolution sol = solve(prog, opts);
  if (sol.status != SolveStatus::Optimal)
    throw Error(ErrorKind::SolverFailure, "relaxed program returned " + to_string(sol.status));
  const PlanLayout L(d, true);
  ControllerStep st;
  st.plan = extract_plan(sol.y, x_k, L);
  st.u = st.plan.v[0];
  const TightRadii r = tight_radii(st.plan, d, s);
  st.rbar_x = r.rbar_x;
  st.rbar_u = r.rbar_u;
  st.gamma_x = r.rbar_x / d.r_x;
  st.gamma_u = r.rbar_u / d.r_u;
  st.delta_r = std::max({r.rbar_x - d.r_x, r.rbar_u - d.r_u, 0.0});
  st.tracking_cost = tracking_cost(st.plan, d);
  st.objective = sol.objective;
  st.basic_feasible = st.delta_r <= 1e-6;
  st.posterior = posterior_bounds(st.plan.z, st.plan.v, d);
  st.solver_iterations = sol.iterations;
  return st;
}

namespace {

Plan shifted(const Plan& prev, const DesignParams& d) {
  Plan p;
  const int N = d.horizon;
  for (int l = 1; l <= N; ++l) p.z.push_back(prev.z[l]);
  for (int l = 1; l < N; ++l) p.v.push_back(prev.v[l]);
  p.v.push_back(d.K * prev.z[N]);
  p.z.push_back(d.A * prev.z[N] + d.B * p.v.back());
  return p;
}

}  // namespace

std::pair<ControllerStep, IsControllerState> step_is(const Vec& x_k, const IsControllerState& state,
                                                     const DesignParams& d, const SolverOptions& opts) {
  const PlanLayout L(d, false);
  IsControllerState next = state;
  const bool closed = feasibility_probe(build_is(x_k, d), opts).verdict == Feasibility::Feasible;
  Vec z0;
  if (closed) {
    next.mode = IsMode::ClosedLoop;
    z0 = x_k;
  } else {
    if (!state.started || !state.z1_prev)
      throw Error(ErrorKind::InfeasibleAtStart, "comparator program is infeasible at the initial state");
    next.mode = IsMode::OpenLoop;
    z0 = *state.z1_prev;
  }

  ControllerStep st;
  ConicSolution sol = solve(build_is(z0, d), opts);
  if (sol.status != SolveStatus::Optimal && closed && state.started && state.z1_prev) {
    // probe accepted a state on the edge of the feasible region
    next.mode = IsMode::OpenLoop;
    z0 = *state.z1_prev;
    sol = solve(build_is(z0, d), opts);
  }
  if (sol.status == SolveStatus::Optimal) {
    st.plan = extract_plan(sol.y, z0, L);
    st.objective = sol.objective;
    st.solver_iterations = sol.iterations;
  } else if (next.mode == IsMode::OpenLoop && state.plan_prev) {
    next.mode = IsMode::Shifted;
    st.plan = shifted(*state.plan_prev, d);
    st.objective = tracking_cost(st.plan, d);
  } else {
    throw Error(ErrorKind::SolverFailure, "comparator program returned " + to_string(sol.status));
  }
  st.u = st.plan.v[0] + d.K * (x_k - z0);
  st.rbar_x = d.r_x;
  st.rbar_u = d.r_u;
  st.tracking_cost = tracking_cost(st.plan, d);
  st.basic_feasible = next.mode == IsMode::ClosedLoop;
  st.posterior = posterior_bounds(st.plan.z, st.plan.v, d);
  st.is_mode = next.mode;
  next.z1_prev = st.plan.z[1];
  next.plan_prev = st.plan;
  next.started = true;
  return {st, next};
}

}  // namespace smpc
