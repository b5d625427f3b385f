#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "smpc/smpc_controllers.hpp"

using namespace smpc;
using fixtures::example_design;
using fixtures::vec2;

namespace {

const Vec kFar = vec2(-40, 40);
const Vec kNear = vec2(-30, 0);

struct Solved {
  ConicSolution sol;
  Plan plan;
};

Solved solve_plan(const ConicProgram& prog, const Vec& z0, bool relaxed) {
  Solved out{solve(prog), {}};
  if (out.sol.status == SolveStatus::Optimal) out.plan = extract_plan(out.sol.y, z0, PlanLayout(example_design(), relaxed));
  return out;
}

double backup_delta(const Vec& x, Strategy s) {
  const ConicSolution sol = solve(build_backup(x, example_design(), s));
  REQUIRE(sol.status == SolveStatus::Optimal);
  return sol.y(PlanLayout(example_design(), true).t());
}

Plan shift(const Plan& p, const DesignParams& d) {
  Plan out;
  const int N = d.horizon;
  for (int l = 1; l <= N; ++l) out.z.push_back(p.z[l]);
  for (int l = 1; l < N; ++l) out.v.push_back(p.v[l]);
  out.v.push_back(d.K * p.z[N]);
  out.z.push_back(d.A * p.z[N] + d.B * out.v.back());
  return out;
}

void check_step_invariants(const ControllerStep& st, const Vec& x) {
  CHECK(st.gamma_x >= 1.0 - 1e-9);
  CHECK(st.gamma_u >= 1.0 - 1e-9);
  CHECK(st.delta_r >= 0.0);
  if (st.basic_feasible) CHECK(st.delta_r <= 1e-6);
  CHECK((st.plan.z[0] - x).norm() == 0.0);
  CHECK((st.u - st.plan.v[0]).norm() == 0.0);
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(parse_strategy("A") == Strategy::A);
  CHECK(parse_strategy("c") == Strategy::C);
  CHECK(to_string(Strategy::B) == "B");
  CHECK_THROWS_AS(parse_strategy("D"), Error);
}

TEST_CASE("plan layout round trip") {
  const DesignParams& d = example_design();
  const PlanLayout L(d, true);
  CHECK(L.size() == d.horizon * 3 + 3);
  Vec y = Vec::LinSpaced(L.size(), 1.0, static_cast<double>(L.size()));
  const Plan p = extract_plan(y, kFar, L);
  REQUIRE(p.z.size() == 11);
  REQUIRE(p.v.size() == 10);
  CHECK(p.z[0] == kFar);
  Vec back = pack_plan(p, L);
  CHECK(back.head(L.rx()) == y.head(L.rx()));
}

TEST_CASE("basic problem at the origin") {
  const DesignParams& d = example_design();
  const Solved s = solve_plan(build_basic(Vec::Zero(2), d), Vec::Zero(2), false);
  REQUIRE(s.sol.status == SolveStatus::Optimal);
  CHECK(s.sol.y.norm() <= 1e-7);
  CHECK(std::abs(s.sol.objective) <= 1e-7);
}

TEST_CASE("basic problem feasibility frontier") {
  const DesignParams& d = example_design();
  CHECK(solve(build_basic(kNear, d)).status == SolveStatus::Optimal);
  CHECK(solve(build_basic(kFar, d)).status == SolveStatus::PrimalInfeasible);
  // Without any bound on the first input the far state remains feasible.
  CHECK(solve(build_basic(kFar, d, Strategy::A)).status == SolveStatus::Optimal);
}

TEST_CASE("basic problem rejects an invalid design") {
  DesignParams d = example_design();
  d.r_u = 0.5 * d.rho;
  try {
    build_basic(kNear, d);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DesignInvalid);
  }
}

TEST_CASE("backup problem at the origin") {
  const DesignParams& d = example_design();
  for (Strategy s : {Strategy::A, Strategy::B, Strategy::C}) {
    const ConicSolution sol = solve(build_backup(Vec::Zero(2), d, s));
    REQUIRE(sol.status == SolveStatus::Optimal);
    const PlanLayout L(d, true);
    CHECK(sol.y(L.t()) <= 1e-7);
  }
}

TEST_CASE("backup problem needs a relaxation at the far state without input bound") {
  CHECK(backup_delta(kFar, Strategy::A) > 1e-6);
}

TEST_CASE("backup problem needs a relaxation at the far state with bounded first input") {
  const DesignParams& d = example_design();
  const double delta = backup_delta(kFar, Strategy::B);
  CHECK(delta > 1e-3);
  const ControllerStep st = step_ms(kFar, d, Strategy::B);
  CHECK(st.rbar_x > d.r_x);
  CHECK(st.rbar_u > d.r_u);
  CHECK(backup_delta(kFar, Strategy::C) > 1e-3);
}

TEST_CASE("backup relaxation grows with the distance of the state") {
  for (Strategy s : {Strategy::A, Strategy::B, Strategy::C}) {
    CAPTURE(to_string(s));
    CHECK(backup_delta(10.0 * kFar, s) > backup_delta(kFar, s) + 1e-3);
  }
}

TEST_CASE("backup problem is feasible everywhere") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(-500, 500);
  for (int i = 0; i < 20; ++i) {
    const Vec x = vec2(ud(rng), ud(rng));
    for (Strategy s : {Strategy::A, Strategy::B, Strategy::C})
      CHECK(solve(build_backup(x, example_design(), s)).status == SolveStatus::Optimal);
  }
}

TEST_CASE("merged problem at the origin") {
  const DesignParams& d = example_design();
  for (Strategy s : {Strategy::A, Strategy::B, Strategy::C}) {
    const ControllerStep st = step_ms(Vec::Zero(2), d, s);
    CHECK(st.u.norm() <= 1e-7);
    CHECK(st.rbar_x == doctest::Approx(d.r_x));
    CHECK(st.rbar_u == doctest::Approx(d.r_u));
    CHECK(std::abs(st.tracking_cost) <= 1e-7);
    CHECK(st.basic_feasible);
  }
}

TEST_CASE("merged problem equals the basic problem where the latter is feasible") {
  const DesignParams& d = example_design();
  for (Strategy s : {Strategy::A, Strategy::B, Strategy::C}) {
    const ControllerStep st = step_ms(kNear, d, s);
    const Solved b = solve_plan(build_basic(kNear, d, s), kNear, false);
    REQUIRE(b.sol.status == SolveStatus::Optimal);
    CHECK(std::abs(st.u(0) - b.plan.v[0](0)) <= 1e-5);
    CHECK(st.delta_r <= 1e-6);
    CHECK(st.basic_feasible);
    CHECK(std::abs(st.tracking_cost - b.sol.objective) <= 1e-5 * (1 + std::abs(b.sol.objective)));
  }
}

TEST_CASE("merged problem recovers the backup relaxation where the basic problem is infeasible") {
  for (Strategy s : {Strategy::B, Strategy::C}) {
    const ControllerStep st = step_ms(kFar, example_design(), s);
    CHECK(std::abs(st.delta_r - backup_delta(kFar, s)) <= 1e-5);
    CHECK_FALSE(st.basic_feasible);
  }
}

TEST_CASE("first input at the far state depends on the strategy") {
  const DesignParams& d = example_design();
  const ControllerStep a = step_ms(kFar, d, Strategy::A);
  CHECK(std::abs(a.u(0)) > 10.0);
  const ControllerStep b = step_ms(kFar, d, Strategy::B);
  CHECK(std::abs(b.u(0)) <= 10.0 + 1e-7);
  const ControllerStep c = step_ms(kFar, d, Strategy::C);
  CHECK(c.gamma_u > 1.0);
  CHECK(std::abs(c.u(0)) <= c.gamma_u * 10.0 + 1e-7);
  CHECK(std::abs(c.u(0)) > 10.0);
  for (const auto* st : {&a, &b, &c}) check_step_invariants(*st, kFar);
}

TEST_CASE("strategy A at the far state violates the input bound without relaxing the radii") {
  // The first input is unconstrained under strategy A, so the ellipsoidal
  // tube from the far state is met with the design radii.
  const ControllerStep a = step_ms(kFar, example_design(), Strategy::A);
  CHECK(a.delta_r <= 1e-6);
  CHECK(a.gamma_x == doctest::Approx(1.0));
}

TEST_CASE("step invariants over random states") {
  const DesignParams& d = example_design();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ud(-60, 60);
  for (int i = 0; i < 20; ++i) {
    const Vec x = vec2(ud(rng), ud(rng));
    for (Strategy s : {Strategy::A, Strategy::B, Strategy::C}) {
      const ControllerStep st = step_ms(x, d, s);
      check_step_invariants(st, x);
      const Solved b = solve_plan(build_basic(x, d, s), x, false);
      CHECK(st.basic_feasible == (b.sol.status == SolveStatus::Optimal));
    }
  }
}

TEST_CASE("tight radii of a plan") {
  const DesignParams& d = example_design();
  const ControllerStep st = step_ms(kFar, d, Strategy::B);
  const TightRadii r = tight_radii(st.plan, d, Strategy::B);
  CHECK(r.rbar_x == doctest::Approx(st.rbar_x));
  // the plan with its own radii is feasible for the relaxed program
  const PlanLayout L(d, true);
  Vec y = pack_plan(st.plan, L);
  y(L.rx()) = r.rbar_x;
  y(L.ru()) = r.rbar_u;
  y(L.t()) = std::max({r.rbar_x - d.r_x, r.rbar_u - d.r_u, 0.0});
  CHECK(constraint_violation(build_ms(kFar, d, Strategy::B), y) <= 1e-9);
}

TEST_CASE("comparator at the near state matches the merged controller") {
  const DesignParams& d = example_design();
  const auto [st, state] = step_is(kNear, IsControllerState{}, d);
  REQUIRE(st.is_mode.has_value());
  CHECK(*st.is_mode == IsMode::ClosedLoop);
  CHECK(std::abs(st.u(0) - step_ms(kNear, d, Strategy::A).u(0)) <= 1e-5);
  CHECK(state.started);
  REQUIRE(state.z1_prev.has_value());
  CHECK((*state.z1_prev - st.plan.z[1]).norm() == 0.0);
}

TEST_CASE("comparator is infeasible at the far state") {
  const DesignParams& d = example_design();
  CHECK(feasibility_probe(build_is(kFar, d)).verdict == Feasibility::Infeasible);
  CHECK(feasibility_probe(build_is(Vec::Zero(2), d)).verdict == Feasibility::Feasible);
  try {
    step_is(kFar, IsControllerState{}, d);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InfeasibleAtStart);
  }
}

TEST_CASE("comparator switches to open loop after a large disturbance") {
  const DesignParams& d = example_design();
  const auto [first, state] = step_is(kNear, IsControllerState{}, d);
  const Vec kicked = vec2(-40, 40);
  const auto [second, next] = step_is(kicked, state, d);
  REQUIRE(second.is_mode.has_value());
  CHECK(*second.is_mode == IsMode::OpenLoop);
  CHECK((second.plan.z[0] - first.plan.z[1]).norm() == 0.0);
  CHECK((second.u - (second.plan.v[0] + d.K * (kicked - second.plan.z[0]))).norm() <= 1e-12);
  CHECK_FALSE(second.basic_feasible);
  CHECK(next.mode == IsMode::OpenLoop);
}

TEST_CASE("shifted plan is feasible for the next open-loop problem") {
  const DesignParams& d = example_design();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ud(-30, 30);
  int checked = 0;
  for (int i = 0; i < 30; ++i) {
    const Vec x = vec2(ud(rng), 0.5 * ud(rng));
    const Solved is = solve_plan(build_is(x, d), x, false);
    if (is.sol.status == SolveStatus::Optimal) {
      const Plan next = shift(is.plan, d);
      CHECK(constraint_violation(build_is(next.z[0], d), pack_plan(next, PlanLayout(d, false))) <= 1e-9);
      ++checked;
    }
    const Solved basic = solve_plan(build_basic(x, d), x, false);
    if (basic.sol.status == SolveStatus::Optimal) {
      const Plan next = shift(basic.plan, d);
      CHECK(constraint_violation(build_basic(next.z[0], d), pack_plan(next, PlanLayout(d, false))) <= 1e-9);
      ++checked;
    }
  }
  CHECK(checked >= 30);
}

TEST_CASE("tracking cost of a plan") {
  const DesignParams& d = example_design();
  const ControllerStep st = step_ms(kNear, d, Strategy::A);
  double manual = 0.0;
  for (int l = 0; l < d.horizon; ++l)
    manual += st.plan.z[l].dot(d.Q.mat() * st.plan.z[l]) + st.plan.v[l].dot(d.R.mat() * st.plan.v[l]);
  manual += st.plan.z[d.horizon].dot(d.terminal_weight_matrix() * st.plan.z[d.horizon]);
  CHECK(tracking_cost(st.plan, d) == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("posterior bounds from the first plan") {
  const ControllerStep st = step_ms(kFar, example_design(), Strategy::A);
  // state bound saturated at 1 everywhere, input bound 0.90 at the first step
  CHECK(st.posterior.state[1].probability == doctest::Approx(1.0).epsilon(0.03));
  CHECK(std::abs(st.posterior.input[1].probability - 0.90) <= 0.03);
  for (int l = 2; l <= 10; ++l) {
    CAPTURE(l);
    CHECK(st.posterior.state[l].probability >= 0.97);
    CHECK(st.posterior.input[l].probability >= 0.97);
  }
}
