#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "smpc/matrix_kernel.hpp"

namespace smpc {

/// c^T y + d >= ||F y + g||_2
struct SocConstraint {
  Vec c;
  double d = 0.0;
  Mat F;
  Vec g;
};

/// minimize 0.5 y^T P y + q^T y + offset
/// subject to A_eq y = b_eq, G_lin y <= h_lin and the second-order cone rows.
struct ConicProgram {
  Mat P;
  Vec q;
  double offset = 0.0;
  Mat A_eq;
  Vec b_eq;
  Mat G_lin;
  Vec h_lin;
  std::vector<SocConstraint> soc;

  explicit ConicProgram(Eigen::Index num_vars = 0);

  Eigen::Index num_vars() const noexcept { return q.size(); }
  void add_equality(const Vec& a, double b);
  void add_linear(const Vec& g, double h);
  void add_soc(SocConstraint c);
  /// Throws InvalidArgument on inconsistent shapes or an indefinite P.
  void validate() const;
  double objective(const Vec& y) const { return 0.5 * y.dot(P * y) + q.dot(y) + offset; }
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIter };
std::string to_string(SolveStatus s);

/// For an infeasible program: z in the dual cone and nu with
/// G^T z + A^T nu ~ 0 and h^T z + b^T nu = -1.
struct FarkasCertificate {
  Vec z_lin;
  std::vector<Vec> z_soc;  // per cone, ordered (t, u) as (c^T y + d, F y + g)
  Vec nu;
  double residual = 0.0;   // ||G^T z + A^T nu||
};

struct ConicSolution {
  SolveStatus status = SolveStatus::MaxIter;
  Vec y;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  Vec nu;                  // equality multipliers
  Vec z_lin;               // inequality multipliers
  std::vector<Vec> z_soc;  // cone multipliers
  FarkasCertificate certificate;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 200;
};

ConicSolution solve(const ConicProgram& prog, const SolverOptions& opts = {});

enum class Feasibility { Feasible, Infeasible };

struct ProbeResult {
  Feasibility verdict = Feasibility::Infeasible;
  double slack = 0.0;  // optimal phase-I slack; feasible iff <= 1e-6
};

/// Minimizes a scalar slack added to every cone offset (bounded below by -1).
ProbeResult feasibility_probe(const ConicProgram& prog, const SolverOptions& opts = {});

/// Largest violation of any equality, inequality or cone row at y (0 when feasible).
double constraint_violation(const ConicProgram& prog, const Vec& y);

/// Plain-text dump: a header line `conic_program n=<vars> eq=<rows> lin=<rows> soc=<blocks>`
/// followed by sections P, q, offset, A_eq, b_eq, G_lin, h_lin and one
/// `soc <k> dim=<m>` section per cone listing c, d, F, g. Matrices are written
/// row by row with 17 significant digits.
void write_program_text(std::ostream& os, const ConicProgram& prog);

}  // namespace smpc
