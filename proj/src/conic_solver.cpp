#include "smpc/conic_solver.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

#include "smpc/format.hpp"

namespace smpc {

ConicProgram::ConicProgram(Eigen::Index num_vars)
    : P(Mat::Zero(num_vars, num_vars)),
      q(Vec::Zero(num_vars)),
      A_eq(0, num_vars),
      b_eq(0),
      G_lin(0, num_vars),
      h_lin(0) {}

void ConicProgram::add_equality(const Vec& a, double b) {
  if (a.size() != num_vars()) throw Error(ErrorKind::InvalidArgument, "equality row has wrong length");
  A_eq.conservativeResize(A_eq.rows() + 1, num_vars());
  A_eq.row(A_eq.rows() - 1) = a.transpose();
  b_eq.conservativeResize(b_eq.size() + 1);
  b_eq(b_eq.size() - 1) = b;
}

void ConicProgram::add_linear(const Vec& g, double h) {
  if (g.size() != num_vars()) throw Error(ErrorKind::InvalidArgument, "inequality row has wrong length");
  G_lin.conservativeResize(G_lin.rows() + 1, num_vars());
  G_lin.row(G_lin.rows() - 1) = g.transpose();
  h_lin.conservativeResize(h_lin.size() + 1);
  h_lin(h_lin.size() - 1) = h;
}

void ConicProgram::add_soc(SocConstraint c) {
  if (c.c.size() != num_vars() || c.F.cols() != num_vars() || c.F.rows() != c.g.size())
    throw Error(ErrorKind::InvalidArgument, "cone block has inconsistent shape");
  soc.push_back(std::move(c));
}

void ConicProgram::validate() const {
  const Eigen::Index n = num_vars();
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "program has no variables");
  if (P.rows() != n || P.cols() != n) throw Error(ErrorKind::InvalidArgument, "P has wrong shape");
  if (A_eq.cols() != n || A_eq.rows() != b_eq.size())
    throw Error(ErrorKind::InvalidArgument, "equality system has wrong shape");
  if (G_lin.cols() != n || G_lin.rows() != h_lin.size())
    throw Error(ErrorKind::InvalidArgument, "inequality system has wrong shape");
  for (const auto& c : soc)
    if (c.c.size() != n || c.F.cols() != n || c.F.rows() != c.g.size())
      throw Error(ErrorKind::InvalidArgument, "cone block has inconsistent shape");
  if (!P.allFinite() || !q.allFinite() || !A_eq.allFinite() || !b_eq.allFinite() || !G_lin.allFinite() ||
      !h_lin.allFinite())
    throw Error(ErrorKind::InvalidArgument, "program data is not finite");
  const double scale = std::max(1.0, P.norm());
  if ((P - P.transpose()).norm() > 1e-10 * scale) throw Error(ErrorKind::InvalidArgument, "P is not symmetric");
  if (min_eig_sym(P) < -1e-10 * scale) throw Error(ErrorKind::InvalidArgument, "P is not positive semidefinite");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SolveStatus::DualInfeasible: return "DualInfeasible";
    case SolveStatus::MaxIter: return "MaxIter";
  }
  return "Unknown";
}

namespace {

// Cone layout: `nl` nonnegative coordinates followed by second-order blocks.
struct Cones {
  Eigen::Index nl = 0;
  std::vector<Eigen::Index> q;

  Eigen::Index dim() const {
    Eigen::Index d = nl;
    for (auto k : q) d += k;
    return d;
  }
  double degree() const { return static_cast<double>(nl + static_cast<Eigen::Index>(q.size())); }
};

// Standard form: G y + s = h with s in the cone.
struct StdForm {
  Mat P;
  Vec q;
  Mat A;
  Vec b;
  Mat G;
  Vec h;
  Cones cones;
};

StdForm to_std(const ConicProgram& p) {
  StdForm f;
  f.P = 0.5 * (p.P + p.P.transpose());
  f.q = p.q;
  f.A = p.A_eq;
  f.b = p.b_eq;
  f.cones.nl = p.G_lin.rows();
  for (const auto& c : p.soc) f.cones.q.push_back(c.F.rows() + 1);
  const Eigen::Index m = f.cones.dim();
  const Eigen::Index n = p.num_vars();
  f.G.resize(m, n);
  f.h.resize(m);
  f.G.topRows(f.cones.nl) = p.G_lin;
  f.h.head(f.cones.nl) = p.h_lin;
  Eigen::Index off = f.cones.nl;
  for (const auto& c : p.soc) {
    f.G.row(off) = -c.c.transpose();
    f.h(off) = c.d;
    f.G.middleRows(off + 1, c.F.rows()) = -c.F;
    f.h.segment(off + 1, c.F.rows()) = c.g;
    off += c.F.rows() + 1;
  }
  return f;
}

template <class F>
void for_each_soc(const Cones& c, F&& fn) {
  Eigen::Index off = c.nl;
  for (std::size_t k = 0; k < c.q.size(); ++k) {
    fn(k, off, c.q[k]);
    off += c.q[k];
  }
}

Vec identity_e(const Cones& c) {
  Vec e = Vec::Zero(c.dim());
  e.head(c.nl).setOnes();
  for_each_soc(c, [&](std::size_t, Eigen::Index off, Eigen::Index) { e(off) = 1.0; });
  return e;
}

Vec jordan(const Cones& c, const Vec& u, const Vec& v) {
  Vec out(u.size());
  out.head(c.nl) = u.head(c.nl).cwiseProduct(v.head(c.nl));
  for_each_soc(c, [&](std::size_t, Eigen::Index off, Eigen::Index d) {
    out(off) = u.segment(off, d).dot(v.segment(off, d));
    out.segment(off + 1, d - 1) = u(off) * v.segment(off + 1, d - 1) + v(off) * u.segment(off + 1, d - 1);
  });
  return out;
}

// x with lam o x = d.
Vec jordan_solve(const Cones& c, const Vec& lam, const Vec& d) {
  Vec x(d.size());
  x.head(c.nl) = d.head(c.nl).cwiseQuotient(lam.head(c.nl));
  for_each_soc(c, [&](std::size_t, Eigen::Index off, Eigen::Index k) {
    const double l0 = lam(off);
    const auto l1 = lam.segment(off + 1, k - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double x0 = (l0 * d(off) - l1.dot(d.segment(off + 1, k - 1))) / det;
    x(off) = x0;
    x.segment(off + 1, k - 1) = (d.segment(off + 1, k - 1) - x0 * l1) / l0;
  });
  return x;
}

// Largest violation of membership: max over blocks of -lambda_min.
double max_violation(const Cones& c, const Vec& u) {
  double t = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < c.nl; ++i) t = std::max(t, -u(i));
  for_each_soc(c, [&](std::size_t, Eigen::Index off, Eigen::Index k) {
    t = std::max(t, u.segment(off + 1, k - 1).norm() - u(off));
  });
  return t;
}

// Largest alpha with u + alpha du in the cone (u interior). Infinity if unbounded.
double max_step(const Cones& c, const Vec& u, const Vec& du) {
  double amax = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < c.nl; ++i)
    if (du(i) < 0) amax = std::min(amax, -u(i) / du(i));
  for_each_soc(c, [&](std::size_t, Eigen::Index off, Eigen::Index k) {
    const double u0 = u(off), d0 = du(off);
    const auto u1 = u.segment(off + 1, k - 1);
    const auto d1 = du.segment(off + 1, k - 1);
    const double a = d0 * d0 - d1.squaredNorm();
    const double b = u0 * d0 - u1.dot(d1);
    const double cc = u0 * u0 - u1.squaredNorm();
    double lim = std::numeric_limits<double>::infinity();
    if (d0 < 0) lim = -u0 / d0;
    // roots of a t^2 + 2 b t + cc = 0
    if (std::abs(a) < 1e-300) {
      if (b < 0) lim = std::min(lim, -cc / (2.0 * b));
    } else {
      const double disc = b * b - a * cc;
      if (disc >= 0) {
        const double sq = std::sqrt(disc);
        // numerically stable pair of roots
        const double qv = -(b + (b >= 0 ? sq : -sq));
        const double r1 = qv / a;
        const double r2 = qv != 0.0 ? cc / qv : std::numeric_limits<double>::infinity();
        for (double r : {r1, r2})
          if (r > 0) lim = std::min(lim, r);
      }
    }
    amax = std::min(amax, lim);
  });
  return amax;
}

// Nesterov-Todd scaling W (symmetric) with W z = W^{-1} s = lambda.
struct Scaling {
  Vec d;                   // nonnegative part: sqrt(s / z)
  std::vector<Vec> w;      // per cone, w^T J w = 1
  std::vector<double> eta;
};

Scaling compute_scaling(const Cones& c, const Vec& s, const Vec& z) {
  Scaling sc;
  sc.d = (s.head(c.nl).cwiseQuotient(z.head(c.nl))).cwiseSqrt();
  for_each_soc(c, [&](std::size_t, Eigen::Index off, Eigen::Index k) {
    const Vec sb = s.segment(off, k);
    const Vec zb = z.segment(off, k);
    const double sn = std::sqrt(std::max(sb(0) * sb(0) - sb.tail(k - 1).squaredNorm(), 1e-300));
    const double zn = std::sqrt(std::max(zb(0) * zb(0) - zb.tail(k - 1).squaredNorm(), 1e-300));
    const Vec sbar = sb / sn;
    const Vec zbar = zb / zn;
    const double gamma = std::sqrt(std::max((1.0 + sbar.dot(zbar)) / 2.0, 1e-300));
    Vec w(k);
    w(0) = (sbar(0) + zbar(0)) / (2.0 * gamma);
    w.tail(k - 1) = (sbar.tail(k - 1) - zbar.tail(k - 1)) / (2.0 * gamma);
    sc.w.push_back(w);
    sc.eta.push_back(std::sqrt(sn / zn));
  });
  return sc;
}

// Dense block of W (inverse = false) or W^{-1} (inverse = true).
Mat scaling_matrix(const Cones& c, const Scaling& sc, bool inverse) {
  const Eigen::Index m = c.dim();
  Mat W = Mat::Zero(m, m);
  for (Eigen::Index i = 0; i < c.nl; ++i) W(i, i) = inverse ? 1.0 / sc.d(i) : sc.d(i);
  for_each_soc(c, [&](std::size_t j, Eigen::Index off, Eigen::Index k) {
    const Vec& w = sc.w[j];
    const double sign = inverse ? -1.0 : 1.0;
    const double f = inverse ? 1.0 / sc.eta[j] : sc.eta[j];
    Mat blk(k, k);
    blk(0, 0) = w(0);
    blk.block(0, 1, 1, k - 1) = sign * w.tail(k - 1).transpose();
    blk.block(1, 0, k - 1, 1) = sign * w.tail(k - 1);
    blk.block(1, 1, k - 1, k - 1) =
        Mat::Identity(k - 1, k - 1) + w.tail(k - 1) * w.tail(k - 1).transpose() / (1.0 + w(0));
    W.block(off, off, k, k) = f * blk;
  });
  return W;
}

enum class IpmStatus { Optimal, MaxIter, Diverged, Unbounded };

struct IpmResult {
  IpmStatus status = IpmStatus::MaxIter;
  Vec x, y, z, s;
  int iterations = 0;
  double pres = 0.0, dres = 0.0, gap = 0.0;
};

// [P A^T V^T; A 0 0; V 0 -I] with V = W^{-1} G (V = G during initialisation).
class KktSystem {
 public:
  KktSystem(const Mat& P, const Mat& A, const Mat& V) : n_(P.rows()), p_(A.rows()), m_(V.rows()) {
    const Eigen::Index dim = n_ + p_ + m_;
    exact_ = Mat::Zero(dim, dim);
    exact_.topLeftCorner(n_, n_) = P;
    exact_.block(0, n_, n_, p_) = A.transpose();
    exact_.block(n_, 0, p_, n_) = A;
    exact_.block(0, n_ + p_, n_, m_) = V.transpose();
    exact_.block(n_ + p_, 0, m_, n_) = V;
    exact_.bottomRightCorner(m_, m_).diagonal().setConstant(-1.0);
    lu_.compute(exact_);
    const double scale = std::max(1.0, exact_.cwiseAbs().maxCoeff());
    if (!(lu_.matrixLU().diagonal().cwiseAbs().minCoeff() > 1e-13 * scale)) {
      // rank-deficient data: static regularisation, corrected by refinement
      Mat reg = exact_;
      reg.topLeftCorner(n_, n_).diagonal().array() += 1e-10 * scale;
      reg.block(n_, n_, p_, p_).diagonal().array() -= 1e-10 * scale;
      lu_.compute(reg);
    }
  }

  Vec solve(const Vec& rhs) const {
    Vec sol = lu_.solve(rhs);
    for (int it = 0; it < 6; ++it) {
      const Vec r = rhs - exact_ * sol;
      if (r.norm() <= 1e-15 * std::max(1.0, rhs.norm())) break;
      sol += lu_.solve(r);
    }
    if (!sol.allFinite()) throw Error(ErrorKind::NumericalBreakdown, "KKT solve produced non-finite values");
    return sol;
  }

 private:
  Eigen::Index n_, p_, m_;
  Mat exact_;
  Eigen::PartialPivLU<Mat> lu_;
};

constexpr double kPolishFloor = 1e-15;
constexpr int kPolishSteps = 10;

IpmResult run_ipm(const StdForm& f, const SolverOptions& opts) {
  const Eigen::Index n = f.P.rows(), p = f.A.rows(), m = f.cones.dim();
  const Cones& cones = f.cones;
  const Vec e = identity_e(cones);
  const double nb = f.b.norm(), nh = f.h.norm(), nq = f.q.norm();

  IpmResult res;
  {
    // P x + A^T y + G^T z = -q, A x = b, G x - z = h
    KktSystem kkt(f.P, f.A, f.G);
    Vec rhs(n + p + m);
    rhs << -f.q, f.b, f.h;
    const Vec sol = kkt.solve(rhs);
    res.x = sol.head(n);
    res.y = sol.segment(n, p);
    res.z = sol.tail(m);
    res.s = -res.z;
    const double ts = max_violation(cones, res.s);
    const double tz = max_violation(cones, res.z);
    if (ts >= -1e-8 * std::max(1.0, res.s.norm())) res.s += (1.0 + std::max(ts, 0.0)) * e;
    if (tz >= -1e-8 * std::max(1.0, res.z.norm())) res.z += (1.0 + std::max(tz, 0.0)) * e;
  }

  Vec& x = res.x;
  Vec& y = res.y;
  Vec& z = res.z;
  Vec& s = res.s;
  // Once the tolerance is met a few extra steps tighten the iterate (the
  // residual contract alone leaves the argmin loose on weakly active cones).
  std::optional<IpmResult> met;
  int polish = 0;
  auto worst = [](const IpmResult& r) { return std::max({r.pres, r.dres, r.gap}); };
  auto finish = [&](IpmResult r) {
    if (met) return *met;
    return r;
  };
  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    res.iterations = iter;
    const Vec rx = f.P * x + f.q + f.A.transpose() * y + f.G.transpose() * z;
    const Vec ry = f.A * x - f.b;
    const Vec rz = f.G * x + s - f.h;
    const double gap = s.dot(z);
    const double pobj = 0.5 * x.dot(f.P * x) + f.q.dot(x);
    res.pres = std::max(ry.norm() / (1.0 + nb), rz.norm() / (1.0 + nh));
    res.dres = rx.norm() / (1.0 + nq);
    res.gap = gap / (1.0 + std::abs(pobj));
    if (res.pres <= opts.tol && res.dres <= opts.tol && res.gap <= opts.tol) {
      res.status = IpmStatus::Optimal;
      const bool stalled = met && worst(res) > 0.5 * worst(*met);
      if (!met || worst(res) < worst(*met)) met = res;
      if (stalled || worst(res) <= kPolishFloor || polish++ >= kPolishSteps) return *met;
    } else if (met) {
      return *met;
    }
    if (iter == opts.max_iter) break;
    if (z.norm() > 1e13 || y.norm() > 1e13) {
      res.status = IpmStatus::Diverged;
      return finish(res);
    }
    if (x.norm() > 1e13) {
      res.status = IpmStatus::Unbounded;
      return finish(res);
    }

    try {
    const Scaling sc = compute_scaling(cones, s, z);
    const Mat W = scaling_matrix(cones, sc, false);
    const Mat Winv = scaling_matrix(cones, sc, true);
    const Vec lam = W * z;
    const KktSystem kkt(f.P, f.A, Winv * f.G);
    const double mu = gap / cones.degree();

    struct Dir {
      Vec dx, dy, dz, ds;
    };
    auto newton = [&](const Vec& bs) {
      const Vec ct = jordan_solve(cones, lam, bs);
      Vec rhs(n + p + m);
      rhs << -rx, -ry, Winv * (-rz) - ct;
      const Vec sol = kkt.solve(rhs);
      Dir d;
      d.dx = sol.head(n);
      d.dy = sol.segment(n, p);
      d.dz = Winv * sol.tail(m);
      d.ds = -rz - f.G * d.dx;
      return d;
    };

    const Vec lamlam = jordan(cones, lam, lam);
    const Dir aff = newton(-lamlam);
    const double a_aff = std::min(1.0, std::min(max_step(cones, s, aff.ds), max_step(cones, z, aff.dz)));
    const double sigma = std::pow(1.0 - a_aff, 3);
    const Vec corr = jordan(cones, Winv * aff.ds, W * aff.dz);
    const Dir d = newton(-lamlam - corr + sigma * mu * e);
    const double amax = std::min(max_step(cones, s, d.ds), max_step(cones, z, d.dz));
    const double alpha = std::min(1.0, 0.99 * amax);
    if (!(alpha > 1e-14)) break;
    x += alpha * d.dx;
    y += alpha * d.dy;
    z += alpha * d.dz;
    s += alpha * d.ds;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NumericalBreakdown) throw;
      // loss of accuracy near an infeasible or unbounded limit
      res.status = IpmStatus::Diverged;
      return finish(res);
    }
  }
  res.status = IpmStatus::MaxIter;
  return finish(res);
}

// Equality-constrained QP without cones: one KKT solve.
IpmResult solve_unconstrained(const StdForm& f) {
  const Eigen::Index n = f.P.rows(), p = f.A.rows();
  KktSystem kkt(f.P, f.A, Mat(0, n));
  Vec rhs(n + p);
  rhs << -f.q, f.b;
  IpmResult r;
  const Vec sol = kkt.solve(rhs);
  r.x = sol.head(n);
  r.y = sol.tail(p);
  r.z = Vec(0);
  r.s = Vec(0);
  const Vec rx = f.P * r.x + f.q + f.A.transpose() * r.y;
  r.dres = rx.norm() / (1.0 + f.q.norm());
  r.pres = (f.A * r.x - f.b).norm() / (1.0 + f.b.norm());
  r.status = r.dres <= 1e-8 && r.pres <= 1e-8 ? IpmStatus::Optimal : IpmStatus::Unbounded;
  return r;
}

struct PhaseOne {
  IpmResult ipm;
  double slack = 0.0;
};

// minimize tau s.t. A y = b, G y - tau e + s = h, tau >= -1.
PhaseOne phase_one(const StdForm& f, const SolverOptions& opts) {
  const Eigen::Index n = f.P.rows();
  StdForm g;
  g.P = Mat::Zero(n + 1, n + 1);
  g.q = Vec::Zero(n + 1);
  g.q(n) = 1.0;
  g.A = Mat::Zero(f.A.rows(), n + 1);
  g.A.leftCols(n) = f.A;
  g.b = f.b;
  g.cones = f.cones;
  g.cones.nl += 1;
  const Eigen::Index m = g.cones.dim();
  g.G = Mat::Zero(m, n + 1);
  g.h = Vec::Zero(m);
  const Vec e = identity_e(f.cones);
  const Eigen::Index nl = f.cones.nl;
  g.G.topLeftCorner(nl, n) = f.G.topRows(nl);
  g.G.block(0, n, nl, 1) = -e.head(nl);
  g.h.head(nl) = f.h.head(nl);
  g.G(nl, n) = -1.0;
  g.h(nl) = 1.0;
  const Eigen::Index rest = f.cones.dim() - nl;
  g.G.bottomLeftCorner(rest, n) = f.G.bottomRows(rest);
  g.G.block(nl + 1, n, rest, 1) = -e.tail(rest);
  g.h.tail(rest) = f.h.tail(rest);
  PhaseOne out;
  out.ipm = run_ipm(g, opts);
  out.slack = out.ipm.x(n);
  return out;
}

void fill_duals(const Cones& c, const Vec& z, Vec& z_lin, std::vector<Vec>& z_soc) {
  z_lin = z.head(c.nl);
  z_soc.clear();
  for_each_soc(c, [&](std::size_t, Eigen::Index off, Eigen::Index k) { z_soc.push_back(z.segment(off, k)); });
}

constexpr double kFeasSlack = 1e-6;

}  // namespace

ConicSolution solve(const ConicProgram& prog, const SolverOptions& opts) {
  prog.validate();
  if (!(opts.tol >= 1e-10 && opts.tol <= 1e-4))
    throw Error(ErrorKind::InvalidArgument, "solver tolerance outside [1e-10, 1e-4]");
  const StdForm f = to_std(prog);
  ConicSolution sol;

  if (f.A.rows() > 0) {
    const Vec yls = f.A.completeOrthogonalDecomposition().solve(f.b);
    const Vec r = f.b - f.A * yls;
    if (r.norm() > 1e-9 * (1.0 + f.b.norm())) {
      sol.status = SolveStatus::PrimalInfeasible;
      sol.y = yls;
      sol.certificate.nu = -r / r.squaredNorm();
      fill_duals(f.cones, Vec::Zero(f.cones.dim()), sol.certificate.z_lin, sol.certificate.z_soc);
      sol.certificate.residual = (f.A.transpose() * sol.certificate.nu).norm();
      sol.objective = prog.objective(sol.y);
      return sol;
    }
  }

  const IpmResult r = f.cones.dim() == 0 ? solve_unconstrained(f) : run_ipm(f, opts);
  sol.y = r.x;
  sol.nu = r.y;
  fill_duals(f.cones, r.z, sol.z_lin, sol.z_soc);
  sol.iterations = r.iterations;
  sol.primal_residual = r.pres;
  sol.dual_residual = r.dres;
  sol.gap = r.gap;
  sol.objective = prog.objective(sol.y);
  if (r.status == IpmStatus::Optimal) {
    sol.status = SolveStatus::Optimal;
    return sol;
  }
  if (f.cones.dim() == 0) {
    sol.status = SolveStatus::DualInfeasible;
    return sol;
  }

  const PhaseOne ph = phase_one(f, opts);
  if (ph.ipm.status == IpmStatus::Optimal && ph.slack > kFeasSlack) {
    sol.status = SolveStatus::PrimalInfeasible;
    Vec zc(f.cones.dim());
    zc.head(f.cones.nl) = ph.ipm.z.head(f.cones.nl);
    zc.tail(f.cones.dim() - f.cones.nl) = ph.ipm.z.tail(f.cones.dim() - f.cones.nl);
    Vec nu = ph.ipm.y;
    const double val = f.h.dot(zc) + f.b.dot(nu);
    if (val < 0) {
      zc /= -val;
      nu /= -val;
    }
    fill_duals(f.cones, zc, sol.certificate.z_lin, sol.certificate.z_soc);
    sol.certificate.nu = nu;
    sol.certificate.residual = (f.G.transpose() * zc + f.A.transpose() * nu).norm();
    return sol;
  }
  sol.status = r.status == IpmStatus::Unbounded ? SolveStatus::DualInfeasible : SolveStatus::MaxIter;
  return sol;
}

ProbeResult feasibility_probe(const ConicProgram& prog, const SolverOptions& opts) {
  prog.validate();
  const StdForm f = to_std(prog);
  ProbeResult out;
  if (f.A.rows() > 0) {
    const Vec yls = f.A.completeOrthogonalDecomposition().solve(f.b);
    if ((f.b - f.A * yls).norm() > 1e-9 * (1.0 + f.b.norm())) {
      out.slack = std::numeric_limits<double>::infinity();
      return out;
    }
  }
  if (f.cones.dim() == 0) {
    out.verdict = Feasibility::Feasible;
    out.slack = -1.0;
    return out;
  }
  const PhaseOne ph = phase_one(f, opts);
  if (ph.ipm.status != IpmStatus::Optimal)
    throw Error(ErrorKind::SolverFailure, "phase-one program did not converge");
  out.slack = ph.slack;
  out.verdict = ph.slack <= kFeasSlack ? Feasibility::Feasible : Feasibility::Infeasible;
  return out;
}

double constraint_violation(const ConicProgram& prog, const Vec& y) {
  double v = 0.0;
  if (prog.A_eq.rows() > 0) v = std::max(v, (prog.A_eq * y - prog.b_eq).cwiseAbs().maxCoeff());
  if (prog.G_lin.rows() > 0) v = std::max(v, (prog.G_lin * y - prog.h_lin).maxCoeff());
  for (const auto& c : prog.soc) v = std::max(v, (c.F * y + c.g).norm() - c.c.dot(y) - c.d);
  return v;
}

namespace {

void write_matrix(std::ostream& os, const char* name, const Mat& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << fmt17(m(i, j));
    os << '\n';
  }
}

}  // namespace

void write_program_text(std::ostream& os, const ConicProgram& prog) {
  os << "conic_program n=" << prog.num_vars() << " eq=" << prog.A_eq.rows() << " lin=" << prog.G_lin.rows()
     << " soc=" << prog.soc.size() << '\n';
  write_matrix(os, "P", prog.P);
  write_matrix(os, "q", prog.q.transpose());
  os << "offset " << fmt17(prog.offset) << '\n';
  write_matrix(os, "A_eq", prog.A_eq);
  write_matrix(os, "b_eq", prog.b_eq.transpose());
  write_matrix(os, "G_lin", prog.G_lin);
  write_matrix(os, "h_lin", prog.h_lin.transpose());
  for (std::size_t k = 0; k < prog.soc.size(); ++k) {
    const auto& c = prog.soc[k];
    os << "soc " << k << " dim=" << c.F.rows() + 1 << '\n';
    write_matrix(os, "c", c.c.transpose());
    os << "d " << fmt17(c.d) << '\n';
    write_matrix(os, "F", c.F);
    write_matrix(os, "g", c.g.transpose());
  }
}

}  // namespace smpc
