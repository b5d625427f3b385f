#include "smpc/offline_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "smpc/format.hpp"

namespace smpc {

namespace {

double lmi_tol(const Mat& m) { return 1e-8 * std::max(1.0, m.norm()); }

std::string mat_text(const Mat& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) s += ", ";
      s += fmt17(m(i, j));
    }
  }
  return s + "]";
}

}  // namespace

void Polytope::validate() const {
  if (H.rows() != h.size() || H.rows() == 0 || H.cols() == 0)
    throw Error(ErrorKind::InvalidArgument, "polytope H/h dimensions disagree");
  if (!H.allFinite() || !h.allFinite()) throw Error(ErrorKind::InvalidArgument, "polytope has non-finite data");
  if ((h.array() <= 0.0).any())
    throw Error(ErrorKind::InvalidArgument, "polytope offsets must be positive (origin strictly inside)");
}

bool Polytope::contains(const Vec& x, double tol) const {
  return ((H * x - h).array() <= tol).all();
}

Polytope Polytope::box(const Vec& bounds) {
  const Eigen::Index n = bounds.size();
  Polytope p{Mat::Zero(2 * n, n), Vec(2 * n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    p.H(2 * i, i) = 1.0;
    p.H(2 * i + 1, i) = -1.0;
    p.h(2 * i) = bounds(i);
    p.h(2 * i + 1) = bounds(i);
  }
  return p;
}

double Ellipsoid::gauge(const Vec& x) const {
  const Mat l = cholesky(W);
  const Vec y = l.triangularView<Eigen::Lower>().solve(x);
  return y.norm();
}

NoiseDistribution parse_distribution(const std::string& s) {
  if (s == "gaussian" || s == "normal") return NoiseDistribution::Gaussian;
  if (s == "generic") return NoiseDistribution::Generic;
  throw Error(ErrorKind::ConfigError, "unknown distribution tag '" + s + "'");
}

std::string to_string(NoiseDistribution d) {
  return d == NoiseDistribution::Gaussian ? "gaussian" : "generic";
}

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0) throw Error(ErrorKind::InvalidArgument, "gamma shape must be positive");
  if (x <= 0.0) return 0.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term, ap = a;
    for (int i = 0; i < 1000; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return std::min(1.0, sum * std::exp(log_prefix));
  }
  // Continued fraction for Q(a, x) (modified Lentz).
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, f = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::max(0.0, 1.0 - std::exp(log_prefix) * f);
}

double chi2_cdf(double x, int dof) { return regularized_gamma_p(0.5 * dof, 0.5 * x); }

double chi2_quantile(double p, int dof) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "quantile level must lie in (0,1)");
  double lo = 0.0, hi = std::max(1.0, static_cast<double>(dof));
  while (chi2_cdf(hi, dof) < p) hi *= 2.0;
  while (hi - lo > 1e-13 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf(mid, dof) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  os << "design validation report\n";
  for (const auto& c : checks) {
    os << (c.passed ? "  [pass] " : "  [FAIL] ") << c.name << "  value=" << fmt17(c.value);
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << "\n";
  }
  for (const auto& n : notes) os << "  note: " << n << "\n";
  os << (all_passed() ? "result: all checks passed\n" : "result: validation FAILED\n");
  return os.str();
}

Mat DesignParams::terminal_weight_matrix() const {
  return (nu / (1.0 - lambda * lambda)) * W_x_inv.mat();
}

double DesignParams::rho_floor() const { return smpc::rho_floor(static_cast<int>(n()), lambda); }

double max_inscribed_radius(const SymMatrix& W, const Polytope& X) {
  X.validate();
  if (X.H.cols() != W.dim()) throw Error(ErrorKind::InvalidArgument, "polytope and shape dimensions differ");
  double r = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < X.H.rows(); ++i) {
    const double s = X.H.row(i) * W.mat() * X.H.row(i).transpose();
    if (!(s > 0.0)) throw Error(ErrorKind::DegenerateFacet, "facet " + std::to_string(i) + " has zero support");
    r = std::min(r, X.h(i) / std::sqrt(s));
  }
  return r;
}

SymMatrix max_volume_input_shape(const Polytope& U, double r_hat) {
  U.validate();
  if (!(r_hat > 0.0)) throw Error(ErrorKind::InvalidArgument, "r_hat must be positive");
  const Eigen::Index m = U.H.cols();
  const Eigen::Index rows = U.H.rows();
  Eigen::FullPivLU<Mat> lu(U.H);
  if (lu.rank() < m) throw Error(ErrorKind::Unbounded, "input set is unbounded (facets do not span the input space)");

  // Facet i: H_i W H_i^T <= c_i.
  Vec c(rows);
  for (Eigen::Index i = 0; i < rows; ++i) c(i) = (U.h(i) / r_hat) * (U.h(i) / r_hat);

  if (m == 1) {
    double w = std::numeric_limits<double>::infinity();
    bool pos = false, neg = false;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double a = U.H(i, 0);
      if (a == 0.0) continue;
      (a > 0 ? pos : neg) = true;
      w = std::min(w, c(i) / (a * a));
    }
    if (!pos || !neg) throw Error(ErrorKind::Unbounded, "scalar input set is unbounded");
    return SymMatrix(Mat::Constant(1, 1, w));
  }

  // Coordinate ascent on the dual weights y: W^{-1} = sum_i y_i a_i a_i^T,
  // maximizing log det(sum y_i a_i a_i^T) - sum y_i c_i.
  Vec y = Vec::Constant(rows, 0.0);
  for (Eigen::Index i = 0; i < rows; ++i) y(i) = static_cast<double>(m) / (static_cast<double>(rows) * c(i));
  Mat M = Mat::Zero(m, m);
  for (Eigen::Index i = 0; i < rows; ++i) M += y(i) * U.H.row(i).transpose() * U.H.row(i);
  Mat Minv = M.inverse();

  for (int sweep = 0; sweep < 100000; ++sweep) {
    double max_rel = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Vec a = U.H.row(i).transpose();
      const double g = a.dot(Minv * a);
      double delta = 1.0 / c(i) - 1.0 / g;
      delta = std::max(delta, -y(i));
      if (delta == 0.0) continue;
      y(i) += delta;
      const Vec Ma = Minv * a;
      Minv -= (delta / (1.0 + delta * g)) * Ma * Ma.transpose();
      max_rel = std::max(max_rel, std::abs(g / c(i) - 1.0) * (y(i) > 0 ? 1.0 : 0.0));
    }
    if (max_rel < 1e-10) break;
  }
  Mat W = 0.5 * (Minv + Minv.transpose());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) worst = std::max(worst, (U.H.row(i) * W * U.H.row(i).transpose())(0, 0) / c(i));
  if (worst > 1.0) W /= worst;
  return SymMatrix(W);
}

InputShape scale_input_shape(const SymMatrix& W_hat, double r_hat, const Mat& K, const SymMatrix& W_x) {
  const Mat lu = cholesky(W_hat);
  (void)cholesky(W_x);
  const Mat lu_inv_k = lu.triangularView<Eigen::Lower>().solve(K);
  const Mat core = lu_inv_k * W_x.mat() * lu_inv_k.transpose();
  double eta = sym_eig_max(SymMatrix(Mat(0.5 * (core + core.transpose()))));
  InputShape out;
  if (eta <= std::numeric_limits<double>::epsilon() * std::max(1.0, core.norm())) {
    out.W_u = W_hat;
    out.r_u = r_hat;
    out.eta = eta;
    out.eta_clamped = true;
    return out;
  }
  out.W_u = SymMatrix(Mat(eta * W_hat.mat()));
  out.r_u = r_hat / std::sqrt(eta);
  out.eta = eta;
  return out;
}

double terminal_weight(const SymMatrix& Q, const SymMatrix& R, const Mat& K, const SymMatrix& W_x) {
  const Mat stage = Q.mat() + K.transpose() * R.mat() * K;
  const Mat root = sqrt_psd(W_x);
  const Mat core = root * stage * root;
  return sym_eig_max(SymMatrix(Mat(0.5 * (core + core.transpose()))));
}

double radius_from_violation(double epsilon, int n, NoiseDistribution dist) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorKind::InvalidEpsilon, "epsilon must lie in (0,1)");
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "state dimension must be positive");
  if (dist == NoiseDistribution::Generic) return std::sqrt(n / epsilon);
  return std::sqrt(chi2_quantile(1.0 - epsilon, n));
}

double rho_floor(int n, double lambda) { return std::sqrt(n * (1.0 - lambda) / (1.0 + lambda)); }

DesignResult build_design(const DesignConfig& cfg) {
  const Eigen::Index n = cfg.A.rows();
  if (cfg.A.cols() != n || cfg.B.rows() != n || cfg.gamma_w.dim() != n || cfg.Q.dim() != n ||
      cfg.R.dim() != cfg.B.cols() || cfg.state_set.H.cols() != n || cfg.input_set.H.cols() != cfg.B.cols())
    throw Error(ErrorKind::InvalidArgument, "dimension mismatch in design configuration");
  cfg.state_set.validate();
  cfg.input_set.validate();
  if (cfg.horizon < 1) throw Error(ErrorKind::InvalidArgument, "horizon must be at least 1");
  if (!(cfg.mu > 0.0)) throw Error(ErrorKind::InvalidArgument, "penalty weight mu must be positive");
  if (!(cfg.lambda > 0.0 && cfg.lambda < 1.0))
    throw Error(ErrorKind::ValidationFailed, "lambda_in_unit_interval: lambda must lie in (0,1)");

  DesignResult res;
  ValidationReport& rep = res.report;
  DesignParams& p = res.params;
  p.A = cfg.A;
  p.B = cfg.B;
  p.gamma_w = cfg.gamma_w;
  p.Q = cfg.Q;
  p.R = cfg.R;
  p.lambda = cfg.lambda;
  p.epsilon = cfg.epsilon;
  p.dist = cfg.dist;
  p.mu = cfg.mu;
  p.horizon = cfg.horizon;
  p.state_set = cfg.state_set;
  p.input_set = cfg.input_set;

  auto fail = [&](const std::string& name, const std::string& why) {
    throw Error(ErrorKind::ValidationFailed, name + ": " + why + "\n" + rep.to_text());
  };
  auto add = [&](std::string name, double value, bool ok, std::string detail = {}) {
    rep.checks.push_back({std::move(name), value, ok, std::move(detail)});
  };

  const DareSolution lqr = solve_dare(cfg.A, cfg.B, cfg.Q, cfg.R);
  p.K = lqr.gain;
  p.P = lqr.cost;
  const Mat ak = p.closed_loop();
  add("riccati_residual", lqr.residual, lqr.residual <= 1e-9, "relative Frobenius residual");
  {
    const Mat lyap = p.P.mat() - cfg.Q.mat() - p.K.transpose() * cfg.R.mat() * p.K - ak.transpose() * p.P.mat() * ak;
    const double me = min_eig_sym(lyap);
    add("lqr_lyapunov_inequality", me, me >= -lmi_tol(p.P.mat()), "min eig of P - Q - K'RK - A_K'PA_K");
  }
  const double rad = spectral_radius(ak);
  add("closed_loop_contraction", rad, rad < cfg.lambda, "spectral radius of A+BK below lambda");
  if (!(rad < cfg.lambda)) fail("closed_loop_contraction", "lambda must exceed the spectral radius of A+BK");

  if (cfg.wx_override) {
    p.W_x = *cfg.wx_override;
    if (cfg.repair_wx_override) {
      const Mat l = cholesky(p.W_x);
      const Mat li = l.triangularView<Eigen::Lower>().solve(Mat::Identity(n, n));
      const Mat core = li * cfg.gamma_w.mat() * li.transpose();
      const double need = sym_eig_max(SymMatrix(Mat(0.5 * (core + core.transpose())))) /
                          ((1.0 - cfg.lambda) * (1.0 - cfg.lambda));
      if (need > 1.0) {
        p.wx_scale_applied = need;
        p.W_x = SymMatrix(Mat(need * p.W_x.mat()));
        rep.notes.push_back("user W_x scaled by " + fmt17(need) + " so the noise containment inequality holds");
      }
    }
  } else {
    p.W_x = solve_dlyap_scaled(ak, cfg.gamma_w, cfg.lambda);
  }
  try {
    p.W_x_inv = inverse_pd(p.W_x);
  } catch (const Error&) {
    add("W_x_positive_definite", sym_eig_min(p.W_x), false);
    fail("W_x_positive_definite", "shape matrix W_x is not positive definite (degenerate noise covariance?)");
  }
  add("W_x_positive_definite", sym_eig_min(p.W_x), true);
  {
    const Mat r1 = cfg.lambda * cfg.lambda * p.W_x.mat() - ak * p.W_x.mat() * ak.transpose();
    const double e1 = min_eig_sym(r1);
    add("reach_contraction_lmi", e1, e1 >= -lmi_tol(p.W_x.mat()), "min eig of lambda^2 W_x - A_K W_x A_K'");
    const Mat r2 = (1.0 - cfg.lambda) * (1.0 - cfg.lambda) * p.W_x.mat() - cfg.gamma_w.mat();
    const double e2 = min_eig_sym(r2);
    add("reach_noise_lmi", e2, e2 >= -lmi_tol(p.W_x.mat()), "min eig of (1-lambda)^2 W_x - Gamma_w");
  }

  p.r_x = max_inscribed_radius(p.W_x, cfg.state_set);
  const SymMatrix w_hat = max_volume_input_shape(cfg.input_set, cfg.r_u_hat);
  const InputShape shape = scale_input_shape(w_hat, cfg.r_u_hat, p.K, p.W_x);
  if (shape.eta_clamped) rep.notes.push_back("zero feedback gain: input shape left unscaled");
  p.W_u = shape.W_u;
  p.r_u = shape.r_u;
  p.W_u_inv = inverse_pd(p.W_u);
  p.r_N = std::min(p.r_x, p.r_u);
  {
    const Mat r = p.W_x_inv.mat() - p.K.transpose() * p.W_u_inv.mat() * p.K;
    const double e = min_eig_sym(r);
    add("input_coupling_lmi", e, e >= -lmi_tol(p.W_x_inv.mat()), "min eig of W_x^-1 - K' W_u^-1 K");
  }
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < cfg.state_set.H.rows(); ++i) {
      const double s = p.r_x * std::sqrt((cfg.state_set.H.row(i) * p.W_x.mat() * cfg.state_set.H.row(i).transpose())(0, 0));
      worst = std::max(worst, s - cfg.state_set.h(i));
    }
    add("state_ellipsoid_in_X", worst, worst <= 1e-9 * std::max(1.0, cfg.state_set.h.cwiseAbs().maxCoeff()),
        "max facet support minus offset");
    worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < cfg.input_set.H.rows(); ++i) {
      const double s = p.r_u * std::sqrt((cfg.input_set.H.row(i) * p.W_u.mat() * cfg.input_set.H.row(i).transpose())(0, 0));
      worst = std::max(worst, s - cfg.input_set.h(i));
    }
    add("input_ellipsoid_in_U", worst, worst <= 1e-8 * std::max(1.0, cfg.input_set.h.cwiseAbs().maxCoeff()),
        "max facet support minus offset");
  }

  p.nu = terminal_weight(cfg.Q, cfg.R, p.K, p.W_x);
  {
    const Mat r = p.nu * p.W_x_inv.mat() - cfg.Q.mat() - p.K.transpose() * cfg.R.mat() * p.K;
    const double e = min_eig_sym(r);
    add("terminal_cost_bound", e, e >= -lmi_tol(p.nu * p.W_x_inv.mat()), "min eig of nu W_x^-1 - Q - K'RK");
  }

  p.rho = radius_from_violation(cfg.epsilon, static_cast<int>(n), cfg.dist);
  const double floor = rho_floor(static_cast<int>(n), cfg.lambda);
  add("rho_above_floor", p.rho - floor, p.rho >= floor, "rho minus sqrt(n(1-lambda)/(1+lambda))");
  if (p.rho < floor)
    throw Error(ErrorKind::RhoBelowFloor, "rho " + fmt17(p.rho) + " below floor " + fmt17(floor) + "\n" + rep.to_text());
  add("rho_le_r_x", p.r_x - p.rho, p.rho <= p.r_x);
  add("rho_le_r_u", p.r_u - p.rho, p.rho <= p.r_u);

  p.F_x = cholesky(p.W_x).triangularView<Eigen::Lower>().solve(Mat::Identity(n, n));
  p.F_u = cholesky(p.W_u).triangularView<Eigen::Lower>().solve(Mat::Identity(p.m(), p.m()));

  for (const auto& c : rep.checks)
    if (!c.passed) fail(c.name, "check failed with value " + fmt17(c.value));
  return res;
}

std::string design_dump(const DesignParams& p) {
  std::ostringstream os;
  os << "A = " << mat_text(p.A) << "\n";
  os << "B = " << mat_text(p.B) << "\n";
  os << "Gamma_w = " << mat_text(p.gamma_w.mat()) << "\n";
  os << "K = " << mat_text(p.K) << "\n";
  os << "P = " << mat_text(p.P.mat()) << "\n";
  os << "Q = " << mat_text(p.Q.mat()) << "\n";
  os << "R = " << mat_text(p.R.mat()) << "\n";
  os << "W_x = " << mat_text(p.W_x.mat()) << "\n";
  os << "W_x_scale = " << fmt17(p.wx_scale_applied) << "\n";
  os << "lambda = " << fmt17(p.lambda) << "\n";
  os << "r_x = " << fmt17(p.r_x) << "\n";
  os << "W_u = " << mat_text(p.W_u.mat()) << "\n";
  os << "r_u = " << fmt17(p.r_u) << "\n";
  os << "r_N = " << fmt17(p.r_N) << "\n";
  os << "rho = " << fmt17(p.rho) << "\n";
  os << "rho_floor = " << fmt17(p.rho_floor()) << "\n";
  os << "epsilon = " << fmt17(p.epsilon) << "\n";
  os << "distribution = " << to_string(p.dist) << "\n";
  os << "nu = " << fmt17(p.nu) << "\n";
  os << "mu = " << fmt17(p.mu) << "\n";
  os << "horizon = " << p.horizon << "\n";
  return os.str();
}

}  // namespace smpc
