#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smpc/matrix_kernel.hpp"

namespace smpc {

/// {x : H x <= h}; the origin must be strictly inside (h > 0).
struct Polytope {
  Mat H;
  Vec h;

  void validate() const;
  bool contains(const Vec& x, double tol = 0.0) const;
  /// Box |x_i| <= bound_i, rows ordered +e_0, -e_0, +e_1, ...
  static Polytope box(const Vec& bounds);
};

/// E_W(r) = {x : x^T W^{-1} x <= r^2}.
struct Ellipsoid {
  SymMatrix W;
  double r = 0.0;

  /// sqrt(x^T W^{-1} x), the smallest radius whose ellipsoid contains x.
  double gauge(const Vec& x) const;
  bool contains(const Vec& x, double tol = 0.0) const { return gauge(x) <= r + tol; }
};

enum class NoiseDistribution { Generic, Gaussian };

NoiseDistribution parse_distribution(const std::string& s);
std::string to_string(NoiseDistribution d);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// CDF of the chi-squared distribution with `dof` degrees of freedom.
double chi2_cdf(double x, int dof);
/// Inverse CDF by bisection on chi2_cdf, tolerance 1e-10 (relative).
double chi2_quantile(double p, int dof);

/// Everything the offline stage needs. W_x is optional: when absent it is
/// computed from the scaled Lyapunov equation.
struct DesignConfig {
  Mat A, B;
  SymMatrix gamma_w;
  Polytope state_set, input_set;
  SymMatrix Q, R;
  double lambda = 0.0;
  double epsilon = 0.1;
  NoiseDistribution dist = NoiseDistribution::Gaussian;
  std::optional<SymMatrix> wx_override;
  /// Scale a user-supplied W_x by the smallest factor >= 1 that makes
  /// Gamma_w <= (1 - lambda)^2 W_x hold (repairs rounding in printed data).
  bool repair_wx_override = false;
  double mu = 1e4;
  int horizon = 10;
  double r_u_hat = 1.0;
};

struct ValidationCheck {
  std::string name;
  double value = 0.0;  // residual, margin or measured quantity
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::vector<std::string> notes;

  bool all_passed() const;
  const ValidationCheck* find(const std::string& name) const;
  std::string to_text() const;
};

struct DesignParams {
  Mat A, B;
  SymMatrix gamma_w;
  Mat K;          // u = K x, closed loop A + B K
  SymMatrix P;    // LQR Riccati matrix, not used online
  SymMatrix Q, R;
  SymMatrix W_x;
  double lambda = 0.0;
  double r_x = 0.0;
  SymMatrix W_u;
  double r_u = 0.0;
  double r_N = 0.0;
  double rho = 0.0;
  double epsilon = 0.0;
  double nu = 0.0;
  double mu = 0.0;
  int horizon = 0;
  NoiseDistribution dist = NoiseDistribution::Gaussian;
  Polytope state_set, input_set;

  // Derived once: W_x^{-1}, W_u^{-1} and factors F with F^T F = W^{-1}.
  SymMatrix W_x_inv, W_u_inv;
  Mat F_x, F_u;
  double wx_scale_applied = 1.0;

  Eigen::Index n() const noexcept { return A.rows(); }
  Eigen::Index m() const noexcept { return B.cols(); }
  Mat closed_loop() const { return A + B * K; }
  Ellipsoid state_ellipsoid() const { return {W_x, r_x}; }
  Ellipsoid input_ellipsoid() const { return {W_u, r_u}; }
  /// Weight of the terminal cost z^T (nu / (1 - lambda^2)) W_x^{-1} z.
  Mat terminal_weight_matrix() const;
  double rho_floor() const;
};

/// r = min_i h_i / sqrt(H_i W H_i^T).
double max_inscribed_radius(const SymMatrix& W, const Polytope& X);

/// Largest-volume W with E_W(r_hat) inside U. Closed form for one input,
/// coordinate ascent on log det for several.
SymMatrix max_volume_input_shape(const Polytope& U, double r_hat);

struct InputShape {
  SymMatrix W_u;
  double r_u = 0.0;
  double eta = 0.0;
  bool eta_clamped = false;
};

/// eta* = lambda_max(W_hat^{-1/2} K W_x K^T W_hat^{-1/2}); W_u = eta* W_hat,
/// r_u = r_hat / sqrt(eta*). A zero gain leaves the shape unscaled.
InputShape scale_input_shape(const SymMatrix& W_hat, double r_hat, const Mat& K, const SymMatrix& W_x);

/// Smallest nu with Q + K^T R K <= nu W_x^{-1}.
double terminal_weight(const SymMatrix& Q, const SymMatrix& R, const Mat& K, const SymMatrix& W_x);

/// Inverse of the violation-level function: generic sqrt(n / eps), Gaussian
/// sqrt(chi2 quantile at 1 - eps).
double radius_from_violation(double epsilon, int n, NoiseDistribution dist);

/// sqrt(n (1 - lambda) / (1 + lambda)).
double rho_floor(int n, double lambda);

struct DesignResult {
  DesignParams params;
  ValidationReport report;
};

/// Runs the full offline pipeline and validates every invariant. Throws
/// ValidationFailed naming the first failing check; the report is attached
/// to the exception message.
DesignResult build_design(const DesignConfig& cfg);

/// Structured key/value dump (one `key = value` per line, 17 significant digits).
std::string design_dump(const DesignParams& p);

}  // namespace smpc
