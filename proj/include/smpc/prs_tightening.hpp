#pragma once

#include <vector>

#include "smpc/offline_design.hpp"

namespace smpc {

/// rho (1 - lambda^l): radius of the l-step reachable set of the error.
double prs_radius(double rho, double lambda, int l);

struct ViolationLevel {
  double value = 0.0;
  bool clipped = false;  // generic bound exceeded 1 and carries no information
};

/// phi(rho): generic n / rho^2, Gaussian 1 - chi2_n(rho^2).
ViolationLevel violation_fn(double rho, int n, NoiseDistribution dist);

struct ErrorCovariance {
  std::vector<SymMatrix> E;  // E[0] = 0, ..., E[N]
};

/// E_{l+1} = A_K E_l A_K^T + Gamma_w starting from zero.
ErrorCovariance covariance_recursion(const Mat& a_k, const SymMatrix& gamma_w, int horizon);

struct TightenedTube {
  std::vector<double> sx;  // index l = 1..N-1 stored at [l]; [0] unused
  std::vector<double> su;
  double tN_x = 0.0;
  double tN_u = 0.0;
  SymMatrix W_x, W_u;
};

TightenedTube build_tube(double rbar_x, double rbar_u, const DesignParams& d);

struct PosteriorBound {
  double rho_bar = 0.0;
  bool defined = false;
  double probability = 0.0;  // 0 when undefined
  bool vacuous = false;
};

struct PosteriorReport {
  // index l = 1..N stored at [l]; [0] is left undefined
  std::vector<PosteriorBound> state;
  std::vector<PosteriorBound> input;
  PosteriorBound terminal;
};

/// A-posteriori probability bounds for a nominal plan z[0..N], v[0..N-1].
/// The input entry at l = N uses the terminal feedback K z_N.
PosteriorReport posterior_bounds(const std::vector<Vec>& z, const std::vector<Vec>& v, const DesignParams& d);

/// Whether A_K z lies in E_{W_x}(lambda r).
bool terminal_invariance_check(const Vec& z, double r, const DesignParams& d);

}  // namespace smpc
