#pragma once

#include <cmath>
#include <random>

#include "smpc/sim_harness.hpp"

namespace fixtures {

using smpc::Mat;
using smpc::SymMatrix;
using smpc::Vec;

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

/// Printed shape matrix of the double-integrator example.
inline SymMatrix printed_wx() { return SymMatrix(mat2(10.9264, -3.7386, -3.7386, 3.8143)); }

/// Double integrator with |x_i| <= 40, |u| <= 10, Q = I, R = 10, lambda = 0.7503,
/// eps = 0.1, Gaussian noise and the printed W_x (scaled by the repair factor).
inline smpc::DesignConfig double_integrator() {
  smpc::DesignConfig c;
  c.A = mat2(1, 1, 0, 1);
  c.B = Mat(2, 1);
  c.B << 0.5, 1.0;
  c.gamma_w = SymMatrix(mat2(0.1, 0.05, 0.05, 0.1));
  c.state_set = smpc::Polytope::box(Vec::Constant(2, 40.0));
  c.input_set = smpc::Polytope::box(Vec::Constant(1, 10.0));
  c.Q = SymMatrix::identity(2);
  c.R = SymMatrix(Mat::Constant(1, 1, 10.0));
  c.lambda = 0.7503;
  c.epsilon = 0.1;
  c.dist = smpc::NoiseDistribution::Gaussian;
  c.wx_override = printed_wx();
  c.repair_wx_override = true;
  c.mu = 1e4;
  c.horizon = 10;
  return c;
}

inline const smpc::DesignParams& example_design() {
  static const smpc::DesignParams d = smpc::build_design(double_integrator()).params;
  return d;
}

inline smpc::DesignParams noiseless(smpc::DesignParams d) {
  d.gamma_w = SymMatrix::zero(d.n());
  return d;
}

/// Uniform sample on the surface of E_W(r).
inline Vec on_ellipsoid_boundary(const SymMatrix& W, double r, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec xi(W.dim());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = nd(rng);
  xi.normalize();
  return r * smpc::cholesky(W) * xi;
}

/// Uniform sample inside E_W(r).
inline Vec in_ellipsoid(const SymMatrix& W, double r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const double scale = std::pow(ud(rng), 1.0 / static_cast<double>(W.dim()));
  return scale * on_ellipsoid_boundary(W, r, rng);
}

inline Mat random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = nd(rng);
  return m;
}

inline SymMatrix random_pd(Eigen::Index n, std::mt19937_64& rng) {
  const Mat a = random_matrix(n, n, rng);
  const Mat m = a * a.transpose() + 0.5 * Mat::Identity(n, n);
  return SymMatrix(Mat(0.5 * (m + m.transpose())));
}

}  // namespace fixtures
