#pragma once

// Dense linear algebra for small systems (n up to a few dozen): symmetric
// eigen-decomposition, Cholesky, Lyapunov and Riccati solvers.

#include <Eigen/Dense>

#include "smpc/errors.hpp"

namespace smpc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Symmetric real matrix. Construction checks symmetry to 1e-12 relative
/// and stores the exactly symmetrized value.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Mat& m);

  static SymMatrix identity(Eigen::Index n);
  static SymMatrix zero(Eigen::Index n);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Mat& mat() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Mat m_;
};

struct SymEigen {
  Vec values;   // ascending
  Mat vectors;  // columns are orthonormal eigenvectors
};

/// Cyclic Jacobi rotations; off-diagonal threshold 1e-12 relative to ||M||_F.
SymEigen sym_eig(const SymMatrix& m);
double sym_eig_max(const SymMatrix& m);
double sym_eig_min(const SymMatrix& m);

/// Lower-triangular L with L L^T = M. Throws NotPositiveDefinite when a pivot
/// falls below 1e-12 times the largest diagonal entry.
Mat cholesky(const SymMatrix& m);

/// Symmetric PSD square root S with S S = M (negative eigenvalues clipped to 0).
Mat sqrt_psd(const SymMatrix& m);

/// Factor F with F F^T = M for M PSD, via eigendecomposition (singular M allowed).
Mat psd_factor(const SymMatrix& m);

/// Inverse of a symmetric positive definite matrix.
SymMatrix inverse_pd(const SymMatrix& m);

/// Largest modulus among the (possibly complex) eigenvalues of a square matrix.
double spectral_radius(const Mat& a);

/// Minimum eigenvalue of the symmetric part of `m`, used for LMI residual checks.
double min_eig_sym(const Mat& m);

/// W solving W = A_K W A_K^T / lambda^2 + G / (1 - lambda)^2. The fixed point
/// satisfies A_K W A_K^T <= lambda^2 W and G <= (1 - lambda)^2 W.
SymMatrix solve_dlyap_scaled(const Mat& a_k, const SymMatrix& g, double lambda);

struct DareSolution {
  Mat gain;        // K, closed loop is A + B K
  SymMatrix cost;  // P
  double residual = 0.0;  // ||riccati(P) - P||_F / max(1, ||P||_F)
  int iterations = 0;
};

/// Discrete LQR by fixed-point Riccati iteration (tolerance 1e-12, cap 1e4).
DareSolution solve_dare(const Mat& a, const Mat& b, const SymMatrix& q, const SymMatrix& r);

}  // namespace smpc
