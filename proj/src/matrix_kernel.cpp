#include "smpc/matrix_kernel.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace smpc {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::UnstableScaledSystem: return "UnstableScaledSystem";
    case ErrorKind::Unstabilizable: return "Unstabilizable";
    case ErrorKind::DegenerateFacet: return "DegenerateFacet";
    case ErrorKind::Unbounded: return "Unbounded";
    case ErrorKind::RhoBelowFloor: return "RhoBelowFloor";
    case ErrorKind::InvalidEpsilon: return "InvalidEpsilon";
    case ErrorKind::ValidationFailed: return "ValidationFailed";
    case ErrorKind::RadiusBelowRho: return "RadiusBelowRho";
    case ErrorKind::DesignInvalid: return "DesignInvalid";
    case ErrorKind::InfeasibleAtStart: return "InfeasibleAtStart";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

SymMatrix::SymMatrix(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw Error(ErrorKind::InvalidArgument, "symmetric matrix must be square and non-empty");
  if (!m.allFinite()) throw Error(ErrorKind::InvalidArgument, "matrix has non-finite entries");
  const double scale = std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > 1e-12 * scale)
    throw Error(ErrorKind::InvalidArgument, "matrix is not symmetric");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index n) { return SymMatrix(Mat::Identity(n, n)); }
SymMatrix SymMatrix::zero(Eigen::Index n) { return SymMatrix(Mat::Zero(n, n)); }

SymEigen sym_eig(const SymMatrix& sm) {
  Mat a = sm.mat();
  const Eigen::Index n = a.rows();
  Mat v = Mat::Identity(n, n);
  const double tol = 1e-12 * std::max(a.norm(), 1e-300);
  constexpr int kMaxRotations = 100000;

  auto off_norm = [&]() {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int rotations = 0;
  while (off_norm() > tol) {
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) <= 1e-300) continue;
        if (++rotations > kMaxRotations)
          throw Error(ErrorKind::NoConvergence, "Jacobi eigen-decomposition exceeded rotation cap");
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) < a(j, j); });
  SymEigen out{Vec(n), Mat(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

double sym_eig_max(const SymMatrix& m) { return sym_eig(m).values.maxCoeff(); }
double sym_eig_min(const SymMatrix& m) { return sym_eig(m).values.minCoeff(); }

Mat cholesky(const SymMatrix& sm) {
  const Mat& m = sm.mat();
  const Eigen::Index n = m.rows();
  const double tol = 1e-12 * m.diagonal().cwiseAbs().maxCoeff();
  Mat l = Mat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > tol))
      throw Error(ErrorKind::NotPositiveDefinite, "Cholesky pivot " + std::to_string(j) + " is not positive");
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  return l;
}

Mat sqrt_psd(const SymMatrix& m) {
  const SymEigen e = sym_eig(m);
  const Vec root = e.values.cwiseMax(0.0).cwiseSqrt();
  return e.vectors * root.asDiagonal() * e.vectors.transpose();
}

Mat psd_factor(const SymMatrix& m) { return sqrt_psd(m); }

SymMatrix inverse_pd(const SymMatrix& m) {
  const Mat l = cholesky(m);
  const Mat linv = l.triangularView<Eigen::Lower>().solve(Mat::Identity(m.dim(), m.dim()));
  return SymMatrix(Mat(linv.transpose() * linv));
}

double spectral_radius(const Mat& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::InvalidArgument, "spectral radius of non-square matrix");
  Eigen::EigenSolver<Mat> es(a, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "eigenvalue computation failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_eig_sym(const Mat& m) { return sym_eig_min(SymMatrix(Mat(0.5 * (m + m.transpose())))); }

SymMatrix solve_dlyap_scaled(const Mat& a_k, const SymMatrix& g, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw Error(ErrorKind::InvalidArgument, "lambda must lie in (0,1)");
  if (a_k.rows() != g.dim() || a_k.cols() != g.dim())
    throw Error(ErrorKind::InvalidArgument, "dimension mismatch between A_K and G");
  if (spectral_radius(a_k) >= lambda)
    throw Error(ErrorKind::UnstableScaledSystem, "spectral radius of A_K is not below lambda");

  // Doubling on the series sum_k At^k C At^k^T with At = A_K / lambda.
  Mat at = a_k / lambda;
  Mat w = g.mat() / ((1.0 - lambda) * (1.0 - lambda));
  for (int it = 0; it < 200; ++it) {
    const Mat inc = at * w * at.transpose();
    w += inc;
    at = at * at;
    if (inc.norm() <= 1e-16 * std::max(1.0, w.norm()) || at.norm() < 1e-300) break;
  }
  return SymMatrix(Mat(0.5 * (w + w.transpose())));
}

DareSolution solve_dare(const Mat& a, const Mat& b, const SymMatrix& q, const SymMatrix& r) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n || q.dim() != n || r.dim() != b.cols())
    throw Error(ErrorKind::InvalidArgument, "dimension mismatch in DARE data");
  if (sym_eig_min(q) < -1e-12 * std::max(1.0, q.mat().norm()))
    throw Error(ErrorKind::InvalidArgument, "Q must be positive semidefinite");
  (void)cholesky(r);

  auto riccati = [&](const Mat& p) -> Mat {
    const Mat btpa = b.transpose() * p * a;
    const Mat s = r.mat() + b.transpose() * p * b;
    return q.mat() + a.transpose() * p * a - btpa.transpose() * s.ldlt().solve(btpa);
  };

  // Iterate in the form Q + K'RK + A_K' P A_K: a sum of PSD terms, which stays
  // accurate when A is strongly unstable (the subtractive form drifts there).
  auto riccati_psd = [&](const Mat& p) -> Mat {
    const Mat s = r.mat() + b.transpose() * p * b;
    const Mat k = -s.ldlt().solve(Mat(b.transpose() * p * a));
    const Mat ak = a + b * k;
    return q.mat() + k.transpose() * r.mat() * k + ak.transpose() * p * ak;
  };

  Mat p = q.mat();
  int it = 0;
  constexpr int kCap = 10000;
  for (; it < kCap; ++it) {
    Mat next = riccati_psd(p);
    next = 0.5 * (next + next.transpose());
    const double diff = (next - p).norm();
    p = next;
    if (!p.allFinite() || p.norm() > 1e15)
      throw Error(ErrorKind::Unstabilizable, "Riccati iteration diverged");
    if (diff <= 1e-12 * std::max(1.0, p.norm())) break;
  }
  if (it == kCap) throw Error(ErrorKind::NoConvergence, "Riccati iteration hit its cap");

  const Mat s = r.mat() + b.transpose() * p * b;
  Mat k = -s.ldlt().solve(Mat(b.transpose() * p * a));
  if (spectral_radius(a + b * k) >= 1.0)
    throw Error(ErrorKind::Unstabilizable, "Riccati fixed point is not stabilizing");

  DareSolution out;
  out.gain = k;
  out.cost = SymMatrix(p);
  out.residual = (riccati(p) - p).norm() / std::max(1.0, p.norm());
  out.iterations = it + 1;
  return out;
}

}  // namespace smpc
