#include "smpc/prs_tightening.hpp"

#include <algorithm>
#include <cmath>

namespace smpc {

double prs_radius(double rho, double lambda, int l) { return rho * (1.0 - std::pow(lambda, l)); }

ViolationLevel violation_fn(double rho, int n, NoiseDistribution dist) {
  ViolationLevel out;
  if (dist == NoiseDistribution::Gaussian) {
    out.value = 1.0 - chi2_cdf(rho * rho, n);
    return out;
  }
  out.value = static_cast<double>(n) / (rho * rho);
  if (out.value > 1.0) {
    out.value = 1.0;
    out.clipped = true;
  }
  return out;
}

ErrorCovariance covariance_recursion(const Mat& a_k, const SymMatrix& gamma_w, int horizon) {
  if (horizon < 1) throw Error(ErrorKind::InvalidArgument, "horizon must be at least 1");
  ErrorCovariance out;
  out.E.push_back(SymMatrix::zero(gamma_w.dim()));
  for (int l = 0; l < horizon; ++l) {
    const Mat& e = out.E.back().mat();
    Mat next = a_k * e * a_k.transpose() + gamma_w.mat();
    out.E.emplace_back(Mat(0.5 * (next + next.transpose())));
  }
  return out;
}

TightenedTube build_tube(double rbar_x, double rbar_u, const DesignParams& d) {
  if (rbar_x < d.rho || rbar_u < d.rho)
    throw Error(ErrorKind::RadiusBelowRho, "relaxed radius below rho");
  const int N = d.horizon;
  TightenedTube t;
  t.sx.assign(static_cast<std::size_t>(N), 0.0);
  t.su.assign(static_cast<std::size_t>(N), 0.0);
  for (int l = 1; l < N; ++l) {
    t.sx[l] = rbar_x - prs_radius(d.rho, d.lambda, l);
    t.su[l] = rbar_u - prs_radius(d.rho, d.lambda, l);
  }
  t.tN_x = rbar_x - prs_radius(d.rho, d.lambda, N);
  t.tN_u = rbar_u - prs_radius(d.rho, d.lambda, N);
  t.W_x = d.W_x;
  t.W_u = d.W_u;
  return t;
}

namespace {

PosteriorBound bound_for(double radius, double gauge, int l, const DesignParams& d) {
  PosteriorBound b;
  // points within rounding of the boundary count as on it
  if (!(gauge < radius * (1.0 - 1e-12))) return b;
  b.defined = true;
  b.rho_bar = (radius - gauge) / (1.0 - std::pow(d.lambda, l));
  const ViolationLevel phi = violation_fn(b.rho_bar, static_cast<int>(d.n()), d.dist);
  b.probability = 1.0 - phi.value;
  b.vacuous = phi.clipped;
  return b;
}

}  // namespace

PosteriorReport posterior_bounds(const std::vector<Vec>& z, const std::vector<Vec>& v, const DesignParams& d) {
  const int N = d.horizon;
  if (static_cast<int>(z.size()) != N + 1 || static_cast<int>(v.size()) != N)
    throw Error(ErrorKind::InvalidArgument, "plan length does not match the horizon");
  const Ellipsoid ex = d.state_ellipsoid();
  const Ellipsoid eu = d.input_ellipsoid();
  PosteriorReport rep;
  rep.state.resize(static_cast<std::size_t>(N + 1));
  rep.input.resize(static_cast<std::size_t>(N + 1));
  for (int l = 1; l <= N; ++l) {
    rep.state[l] = bound_for(d.r_x, ex.gauge(z[l]), l, d);
    const Vec vl = l < N ? v[l] : Vec(d.K * z[N]);
    rep.input[l] = bound_for(d.r_u, eu.gauge(vl), l, d);
  }
  rep.terminal = bound_for(d.r_N, ex.gauge(z[N]), N, d);
  return rep;
}

bool terminal_invariance_check(const Vec& z, double r, const DesignParams& d) {
  const Ellipsoid e{d.W_x, d.lambda * r};
  return e.contains(d.closed_loop() * z, 1e-12 * std::max(1.0, r));
}

}  // namespace smpc
