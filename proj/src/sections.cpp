#include "fanogibbs/sections.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace fanogibbs {

Eigen::RowVectorXcd monomial_values(int k, const SpherePoint& x) {
  constexpr int kMaxN = 16;
  int N = 2 * k + 1;
  if (N > kMaxN) throw ValidationError("monomial_values: k too large");
  std::complex<double> pow0[kMaxN], pow1[kMaxN];
  pow0[0] = pow1[0] = 1.0;
  for (int j = 1; j < N; ++j) {
    pow0[j] = pow0[j - 1] * x.z0;
    pow1[j] = pow1[j - 1] * x.z1;
  }
  Eigen::RowVectorXcd m(N);
  for (int j = 0; j < N; ++j) m[j] = pow0[j] * pow1[2 * k - j];
  return m;
}

std::complex<double> SectionBasis::value(int i, const SpherePoint& x) const {
  return (coeffs.row(i) * monomial_values(k, x).transpose())(0);
}

Eigen::RowVectorXcd SectionBasis::values_at(const SpherePoint& x) const {
  return monomial_values(k, x) * coeffs.transpose();
}

Eigen::MatrixXcd SectionBasis::values_on(const QuadratureGrid& grid) const {
  Eigen::MatrixXcd V(grid.size(), N);
  for (int n = 0; n < grid.size(); ++n) V.row(n) = values_at(grid.nodes[n]);
  return V;
}

SectionBasis orthonormal_basis(int k, const QuadratureGrid& grid) {
  if (k < 1) throw ValidationError("orthonormal_basis: k must be positive");
  int N = 2 * k + 1;
  // The Gram integrand has azimuthal band 2k and polynomial degree 2k in t.
  if (grid.n_azimuth < 4 * k + 2 || grid.n_polar < 2 * k + 2)
    throw UnderResolvedError("orthonormal_basis: grid does not resolve degree-2k sections");

  Eigen::MatrixXcd M(grid.size(), N);
  for (int n = 0; n < grid.size(); ++n) M.row(n) = monomial_values(k, grid.nodes[n]);
  Eigen::ArrayXd d = grid.weights * std::pow(M_PI, -double(k));
  Eigen::MatrixXcd G = M.adjoint() * d.matrix().asDiagonal() * M;
  G = 0.5 * (G + G.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
  double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmin / lmax < 1e-12)
    throw UnderResolvedError("orthonormal_basis: monomial Gram ill-conditioned");

  Eigen::LLT<Eigen::MatrixXcd> llt(G);
  // rows B = L^{-1} give B G B^dagger = I
  Eigen::MatrixXcd B = llt.matrixL().solve(Eigen::MatrixXcd::Identity(N, N));
  SectionBasis basis;
  basis.k = k;
  basis.N = N;
  basis.coeffs = B;
  basis.orthonormal = true;
  return basis;
}

double pointwise_norm_sq(const SectionBasis& basis, int i, const SpherePoint& x,
                         double u_at_x) {
  double v = std::norm(basis.value(i, x));
  return v * std::exp(-basis.k * (kLogPi + u_at_x));
}

LogSlater log_slater(const SectionBasis& basis, const std::vector<SpherePoint>& config,
                     const Eigen::ArrayXd& u_at) {
  int N = basis.N;
  if (int(config.size()) != N)
    throw ValidationError("log_slater: configuration must have exactly N points");
  if (u_at.size() != N) throw ValidationError("log_slater: u values size mismatch");

  LogSlater out;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      if (config[i].same_point(config[j])) {
        out.finite = false;
        out.log_abs = -std::numeric_limits<double>::infinity();
        return out;
      }

  // Column j holds the section values at x_j, scaled to unit max; the metric
  // factor e^{-k phi(x_j)/2} and the scalings are restored in log space.
  Eigen::MatrixXcd A(N, N);
  double log_scale = 0.0;
  for (int j = 0; j < N; ++j) {
    Eigen::VectorXcd col = basis.values_at(config[j]).transpose();
    double m = col.cwiseAbs().maxCoeff();
    if (m > 0.0) {
      col /= m;
      log_scale += std::log(m);
    }
    A.col(j) = col;
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  double log_det = 0.0;
  bool underflow = false;
  for (int i = 0; i < N; ++i) {
    double p = std::abs(lu.matrixLU()(i, i));
    if (p == 0.0) {
      underflow = true;
      break;
    }
    log_det += std::log(p);
  }
  double metric = 0.5 * basis.k * (double(N) * kLogPi + u_at.sum());
  out.log_abs = underflow ? -1e300 : log_det + log_scale - metric;
  return out;
}

LogSlater log_slater(const SectionBasis& basis, const std::vector<SpherePoint>& config) {
  return log_slater(basis, config, Eigen::ArrayXd::Zero(basis.N));
}

}  // namespace fanogibbs
