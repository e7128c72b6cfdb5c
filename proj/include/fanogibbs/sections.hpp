#pragma once

// H^0(P^1, -kK) = binary forms of degree 2k, N = 2k+1. The monomial frame is
// M_j = z0^j z1^{2k-j}, j = 0..2k, evaluated on normalized homogeneous
// coordinates; pointwise norms carry the metric factor e^{-k phi} with
// phi = log(pi) + u in that trivialization.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "fanogibbs/sphere.hpp"

namespace fanogibbs {

struct SectionBasis {
  int k = 0;
  int N = 0;                 // 2k+1
  Eigen::MatrixXcd coeffs;   // row i = coefficients of s_i in the monomial frame
  bool orthonormal = false;  // Gram w.r.t. H^(k)(psi0, e^{-psi0}) is identity

  std::complex<double> value(int i, const SpherePoint& x) const;
  // All sections at one point: row vector of length N.
  Eigen::RowVectorXcd values_at(const SpherePoint& x) const;
  // Node-by-section value matrix on a grid (cached by callers).
  Eigen::MatrixXcd values_on(const QuadratureGrid& grid) const;
};

// Monomial values (z0^j z1^{2k-j})_j at one point.
Eigen::RowVectorXcd monomial_values(int k, const SpherePoint& x);

// Basis orthonormal w.r.t. (s,t) -> int s conj(t) e^{-k psi0} e^{-psi0}.
SectionBasis orthonormal_basis(int k, const QuadratureGrid& grid);

// |s_i(x)|^2 e^{-k phi(x)}; u_at_x = (phi - psi0)(x).
double pointwise_norm_sq(const SectionBasis& basis, int i, const SpherePoint& x,
                         double u_at_x = 0.0);

struct LogSlater {
  double log_abs = 0.0;
  bool finite = true;
};

// log || det S^(k) ||_{k phi} at an N-point configuration; u_at[j] is
// (phi - psi0)(x_j). finite = false only on exact coordinate collision.
LogSlater log_slater(const SectionBasis& basis, const std::vector<SpherePoint>& config,
                     const Eigen::ArrayXd& u_at);
LogSlater log_slater(const SectionBasis& basis, const std::vector<SpherePoint>& config);

}  // namespace fanogibbs
