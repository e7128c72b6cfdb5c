#pragma once

// Scalar spherical-harmonic transform on a Gauss-Legendre x uniform-azimuth
// grid. Conventions used throughout the project:
//
//   * points are (theta, phi) with t = cos(theta) at Gauss-Legendre nodes;
//   * the reference measure dsigma = sin(theta) dtheta dphi / (4 pi) is the
//     *probability* measure of the round sphere;
//   * basis functions Y_lm = Pbar_lm(t) e^{i m phi} are orthonormal w.r.t.
//     dsigma, i.e. (1/2) int Pbar_lm Pbar_l'm dt = delta_ll';
//   * laplacian() is the Laplace-Beltrami operator of the unit round sphere,
//     Y_lm -> -l(l+1) Y_lm.
//
// Analysis is exact for band-limited data up to degree l <= n_polar - 1 and
// azimuthal order |m| <= min(l_max, n_azimuth/2 - 1); smooth data converges
// spectrally.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace fanogibbs {

struct GaussLegendre {
  Eigen::ArrayXd nodes;    // ascending in t = cos(theta)
  Eigen::ArrayXd weights;  // sum to 2
};

GaussLegendre gauss_legendre(int n);

// Normalized associated Legendre values Pbar_lm(t) for l = m..lmax at one t.
void legendre_row(int m, int lmax, double t, double* out);

class SphereTransform {
 public:
  SphereTransform(int n_polar, int n_azimuth);

  int n_polar() const { return n_polar_; }
  int n_azimuth() const { return n_azimuth_; }
  int lmax() const { return lmax_; }
  int mmax() const { return mmax_; }
  const GaussLegendre& rule() const { return gl_; }

  // Coefficients are stored packed: for m = 0..mmax, entries l = m..lmax.
  using Coeffs = std::vector<Eigen::VectorXcd>;

  Coeffs analyze(const Eigen::ArrayXd& values) const;
  Eigen::ArrayXd synthesize(const Coeffs& c) const;
  // Synthesis of a coefficient set at one arbitrary point.
  double synthesize_at(const Coeffs& c, double t, double phi) const;

  Eigen::ArrayXd laplacian(const Eigen::ArrayXd& values) const;
  // Solves lap u = rhs with mean(u) = 0; the l=0 mode of rhs is dropped.
  Eigen::ArrayXd solve_poisson(const Eigen::ArrayXd& rhs) const;

 private:
  int n_polar_, n_azimuth_, lmax_, mmax_;
  GaussLegendre gl_;
  // legendre_[m]: (n_polar x (lmax-m+1)) matrix of Pbar_lm(t_i)
  std::vector<Eigen::MatrixXd> legendre_;
  Eigen::MatrixXcd fourier_;  // n_azimuth x (mmax+1), e^{i m phi_a}
};

}  // namespace fanogibbs
