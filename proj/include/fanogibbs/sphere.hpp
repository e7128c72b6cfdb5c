#pragma once

// Geometry of X = P^1 with the anticanonical bundle -K = O(2).
//
// Conventions (used by every module):
//   * a point is a unit spinor (z0, z1), |z0|^2 + |z1|^2 = 1, identified up
//     to phase; (theta, phi) maps to (cos(theta/2), sin(theta/2) e^{i phi});
//   * the reference metric psi0 on -K is Fubini-Study with the additive
//     constant fixed so that the induced volume form e^{-psi0} is the uniform
//     probability measure dsigma on the sphere; in the normalized homogeneous
//     trivialization this means psi0 == log(pi) pointwise;
//   * potentials are stored as u = phi - psi0 on the grid; e^{-phi} has
//     density e^{-u} w.r.t. dsigma;
//   * V = int (dd^c psi0)^1 = deg O(2) = 2; dd^c(psi0+u) = (2 + lap u) dsigma
//     with lap the round-sphere Laplace-Beltrami operator, so the normalized
//     Monge-Ampere measure is MA(psi0+u) = (1 + lap u / 2) dsigma;
//   * chordal distance d(x,y) = 2 |z0(x) z1(y) - z1(x) z0(y)| in [0, 2].

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "fanogibbs/errors.hpp"
#include "fanogibbs/sht.hpp"

namespace fanogibbs {

inline constexpr double kLogPi = 1.1447298858494001741;  // psi0 in the homogeneous frame
inline constexpr double kVolume = 2.0;                   // deg O(2), hard-coded for P^1

struct SpherePoint {
  std::complex<double> z0, z1;

  SpherePoint() : z0(1.0), z1(0.0) {}
  SpherePoint(std::complex<double> a, std::complex<double> b);
  static SpherePoint from_angles(double theta, double phi);

  double t() const { return std::norm(z0) - std::norm(z1); }  // cos(theta)
  double theta() const { return std::atan2(2.0 * std::abs(z0 * z1), t()); }
  double phi() const { return std::arg(z1 * std::conj(z0)); }

  // Phase gauge: first nonzero coordinate real positive. Idempotent.
  SpherePoint canonical() const;
  bool same_point(const SpherePoint& o) const;  // exact coordinate equality (canonical gauge)
};

double chordal(const SpherePoint& a, const SpherePoint& b);

// Unitary taking the north pole (1,0) to `center`; columns form a frame.
struct SphereFrame {
  std::complex<double> a, b;  // U = [[a, -conj(b)], [b, conj(a)]]
  explicit SphereFrame(const SpherePoint& center);
  // Point at chordal distance d from the center, azimuth psi in the frame.
  SpherePoint at(double d, double psi) const;
};

struct QuadratureGrid {
  int n_polar = 0, n_azimuth = 0;
  Eigen::ArrayXd theta, t, phi;  // axes; t ascending
  std::vector<SpherePoint> nodes;
  Eigen::ArrayXd weights;  // dsigma-weights, sum to 1
  std::shared_ptr<const SphereTransform> sht;

  int size() const { return n_polar * n_azimuth; }
  int index(int ip, int ia) const { return ip * n_azimuth + ia; }
  double integrate(const Eigen::ArrayXd& f) const { return (f * weights).sum(); }
};

QuadratureGrid build_grid(int n_polar, int n_azimuth);

// A positively curved metric phi = psi0 + u on -K, sampled on grid nodes.
struct Potential {
  Eigen::ArrayXd u;
  double sup_u = 0.0;

  Potential() = default;
  explicit Potential(Eigen::ArrayXd values) : u(std::move(values)), sup_u(u.maxCoeff()) {}
  Potential shifted(double c) const { return Potential(u + c); }
};

// A measure with density w.r.t. dsigma = e^{-psi0}.
struct DensityMeasure {
  Eigen::ArrayXd density;
  double mass = 0.0;

  DensityMeasure() = default;
  DensityMeasure(Eigen::ArrayXd d, const QuadratureGrid& grid)
      : density(std::move(d)), mass(grid.integrate(density)) {}
};

Potential reference_metric(const QuadratureGrid& grid);

// Normalized Monge-Ampere measure (1/V)(dd^c phi)^1; throws CurvatureError if
// the curvature density is not positive at every node (tolerance 1e-12).
DensityMeasure ma_measure(const QuadratureGrid& grid, const Potential& phi);

// Curvature density 2 + lap u of dd^c(psi0+u) without the positivity check.
Eigen::ArrayXd curvature_density(const QuadratureGrid& grid, const Potential& phi);

struct CurvatureSolveOptions {
  double mass_tol = 1e-8;
  double residual_tol = 1e-5;  // sup-norm of MA(phi_mu) - mu
};

// Inverts MA: returns phi_mu with MA(phi_mu) = mu, normalized so that
// int (phi_mu - psi0) dsigma = 0. Linear (Poisson) for n = 1.
Potential solve_curvature_equation(const QuadratureGrid& grid, const DensityMeasure& mu,
                                   const CurvatureSolveOptions& opt = {});

// Ent(mu | nu) = int log(dmu/dnu) dmu; +infinity if mu charges a nu-null node.
double entropy(const QuadratureGrid& grid, const DensityMeasure& mu, const DensityMeasure& nu);

// Analytic potential presets for phi0 = psi0 + u0 ("fs", "bump(a, center)").
// Used where points fall off the grid (MC configurations, MCMC chains).
struct AnalyticPotential {
  double amplitude = 0.0;       // u0 = amplitude * exp(-(chordal/width)^2)
  SpherePoint center;           // bump center
  double width = 1.0;

  static AnalyticPotential fubini_study() { return {}; }
  static AnalyticPotential bump(double a, const SpherePoint& c, double w = 1.0);

  bool is_reference() const { return amplitude == 0.0; }
  double u0(const SpherePoint& x) const;
  Potential render(const QuadratureGrid& grid) const;
};

}  // namespace fanogibbs
