#pragma once

// The quantized space H_k = GL(N,C)/U(N) of Hermitian metrics on
// H^0(P^1, -kK), in coordinates fixed by the reference orthonormal basis.
// <a, b>_H = b^dagger H a for coefficient columns a, b; H(s,s) = int |s|^2_{k phi} mu
// for the Gram points H^(k)(phi, mu).

#include <vector>

#include "fanogibbs/functionals.hpp"
#include "fanogibbs/sections.hpp"

namespace fanogibbs {

struct HermitianMetricK {
  int k = 0;
  Eigen::MatrixXcd H;

  HermitianMetricK() = default;
  HermitianMetricK(int kk, Eigen::MatrixXcd m);  // checks hermiticity and positivity
  static HermitianMetricK identity(int k);
  double log_det() const;
};

struct BergmanDensity {
  Eigen::ArrayXd rho;              // rho_{k phi} pointwise (unit mean against B)
  Eigen::ArrayXd measure_density;  // B_{k phi} density w.r.t. dsigma
  double mass = 0.0;               // always 1 up to rounding
};

// H^(k)(phi, mu) in the reference basis.
HermitianMetricK gram(const QuadratureGrid& grid, const Potential& phi,
                      const DensityMeasure& mu, const SectionBasis& basis);

// FS(H) = k^{-1} log( (1/N) sum |s_i^H|^2 ); with the unit-mass normalization
// of psi0 this maps the identity to psi0 exactly.
Potential fs_map(const QuadratureGrid& grid, const HermitianMetricK& H,
                 const SectionBasis& basis);

// Bergman density of H^(k)(phi, e^{-(gamma phi + (1-gamma) phi0)}).
BergmanDensity bergman_density(const QuadratureGrid& grid, const Potential& phi,
                               const GammaParams& p, const SectionBasis& basis);

// D_{k,-gamma}(H) = (1/(kN)) log det H - (1/gamma) log int e^{-(gamma FS(H)+(1-gamma) phi0)}.
double quantized_ding(const QuadratureGrid& grid, const HermitianMetricK& H,
                      const GammaParams& p, const SectionBasis& basis);

// Donaldson map T(H) = H^(k)(FS(H), e^{-(gamma FS(H)+(1-gamma) phi0)});
// asserts the monotone decrease of D_{k,-gamma} up to 1e-10.
HermitianMetricK donaldson_step(const QuadratureGrid& grid, const HermitianMetricK& H,
                                const GammaParams& p, const SectionBasis& basis);

struct MinimizeResult {
  HermitianMetricK H;
  double value = 0.0;
  bool diverged = false;           // unbounded below along the trailing direction
  Eigen::VectorXd last_direction;  // log-eigenvalues of the last iterate (gauge-fixed)
  int donaldson_steps = 0;
  int gradient_steps = 0;
};

// Donaldson iteration to stall, then descent in the log-Hermitian chart with
// trace-zero gauge and backtracking.
MinimizeResult minimize_quantized_ding(const QuadratureGrid& grid, const GammaParams& p,
                                       const SectionBasis& basis, double tol = 1e-10);

struct RaySlope {
  double slope = 0.0;
  double extrapolation_gap = 0.0;  // |last two slope estimates| disagreement
};

struct DeltaKResult {
  double delta = 0.0;
  int n_rays = 0;
  double bisection_width = 0.0;
  std::vector<double> ray_crossings;  // per-ray zero crossings actually bracketed
};

struct DeltaKOptions {
  std::vector<double> t_values{6.0, 8.0, 10.0};
  double gamma_lo = 0.25, gamma_hi = 3.0;
  double bisect_tol = 0.01;
  std::uint64_t seed = 1;
};

// Coercivity threshold of D_{k,-gamma} on H_k estimated from geodesic-ray
// slopes: the gamma at which the minimal sampled slope crosses zero. Upper
// bound, non-increasing as the (seeded, nested) ray family grows.
DeltaKResult delta_k_estimate(const QuadratureGrid& grid, int k, const GammaParams& p,
                              int n_rays, const DeltaKOptions& opt = {});

// Slope of t -> D_{k,-gamma}(H0^{1/2} exp(t Lambda) H0^{1/2}) for one ray,
// with adaptive integration of the twisted FS integral (the dips shrink like
// e^{-ct} and leave any fixed grid). Exposed for tests.
RaySlope ray_slope(const QuadratureGrid& grid, const GammaParams& p, const SectionBasis& basis,
                   const Eigen::MatrixXcd& frame_columns, const Eigen::VectorXd& lambda,
                   double gamma, const std::vector<double>& t_values);

}  // namespace fanogibbs
