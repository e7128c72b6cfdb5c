#pragma once

// Adaptive panel quadrature on the sphere in (t, phi) = (cos theta, azimuth)
// coordinates, dsigma = dt dphi / (4 pi). Panels split where a coarse/fine
// Gauss pair disagrees; panels containing a hint point (a known spike or an
// integrable singularity) are forced down until their contribution is
// negligible, so narrow features cannot be missed by false convergence.
//
// Used for integrals the lat-lon grid cannot resolve: twisted anticanonical
// integrals along geodesic rays in H_k (dips of width e^{-c t}) and the
// N = 3 partition-function quadrature path (chordal power-law singularities).

#include <functional>
#include <vector>

#include "fanogibbs/sphere.hpp"

namespace fanogibbs {

struct AdaptiveOptions {
  double rel_tol = 1e-8;
  double abs_floor = 1e-300;  // panels cheaper than this are accepted outright
  int max_panels = 200000;
  int max_depth = 60;
};

struct AdaptiveResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int evaluations = 0;
  bool converged = true;
};

// f takes a point and returns the integrand; integral is w.r.t. dsigma.
AdaptiveResult adaptive_sphere_integral(const std::function<double(const SpherePoint&)>& f,
                                        const std::vector<SpherePoint>& hints,
                                        const AdaptiveOptions& opt = {});

// Adaptive 1D integral of f on [a, b] with forced refinement toward a
// (for endpoint singularities of integrable power type).
AdaptiveResult adaptive_radial_integral(const std::function<double(double)>& f, double a,
                                        double b, bool singular_left,
                                        const AdaptiveOptions& opt = {});

// Roots of a binary form sum_j c_j z0^j z1^{2k-j} as sphere points; c is
// indexed by the z0-power j (multiplicity listed once per root).
std::vector<SpherePoint> binary_form_roots(const Eigen::VectorXcd& coeffs_by_z0_power);

}  // namespace fanogibbs
