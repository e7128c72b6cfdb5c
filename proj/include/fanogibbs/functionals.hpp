#pragma once

// Functionals on the space H of positively curved metrics and on P(X):
// Monge-Ampere energy E, pluricomplex energy of a measure, J, the twisted
// Ding / free-energy / Mabuchi family at parameter gamma = -beta, their
// finite-k approximations L_k and D_{k,-gamma}, and the variational
// continuity-equation solver (critical point of the twisted Ding).

#include <map>
#include <string>

#include "fanogibbs/sections.hpp"
#include "fanogibbs/sphere.hpp"

namespace fanogibbs {

struct GammaParams {
  double gamma = 1.0;  // gamma = -beta, nonzero
  int k = 1;
  Potential phi0;      // metric with dV = e^{-phi0}; u0 = phi0 - psi0 on the grid

  GammaParams(double g, int kk, Potential p0) : gamma(g), k(kk), phi0(std::move(p0)) {
    if (gamma == 0.0) throw ValidationError("GammaParams: gamma must be nonzero");
  }
};

struct FunctionalReport {
  double value = 0.0;
  std::map<std::string, double> breakdown;  // value == sum of parts
  std::string normalization;
};

// Density of e^{-(gamma phi + (1-gamma) phi0)} w.r.t. dsigma.
Eigen::ArrayXd twist_density(const GammaParams& p, const Potential& phi);
// log int_X e^{-(gamma phi + (1-gamma) phi0)}.
double log_twist_integral(const QuadratureGrid& grid, const GammaParams& p, const Potential& phi);

// E(phi) = (1/(2V)) int (phi-psi0) (dd^c phi + dd^c psi0); E(psi0) = 0, dE = MA.
double energy(const QuadratureGrid& grid, const Potential& phi);

// Pluricomplex energy E(mu) = E(phi_mu) - int (phi_mu - psi0) dmu >= 0.
double energy_of_measure(const QuadratureGrid& grid, const DensityMeasure& mu);

// J(phi) = -E(phi) + int (phi - psi0) MA(psi0) >= 0.
double j_functional(const QuadratureGrid& grid, const Potential& phi);

// Twisted Ding  D_{-gamma}(phi) = -E(phi) - (1/gamma) log int e^{-(gamma phi + (1-gamma) phi0)}.
FunctionalReport twisted_ding(const QuadratureGrid& grid, const Potential& phi,
                              const GammaParams& p);

// Free energy F_{-gamma}(mu) = -gamma (E(mu) + int (phi0-psi0) dmu) + Ent(mu | e^{-phi0}).
// Equivalently -gamma E(mu) + Ent(mu | e^{-(gamma psi0 + (1-gamma) phi0)}); this is the
// form whose critical point is the continuity-equation solution.
FunctionalReport free_energy(const QuadratureGrid& grid, const DensityMeasure& mu,
                             const GammaParams& p);

// Twisted Mabuchi  M_{-gamma}(phi) = F_{-gamma}(MA(phi)).
double twisted_mabuchi(const QuadratureGrid& grid, const Potential& phi, const GammaParams& p);

// L_k(phi) = -(1/(N(k+gamma))) log det H^(k)(phi, e^{-(gamma phi + (1-gamma) phi0)});
// satisfies L_k(phi + c) = L_k(phi) + c.
double l_functional(const QuadratureGrid& grid, const Potential& phi, const GammaParams& p,
                    const SectionBasis& basis);

// D_{k,-gamma}(phi) = -L_k(phi) - (1/gamma) log int e^{-(gamma phi + (1-gamma) phi0)}.
double ding_k(const QuadratureGrid& grid, const Potential& phi, const GammaParams& p,
              const SectionBasis& basis);

struct AubinResult {
  Potential phi;
  double residual = 0.0;  // sup-norm fixed-point residual
  int iterations = 0;
  double ding_value = 0.0;
};

// Damped fixed-point iteration for MA(phi) = e^{-(gamma phi+(1-gamma) phi0)} / int(...),
// the critical-point equation of D_{-gamma}. Iterates are recentred by
// int (phi - psi0) dsigma = 0; damping halves when D_{-gamma} fails to decrease.
AubinResult solve_aubin(const QuadratureGrid& grid, const GammaParams& p, double tol = 1e-6,
                        int max_iterations = 400);

struct InfEstimate {
  double value = 0.0;
  bool is_infimum = false;  // false: certified upper bound only
};

// inf_H M_{-gamma} via the solver; upper-bound flag outside the solvable regime.
InfEstimate inf_mabuchi(const QuadratureGrid& grid, const GammaParams& p, double tol = 1e-6);

}  // namespace fanogibbs
