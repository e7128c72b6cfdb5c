#include "fanogibbs/functionals.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace fanogibbs {

Eigen::ArrayXd twist_density(const GammaParams& p, const Potential& phi) {
  return (-(p.gamma * phi.u + (1.0 - p.gamma) * p.phi0.u)).exp();
}

double log_twist_integral(const QuadratureGrid& grid, const GammaParams& p,
                          const Potential& phi) {
  // log-sum-exp over nodes; the exponent stays moderate for desk-scale
  // potentials but the guard costs nothing.
  Eigen::ArrayXd expo = -(p.gamma * phi.u + (1.0 - p.gamma) * p.phi0.u);
  double m = expo.maxCoeff();
  return m + std::log(((expo - m).exp() * grid.weights).sum());
}

double energy(const QuadratureGrid& grid, const Potential& phi) {
  Eigen::ArrayXd lap = grid.sht->laplacian(phi.u);
  if ((2.0 + lap).minCoeff() <= 1e-12)
    throw CurvatureError("energy: potential outside the positive-curvature cone");
  return grid.integrate(phi.u) + 0.25 * grid.integrate(phi.u * lap);
}

double energy_of_measure(const QuadratureGrid& grid, const DensityMeasure& mu) {
  Potential phi_mu = solve_curvature_equation(grid, mu);
  Eigen::ArrayXd lap = grid.sht->laplacian(phi_mu.u);
  double e = grid.integrate(phi_mu.u) + 0.25 * grid.integrate(phi_mu.u * lap);
  return e - grid.integrate(phi_mu.u * mu.density);
}

double j_functional(const QuadratureGrid& grid, const Potential& phi) {
  return -energy(grid, phi) + grid.integrate(phi.u);
}

FunctionalReport twisted_ding(const QuadratureGrid& grid, const Potential& phi,
                              const GammaParams& p) {
  FunctionalReport r;
  double e = energy(grid, phi);
  double li = log_twist_integral(grid, p, phi);
  r.breakdown["minus_energy"] = -e;
  r.breakdown["minus_log_integral_over_gamma"] = -li / p.gamma;
  r.value = -e - li / p.gamma;
  r.normalization = "E(psi0)=0, int e^{-psi0}=1";
  return r;
}

FunctionalReport free_energy(const QuadratureGrid& grid, const DensityMeasure& mu,
                             const GammaParams& p) {
  FunctionalReport r;
  double e = energy_of_measure(grid, mu);
  double lin = grid.integrate(p.phi0.u * mu.density);
  DensityMeasure ref(p.phi0.u.exp().inverse(), grid);  // e^{-phi0} as density e^{-u0}
  double ent = entropy(grid, mu, ref);
  r.breakdown["minus_gamma_energy"] = -p.gamma * e;
  r.breakdown["minus_gamma_linear"] = -p.gamma * lin;
  r.breakdown["entropy_rel_dV"] = ent;
  r.value = -p.gamma * (e + lin) + ent;
  r.normalization = "energy rel psi0; entropy rel e^{-phi0}";
  return r;
}

double twisted_mabuchi(const QuadratureGrid& grid, const Potential& phi, const GammaParams& p) {
  return free_energy(grid, ma_measure(grid, phi), p).value;
}

namespace {

Eigen::MatrixXcd gram_matrix(const QuadratureGrid& grid, const Potential& phi,
                             const Eigen::ArrayXd& measure_density, const SectionBasis& basis) {
  Eigen::MatrixXcd V = basis.values_on(grid);
  Eigen::ArrayXd d =
      (-(double(basis.k) * (kLogPi + phi.u))).exp() * measure_density * grid.weights;
  Eigen::MatrixXcd H = V.adjoint() * d.matrix().asDiagonal() * V;
  return 0.5 * (H + H.adjoint()).eval();
}

double log_det_posdef(const Eigen::MatrixXcd& H, const char* who) {
  Eigen::LLT<Eigen::MatrixXcd> llt(H);
  if (llt.info() != Eigen::Success)
    throw UnderResolvedError(std::string(who) + ": Gram matrix not positive definite");
  double acc = 0.0;
  for (int i = 0; i < H.rows(); ++i) acc += std::log(std::real(llt.matrixL()(i, i)));
  return 2.0 * acc;
}

}  // namespace

double l_functional(const QuadratureGrid& grid, const Potential& phi, const GammaParams& p,
                    const SectionBasis& basis) {
  if (!basis.orthonormal)
    throw ValidationError("l_functional: basis must be the reference orthonormal basis");
  Eigen::MatrixXcd H = gram_matrix(grid, phi, twist_density(p, phi), basis);
  double ld = log_det_posdef(H, "l_functional");
  return -ld / (double(basis.N) * (basis.k + p.gamma));
}

double ding_k(const QuadratureGrid& grid, const Potential& phi, const GammaParams& p,
              const SectionBasis& basis) {
  return -l_functional(grid, phi, p, basis) - log_twist_integral(grid, p, phi) / p.gamma;
}

AubinResult solve_aubin(const QuadratureGrid& grid, const GammaParams& p, double tol,
                        int max_iterations) {
  const bool symmetric_reference = (p.phi0.u.abs().maxCoeff() == 0.0);
  if (p.gamma >= 1.0 + 1e-12 || (std::abs(p.gamma - 1.0) <= 1e-12 && !symmetric_reference))
    throw ValidationError("solve_aubin: gamma < 1 required (gamma = 1 only with phi0 = psi0)");

  Potential phi = reference_metric(grid);
  double theta = 0.5;
  double ding = twisted_ding(grid, phi, p).value;
  double best_residual = std::numeric_limits<double>::infinity();
  AubinResult out;
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::ArrayXd rho = twist_density(p, phi);
    rho /= grid.integrate(rho);
    double residual = (0.5 * curvature_density(grid, phi) - rho).abs().maxCoeff();
    best_residual = std::min(best_residual, residual);
    if (residual < tol) {
      out.phi = phi;
      out.residual = residual;
      out.iterations = it;
      out.ding_value = ding;
      return out;
    }
    Potential target = solve_curvature_equation(grid, DensityMeasure(rho, grid),
                                                {1e-6, 1e90});
    Potential next(phi.u + theta * (target.u - phi.u));
    next.u -= grid.integrate(next.u);
    next = Potential(std::move(next.u));
    double next_ding = twisted_ding(grid, next, p).value;
    if (next_ding <= ding + 1e-14) {
      phi = next;
      ding = next_ding;
    } else {
      theta *= 0.5;
      if (theta < 1e-4)
        throw NonConvergenceError("solve_aubin: damping exhausted", best_residual);
    }
  }
  throw NonConvergenceError("solve_aubin: no convergence after max iterations",
                            best_residual);
}

InfEstimate inf_mabuchi(const QuadratureGrid& grid, const GammaParams& p, double tol) {
  InfEstimate out;
  const bool symmetric_reference = (p.phi0.u.abs().maxCoeff() == 0.0);
  bool solvable =
      p.gamma < 1.0 - 1e-12 || (std::abs(p.gamma - 1.0) <= 1e-12 && symmetric_reference);
  if (solvable) {
    AubinResult sol = solve_aubin(grid, p, tol);
    out.value = twisted_mabuchi(grid, sol.phi, p);
    out.is_infimum = true;
    return out;
  }
  if (p.gamma > 1.2)
    throw ValidationError("inf_mabuchi: gamma too far above the solvable regime");
  // Probe branch: damped iterations without a convergence claim; report the
  // best Mabuchi value seen as a certified upper bound.
  Potential phi = reference_metric(grid);
  double best = twisted_mabuchi(grid, phi, p);
  for (int it = 0; it < 60; ++it) {
    Eigen::ArrayXd rho = twist_density(p, phi);
    rho /= grid.integrate(rho);
    Potential target = solve_curvature_equation(grid, DensityMeasure(rho, grid), {1e-6, 1e90});
    Eigen::ArrayXd next_u = phi.u + 0.25 * (target.u - phi.u);
    next_u -= grid.integrate(next_u);
    Potential next(std::move(next_u));
    if ((2.0 + grid.sht->laplacian(next.u)).minCoeff() <= 1e-10) break;
    phi = next;
    best = std::min(best, twisted_mabuchi(grid, phi, p));
  }
  out.value = best;
  out.is_infimum = false;
  return out;
}

}  // namespace fanogibbs
