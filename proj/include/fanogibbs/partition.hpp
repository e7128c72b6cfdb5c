#pragma once

// Partition functions Z_N(-gamma) = int_{X^N} ||det S||_{k phi0}^{-2 gamma/k} (e^{-phi0})^{x N},
// their estimators, the Gibbs-threshold detector, and the verifier suite for
// the chain of inequalities relating -log Z to the quantized and classical
// Ding/Mabuchi infima.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fanogibbs/quantized.hpp"

namespace fanogibbs {

enum class ZMethod { tensor_quadrature, monte_carlo, determinant_identity };

struct PartitionEstimate {
  double log_z = 0.0;
  double std_err = 0.0;  // 0 iff method == determinant_identity
  ZMethod method = ZMethod::monte_carlo;
  std::int64_t n_samples = 0;
  double gamma = 0.0;
  int k = 0;
  bool converged = true;      // log_z is NaN when the refinement test fails
  double half_split_gap = 0.0;
};

// log( N! det H^(k)(phi, mu) ): the exact value of int ||det S||^2_{k phi} mu^{x N}.
double z_determinant_oracle(const QuadratureGrid& grid, int k, const Potential& phi,
                            const DensityMeasure& mu, const SectionBasis& basis);
PartitionEstimate z_determinant_estimate(const QuadratureGrid& grid, int k,
                                         const Potential& phi, const DensityMeasure& mu,
                                         const SectionBasis& basis);

struct ZOptions {
  std::uint64_t seed = 1;
  int n_batches = 64;
  double cluster_fraction = 0.5;  // defensive mixture mass on the cluster component
  double delta_min = 1.0 / 4096.0;
};

// Monte Carlo estimate of log Z_N(-gamma) with i.i.d. base sampling from
// e^{-phi0} defensively mixed with a collision-cluster proposal;
// log-sum-exp aggregation, stderr by batch means.
PartitionEstimate z_estimate(const QuadratureGrid& grid, int k, double gamma,
                             const AnalyticPotential& phi0, const SectionBasis& basis,
                             std::int64_t budget, const ZOptions& opt = {});

// Nested adaptive quadrature path for k = 1 (N = 3) with phi0 = psi0, using
// the SU(2) reduction of the three-point integral; collision singularities
// are handled by forced panel refinement.
PartitionEstimate z_quadrature_k1(double gamma, double rel_tol = 1e-6);

struct GammaDiagnostic {
  double gamma = 0.0;
  double exponent = 0.0;     // fitted growth exponent of Z(eps) in -log2 eps
  double exponent_se = 0.0;  // jackknife over batches
  std::vector<double> shell_log2_mass;
};

struct ThresholdEstimate {
  double gamma_low = 0.0, gamma_high = 0.0;
  std::vector<GammaDiagnostic> evidence;
};

struct DetectOptions {
  std::uint64_t seed = 1;
  std::int64_t budget = 300000;
  int n_batches = 32;
  double gamma_min = 0.3, gamma_max = 1.05;
  double grid_step = 0.025;
  std::vector<double> log2_eps{-3, -4, -5, -6, -7, -8, -9};
};

// Brackets gamma_k = sup{gamma : Z(-gamma) < infinity} by fitting the growth
// exponent of the eps-cutoff partition function (min pairwise chordal
// distance > eps) and locating the sign change of the exponent.
ThresholdEstimate gamma_k_detect(const QuadratureGrid& grid, int k,
                                 const AnalyticPotential& phi0, const SectionBasis& basis,
                                 const DetectOptions& opt = {});

struct VerifierReport {
  std::string name;
  int k = 0;
  double gamma = 0.0;
  double lhs = 0.0, rhs = 0.0, slack = 0.0, std_err = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, double> extra;
};

// -(1/(gamma N)) log Z_N(-gamma) <= (1 + gamma/k) inf_phi D_{k,-gamma} + log(N)/(kN).
VerifierReport verify_prop_key_inequality(const QuadratureGrid& grid, int k, double gamma,
                                          const AnalyticPotential& phi0,
                                          const SectionBasis& basis, std::int64_t budget,
                                          std::uint64_t seed = 1);

// -(1/N) log Z_N(-gamma) <= ((k+gamma)/(k+1)) inf M_{-gamma c_k} + (gamma/k)(C + ...)
// with the smallest workable constant C found by bisection (c_k depends on C).
// variant_gamma_le_1 uses the inf M_{-gamma(1-C/k)} + C/k form instead.
VerifierReport verify_main_theorem(const QuadratureGrid& grid, int k, double gamma,
                                   const AnalyticPotential& phi0, const SectionBasis& basis,
                                   std::int64_t budget, std::uint64_t seed = 1,
                                   bool variant_gamma_le_1 = false);

// -(1/(gamma N)) log Z_N(-gamma) <= inf_{H_k} D_{k,-gamma} + log(N)/(kN).
VerifierReport verify_thm_quantized(const QuadratureGrid& grid, int k, double gamma,
                                    const AnalyticPotential& phi0, const SectionBasis& basis,
                                    std::int64_t budget, std::uint64_t seed = 1);

struct TrendRow {
  int k = 0;
  double minus_log_z_over_n = 0.0;
  double inf_mabuchi_value = 0.0;
  double gap = 0.0;
  double std_err = 0.0;
};

// Finite-k trend of -(1/N) log Z_N(beta) toward inf_H M_beta at beta = 1.
std::vector<TrendRow> trend_beta_one(const QuadratureGrid& grid, const std::vector<int>& ks,
                                     const AnalyticPotential& phi0, std::int64_t budget,
                                     std::uint64_t seed = 1);

}  // namespace fanogibbs
