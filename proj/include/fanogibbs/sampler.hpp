#pragma once

// MCMC for the N-particle ensemble mu_beta ~ ||det S||^{2 beta/k} dV^{x N},
// empirical-measure statistics against reference densities, and the one-point
// log-marginal curvature omega_{k,beta} (k = 1 path).

#include <cstdint>
#include <string>
#include <vector>

#include "fanogibbs/sections.hpp"
#include "fanogibbs/sphere.hpp"

namespace fanogibbs {

struct ChainState {
  std::vector<SpherePoint> config;
  double log_density = 0.0;  // unnormalized log target
  std::int64_t step = 0;
  std::string rng_key;
};

struct McmcOptions {
  std::uint64_t seed = 1;
  int max_snapshots = 4000;
  double initial_cap_radius = 0.8;   // chordal
  double target_acceptance = 0.30;
  std::int64_t recompute_every = 10000;
};

struct McmcResult {
  std::vector<ChainState> snapshots;
  double acceptance_rate = 0.0;
  double cap_radius = 0.0;       // frozen after burn-in
  double max_drift = 0.0;        // incremental vs recomputed log density
  double iat = 1.0;              // autocorrelation time of the thinned series
  std::int64_t n_steps = 0;
};

McmcResult mcmc_run(const QuadratureGrid& grid, int k, double beta,
                    const AnalyticPotential& phi0, const SectionBasis& basis,
                    std::int64_t n_steps, const McmcOptions& opt = {});

struct EmpiricalSummary {
  int bins_polar = 0, bins_azimuth = 0;
  Eigen::ArrayXd histogram;   // mass per equal-area bin, sums to 1
  double w1_to_target = 0.0;  // debiased entropic transport distance
  double h_dual_to_target = 0.0;  // spherical-harmonic H^{-1}-type dual norm
  double n_effective = 0.0;
};

struct SummaryOptions {
  int bins_polar = 12, bins_azimuth = 24;
  double sinkhorn_epsilon = 1e-2;
  int sinkhorn_iterations = 300;
};

EmpiricalSummary empirical_summary(const QuadratureGrid& grid,
                                   const std::vector<ChainState>& snapshots,
                                   const DensityMeasure& target, double iat,
                                   const SummaryOptions& opt = {});

// Equal-area binning of a grid density (for summary targets).
Eigen::ArrayXd bin_density(const QuadratureGrid& grid, const DensityMeasure& mu,
                           int bins_polar, int bins_azimuth);

// Density of omega_{k,beta} (curvature of the one-point log-marginal),
// estimated with common-random-number MC for the inner (N-1)-fold integral.
// k = 1 and beta > 0 only.
DensityMeasure omega_k_beta(const QuadratureGrid& grid, int k, double beta,
                            const AnalyticPotential& phi0, const SectionBasis& basis,
                            std::int64_t inner_samples = 2000, std::uint64_t seed = 1);

}  // namespace fanogibbs
