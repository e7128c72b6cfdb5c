#include <doctest.h>

#include <cmath>

#include "fanogibbs/partition.hpp"
#include "fanogibbs/rng.hpp"

using namespace fanogibbs;

TEST_CASE("determinant oracle: log N! at the symmetric point") {
  QuadratureGrid g = build_grid(48, 32);
  for (int k : {1, 2}) {
    SectionBasis b = orthonormal_basis(k, g);
    Potential psi0 = reference_metric(g);
    DensityMeasure dv(Eigen::ArrayXd::Ones(g.size()), g);
    double expect = std::lgamma(double(b.N) + 1.0);  // log 6, log 120
    CHECK(z_determinant_oracle(g, k, psi0, dv, b) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("determinant identity vs Monte Carlo on random pairs") {
  QuadratureGrid g = build_grid(32, 32);
  auto rng = make_rng(6);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k : {1, 2}) {
    SectionBasis b = orthonormal_basis(k, g);
    for (int pair = 0; pair < 3; ++pair) {
      // random smooth (phi, mu): the identity holds for any measure, so the
      // in-test MC samples the discrete quadrature measure directly
      Eigen::ArrayXd u(g.size());
      SpherePoint c = SpherePoint::from_angles(std::acos(2 * unif(rng) - 1),
                                               2 * M_PI * unif(rng));
      for (int n = 0; n < g.size(); ++n) {
        double d = chordal(g.nodes[n], c);
        u[n] = 0.3 * gauss(rng) / 10.0 + 0.25 * std::exp(-d * d);
      }
      Potential phi(std::move(u));
      Eigen::ArrayXd dens = (0.4 * phi.u).exp() + 0.2;
      DensityMeasure mu(dens, g);
      double oracle = z_determinant_oracle(g, k, phi, mu, b);

      std::vector<double> node_cdf(g.size());
      double acc = 0.0;
      for (int n = 0; n < g.size(); ++n) {
        acc += g.weights[n] * mu.density[n];
        node_cdf[n] = acc;
      }
      int n_mc = 20000;
      std::vector<double> vals(n_mc);
      std::vector<SpherePoint> cfg(b.N);
      Eigen::ArrayXd u_at(b.N);
      for (int s = 0; s < n_mc; ++s) {
        for (int i = 0; i < b.N; ++i) {
          double r = unif(rng) * mu.mass;
          int idx = int(std::lower_bound(node_cdf.begin(), node_cdf.end(), r) -
                        node_cdf.begin());
          idx = std::min(idx, int(g.size()) - 1);
          cfg[i] = g.nodes[idx];
          u_at[i] = phi.u[idx];
        }
        LogSlater ls = log_slater(b, cfg, u_at);
        vals[s] = ls.finite ? 2.0 * ls.log_abs : -1e300;
      }
      double m = *std::max_element(vals.begin(), vals.end());
      double mean = 0.0;
      for (double v : vals) mean += std::exp(v - m);
      mean /= n_mc;
      double log_mc = m + std::log(mean) + b.N * std::log(mu.mass) +
                      std::lgamma(double(b.N) + 1.0);
      double var = 0.0;
      for (double v : vals) var += std::pow(std::exp(v - m) - mean, 2);
      double se = std::sqrt(var / n_mc / (n_mc - 1.0)) / mean;  // se of log via delta method
      CHECK(std::abs(log_mc - oracle) < 3.0 * std::max(se, 5e-3));
    }
  }
}

TEST_CASE("MC estimator agrees with the determinant oracle at exponent two") {
  QuadratureGrid g = build_grid(32, 32);
  SectionBasis b = orthonormal_basis(1, g);
  ZOptions opt;
  opt.seed = 2024;
  PartitionEstimate z =
      z_estimate(g, 1, -1.0, AnalyticPotential::fubini_study(), b, 200000, opt);
  CHECK(z.converged);
  CHECK(std::abs(z.log_z - std::log(6.0)) < 3.0 * z.std_err);
}

TEST_CASE("quadrature path: exact at exponent two, matches MC at gamma=0.3") {
  PartitionEstimate exact = z_quadrature_k1(-1.0);
  CHECK(std::abs(exact.log_z - std::log(6.0)) < 5e-4);

  PartitionEstimate q = z_quadrature_k1(0.3);
  QuadratureGrid g = build_grid(32, 32);
  SectionBasis b = orthonormal_basis(1, g);
  ZOptions opt;
  opt.seed = 31;
  PartitionEstimate mc =
      z_estimate(g, 1, 0.3, AnalyticPotential::fubini_study(), b, 150000, opt);
  CHECK(mc.converged);
  double comb = std::sqrt(mc.std_err * mc.std_err + q.std_err * q.std_err);
  CHECK(std::abs(q.log_z - mc.log_z) < 3.0 * std::max(comb, 1e-3));
}

TEST_CASE("estimates are stable under budget doubling and basis rotation") {
  QuadratureGrid g = build_grid(32, 32);
  SectionBasis b = orthonormal_basis(1, g);
  ZOptions opt;
  opt.seed = 5;
  PartitionEstimate z1 =
      z_estimate(g, 1, 0.3, AnalyticPotential::fubini_study(), b, 100000, opt);
  PartitionEstimate z2 =
      z_estimate(g, 1, 0.3, AnalyticPotential::fubini_study(), b, 200000, opt);
  CHECK(std::abs(z1.log_z - z2.log_z) < 2.0 * (z1.std_err + z2.std_err));

  // unitary rotation of the orthonormal basis leaves Z invariant
  SectionBasis rotated = b;
  auto rng = make_rng(8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd A(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) A(i, j) = std::complex<double>(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
  rotated.coeffs = Eigen::MatrixXcd(qr.householderQ()) * b.coeffs;
  ZOptions opt2;
  opt2.seed = 55;
  PartitionEstimate z3 =
      z_estimate(g, 1, 0.3, AnalyticPotential::fubini_study(), rotated, 100000, opt2);
  double comb = std::sqrt(z1.std_err * z1.std_err + z3.std_err * z3.std_err);
  CHECK(std::abs(z1.log_z - z3.log_z) < 3.0 * comb);
}

TEST_CASE("positive beta estimates are finite and cross-validated") {
  QuadratureGrid g = build_grid(32, 32);
  SectionBasis b = orthonormal_basis(1, g);
  for (double beta : {0.5, 1.0, 2.0}) {
    ZOptions opt;
    opt.seed = 77;
    opt.cluster_fraction = 0.05;
    PartitionEstimate mc =
        z_estimate(g, 1, -beta, AnalyticPotential::fubini_study(), b, 60000, opt);
    CHECK(mc.converged);
    CHECK(std::isfinite(mc.log_z));
    PartitionEstimate q = z_quadrature_k1(-beta);
    double comb = std::sqrt(mc.std_err * mc.std_err + q.std_err * q.std_err);
    CHECK(std::abs(mc.log_z - q.log_z) < 3.0 * std::max(comb, 1e-3));
  }
}

TEST_CASE("divergent exponent is flagged by the refinement test") {
  QuadratureGrid g = build_grid(32, 32);
  SectionBasis b = orthonormal_basis(1, g);
  ZOptions opt;
  opt.seed = 13;
  PartitionEstimate z =
      z_estimate(g, 1, 0.9, AnalyticPotential::fubini_study(), b, 100000, opt);
  CHECK_FALSE(z.converged);
  CHECK(!std::isfinite(z.log_z));
}

TEST_CASE("threshold detector brackets gamma_1 = 2/3") {
  QuadratureGrid g = build_grid(32, 32);
  SectionBasis b = orthonormal_basis(1, g);
  DetectOptions opt;
  opt.seed = 3;
  opt.budget = 250000;
  opt.gamma_min = 0.1;
  ThresholdEstimate t = gamma_k_detect(g, 1, AnalyticPotential::fubini_study(), b, opt);
  CHECK(t.gamma_low < 2.0 / 3.0 + 1e-9);
  CHECK(t.gamma_high > 2.0 / 3.0 - 1e-9);
  CHECK(t.gamma_high - t.gamma_low <= 0.1);
  // convergent scan end has a negative growth exponent
  CHECK(t.evidence.front().exponent < 0.0);
}

TEST_CASE("key inequality verifier reports nonnegative slack") {
  QuadratureGrid g = build_grid(48, 32);
  SectionBasis b = orthonormal_basis(1, g);
  for (double gamma : {0.5, 2.0 / 3.0 - 0.05}) {
    VerifierReport r = verify_prop_key_inequality(g, 1, gamma,
                                                  AnalyticPotential::fubini_study(), b,
                                                  80000, 17);
    CHECK(r.slack >= -3.0 * r.std_err);
  }
  // exact left side at the determinant point gamma = -k
  VerifierReport r = verify_prop_key_inequality(g, 1, -1.0,
                                                AnalyticPotential::fubini_study(), b,
                                                10000, 17);
  CHECK(r.std_err == 0.0);
  CHECK(r.slack >= -1e-9);
}

TEST_CASE("quantized theorem verifier at gamma = 0.5") {
  QuadratureGrid g = build_grid(48, 32);
  SectionBasis b = orthonormal_basis(1, g);
  VerifierReport r = verify_thm_quantized(g, 1, 0.5, AnalyticPotential::fubini_study(), b,
                                          80000, 23);
  CHECK(r.slack >= -3.0 * r.std_err);
}

TEST_CASE("main theorem verifier produces a finite constant") {
  QuadratureGrid g = build_grid(48, 32);
  SectionBasis b = orthonormal_basis(1, g);
  VerifierReport r =
      verify_main_theorem(g, 1, 0.5, AnalyticPotential::fubini_study(), b, 80000, 29);
  CHECK(r.extra.count("C"));
  CHECK(r.extra["C"] < 100.0);
  CHECK(r.slack >= -1e-9);
  VerifierReport v =
      verify_main_theorem(g, 1, 0.5, AnalyticPotential::fubini_study(), b, 80000, 29, true);
  CHECK(v.extra["C"] < 100.0);
  CHECK(v.slack >= -1e-9);
}
