#include <doctest.h>

#include <cmath>

#include "fanogibbs/rng.hpp"
#include "fanogibbs/sphere.hpp"

using namespace fanogibbs;

namespace {

// azimuth-independent test profile and its rotationally symmetric laplacian
double radial_profile(double t) { return 0.3 * std::exp(0.7 * t); }

Potential radial_potential(const QuadratureGrid& g) {
  Eigen::ArrayXd u(g.size());
  for (int n = 0; n < g.size(); ++n) u[n] = radial_profile(g.nodes[n].t());
  return Potential(std::move(u));
}

Potential random_bump_potential(const QuadratureGrid& g, std::uint64_t seed,
                                double scale = 0.4) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 50; ++attempt) {
    SpherePoint c = SpherePoint::from_angles(std::acos(2 * unif(rng) - 1), 2 * M_PI * unif(rng));
    Potential p = AnalyticPotential::bump(scale * gauss(rng), c, 0.7 + unif(rng)).render(g);
    if ((2.0 + g.sht->laplacian(p.u)).minCoeff() > 1e-6) return p;
  }
  FAIL("could not build a positively curved bump");
  return reference_metric(g);
}

}  // namespace

TEST_CASE("grid weights form a probability measure") {
  QuadratureGrid g = build_grid(64, 64);
  CHECK(g.size() == 4096);
  CHECK(std::abs(g.weights.sum() - 1.0) < 1e-12);

  QuadratureGrid small = build_grid(8, 8);
  CHECK(small.size() == 64);
  CHECK(std::abs(small.weights.sum() - 1.0) < 1e-10);

  QuadratureGrid mid = build_grid(32, 32);
  CHECK(std::abs(mid.integrate(Eigen::ArrayXd::Ones(mid.size())) - 1.0) < 1e-12);

  CHECK_THROWS_AS(build_grid(4, 64), UnderResolvedError);
  CHECK_THROWS_AS(build_grid(64, 4), UnderResolvedError);
}

TEST_CASE("quadrature kills low spherical harmonics exactly") {
  QuadratureGrid g = build_grid(24, 24);
  std::vector<double> row(20);
  for (int l = 1; l <= 10; ++l)
    for (int m = 0; m <= std::min(l, 10); ++m) {
      Eigen::ArrayXd re(g.size()), im(g.size());
      for (int n = 0; n < g.size(); ++n) {
        legendre_row(m, l, g.nodes[n].t(), row.data());
        double ph = g.nodes[n].phi();
        re[n] = row[l - m] * std::cos(m * ph);
        im[n] = row[l - m] * std::sin(m * ph);
      }
      CHECK(std::abs(g.integrate(re)) < 1e-10);
      CHECK(std::abs(g.integrate(im)) < 1e-10);
    }
}

TEST_CASE("spherical harmonic transform round trip and laplacian eigenvalues") {
  QuadratureGrid g = build_grid(32, 32);
  std::vector<double> row(10);
  // f = Y_30 + 0.5 Y_22-type mode
  Eigen::ArrayXd f(g.size());
  for (int n = 0; n < g.size(); ++n) {
    legendre_row(0, 3, g.nodes[n].t(), row.data());
    double a = row[3];
    legendre_row(2, 3, g.nodes[n].t(), row.data());
    double b = row[0] * std::cos(2 * g.nodes[n].phi());
    f[n] = a + 0.5 * b;
  }
  Eigen::ArrayXd back = g.sht->synthesize(g.sht->analyze(f));
  CHECK((back - f).abs().maxCoeff() < 1e-12);
  Eigen::ArrayXd lap = g.sht->laplacian(f);
  Eigen::ArrayXd expected(g.size());
  for (int n = 0; n < g.size(); ++n) {
    legendre_row(0, 3, g.nodes[n].t(), row.data());
    double a = -12.0 * row[3];
    legendre_row(2, 3, g.nodes[n].t(), row.data());
    double b = -6.0 * 0.5 * row[0] * std::cos(2 * g.nodes[n].phi());
    expected[n] = a + b;
  }
  CHECK((lap - expected).abs().maxCoeff() < 1e-10);
}

TEST_CASE("sphere points canonicalize idempotently") {
  SpherePoint p(std::complex<double>(0.3, -0.4), std::complex<double>(-0.5, 0.7));
  CHECK(std::abs(std::norm(p.z0) + std::norm(p.z1) - 1.0) < 1e-12);
  SpherePoint c = p.canonical();
  SpherePoint cc = c.canonical();
  CHECK(c.z0 == cc.z0);
  CHECK(c.z1 == cc.z1);
  // exact-copy collision detection and projective closeness under a phase
  SpherePoint copy = p;
  CHECK(p.same_point(copy));
  std::complex<double> phase = std::polar(1.0, 1.234);
  SpherePoint q(p.z0 * phase, p.z1 * phase);
  CHECK(chordal(p, q) < 1e-12);
  SpherePoint qc = q.canonical(), pc = p.canonical();
  CHECK(std::abs(qc.z0 - pc.z0) < 1e-14);
  CHECK(std::abs(qc.z1 - pc.z1) < 1e-14);
}

TEST_CASE("reference metric is the uniform probability volume") {
  QuadratureGrid g = build_grid(48, 32);
  Potential psi0 = reference_metric(g);
  CHECK(psi0.u.abs().maxCoeff() == 0.0);
  CHECK(psi0.sup_u == 0.0);
  DensityMeasure ma = ma_measure(g, psi0);
  CHECK((ma.density - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(std::abs(ma.mass - 1.0) < 1e-12);
  // int e^{-psi0} = 1 is the weight normalization
  CHECK(std::abs(g.integrate((-psi0.u).exp()) - 1.0) < 1e-12);
}

TEST_CASE("constants drop out of the Monge-Ampere measure") {
  QuadratureGrid g = build_grid(48, 32);
  Potential phi = random_bump_potential(g, 7);
  Potential shifted = phi.shifted(1.7);
  CHECK(std::abs(shifted.sup_u - (phi.sup_u + 1.7)) < 1e-12);
  DensityMeasure a = ma_measure(g, phi);
  DensityMeasure b = ma_measure(g, shifted);
  CHECK((a.density - b.density).abs().maxCoeff() < 1e-9);
}

TEST_CASE("curvature density matches the 1-D radial finite-difference oracle") {
  QuadratureGrid g = build_grid(64, 48);
  Potential phi = radial_potential(g);
  DensityMeasure ma = ma_measure(g, phi);
  const double h = 1e-5;
  for (int ip = 0; ip < g.n_polar; ip += 5) {
    double t = g.t[ip];
    auto fp = [&](double x) {
      return (radial_profile(x + h) - radial_profile(x - h)) / (2 * h);
    };
    double lap = ((1 - (t + h) * (t + h)) * fp(t + h) - (1 - (t - h) * (t - h)) * fp(t - h)) /
                 (2 * h);
    double oracle = 1.0 + 0.5 * lap;
    CHECK(std::abs(ma.density[g.index(ip, 0)] - oracle) < 1e-6);
  }
}

TEST_CASE("Monge-Ampere mass is one on the positive cone") {
  QuadratureGrid g = build_grid(48, 32);
  for (std::uint64_t s = 1; s <= 8; ++s) {
    DensityMeasure ma = ma_measure(g, random_bump_potential(g, s));
    CHECK(std::abs(ma.mass - 1.0) < 1e-8);
  }
}

TEST_CASE("curvature positivity is enforced") {
  QuadratureGrid g = build_grid(48, 32);
  Potential bad = AnalyticPotential::bump(3.0, SpherePoint(1.0, 0.0), 0.5).render(g);
  CHECK_THROWS_AS(ma_measure(g, bad), CurvatureError);
}

TEST_CASE("curvature equation: identity, round trip, residual") {
  QuadratureGrid g = build_grid(64, 48);
  // identity case
  Potential back = solve_curvature_equation(g, ma_measure(g, reference_metric(g)));
  CHECK(back.u.abs().maxCoeff() < 1e-8);

  // round trip on a bump, up to the additive gauge
  Potential phi = random_bump_potential(g, 3);
  Eigen::ArrayXd centered = phi.u - g.integrate(phi.u);
  Potential rec = solve_curvature_equation(g, ma_measure(g, phi));
  CHECK((rec.u - centered).abs().maxCoeff() < 1e-6);

  // residual on a random smooth measure
  Potential gen = random_bump_potential(g, 11, 0.3);
  Eigen::ArrayXd dens = (0.7 * gen.u).exp();
  dens /= g.integrate(dens);
  DensityMeasure mu(dens, g);
  Potential sol = solve_curvature_equation(g, mu);
  DensityMeasure ma = ma_measure(g, sol);
  CHECK((ma.density - mu.density).abs().maxCoeff() < 1e-6);
  CHECK(std::abs(g.integrate(sol.u)) < 1e-10);
}

TEST_CASE("curvature equation rejects bad measures") {
  QuadratureGrid g = build_grid(48, 32);
  DensityMeasure heavy(Eigen::ArrayXd::Constant(g.size(), 2.0), g);
  CHECK_THROWS_AS(solve_curvature_equation(g, heavy), ValidationError);

  // white noise is too rough for the grid: residual test must fire
  auto rng = make_rng(5);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Eigen::ArrayXd noisy(g.size());
  for (int n = 0; n < g.size(); ++n) noisy[n] = unif(rng);
  noisy /= g.integrate(noisy);
  CHECK_THROWS_AS(solve_curvature_equation(g, DensityMeasure(noisy, g)),
                  NonConvergenceError);
}

TEST_CASE("relative entropy basics") {
  QuadratureGrid g = build_grid(32, 32);
  Potential phi = random_bump_potential(g, 21);
  DensityMeasure mu = ma_measure(g, phi);
  DensityMeasure uniform(Eigen::ArrayXd::Ones(g.size()), g);
  CHECK(entropy(g, mu, mu) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(entropy(g, mu, uniform) >= 0.0);
  // constant ratio 1/2 against a mass-2 reference
  DensityMeasure doubled(Eigen::ArrayXd::Constant(g.size(), 2.0), g);
  CHECK(entropy(g, uniform, doubled) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  // nu vanishing where mu charges: +infinity marker
  Eigen::ArrayXd hole = Eigen::ArrayXd::Ones(g.size());
  hole[0] = 0.0;
  CHECK(std::isinf(entropy(g, mu, DensityMeasure(hole, g))));
}

TEST_CASE("entropy is nonnegative for probability pairs") {
  QuadratureGrid g = build_grid(32, 32);
  for (std::uint64_t s = 30; s < 36; ++s) {
    DensityMeasure a = ma_measure(g, random_bump_potential(g, s));
    DensityMeasure b = ma_measure(g, random_bump_potential(g, s + 100));
    CHECK(entropy(g, a, b) >= -1e-12);
  }
}
