#include <doctest.h>

#include <cmath>
#include <complex>

#include "fanogibbs/rng.hpp"
#include "fanogibbs/sections.hpp"

using namespace fanogibbs;

namespace {

SpherePoint random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return SpherePoint::from_angles(std::acos(2 * unif(rng) - 1), 2 * M_PI * unif(rng));
}

// quadrature Gram of an arbitrary coefficient basis, recomputed from scratch
Eigen::MatrixXcd quadrature_gram(const SectionBasis& b, const QuadratureGrid& g) {
  Eigen::MatrixXcd V = b.values_on(g);
  Eigen::ArrayXd d = g.weights * std::pow(M_PI, -double(b.k));
  return V.adjoint() * d.matrix().asDiagonal() * V;
}

}  // namespace

TEST_CASE("dimension count N = 2k+1") {
  QuadratureGrid g = build_grid(32, 32);
  for (int k = 1; k <= 5; ++k) {
    SectionBasis b = orthonormal_basis(k, g);
    CHECK(b.N == 2 * k + 1);
    CHECK(b.coeffs.rows() == b.N);
  }
}

TEST_CASE("orthonormal basis for k=1 is a diagonal rescaling of the monomials") {
  QuadratureGrid g = build_grid(32, 32);
  SectionBasis b = orthonormal_basis(1, g);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(b.coeffs(i, j)) < 1e-10 * std::abs(b.coeffs(i, i)));
}

TEST_CASE("returned Gram is the identity") {
  QuadratureGrid g = build_grid(48, 32);
  for (int k : {1, 2}) {
    SectionBasis b = orthonormal_basis(k, g);
    Eigen::MatrixXcd G = quadrature_gram(b, g);
    CHECK((G - Eigen::MatrixXcd::Identity(b.N, b.N)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("grid too coarse for the requested k is rejected") {
  QuadratureGrid g = build_grid(8, 8);
  CHECK_THROWS_AS(orthonormal_basis(4, g), UnderResolvedError);
}

TEST_CASE("pointwise norms: zeros, symmetry, closed form") {
  QuadratureGrid g = build_grid(32, 32);
  SectionBasis b = orthonormal_basis(1, g);
  // z0^2 section (j = 2 in the monomial frame) vanishes at (0,1)
  CHECK(pointwise_norm_sq(b, 2, SpherePoint(0.0, 1.0)) < 1e-28);

  // SU(2) symmetry: sum_i |s_i|^2_{k psi0} is constant
  auto rng = make_rng(42);
  double ref_total = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    SpherePoint x = random_point(rng);
    double total = 0.0;
    for (int i = 0; i < 3; ++i) total += pointwise_norm_sq(b, i, x);
    if (trial == 0) ref_total = total;
    CHECK(total == doctest::Approx(ref_total).epsilon(1e-10));
  }

  // hand-integral oracle: |s_2|^2_{psi0} at x = (1,0) equals
  // 1 / int_0^1 (1-v)^2 dv once the pi factors of the Gram weight and the
  // pointwise metric cancel; Simpson on the 1-D integral is independent of
  // the sphere quadrature.
  int n = 20001;
  double h = 1.0 / (n - 1), simpson = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = i * h, f = (1 - v) * (1 - v);
    simpson += f * ((i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  simpson *= h / 3.0;
  CHECK(pointwise_norm_sq(b, 2, SpherePoint(1.0, 0.0)) ==
        doctest::Approx(1.0 / simpson).epsilon(1e-10));
}

TEST_CASE("log slater: collisions, antisymmetry, direct oracle") {
  QuadratureGrid g = build_grid(32, 32);
  SectionBasis b = orthonormal_basis(1, g);
  auto rng = make_rng(3);

  std::vector<SpherePoint> col{random_point(rng), random_point(rng), SpherePoint(1.0, 0.0)};
  col[1] = col[0];
  CHECK_FALSE(log_slater(b, col).finite);

  std::vector<SpherePoint> cfg{random_point(rng), random_point(rng), random_point(rng)};
  LogSlater a = log_slater(b, cfg);
  std::swap(cfg[0], cfg[2]);
  LogSlater s = log_slater(b, cfg);
  CHECK(a.finite);
  CHECK(a.log_abs == doctest::Approx(s.log_abs).epsilon(1e-12));

  // three equally spaced equator points against a direct 3x3 determinant
  std::vector<SpherePoint> eq;
  for (int i = 0; i < 3; ++i)
    eq.push_back(SpherePoint::from_angles(M_PI / 2, 2.0 * M_PI * i / 3.0));
  Eigen::Matrix3cd M;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) M(i, j) = b.value(i, eq[j]);
  double oracle = std::log(std::abs(M.determinant())) - 0.5 * 3.0 * kLogPi;
  CHECK(log_slater(b, eq).log_abs == doctest::Approx(oracle).epsilon(1e-12));

  std::vector<SpherePoint> wrong{eq[0], eq[1]};
  CHECK_THROWS_AS(log_slater(b, wrong), ValidationError);
}

TEST_CASE("metric shift moves log slater by -Nkc/2") {
  QuadratureGrid g = build_grid(32, 32);
  auto rng = make_rng(9);
  for (int k : {1, 2}) {
    SectionBasis b = orthonormal_basis(k, g);
    std::vector<SpherePoint> cfg;
    for (int i = 0; i < b.N; ++i) cfg.push_back(random_point(rng));
    double c = 0.37;
    LogSlater base = log_slater(b, cfg, Eigen::ArrayXd::Zero(b.N));
    LogSlater shifted = log_slater(b, cfg, Eigen::ArrayXd::Constant(b.N, c));
    CHECK(shifted.log_abs - base.log_abs ==
          doctest::Approx(-0.5 * b.N * k * c).epsilon(1e-12));
  }
}

TEST_CASE("basis change shifts log slater by a configuration-independent constant") {
  QuadratureGrid g = build_grid(32, 32);
  SectionBasis b = orthonormal_basis(2, g);
  SectionBasis mixed = b;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(b.N, b.N);
  auto rng = make_rng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < b.N; ++i)
    for (int j = 0; j < b.N; ++j) A(i, j) += 0.3 * std::complex<double>(gauss(rng), gauss(rng));
  mixed.coeffs = A * b.coeffs;
  mixed.orthonormal = false;
  double expected = std::log(std::abs(Eigen::PartialPivLU<Eigen::MatrixXcd>(A).determinant()));
  double mean = 0.0, var = 0.0;
  std::vector<double> diffs;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<SpherePoint> cfg;
    for (int i = 0; i < b.N; ++i) cfg.push_back(random_point(rng));
    double d = log_slater(mixed, cfg).log_abs - log_slater(b, cfg).log_abs;
    diffs.push_back(d);
    mean += d;
  }
  mean /= diffs.size();
  for (double d : diffs) var += (d - mean) * (d - mean);
  var /= diffs.size();
  CHECK(var < 1e-18);
  CHECK(mean == doctest::Approx(expected).epsilon(1e-9));
}
