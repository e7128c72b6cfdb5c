#include "fanogibbs/sphere.hpp"

#include <cmath>
#include <limits>

namespace fanogibbs {

SpherePoint::SpherePoint(std::complex<double> a, std::complex<double> b) : z0(a), z1(b) {
  double n = std::sqrt(std::norm(z0) + std::norm(z1));
  if (!(n > 0.0)) throw ValidationError("SpherePoint: zero vector");
  if (std::abs(n - 1.0) > 1e-12) {
    z0 /= n;
    z1 /= n;
  }
}

SpherePoint SpherePoint::from_angles(double theta, double phi) {
  SpherePoint p;
  p.z0 = std::cos(0.5 * theta);
  p.z1 = std::sin(0.5 * theta) * std::complex<double>(std::cos(phi), std::sin(phi));
  return p;
}

SpherePoint SpherePoint::canonical() const {
  SpherePoint p = *this;
  std::complex<double> lead = (std::abs(p.z0) > 1e-300) ? p.z0 : p.z1;
  double m = std::abs(lead);
  std::complex<double> phase = lead / m;
  p.z0 /= phase;
  p.z1 /= phase;
  if (std::abs(p.z0) > 1e-300) p.z0 = std::complex<double>(std::abs(p.z0), 0.0);
  return p;
}

bool SpherePoint::same_point(const SpherePoint& o) const {
  SpherePoint a = canonical(), b = o.canonical();
  return a.z0 == b.z0 && a.z1 == b.z1;
}

double chordal(const SpherePoint& a, const SpherePoint& b) {
  return 2.0 * std::abs(a.z0 * b.z1 - a.z1 * b.z0);
}

SphereFrame::SphereFrame(const SpherePoint& center) : a(center.z0), b(center.z1) {}

SpherePoint SphereFrame::at(double d, double psi) const {
  double half = std::asin(std::min(1.0, 0.5 * d));
  std::complex<double> c0 = std::cos(half);
  std::complex<double> c1 =
      std::sin(half) * std::complex<double>(std::cos(psi), std::sin(psi));
  SpherePoint p;
  p.z0 = a * c0 - std::conj(b) * c1;
  p.z1 = b * c0 + std::conj(a) * c1;
  return p;
}

QuadratureGrid build_grid(int n_polar, int n_azimuth) {
  if (n_polar < 8 || n_azimuth < 8)
    throw UnderResolvedError("build_grid: need n_polar >= 8 and n_azimuth >= 8");
  QuadratureGrid g;
  g.n_polar = n_polar;
  g.n_azimuth = n_azimuth;
  g.sht = std::make_shared<SphereTransform>(n_polar, n_azimuth);
  const GaussLegendre& gl = g.sht->rule();
  g.t = gl.nodes;
  g.theta = g.t.unaryExpr([](double t) { return std::acos(std::clamp(t, -1.0, 1.0)); });
  g.phi.resize(n_azimuth);
  for (int a = 0; a < n_azimuth; ++a) g.phi[a] = 2.0 * M_PI * a / n_azimuth;
  g.nodes.resize(g.size());
  g.weights.resize(g.size());
  for (int ip = 0; ip < n_polar; ++ip)
    for (int ia = 0; ia < n_azimuth; ++ia) {
      g.nodes[g.index(ip, ia)] = SpherePoint::from_angles(g.theta[ip], g.phi[ia]);
      g.weights[g.index(ip, ia)] = gl.weights[ip] / (2.0 * n_azimuth);
    }
  return g;
}

Potential reference_metric(const QuadratureGrid& grid) {
  return Potential(Eigen::ArrayXd::Zero(grid.size()));
}

Eigen::ArrayXd curvature_density(const QuadratureGrid& grid, const Potential& phi) {
  return 2.0 + grid.sht->laplacian(phi.u);
}

DensityMeasure ma_measure(const QuadratureGrid& grid, const Potential& phi) {
  Eigen::ArrayXd curv = curvature_density(grid, phi);
  if (curv.minCoeff() <= 1e-12)
    throw CurvatureError("ma_measure: curvature not positive at a grid node");
  return DensityMeasure(0.5 * curv, grid);
}

Potential solve_curvature_equation(const QuadratureGrid& grid, const DensityMeasure& mu,
                                   const CurvatureSolveOptions& opt) {
  if (std::abs(mu.mass - 1.0) > opt.mass_tol)
    throw ValidationError("solve_curvature_equation: measure mass is not 1");
  if (mu.density.minCoeff() <= 0.0)
    throw ValidationError("solve_curvature_equation: density not strictly positive");
  Eigen::ArrayXd rhs = 2.0 * (mu.density - 1.0);
  Eigen::ArrayXd u = grid.sht->solve_poisson(rhs);
  u -= grid.integrate(u);  // gauge: int (phi - psi0) dsigma = 0
  Potential phi(std::move(u));
  double residual = (0.5 * curvature_density(grid, phi) - mu.density).abs().maxCoeff();
  if (residual > opt.residual_tol)
    throw NonConvergenceError("solve_curvature_equation: residual above tolerance "
                              "(measure too rough for the grid)", residual);
  return phi;
}

double entropy(const QuadratureGrid& grid, const DensityMeasure& mu, const DensityMeasure& nu) {
  double acc = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    double m = mu.density[i];
    if (m <= 0.0) continue;
    double n = nu.density[i];
    if (n <= 0.0) return std::numeric_limits<double>::infinity();
    acc += grid.weights[i] * m * std::log(m / n);
  }
  return acc;
}

AnalyticPotential AnalyticPotential::bump(double a, const SpherePoint& c, double w) {
  AnalyticPotential p;
  p.amplitude = a;
  p.center = c;
  p.width = w;
  return p;
}

double AnalyticPotential::u0(const SpherePoint& x) const {
  if (amplitude == 0.0) return 0.0;
  double d = chordal(x, center) / width;
  return amplitude * std::exp(-d * d);
}

Potential AnalyticPotential::render(const QuadratureGrid& grid) const {
  Eigen::ArrayXd u(grid.size());
  for (int i = 0; i < grid.size(); ++i) u[i] = u0(grid.nodes[i]);
  return Potential(std::move(u));
}

}  // namespace fanogibbs
