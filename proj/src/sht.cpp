#include "fanogibbs/sht.hpp"

#include <cmath>
#include <stdexcept>

namespace fanogibbs {

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  GaussLegendre out;
  out.nodes.resize(n);
  out.weights.resize(n);
  // Newton iteration on P_n with the three-term recurrence.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int l = 2; l <= n; ++l) {
        double p2 = ((2 * l - 1) * x * p1 - (l - 1) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    out.nodes[i] = -x;
    out.nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out.weights[i] = w;
    out.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) out.nodes[n / 2] = 0.0;
  return out;
}

void legendre_row(int m, int lmax, double t, double* out) {
  // Pbar_mm = sqrt((2m+1) prod (2i-1)/(2i)) (1-t^2)^{m/2}, then upward in l.
  double pmm = 1.0;
  if (m > 0) {
    double s2 = (1.0 - t) * (1.0 + t);
    double fact = 1.0;
    for (int i = 1; i <= m; ++i) fact *= (2.0 * i - 1.0) / (2.0 * i);
    pmm = std::sqrt((2.0 * m + 1.0) * fact) * std::pow(s2, 0.5 * m);
  }
  out[0] = pmm;
  if (lmax == m) return;
  double pm1 = std::sqrt(2.0 * m + 3.0) * t * pmm;
  out[1] = pm1;
  double pm2 = pmm;
  for (int l = m + 2; l <= lmax; ++l) {
    double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
    double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) /
                         (4.0 * double(l - 1) * (l - 1) - 1.0));
    double p = a * (t * pm1 - b * pm2);
    pm2 = pm1;
    pm1 = p;
    out[l - m] = p;
  }
}

SphereTransform::SphereTransform(int n_polar, int n_azimuth)
    : n_polar_(n_polar),
      n_azimuth_(n_azimuth),
      lmax_(n_polar - 1),
      mmax_(std::min(n_polar - 1, n_azimuth / 2 - 1)),
      gl_(gauss_legendre(n_polar)) {
  if (n_polar < 4 || n_azimuth < 4)
    throw std::invalid_argument("SphereTransform: grid too small");
  legendre_.resize(mmax_ + 1);
  std::vector<double> row(lmax_ + 1);
  for (int m = 0; m <= mmax_; ++m) {
    legendre_[m].resize(n_polar_, lmax_ - m + 1);
    for (int i = 0; i < n_polar_; ++i) {
      legendre_row(m, lmax_, gl_.nodes[i], row.data());
      for (int l = m; l <= lmax_; ++l) legendre_[m](i, l - m) = row[l - m];
    }
  }
  fourier_.resize(n_azimuth_, mmax_ + 1);
  for (int a = 0; a < n_azimuth_; ++a)
    for (int m = 0; m <= mmax_; ++m) {
      double ang = 2.0 * M_PI * a * m / n_azimuth_;
      fourier_(a, m) = std::complex<double>(std::cos(ang), std::sin(ang));
    }
}

SphereTransform::Coeffs SphereTransform::analyze(const Eigen::ArrayXd& values) const {
  if (values.size() != n_polar_ * n_azimuth_)
    throw std::invalid_argument("SphereTransform::analyze: size mismatch");
  // azimuthal DFT: F(i, m) = (1/n_az) sum_a f(i,a) e^{-i m phi_a}
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      f(values.data(), n_polar_, n_azimuth_);
  Eigen::MatrixXcd F = (f * fourier_.conjugate()) / double(n_azimuth_);
  Coeffs c(mmax_ + 1);
  for (int m = 0; m <= mmax_; ++m) {
    Eigen::VectorXcd col = F.col(m);
    // c_lm = (1/2) sum_i w_i Pbar_lm(t_i) F(i, m)
    Eigen::VectorXcd weighted = (0.5 * gl_.weights).matrix().asDiagonal() * col;
    c[m] = legendre_[m].transpose() * weighted;
  }
  return c;
}

Eigen::ArrayXd SphereTransform::synthesize(const Coeffs& c) const {
  Eigen::MatrixXcd F(n_polar_, mmax_ + 1);
  for (int m = 0; m <= mmax_; ++m) F.col(m) = legendre_[m] * c[m];
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f(n_polar_, n_azimuth_);
  // f = Re(F_0) + 2 Re(sum_{m>=1} F_m e^{i m phi})
  Eigen::MatrixXcd Fx = F;
  Fx.leftCols(1) *= 0.5;
  f = 2.0 * (Fx * fourier_.transpose()).real();
  return Eigen::Map<Eigen::ArrayXd>(f.data(), n_polar_ * n_azimuth_);
}

double SphereTransform::synthesize_at(const Coeffs& c, double t, double phi) const {
  std::vector<double> row(lmax_ + 1);
  double acc = 0.0;
  for (int m = 0; m <= mmax_; ++m) {
    legendre_row(m, lmax_, t, row.data());
    std::complex<double> s = 0.0;
    for (int l = m; l <= lmax_; ++l) s += c[m][l - m] * row[l - m];
    if (m == 0)
      acc += s.real();
    else
      acc += 2.0 * (s * std::complex<double>(std::cos(m * phi), std::sin(m * phi))).real();
  }
  return acc;
}

Eigen::ArrayXd SphereTransform::laplacian(const Eigen::ArrayXd& values) const {
  Coeffs c = analyze(values);
  for (int m = 0; m <= mmax_; ++m)
    for (int l = m; l <= lmax_; ++l) c[m][l - m] *= -double(l) * (l + 1);
  return synthesize(c);
}

Eigen::ArrayXd SphereTransform::solve_poisson(const Eigen::ArrayXd& rhs) const {
  Coeffs c = analyze(rhs);
  c[0][0] = 0.0;
  for (int m = 0; m <= mmax_; ++m)
    for (int l = std::max(m, 1); l <= lmax_; ++l) c[m][l - m] /= -double(l) * (l + 1);
  return synthesize(c);
}

}  // namespace fanogibbs
