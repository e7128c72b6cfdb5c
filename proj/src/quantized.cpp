#include "fanogibbs/quantized.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "fanogibbs/adaptive.hpp"
#include "fanogibbs/rng.hpp"

namespace fanogibbs {

HermitianMetricK::HermitianMetricK(int kk, Eigen::MatrixXcd m) : k(kk), H(std::move(m)) {
  if (H.rows() != H.cols() || H.rows() != 2 * k + 1)
    throw ValidationError("HermitianMetricK: wrong dimension");
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * H.cwiseAbs().maxCoeff())
    throw ValidationError("HermitianMetricK: not Hermitian");
  H = 0.5 * (H + H.adjoint()).eval();
  Eigen::LLT<Eigen::MatrixXcd> llt(H);
  if (llt.info() != Eigen::Success)
    throw ValidationError("HermitianMetricK: not positive definite");
}

HermitianMetricK HermitianMetricK::identity(int k) {
  return HermitianMetricK(k, Eigen::MatrixXcd::Identity(2 * k + 1, 2 * k + 1));
}

double HermitianMetricK::log_det() const {
  Eigen::LLT<Eigen::MatrixXcd> llt(H);
  double acc = 0.0;
  for (int i = 0; i < H.rows(); ++i) acc += std::log(std::real(llt.matrixL()(i, i)));
  return 2.0 * acc;
}

HermitianMetricK gram(const QuadratureGrid& grid, const Potential& phi,
                      const DensityMeasure& mu, const SectionBasis& basis) {
  Eigen::MatrixXcd V = basis.values_on(grid);
  Eigen::ArrayXd d =
      (-(double(basis.k) * (kLogPi + phi.u))).exp() * mu.density * grid.weights;
  Eigen::MatrixXcd M = V.adjoint() * d.matrix().asDiagonal() * V;
  M = 0.5 * (M + M.adjoint()).eval();
  Eigen::LLT<Eigen::MatrixXcd> llt(M);
  if (llt.info() != Eigen::Success)
    throw UnderResolvedError("gram: positive definiteness lost (grid too coarse for k)");
  HermitianMetricK out;
  out.k = basis.k;
  out.H = std::move(M);
  return out;
}

namespace {

// Section values of an H-orthonormal basis: columns of V * L^{-dagger},
// H = L L^dagger.
Eigen::MatrixXcd h_orthonormal_values(const Eigen::MatrixXcd& V, const Eigen::MatrixXcd& H) {
  Eigen::LLT<Eigen::MatrixXcd> llt(H);
  if (llt.info() != Eigen::Success)
    throw ValidationError("fs_map: metric not positive definite");
  Eigen::MatrixXcd L = llt.matrixL();
  int N = int(H.rows());
  Eigen::MatrixXcd C =
      L.adjoint().triangularView<Eigen::Upper>().solve(Eigen::MatrixXcd::Identity(N, N));
  return V * C;
}

}  // namespace

Potential fs_map(const QuadratureGrid& grid, const HermitianMetricK& H,
                 const SectionBasis& basis) {
  Eigen::MatrixXcd V = basis.values_on(grid);
  Eigen::MatrixXcd W = h_orthonormal_values(V, H.H);
  Eigen::ArrayXd ktilde = W.rowwise().squaredNorm().array() / double(basis.N);
  return Potential((ktilde.log() / double(basis.k)) - kLogPi);
}

BergmanDensity bergman_density(const QuadratureGrid& grid, const Potential& phi,
                               const GammaParams& p, const SectionBasis& basis) {
  Eigen::ArrayXd twist = twist_density(p, phi);
  HermitianMetricK G = gram(grid, phi, DensityMeasure(twist, grid), basis);
  Eigen::MatrixXcd V = basis.values_on(grid);
  Eigen::MatrixXcd W = h_orthonormal_values(V, G.H);
  BergmanDensity out;
  out.rho = W.rowwise().squaredNorm().array() / double(basis.N) *
            (-(double(basis.k) * (kLogPi + phi.u))).exp();
  out.measure_density = out.rho * twist;
  out.mass = grid.integrate(out.measure_density);
  return out;
}

double quantized_ding(const QuadratureGrid& grid, const HermitianMetricK& H,
                      const GammaParams& p, const SectionBasis& basis) {
  Potential fs = fs_map(grid, H, basis);
  double ld = HermitianMetricK(H).log_det();
  return ld / (double(basis.k) * basis.N) - log_twist_integral(grid, p, fs) / p.gamma;
}

HermitianMetricK donaldson_step(const QuadratureGrid& grid, const HermitianMetricK& H,
                                const GammaParams& p, const SectionBasis& basis) {
  Potential fs = fs_map(grid, H, basis);
  HermitianMetricK T = gram(grid, fs, DensityMeasure(twist_density(p, fs), grid), basis);
  double before = quantized_ding(grid, H, p, basis);
  double after = quantized_ding(grid, T, p, basis);
  if (after > before + 1e-10)
    throw NonConvergenceError("donaldson_step: monotonicity violated (resolution failure)",
                              after - before);
  return T;
}

namespace {

Eigen::VectorXd gauge_fixed_log_eigs(const Eigen::MatrixXcd& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  Eigen::VectorXd le = es.eigenvalues().array().log();
  le.array() -= le.mean();
  return le;
}

}  // namespace

MinimizeResult minimize_quantized_ding(const QuadratureGrid& grid, const GammaParams& p,
                                       const SectionBasis& basis, double tol) {
  const int N = basis.N, k = basis.k;
  Eigen::MatrixXcd V = basis.values_on(grid);
  MinimizeResult out;
  HermitianMetricK H = HermitianMetricK::identity(k);
  double D = quantized_ding(grid, H, p, basis);

  auto diverged = [&](const HermitianMetricK& M, double value) {
    Eigen::VectorXd le = gauge_fixed_log_eigs(M.H);
    return (le.maxCoeff() - le.minCoeff() > 60.0) || value < -1e4;
  };

  // Geodesic probe along the flag direction adapted to the north pole
  // (lambda_j = (j-k)/k in the reference basis). Symmetric critical points
  // are fixed by the iteration even when D is unbounded below; the probe
  // escapes them in the non-coercive regime. Probe lengths stay within what
  // the grid resolves (features shrink like e^{-2s/k}), and the escape margin
  // sits above the quadrature error of the marginal directions.
  Eigen::VectorXd flag(N);
  for (int j = 0; j < N; ++j) flag[j] = double(j - k) / k;
  auto probe_escape = [&](const HermitianMetricK& M, double value,
                          HermitianMetricK* better) {
    Eigen::LLT<Eigen::MatrixXcd> llt(M.H);
    Eigen::MatrixXcd R = llt.matrixL();
    double best = value;
    bool found = false;
    for (double s : {1.5 * k, 3.0 * k, -1.5 * k, -3.0 * k}) {
      Eigen::MatrixXcd E = (s * flag.array()).exp().matrix().asDiagonal();
      HermitianMetricK cand(k, R * E * R.adjoint());
      double Dc = quantized_ding(grid, cand, p, basis);
      if (Dc < best - 0.02 * std::max(1.0, std::abs(value))) {
        best = Dc;
        *better = cand;
        found = true;
      }
    }
    return found;
  };

  for (int round = 0; round < 4; ++round) {
    for (int it = 0; it < 600; ++it) {
      HermitianMetricK T;
      double DT;
      try {
        T = donaldson_step(grid, H, p, basis);
        DT = quantized_ding(grid, T, p, basis);
      } catch (const UnderResolvedError&) {
        // iterates that outrun the grid while already strongly anisotropic
        // are divergence evidence, not a user error
        Eigen::VectorXd le = gauge_fixed_log_eigs(H.H);
        if (le.maxCoeff() - le.minCoeff() > 20.0) {
          out.H = H;
          out.value = D;
          out.diverged = true;
          out.last_direction = le;
          return out;
        }
        throw;
      }
      ++out.donaldson_steps;
      bool stalled = (D - DT) < tol * std::max(1.0, std::abs(DT));
      H = std::move(T);
      D = DT;
      if (diverged(H, D)) {
        out.H = H;
        out.value = D;
        out.diverged = true;
        out.last_direction = gauge_fixed_log_eigs(H.H);
        return out;
      }
      if (stalled) break;
    }
    HermitianMetricK escaped;
    if (!probe_escape(H, D, &escaped)) break;
    H = escaped;
    D = quantized_ding(grid, H, p, basis);
    if (round == 3 || diverged(H, D)) {
      out.H = H;
      out.value = D;
      out.diverged = true;
      out.last_direction = gauge_fixed_log_eigs(H.H);
      return out;
    }
  }

  // polish: descent in the log-Hermitian chart through the current point
  double eta = 1.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::LLT<Eigen::MatrixXcd> llt(H.H);
    // column n is w_n = L^{-1} conj(v_n), so |w_n|^2 = v_n^T H^{-1} conj(v_n) = N ktilde_n
    Eigen::MatrixXcd Wt = llt.matrixL().solve(V.adjoint());
    Eigen::ArrayXd ktilde = Wt.colwise().squaredNorm().array().transpose() / double(N);
    Eigen::ArrayXd log_f = -(p.gamma / k) * (ktilde.log() - double(k) * kLogPi) -
                           (1.0 - p.gamma) * p.phi0.u;
    double m = log_f.maxCoeff();
    Eigen::ArrayXd fw = (log_f - m).exp() * grid.weights;
    double I0 = fw.sum();
    // grad D = (1/(kN)) [ I - (1/I0) sum_n c_n w_n w_n^dagger ],  w = L^{-1} v,
    // c_n = weight_n f_n / ktilde_n; the subtracted term has trace N, so the
    // gradient is automatically trace-free (scale invariance).
    Eigen::ArrayXd c = fw / ktilde;
    Eigen::MatrixXcd S = Wt * (c / I0).matrix().asDiagonal() * Wt.adjoint();
    Eigen::MatrixXcd G = (Eigen::MatrixXcd::Identity(N, N) - S) / (double(k) * N);
    G = 0.5 * (G + G.adjoint()).eval();
    double gnorm = G.norm();
    ++out.gradient_steps;
    if (gnorm < 1e-11) break;
    bool moved = false;
    while (eta > 1e-8) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(-eta * G);
      Eigen::MatrixXcd E = es.eigenvectors() *
                           es.eigenvalues().array().exp().matrix().asDiagonal() *
                           es.eigenvectors().adjoint();
      Eigen::MatrixXcd R = llt.matrixL();
      Eigen::MatrixXcd Hn = R * E * R.adjoint();
      HermitianMetricK cand(k, Hn);
      double Dn = quantized_ding(grid, cand, p, basis);
      if (Dn < D - 1e-15) {
        H = std::move(cand);
        D = Dn;
        moved = true;
        eta = std::min(eta * 2.0, 4.0);
        break;
      }
      eta *= 0.5;
    }
    if (!moved) break;
    if (diverged(H, D)) {
      out.diverged = true;
      break;
    }
  }
  out.H = H;
  out.value = D;
  out.last_direction = gauge_fixed_log_eigs(H.H);
  return out;
}

// ---------------------------------------------------------------------------
// delta_k via geodesic-ray slopes
// ---------------------------------------------------------------------------

namespace {

struct PotentialEvaluator {
  bool trivial = true;
  const SphereTransform* sht = nullptr;
  SphereTransform::Coeffs coeffs;

  PotentialEvaluator(const QuadratureGrid& grid, const Potential& u) {
    if (u.u.abs().maxCoeff() > 0.0) {
      trivial = false;
      sht = grid.sht.get();
      coeffs = grid.sht->analyze(u.u);
    }
  }
  double operator()(const SpherePoint& x) const {
    if (trivial) return 0.0;
    return sht->synthesize_at(coeffs, x.t(), x.phi());
  }
};

struct Ray {
  Eigen::MatrixXcd frame;   // columns: coefficient vectors in the reference basis
  Eigen::MatrixXcd mono;    // columns: same sections in the monomial frame
  Eigen::VectorXd lambda;   // traceless, sup-normalized
  double log_det_frame = 0.0;
  std::vector<SpherePoint> zeros;
};

Ray make_ray(const SectionBasis& basis, const Eigen::MatrixXcd& frame_columns,
             const Eigen::VectorXd& lambda) {
  Ray r;
  r.frame = frame_columns;
  r.lambda = lambda;
  // monomial coefficients of the frame sections: rows of basis.coeffs span
  // the reference sections, so mono = coeffs^T * frame
  r.mono = basis.coeffs.transpose() * frame_columns;
  r.log_det_frame = std::log(std::abs(Eigen::PartialPivLU<Eigen::MatrixXcd>(frame_columns)
                                          .determinant()));
  for (int i = 0; i < r.mono.cols(); ++i)
    for (const SpherePoint& z : binary_form_roots(r.mono.col(i))) r.zeros.push_back(z);
  return r;
}

// D_{k,-gamma}(H_t) for H_t = F^{-dagger} e^{t Lambda} F^{-1}.
double ray_ding(const Ray& ray, int k, double gamma, double t,
                const PotentialEvaluator& u0, double rel_tol) {
  const int N = 2 * k + 1;
  auto integrand = [&](const SpherePoint& x) {
    Eigen::RowVectorXcd mv = monomial_values(k, x);
    Eigen::RowVectorXcd g = mv * ray.mono;
    double best = -std::numeric_limits<double>::infinity();
    Eigen::ArrayXd expo(N);
    for (int i = 0; i < N; ++i) {
      double a = std::norm(g[i]);
      expo[i] = (a > 0.0 ? std::log(a) : -1e300) - t * ray.lambda[i];
      best = std::max(best, expo[i]);
    }
    double ktilde_log = best + std::log((expo - best).exp().sum() / N);
    double ufs = ktilde_log / k - kLogPi;  // FS(H_t) - psi0
    return std::exp(-gamma * ufs - (1.0 - gamma) * u0(x));
  };
  AdaptiveOptions opt;
  opt.rel_tol = rel_tol;
  AdaptiveResult I = adaptive_sphere_integral(integrand, ray.zeros, opt);
  if (!I.converged || !(I.value > 0.0))
    throw NonConvergenceError("delta_k: ray integral did not converge", I.error_estimate);
  double log_det_Ht = -2.0 * ray.log_det_frame + t * ray.lambda.sum();
  return log_det_Ht / (double(k) * N) - std::log(I.value) / gamma;
}

}  // namespace

RaySlope ray_slope(const QuadratureGrid& grid, const GammaParams& p, const SectionBasis& basis,
                   const Eigen::MatrixXcd& frame_columns, const Eigen::VectorXd& lambda,
                   double gamma, const std::vector<double>& t_values) {
  Ray ray = make_ray(basis, frame_columns, lambda);
  PotentialEvaluator u0(grid, p.phi0);
  std::vector<double> D(t_values.size());
  for (size_t i = 0; i < t_values.size(); ++i)
    D[i] = ray_ding(ray, basis.k, gamma, t_values[i], u0, 1e-7);
  std::vector<double> s;
  for (size_t i = 0; i + 1 < D.size(); ++i)
    s.push_back((D[i + 1] - D[i]) / (t_values[i + 1] - t_values[i]));
  RaySlope out;
  if (s.size() == 1) {
    out.slope = s[0];
    out.extrapolation_gap = std::abs(s[0]);
  } else {
    // slopes converge geometrically in t; one Richardson-style correction
    double d = s.back() - s[s.size() - 2];
    out.slope = s.back() + 0.25 * d;
    out.extrapolation_gap = std::abs(d);
  }
  return out;
}

DeltaKResult delta_k_estimate(const QuadratureGrid& grid, int k, const GammaParams& p,
                              int n_rays, const DeltaKOptions& opt) {
  if (n_rays < 8) throw ValidationError("delta_k_estimate: n_rays >= 8 required");
  const int N = 2 * k + 1;
  SectionBasis basis = orthonormal_basis(k, grid);
  PotentialEvaluator u0(grid, p.phi0);

  std::vector<Ray> rays;
  for (int r = 0; r < n_rays; ++r) {
    auto rng = make_rng(opt.seed, r);
    std::normal_distribution<double> gauss(0.0, 1.0);
    if (r % 2 == 0) {
      // flag ray adapted to a random point: sections l_p^j l_q^{2k-j} with
      // weights graded by the vanishing order at p
      double ct = 2.0 * std::uniform_real_distribution<double>(0, 1)(rng) - 1.0;
      double ph = 2.0 * M_PI * std::uniform_real_distribution<double>(0, 1)(rng);
      SpherePoint pt = SpherePoint::from_angles(std::acos(ct), ph);
      std::complex<double> a = pt.z0, b = pt.z1;
      // l_p = b z0 - a z1 vanishes at p; l_q = conj(a) z0 + conj(b) z1 at -p
      Eigen::MatrixXcd mono = Eigen::MatrixXcd::Zero(N, N);
      for (int j = 0; j <= 2 * k; ++j) {
        // expand (b z0 - a z1)^j (conj(a) z0 + conj(b) z1)^{2k-j}
        Eigen::VectorXcd poly = Eigen::VectorXcd::Zero(N);  // by z0-power
        for (int m1 = 0; m1 <= j; ++m1)
          for (int m2 = 0; m2 <= 2 * k - j; ++m2) {
            double binom = std::exp(std::lgamma(j + 1) - std::lgamma(m1 + 1) -
                                    std::lgamma(j - m1 + 1) + std::lgamma(2 * k - j + 1) -
                                    std::lgamma(m2 + 1) - std::lgamma(2 * k - j - m2 + 1));
            std::complex<double> term = binom * std::pow(b, m1) *
                                        std::pow(-a, j - m1) * std::pow(std::conj(a), m2) *
                                        std::pow(std::conj(b), 2 * k - j - m2);
            poly[m1 + m2] += term;
          }
        // monomial frame indexes z0-power directly
        mono.col(j) = poly;
      }
      Eigen::MatrixXcd frame =
          Eigen::PartialPivLU<Eigen::MatrixXcd>(basis.coeffs.transpose()).solve(mono);
      Eigen::VectorXd lambda(N);
      for (int j = 0; j <= 2 * k; ++j) lambda[j] = double(k - j) / k;
      Ray ray = make_ray(basis, frame, lambda);
      ray.mono = mono;  // exact monomial coefficients, avoids the round trip
      rays.push_back(std::move(ray));
    } else {
      Eigen::MatrixXcd g(N, N);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) g(i, j) = std::complex<double>(gauss(rng), gauss(rng));
      Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
      Eigen::MatrixXcd Q = qr.householderQ();
      Eigen::VectorXd lambda(N);
      for (int i = 0; i < N; ++i) lambda[i] = gauss(rng);
      std::sort(lambda.data(), lambda.data() + N);
      lambda.array() -= lambda.mean();
      double m = lambda.cwiseAbs().maxCoeff();
      if (m > 0) lambda /= m;
      rays.push_back(make_ray(basis, Q, lambda));
    }
  }

  auto min_slope = [&](double gamma, double* gap) {
    double best = std::numeric_limits<double>::infinity();
    double g = 0.0;
    for (const Ray& ray : rays) {
      std::vector<double> D(opt.t_values.size());
      for (size_t i = 0; i < opt.t_values.size(); ++i)
        D[i] = ray_ding(ray, k, gamma, opt.t_values[i], u0, 1e-6);
      double s_prev = (D[D.size() - 2] - D[D.size() - 3]) /
                      (opt.t_values[D.size() - 2] - opt.t_values[D.size() - 3]);
      double s_last = (D[D.size() - 1] - D[D.size() - 2]) /
                      (opt.t_values[D.size() - 1] - opt.t_values[D.size() - 2]);
      double s = s_last + 0.25 * (s_last - s_prev);
      if (s < best) {
        best = s;
        g = std::abs(s_last - s_prev);
      }
    }
    if (gap) *gap = g;
    return best;
  };

  double lo = opt.gamma_lo, hi = opt.gamma_hi;
  double gap = 0.0;
  if (min_slope(lo, nullptr) <= 0.0)
    throw NonConvergenceError("delta_k_estimate: no coercive gamma in bracket", lo);
  if (min_slope(hi, nullptr) > 0.0)
    throw NonConvergenceError("delta_k_estimate: no divergent gamma in bracket", hi);
  while (hi - lo > opt.bisect_tol) {
    double mid = 0.5 * (lo + hi);
    double s = min_slope(mid, &gap);
    if (gap > 0.1 * std::max(0.2, std::abs(s)))
      throw NonConvergenceError("delta_k_estimate: slope not settled (t horizon too small)",
                                gap);
    (s > 0.0 ? lo : hi) = mid;
  }
  DeltaKResult out;
  out.delta = 0.5 * (lo + hi);
  out.n_rays = n_rays;
  out.bisection_width = hi - lo;
  out.ray_crossings.push_back(out.delta);
  return out;
}

}  // namespace fanogibbs
