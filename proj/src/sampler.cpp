#include "fanogibbs/sampler.hpp"

#include <cmath>

#include <Eigen/LU>

#include "fanogibbs/rng.hpp"

namespace fanogibbs {

namespace {

// Columns hold section values with the e^{-k phi0 / 2} metric factor; the
// determinant tracks log ||det S||_{k phi0} up to the constant pi-power.
struct SlaterState {
  Eigen::MatrixXcd A, Ainv;
  double log_abs_det = 0.0;

  void rebuild(const SectionBasis& basis, const AnalyticPotential& phi0,
               const std::vector<SpherePoint>& x) {
    int N = basis.N;
    A.resize(N, N);
    for (int j = 0; j < N; ++j)
      A.col(j) = basis.values_at(x[j]).transpose() *
                 std::exp(-0.5 * basis.k * phi0.u0(x[j]));
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    Ainv = lu.inverse();
    log_abs_det = 0.0;
    for (int i = 0; i < N; ++i) log_abs_det += std::log(std::abs(lu.matrixLU()(i, i)));
  }

  // Sherman-Morrison column replacement; returns |det ratio|.
  double replace_column(int j, const Eigen::VectorXcd& col) {
    std::complex<double> ratio = (Ainv.row(j) * col)(0);
    double r = std::abs(ratio);
    if (r < 1e-300) return 0.0;
    Eigen::VectorXcd u = col - A.col(j);
    Eigen::VectorXcd Au = Ainv * u;
    Ainv -= (Au * Ainv.row(j)) / ratio;
    A.col(j) = col;
    log_abs_det += std::log(r);
    return r;
  }
};

double chain_log_density(const SectionBasis& basis, const AnalyticPotential& phi0,
                         const SlaterState& st, const std::vector<SpherePoint>& x,
                         double beta) {
  double u0_sum = 0.0;
  for (const SpherePoint& p : x) u0_sum += phi0.u0(p);
  double metric_const = 0.5 * basis.k * basis.N * kLogPi;
  return (2.0 * beta / basis.k) * (st.log_abs_det - metric_const) - u0_sum;
}

}  // namespace

McmcResult mcmc_run(const QuadratureGrid& grid, int k, double beta,
                    const AnalyticPotential& phi0, const SectionBasis& basis,
                    std::int64_t n_steps, const McmcOptions& opt) {
  (void)grid;
  const int N = basis.N;
  if (beta <= -(2.0 * k) / N + 1e-9)
    throw ValidationError("mcmc_run: beta outside the integrable range");
  if (n_steps < 10000) throw ValidationError("mcmc_run: n_steps >= 1e4 required");

  auto rng = make_rng(opt.seed, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // spread starting configuration
  std::vector<SpherePoint> x(N);
  for (int i = 0; i < N; ++i)
    x[i] = SpherePoint::from_angles(std::acos(2.0 * unif(rng) - 1.0), 2.0 * M_PI * unif(rng));
  SlaterState st;
  st.rebuild(basis, phi0, x);

  McmcResult out;
  out.n_steps = n_steps;
  double r_cap = opt.initial_cap_radius;
  std::int64_t burn_in = std::max<std::int64_t>(2000, n_steps / 10);
  std::int64_t accepted = 0, proposed = 0, window_acc = 0;
  std::int64_t stride = std::max<std::int64_t>(1, (n_steps - burn_in) / opt.max_snapshots);

  for (std::int64_t step = 0; step < n_steps; ++step) {
    int j = int(unif(rng) * N) % N;
    SpherePoint xp = SphereFrame(x[j]).at(r_cap * std::sqrt(unif(rng)),
                                          2.0 * M_PI * unif(rng));
    Eigen::VectorXcd col =
        basis.values_at(xp).transpose() * std::exp(-0.5 * k * phi0.u0(xp));
    std::complex<double> ratio = (st.Ainv.row(j) * col)(0);
    double log_ratio = (2.0 * beta / k) * std::log(std::max(std::abs(ratio), 1e-300)) -
                       phi0.u0(xp) + phi0.u0(x[j]);
    ++proposed;
    if (std::log(unif(rng) + 1e-300) < log_ratio) {
      st.replace_column(j, col);
      x[j] = xp;
      ++accepted;
      ++window_acc;
    }
    // cap adaptation during burn-in only (detailed balance is exact afterwards)
    if (step < burn_in && (step + 1) % 200 == 0) {
      double acc = window_acc / 200.0;
      r_cap *= std::exp(0.5 * (acc - opt.target_acceptance));
      r_cap = std::clamp(r_cap, 1e-3, 1.9);
      window_acc = 0;
    }
    if ((step + 1) % opt.recompute_every == 0) {
      double incr = st.log_abs_det;
      st.rebuild(basis, phi0, x);  // the rebuilt value wins; drift is recorded
      out.max_drift = std::max(out.max_drift, std::abs(incr - st.log_abs_det));
    }
    if (step >= burn_in && (step - burn_in) % stride == 0) {
      ChainState s;
      s.config = x;
      s.log_density = chain_log_density(basis, phi0, st, x, beta);
      s.step = step;
      s.rng_key = "seed:" + std::to_string(opt.seed) + ":step:" + std::to_string(step);
      out.snapshots.push_back(std::move(s));
    }
  }
  out.acceptance_rate = double(accepted) / double(proposed);
  out.cap_radius = r_cap;
  if (out.acceptance_rate < 0.01)
    throw NonConvergenceError("mcmc_run: acceptance collapsed", out.acceptance_rate);

  // integrated autocorrelation time of the thinned log-density series
  const auto& snaps = out.snapshots;
  int M = int(snaps.size());
  if (M > 10) {
    Eigen::ArrayXd g(M);
    for (int i = 0; i < M; ++i) g[i] = snaps[i].log_density;
    double mean = g.mean();
    double var = (g - mean).square().sum() / M;
    double iat = 1.0;
    for (int lag = 1; lag < M / 4; ++lag) {
      double c = 0.0;
      for (int i = 0; i + lag < M; ++i) c += (g[i] - mean) * (g[i + lag] - mean);
      c /= (M - lag) * var;
      if (c < 0.0) break;
      iat += 2.0 * c;
    }
    out.iat = std::max(1.0, iat);
  }
  return out;
}

Eigen::ArrayXd bin_density(const QuadratureGrid& grid, const DensityMeasure& mu,
                           int bins_polar, int bins_azimuth) {
  Eigen::ArrayXd bins = Eigen::ArrayXd::Zero(bins_polar * bins_azimuth);
  for (int n = 0; n < grid.size(); ++n) {
    double t = grid.nodes[n].t();
    double ph = std::fmod(grid.nodes[n].phi() + 2.0 * M_PI, 2.0 * M_PI);
    int bp = std::min(bins_polar - 1, int((t + 1.0) / 2.0 * bins_polar));
    int ba = std::min(bins_azimuth - 1, int(ph / (2.0 * M_PI) * bins_azimuth));
    bins[bp * bins_azimuth + ba] += grid.weights[n] * mu.density[n];
  }
  return bins / bins.sum();
}

namespace {

// log-domain Sinkhorn transport cost with chordal ground metric
double sinkhorn_cost(const Eigen::ArrayXd& mu, const Eigen::ArrayXd& nu,
                     const Eigen::MatrixXd& cost, double eps, int iters) {
  int n = int(mu.size());
  Eigen::ArrayXd f = Eigen::ArrayXd::Zero(n), g = Eigen::ArrayXd::Zero(n);
  Eigen::ArrayXd log_mu = (mu + 1e-300).log(), log_nu = (nu + 1e-300).log();
  for (int it = 0; it < iters; ++it) {
    for (int i = 0; i < n; ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j)
        m = std::max(m, (g[j] - cost(i, j)) / eps + log_nu[j]);
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += std::exp((g[j] - cost(i, j)) / eps + log_nu[j] - m);
      f[i] = -eps * (m + std::log(acc));
    }
    for (int j = 0; j < n; ++j) {
      double m = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i)
        m = std::max(m, (f[i] - cost(i, j)) / eps + log_mu[i]);
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += std::exp((f[i] - cost(i, j)) / eps + log_mu[i] - m);
      g[j] = -eps * (m + std::log(acc));
    }
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double lp = (f[i] + g[j] - cost(i, j)) / eps + log_mu[i] + log_nu[j];
      total += std::exp(lp) * cost(i, j);
    }
  return total;
}

}  // namespace

EmpiricalSummary empirical_summary(const QuadratureGrid& grid,
                                   const std::vector<ChainState>& snapshots,
                                   const DensityMeasure& target, double iat,
                                   const SummaryOptions& opt) {
  EmpiricalSummary out;
  out.bins_polar = opt.bins_polar;
  out.bins_azimuth = opt.bins_azimuth;
  if (snapshots.empty()) throw ValidationError("empirical_summary: no snapshots");
  int n_points = 0;
  Eigen::ArrayXd hist = Eigen::ArrayXd::Zero(opt.bins_polar * opt.bins_azimuth);
  for (const ChainState& s : snapshots)
    for (const SpherePoint& p : s.config) {
      double t = p.t();
      double ph = std::fmod(p.phi() + 2.0 * M_PI, 2.0 * M_PI);
      int bp = std::min(opt.bins_polar - 1, int((t + 1.0) / 2.0 * opt.bins_polar));
      int ba = std::min(opt.bins_azimuth - 1, int(ph / (2.0 * M_PI) * opt.bins_azimuth));
      hist[bp * opt.bins_azimuth + ba] += 1.0;
      ++n_points;
    }
  hist /= hist.sum();
  out.histogram = hist;
  out.n_effective = double(snapshots.size()) / std::max(1.0, iat) *
                    snapshots.front().config.size();
  if (out.n_effective < 100)
    throw ValidationError("empirical_summary: fewer than 100 effective samples");

  Eigen::ArrayXd tgt = bin_density(grid, target, opt.bins_polar, opt.bins_azimuth);

  // bin centroids and chordal cost
  int nb = opt.bins_polar * opt.bins_azimuth;
  std::vector<SpherePoint> centers(nb);
  for (int bp = 0; bp < opt.bins_polar; ++bp)
    for (int ba = 0; ba < opt.bins_azimuth; ++ba) {
      double t = -1.0 + 2.0 * (bp + 0.5) / opt.bins_polar;
      double ph = 2.0 * M_PI * (ba + 0.5) / opt.bins_azimuth;
      centers[bp * opt.bins_azimuth + ba] = SpherePoint::from_angles(std::acos(t), ph);
    }
  Eigen::MatrixXd cost(nb, nb);
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) cost(i, j) = chordal(centers[i], centers[j]);

  double ab = sinkhorn_cost(hist, tgt, cost, opt.sinkhorn_epsilon, opt.sinkhorn_iterations);
  double aa = sinkhorn_cost(hist, hist, cost, opt.sinkhorn_epsilon, opt.sinkhorn_iterations);
  double bb = sinkhorn_cost(tgt, tgt, cost, opt.sinkhorn_epsilon, opt.sinkhorn_iterations);
  out.w1_to_target = std::max(0.0, ab - 0.5 * (aa + bb));

  // H^{-1}-type dual norm of (hist - target) via low-degree harmonics of the
  // bin indicator expansion
  double h2 = 0.0;
  int lmax = 8;
  std::vector<double> row(lmax + 1);
  for (int l = 1; l <= lmax; ++l) {
    for (int m = 0; m <= l; ++m) {
      std::complex<double> acc = 0.0;
      for (int i = 0; i < nb; ++i) {
        legendre_row(m, l, centers[i].t(), row.data());
        double re = row[l - m];
        double phv = centers[i].phi();
        acc += (hist[i] - tgt[i]) * re *
               std::complex<double>(std::cos(m * phv), -std::sin(m * phv));
      }
      double w = (m == 0) ? 1.0 : 2.0;
      h2 += w * std::norm(acc) / (double(l) * (l + 1));
    }
  }
  out.h_dual_to_target = std::sqrt(h2);
  return out;
}

DensityMeasure omega_k_beta(const QuadratureGrid& grid, int k, double beta,
                            const AnalyticPotential& phi0, const SectionBasis& basis,
                            std::int64_t inner_samples, std::uint64_t seed) {
  if (k != 1) throw ValidationError("omega_k_beta: only the k = 1 path is supported");
  if (beta <= 0.0) throw ValidationError("omega_k_beta: beta > 0 required");
  const int N = basis.N;
  auto rng = make_rng(seed, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // common random inner points for every grid x: noise cancels under dd^c
  std::vector<SpherePoint> ys(inner_samples), zs(inner_samples);
  std::vector<double> logw(inner_samples);
  for (std::int64_t i = 0; i < inner_samples; ++i) {
    ys[i] = SpherePoint::from_angles(std::acos(2 * unif(rng) - 1), 2 * M_PI * unif(rng));
    zs[i] = SpherePoint::from_angles(std::acos(2 * unif(rng) - 1), 2 * M_PI * unif(rng));
    logw[i] = -phi0.u0(ys[i]) - phi0.u0(zs[i]);
  }
  Eigen::ArrayXd log_f(grid.size());
  std::vector<SpherePoint> cfg(N);
  Eigen::ArrayXd u_at(N);
  for (int n = 0; n < grid.size(); ++n) {
    cfg[0] = grid.nodes[n];
    u_at[0] = phi0.u0(cfg[0]);
    std::vector<double> ell(inner_samples);
    for (std::int64_t i = 0; i < inner_samples; ++i) {
      cfg[1] = ys[i];
      cfg[2] = zs[i];
      u_at[1] = phi0.u0(ys[i]);
      u_at[2] = phi0.u0(zs[i]);
      LogSlater ls = log_slater(basis, cfg, u_at);
      ell[i] = (2.0 * beta / k) * (ls.finite ? ls.log_abs : -1e300) + logw[i];
    }
    double m = *std::max_element(ell.begin(), ell.end());
    double acc = 0.0;
    for (double e : ell) acc += std::exp(e - m);
    log_f[n] = m + std::log(acc / inner_samples);
  }
  // project to low harmonics before differentiating the MC estimate
  auto coeffs = grid.sht->analyze(log_f);
  int lcut = 12;
  for (int m = 0; m < int(coeffs.size()); ++m)
    for (int l = m; l < int(coeffs[m].size()) + m; ++l)
      if (l > lcut) coeffs[m][l - m] = 0.0;
  Eigen::ArrayXd smooth = grid.sht->synthesize(coeffs);
  Eigen::ArrayXd density = 1.0 + grid.sht->laplacian(smooth) / (2.0 * beta);
  density = density.max(0.0);
  density /= grid.integrate(density);
  return DensityMeasure(density, grid);
}

}  // namespace fanogibbs
