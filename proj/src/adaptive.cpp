#include "fanogibbs/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/Eigenvalues>

namespace fanogibbs {

namespace {

// 5-point Gauss-Legendre on [0,1]
constexpr double kG5x[5] = {0.04691007703066800, 0.23076534494715845, 0.5,
                            0.76923465505284155, 0.95308992296933200};
constexpr double kG5w[5] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                            0.23931433524968324, 0.11846344252809454};

struct Panel {
  double t0, t1, p0, p1;
  int depth;
  bool has_hint;
};

double eval_panel(const std::function<double(const SpherePoint&)>& f, const Panel& c,
                  int* evals) {
  double acc = 0.0;
  for (int i = 0; i < 5; ++i) {
    double t = c.t0 + (c.t1 - c.t0) * kG5x[i];
    double theta = std::acos(std::clamp(t, -1.0, 1.0));
    for (int j = 0; j < 5; ++j) {
      double phi = c.p0 + (c.p1 - c.p0) * kG5x[j];
      acc += kG5w[i] * kG5w[j] * f(SpherePoint::from_angles(theta, phi));
    }
  }
  *evals += 25;
  return acc * (c.t1 - c.t0) * (c.p1 - c.p0) / (4.0 * M_PI);
}

}  // namespace

AdaptiveResult adaptive_sphere_integral(const std::function<double(const SpherePoint&)>& f,
                                        const std::vector<SpherePoint>& hints,
                                        const AdaptiveOptions& opt) {
  std::vector<std::pair<double, double>> hint_tp(hints.size());
  for (size_t i = 0; i < hints.size(); ++i)
    hint_tp[i] = {hints[i].t(), std::fmod(hints[i].phi() + 2.0 * M_PI, 2.0 * M_PI)};

  auto contains_hint = [&](const Panel& c) {
    for (auto& [ht, hp] : hint_tp) {
      bool in_t = ht >= c.t0 - 1e-15 && ht <= c.t1 + 1e-15;
      // panels touching a pole own every azimuth
      bool polar = c.t1 > 1.0 - 1e-12 || c.t0 < -1.0 + 1e-12;
      bool in_p = polar || (hp >= c.p0 - 1e-15 && hp <= c.p1 + 1e-15);
      if (in_t && in_p) return true;
    }
    return false;
  };

  AdaptiveResult out;
  std::deque<Panel> work;
  // initial 4 x 8 panels
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 8; ++j) {
      Panel c{-1.0 + 0.5 * i, -1.0 + 0.5 * (i + 1), 2.0 * M_PI * j / 8.0,
              2.0 * M_PI * (j + 1) / 8.0, 0, false};
      c.has_hint = contains_hint(c);
      work.push_back(c);
    }

  double total = 0.0, err_total = 0.0;
  int panels = int(work.size());
  // rough magnitude from the initial pass; spikes below grid scale get found
  // later through the hint-forced refinement, so this only seeds the floor
  double scale = 0.0;
  for (auto& c : work) scale += std::abs(eval_panel(f, c, &out.evaluations));
  scale = std::max(scale, 1e-300);

  while (!work.empty()) {
    Panel c = work.front();
    work.pop_front();
    double coarse = eval_panel(f, c, &out.evaluations);
    // 2x2 refinement estimate
    double fine = 0.0;
    Panel sub[4];
    double tm = 0.5 * (c.t0 + c.t1), pm = 0.5 * (c.p0 + c.p1);
    sub[0] = {c.t0, tm, c.p0, pm, c.depth + 1, false};
    sub[1] = {c.t0, tm, pm, c.p1, c.depth + 1, false};
    sub[2] = {tm, c.t1, c.p0, pm, c.depth + 1, false};
    sub[3] = {tm, c.t1, pm, c.p1, c.depth + 1, false};
    double subval[4];
    for (int s = 0; s < 4; ++s) {
      subval[s] = eval_panel(f, sub[s], &out.evaluations);
      fine += subval[s];
    }
    scale = std::max(scale, std::abs(fine));
    double err = std::abs(fine - coarse);
    // local control: spiky panels are judged against their own contribution
    double panel_tol = opt.rel_tol * std::max(std::abs(fine), 1e-4 * scale);
    bool hint_hold = c.has_hint && std::abs(fine) > opt.rel_tol * scale * 1e-2 &&
                     c.depth < opt.max_depth;
    if ((err < panel_tol && !hint_hold) || c.depth >= opt.max_depth ||
        panels >= opt.max_panels || std::abs(fine) < opt.abs_floor) {
      total += fine;
      err_total += err;
      if (panels >= opt.max_panels)
        out.converged = out.converged && (err < 100 * panel_tol);
      continue;
    }
    for (int s = 0; s < 4; ++s) {
      sub[s].has_hint = c.has_hint && contains_hint(sub[s]);
      work.push_back(sub[s]);
      ++panels;
    }
  }
  out.value = total;
  out.error_estimate = err_total;
  return out;
}

AdaptiveResult adaptive_radial_integral(const std::function<double(double)>& f, double a,
                                        double b, bool singular_left,
                                        const AdaptiveOptions& opt) {
  struct Seg {
    double a, b;
    int depth;
    bool left;
  };
  auto eval = [&](double x0, double x1, int* n) {
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) acc += kG5w[i] * f(x0 + (x1 - x0) * kG5x[i]);
    *n += 5;
    return acc * (x1 - x0);
  };
  AdaptiveResult out;
  std::deque<Seg> work{{a, b, 0, singular_left}};
  double total = 0.0, err_total = 0.0;
  double scale = std::abs(eval(a, b, &out.evaluations));
  scale = std::max(scale, 1e-300);
  int segs = 1;
  while (!work.empty()) {
    Seg s = work.front();
    work.pop_front();
    double coarse = eval(s.a, s.b, &out.evaluations);
    double m = 0.5 * (s.a + s.b);
    double fine = eval(s.a, m, &out.evaluations) + eval(m, s.b, &out.evaluations);
    double err = std::abs(fine - coarse);
    bool hold = s.left && std::abs(fine) > opt.rel_tol * scale * 1e-4 && s.depth < opt.max_depth;
    if ((err < opt.rel_tol * scale * 0.05 && !hold) || s.depth >= opt.max_depth ||
        segs >= opt.max_panels) {
      total += fine;
      err_total += err;
      continue;
    }
    work.push_back({s.a, m, s.depth + 1, s.left});
    work.push_back({m, s.b, s.depth + 1, false});
    segs += 2;
  }
  out.value = total;
  out.error_estimate = err_total;
  return out;
}

std::vector<SpherePoint> binary_form_roots(const Eigen::VectorXcd& c) {
  // c[j] multiplies z0^j z1^{2k-j}; in the chart w = z1/z0 the form is
  // sum_j c[j] w^{2k-j}, leading coefficient c[0].
  int deg = int(c.size()) - 1;
  std::vector<SpherePoint> roots;
  double cmax = c.cwiseAbs().maxCoeff();
  if (cmax == 0.0) return roots;
  // strip (near-)zero leading coefficients: roots at w = infinity, i.e. (0,1)
  int lead = 0;
  while (lead < deg && std::abs(c[lead]) < 1e-13 * cmax) {
    roots.push_back(SpherePoint(0.0, 1.0));
    ++lead;
  }
  int trail = deg;
  while (trail > lead && std::abs(c[trail]) < 1e-13 * cmax) {
    roots.push_back(SpherePoint(1.0, 0.0));  // w = 0
    --trail;
  }
  int n = trail - lead;  // effective degree
  if (n <= 0) return roots;
  // companion of the monic q(w) = w^n + sum_m (c[trail-m]/c[lead]) w^m
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[trail - i] / c[lead];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp);
  for (int i = 0; i < n; ++i) {
    std::complex<double> w = es.eigenvalues()[i];
    roots.push_back(SpherePoint(1.0, w));
  }
  return roots;
}

}  // namespace fanogibbs
