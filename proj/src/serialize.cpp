#include "fanogibbs/serialize.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fanogibbs {

json grid_to_json(const QuadratureGrid& grid, bool with_nodes) {
  json j;
  j["resolution"] = {grid.n_polar, grid.n_azimuth};
  if (with_nodes) {
    json nodes = json::array();
    for (const SpherePoint& p : grid.nodes)
      nodes.push_back({p.theta(), p.phi()});
    j["nodes"] = nodes;
  }
  return j;
}

json potential_to_json(const QuadratureGrid& grid, const Potential& phi) {
  json j = grid_to_json(grid);
  j["values"] = std::vector<double>(phi.u.data(), phi.u.data() + phi.u.size());
  return j;
}

Potential potential_from_json(const QuadratureGrid& grid, const json& j) {
  auto res = j.at("resolution");
  if (res[0].get<int>() != grid.n_polar || res[1].get<int>() != grid.n_azimuth)
    throw ValidationError("potential_from_json: resolution mismatch");
  std::vector<double> v = j.at("values").get<std::vector<double>>();
  if (int(v.size()) != grid.size()) throw ValidationError("potential_from_json: size mismatch");
  return Potential(Eigen::Map<Eigen::ArrayXd>(v.data(), v.size()));
}

std::string density_to_csv(const QuadratureGrid& grid, const DensityMeasure& mu) {
  std::ostringstream os;
  os.precision(17);
  os << "node,polar,azimuth,density\n";
  for (int n = 0; n < grid.size(); ++n) {
    int ip = n / grid.n_azimuth, ia = n % grid.n_azimuth;
    os << n << "," << grid.theta[ip] << "," << grid.phi[ia] << "," << mu.density[n] << "\n";
  }
  return os.str();
}

json basis_to_json(const SectionBasis& basis) {
  json j;
  j["k"] = basis.k;
  j["orthonormal"] = basis.orthonormal;
  json rows = json::array();
  for (int i = 0; i < basis.N; ++i) {
    json row = json::array();
    for (int c = 0; c < basis.N; ++c)
      row.push_back({basis.coeffs(i, c).real(), basis.coeffs(i, c).imag()});
    rows.push_back(row);
  }
  j["coeffs"] = rows;
  return j;
}

SectionBasis basis_from_json(const json& j) {
  SectionBasis b;
  b.k = j.at("k").get<int>();
  b.N = 2 * b.k + 1;
  b.orthonormal = j.at("orthonormal").get<bool>();
  b.coeffs.resize(b.N, b.N);
  const json& rows = j.at("coeffs");
  for (int i = 0; i < b.N; ++i)
    for (int c = 0; c < b.N; ++c)
      b.coeffs(i, c) = std::complex<double>(rows[i][c][0].get<double>(),
                                            rows[i][c][1].get<double>());
  return b;
}

json metric_to_json(const HermitianMetricK& H) {
  json j;
  j["k"] = H.k;
  json re = json::array(), im = json::array();
  for (int i = 0; i < H.H.rows(); ++i)
    for (int c = 0; c < H.H.cols(); ++c) {
      re.push_back(H.H(i, c).real());
      im.push_back(H.H(i, c).imag());
    }
  j["re"] = re;
  j["im"] = im;
  return j;
}

HermitianMetricK metric_from_json(const json& j) {
  int k = j.at("k").get<int>();
  int N = 2 * k + 1;
  Eigen::MatrixXcd M(N, N);
  const json& re = j.at("re");
  const json& im = j.at("im");
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < N; ++c)
      M(i, c) = std::complex<double>(re[i * N + c].get<double>(), im[i * N + c].get<double>());
  return HermitianMetricK(k, M);
}

json report_to_json(const FunctionalReport& r) {
  json j;
  j["value"] = r.value;
  j["breakdown"] = r.breakdown;
  j["normalization"] = r.normalization;
  return j;
}

json verifier_to_json(const VerifierReport& r) {
  json j;
  j["name"] = r.name;
  j["inputs"] = {{"k", r.k}, {"gamma", r.gamma}};
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["slack"] = r.slack;
  j["stderr"] = r.std_err;
  j["seed"] = r.seed;
  j["extra"] = r.extra;
  return j;
}

json threshold_to_json(const ThresholdEstimate& t) {
  json j;
  j["gamma_low"] = t.gamma_low;
  j["gamma_high"] = t.gamma_high;
  json ev = json::array();
  for (const GammaDiagnostic& d : t.evidence) {
    json e;
    e["gamma"] = d.gamma;
    e["exponent"] = d.exponent;
    e["exponent_se"] = d.exponent_se;
    e["shell_log2_mass"] = d.shell_log2_mass;
    ev.push_back(e);
  }
  j["evidence"] = ev;
  return j;
}

json partition_estimate_to_json(const PartitionEstimate& e) {
  json j;
  j["log_z"] = e.log_z;
  j["stderr"] = e.std_err;
  switch (e.method) {
    case ZMethod::tensor_quadrature: j["method"] = "tensor_quadrature"; break;
    case ZMethod::monte_carlo: j["method"] = "monte_carlo"; break;
    case ZMethod::determinant_identity: j["method"] = "determinant_identity"; break;
  }
  j["n_samples"] = e.n_samples;
  j["gamma"] = e.gamma;
  j["k"] = e.k;
  j["converged"] = e.converged;
  return j;
}

json summary_to_json(const EmpiricalSummary& s) {
  json j;
  j["bins"] = {s.bins_polar, s.bins_azimuth};
  j["histogram"] = std::vector<double>(s.histogram.data(),
                                       s.histogram.data() + s.histogram.size());
  j["w1_to_target"] = s.w1_to_target;
  j["h_dual_to_target"] = s.h_dual_to_target;
  j["n_effective"] = s.n_effective;
  return j;
}

std::string snapshots_to_csv(const std::vector<ChainState>& snapshots) {
  std::ostringstream os;
  os.precision(17);
  os << "step,point,polar,azimuth\n";
  for (const ChainState& s : snapshots)
    for (size_t i = 0; i < s.config.size(); ++i)
      os << s.step << "," << i << "," << s.config[i].theta() << "," << s.config[i].phi()
         << "\n";
  return os.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_text: cannot open " + path);
  os << content;
}

std::string read_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_text: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace fanogibbs
