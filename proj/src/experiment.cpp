#include "fanogibbs/experiment.hpp"

#include <chrono>
#include <cmath>
#include <set>

namespace fanogibbs {

namespace {

const char* kVersion = "0.1.0";

std::string now_iso() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
  return buf;
}

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::gram: return "gram";
    case ExperimentKind::donaldson: return "donaldson";
    case ExperimentKind::partition: return "partition";
    case ExperimentKind::sample: return "sample";
    case ExperimentKind::verify: return "verify";
    case ExperimentKind::thresholds: return "thresholds";
    case ExperimentKind::sweep: return "sweep";
  }
  return "?";
}

ExperimentKind kind_from(const std::string& s) {
  for (ExperimentKind k : {ExperimentKind::gram, ExperimentKind::donaldson,
                           ExperimentKind::partition, ExperimentKind::sample,
                           ExperimentKind::verify, ExperimentKind::thresholds,
                           ExperimentKind::sweep})
    if (kind_name(k) == s) return k;
  throw ValidationError("unknown experiment: " + s);
}

AnalyticPotential phi0_from(const json& j) {
  std::string preset = j.at("preset").get<std::string>();
  if (preset == "fs") {
    for (auto& [key, _] : j.items())
      if (key != "preset") throw ValidationError("phi0: unknown key " + key);
    return AnalyticPotential::fubini_study();
  }
  if (preset == "bump") {
    double a = 0.0, w = 1.0;
    double th = 0.0, ph = 0.0;
    for (auto& [key, val] : j.items()) {
      if (key == "preset") continue;
      else if (key == "amplitude") a = val.get<double>();
      else if (key == "center") { th = val[0].get<double>(); ph = val[1].get<double>(); }
      else if (key == "width") w = val.get<double>();
      else throw ValidationError("phi0: unknown key " + key);
    }
    if (std::abs(a) > 0.8) throw ValidationError("phi0: |amplitude| <= 0.8 required");
    if (w < 0.3 || w > 3.0) throw ValidationError("phi0: width in [0.3, 3] required");
    return AnalyticPotential::bump(a, SpherePoint::from_angles(th, ph), w);
  }
  throw ValidationError("phi0: unknown preset " + preset);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const json& j) {
  ExperimentConfig c;
  static const std::set<std::string> known{"experiment", "k", "gamma", "beta", "grid",
                                           "budget", "seed", "phi0", "out",
                                           "sweep_k", "sweep_gamma"};
  for (auto& [key, _] : j.items())
    if (!known.count(key)) throw ValidationError("config: unknown key " + key);
  c.experiment = kind_from(j.at("experiment").get<std::string>());
  if (j.contains("k")) c.k = j["k"].get<int>();
  if (c.k < 1 || c.k > 6) throw ValidationError("config: k in [1, 6] required");
  if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
  if (j.contains("beta")) c.beta = j["beta"].get<double>();
  if (c.gamma && c.beta) throw ValidationError("config: give gamma or beta, not both");
  if (c.gamma && (std::abs(*c.gamma) > 10 || *c.gamma == 0.0))
    throw ValidationError("config: gamma must be nonzero with |gamma| <= 10");
  if (c.beta && std::abs(*c.beta) > 10) throw ValidationError("config: |beta| <= 10");
  if (j.contains("grid")) {
    c.grid_polar = j["grid"][0].get<int>();
    c.grid_azimuth = j["grid"][1].get<int>();
  }
  if (c.grid_polar < 8 || c.grid_polar > 512 || c.grid_azimuth < 8 || c.grid_azimuth > 512)
    throw ValidationError("config: grid sides in [8, 512] required");
  if (j.contains("budget")) c.budget = j["budget"].get<std::int64_t>();
  if (c.budget < 1000 || c.budget > 1000000000)
    throw ValidationError("config: budget in [1e3, 1e9] required");
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("phi0")) c.phi0 = phi0_from(j["phi0"]);
  if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  if (j.contains("sweep_k")) c.sweep_k = j["sweep_k"].get<std::vector<int>>();
  if (j.contains("sweep_gamma")) c.sweep_gamma = j["sweep_gamma"].get<std::vector<double>>();
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = kind_name(experiment);
  j["k"] = k;
  if (gamma) j["gamma"] = *gamma;
  if (beta) j["beta"] = *beta;
  j["grid"] = {grid_polar, grid_azimuth};
  j["budget"] = budget;
  j["seed"] = seed;
  json p;
  if (phi0.is_reference()) {
    p["preset"] = "fs";
  } else {
    p["preset"] = "bump";
    p["amplitude"] = phi0.amplitude;
    p["center"] = {phi0.center.theta(), phi0.center.phi()};
    p["width"] = phi0.width;
  }
  j["phi0"] = p;
  j["out"] = out_dir;
  j["sweep_k"] = sweep_k;
  j["sweep_gamma"] = sweep_gamma;
  return j;
}

std::string fnv1a_hash(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ExperimentConfig::hash() const { return fnv1a_hash(to_json().dump()); }

json RunRecord::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["started"] = started;
  j["finished"] = finished;
  j["artifact_version"] = artifact_version;
  j["payload"] = payload;
  j["payload_hash"] = payload_hash;
  j["status"] = status;
  return j;
}

namespace {

double resolve_gamma(const ExperimentConfig& c, double fallback) {
  if (c.gamma) return *c.gamma;
  if (c.beta) return -*c.beta;
  return fallback;
}

json run_gram(const ExperimentConfig& c, const QuadratureGrid& grid) {
  SectionBasis basis = orthonormal_basis(c.k, grid);
  Potential p0 = c.phi0.render(grid);
  DensityMeasure dv((-p0.u).exp(), grid);
  HermitianMetricK H = gram(grid, p0, dv, basis);
  json out;
  out["basis"] = basis_to_json(basis);
  out["gram"] = metric_to_json(H);
  out["log_det"] = H.log_det();
  return out;
}

json run_donaldson(const ExperimentConfig& c, const QuadratureGrid& grid,
                   std::vector<std::pair<std::string, std::string>>* files) {
  double gamma = resolve_gamma(c, 1.0);
  SectionBasis basis = orthonormal_basis(c.k, grid);
  GammaParams p(gamma, c.k, c.phi0.render(grid));
  HermitianMetricK H = HermitianMetricK::identity(c.k);
  double D = quantized_ding(grid, H, p, basis);
  std::ostringstream trace;
  trace.precision(17);
  trace << "step,ding,residual\n";
  int steps = int(std::min<std::int64_t>(200, c.budget));
  double residual = 0.0;
  for (int s = 0; s < steps; ++s) {
    HermitianMetricK T = donaldson_step(grid, H, p, basis);
    double DT = quantized_ding(grid, T, p, basis);
    double lambda = (T.H.cwiseProduct(H.H.conjugate()).sum().real()) / H.H.squaredNorm();
    residual = (T.H - lambda * H.H).norm() / H.H.norm();
    trace << s << "," << DT << "," << residual << "\n";
    bool done = (D - DT) < 1e-13 * std::max(1.0, std::abs(DT));
    H = std::move(T);
    D = DT;
    if (done) break;
  }
  files->push_back({"donaldson_trace.csv", trace.str()});
  json out;
  out["final"] = metric_to_json(H);
  out["ding"] = D;
  out["fixed_point_residual"] = residual;
  MinimizeResult m = minimize_quantized_ding(grid, p, basis, 1e-11);
  out["minimized_value"] = m.value;
  out["diverged"] = m.diverged;
  return out;
}

json run_partition(const ExperimentConfig& c, const QuadratureGrid& grid) {
  double gamma = resolve_gamma(c, 0.5);
  SectionBasis basis = orthonormal_basis(c.k, grid);
  ZOptions zopt;
  zopt.seed = c.seed;
  PartitionEstimate mc = z_estimate(grid, c.k, gamma, c.phi0, basis, c.budget, zopt);
  json out;
  out["monte_carlo"] = partition_estimate_to_json(mc);
  if (c.k == 1 && c.phi0.is_reference() && gamma < 0.95) {
    PartitionEstimate q = z_quadrature_k1(gamma);
    out["tensor_quadrature"] = partition_estimate_to_json(q);
    out["paths_agree_sigma"] =
        std::abs(q.log_z - mc.log_z) / std::sqrt(q.std_err * q.std_err + mc.std_err * mc.std_err);
  }
  if (gamma == -double(c.k)) {
    Potential p0 = c.phi0.render(grid);
    DensityMeasure dv((-p0.u).exp(), grid);
    out["determinant_identity"] =
        partition_estimate_to_json(z_determinant_estimate(grid, c.k, p0, dv, basis));
  }
  return out;
}

json run_sample(const ExperimentConfig& c, const QuadratureGrid& grid,
                std::vector<std::pair<std::string, std::string>>* files) {
  double beta = c.beta ? *c.beta : (c.gamma ? -*c.gamma : 1.0);
  SectionBasis basis = orthonormal_basis(c.k, grid);
  McmcOptions mopt;
  mopt.seed = c.seed;
  McmcResult chain = mcmc_run(grid, c.k, beta, c.phi0, basis, c.budget, mopt);
  GammaParams p(-beta, c.k, c.phi0.render(grid));
  AubinResult aubin = solve_aubin(grid, p, 1e-7);
  DensityMeasure target = ma_measure(grid, aubin.phi);
  EmpiricalSummary s = empirical_summary(grid, chain.snapshots, target, chain.iat);
  EmpiricalSummary s_fs =
      empirical_summary(grid, chain.snapshots, ma_measure(grid, reference_metric(grid)),
                        chain.iat);
  files->push_back({"snapshots.csv", snapshots_to_csv(chain.snapshots)});
  json out;
  out["summary_vs_aubin"] = summary_to_json(s);
  out["summary_vs_fs"] = summary_to_json(s_fs);
  out["acceptance_rate"] = chain.acceptance_rate;
  out["cap_radius"] = chain.cap_radius;
  out["max_drift"] = chain.max_drift;
  out["iat"] = chain.iat;
  return out;
}

json run_verify(const ExperimentConfig& c, const QuadratureGrid& grid) {
  double gamma = resolve_gamma(c, 0.5);
  SectionBasis basis = orthonormal_basis(c.k, grid);
  json out;
  out["prop_key_inequality"] = verifier_to_json(
      verify_prop_key_inequality(grid, c.k, gamma, c.phi0, basis, c.budget, c.seed));
  out["thm_quantized"] = verifier_to_json(
      verify_thm_quantized(grid, c.k, gamma, c.phi0, basis, c.budget, c.seed));
  out["main_theorem"] = verifier_to_json(
      verify_main_theorem(grid, c.k, gamma, c.phi0, basis, c.budget, c.seed));
  return out;
}

json run_thresholds(const ExperimentConfig& c, const QuadratureGrid& grid,
                    std::vector<std::pair<std::string, std::string>>* files) {
  SectionBasis basis = orthonormal_basis(c.k, grid);
  DetectOptions dopt;
  dopt.seed = c.seed;
  dopt.budget = c.budget;
  ThresholdEstimate t = gamma_k_detect(grid, c.k, c.phi0, basis, dopt);
  GammaParams p(1.0, c.k, c.phi0.render(grid));
  DeltaKOptions kopt;
  kopt.seed = c.seed;
  DeltaKResult d = delta_k_estimate(grid, c.k, p, 8);
  std::ostringstream series;
  series.precision(17);
  series << "gamma,exponent,exponent_se\n";
  for (const GammaDiagnostic& g : t.evidence)
    series << g.gamma << "," << g.exponent << "," << g.exponent_se << "\n";
  files->push_back({"threshold_scan.csv", series.str()});
  json out;
  out["gamma_k"] = threshold_to_json(t);
  out["delta_k"] = d.delta;
  out["corollary_gamma_le_delta"] = (t.gamma_high <= d.delta + 0.05);
  return out;
}

json run_sweep(const ExperimentConfig& c, const QuadratureGrid& grid,
               std::vector<std::pair<std::string, std::string>>* files) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "gamma,k,functional,value,error_estimate\n";
  json cells = json::array();
  for (int k : c.sweep_k) {
    SectionBasis basis = orthonormal_basis(k, grid);
    for (double gamma : c.sweep_gamma) {
      VerifierReport r =
          verify_thm_quantized(grid, k, gamma, c.phi0, basis, c.budget, c.seed);
      csv << gamma << "," << k << ",thm_quantized_slack," << r.slack << "," << r.std_err
          << "\n";
      cells.push_back(verifier_to_json(r));
    }
  }
  files->push_back({"sweep.csv", csv.str()});
  json out;
  out["cells"] = cells;
  return out;
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& config) {
  RunRecord rec;
  rec.config_hash = config.hash();
  rec.started = now_iso();
  rec.artifact_version = kVersion;
  std::vector<std::pair<std::string, std::string>> files;
  QuadratureGrid grid = build_grid(config.grid_polar, config.grid_azimuth);
  json payload;
  payload["config"] = config.to_json();
  switch (config.experiment) {
    case ExperimentKind::gram: payload["result"] = run_gram(config, grid); break;
    case ExperimentKind::donaldson:
      payload["result"] = run_donaldson(config, grid, &files);
      break;
    case ExperimentKind::partition: payload["result"] = run_partition(config, grid); break;
    case ExperimentKind::sample: payload["result"] = run_sample(config, grid, &files); break;
    case ExperimentKind::verify: payload["result"] = run_verify(config, grid); break;
    case ExperimentKind::thresholds:
      payload["result"] = run_thresholds(config, grid, &files);
      break;
    case ExperimentKind::sweep: payload["result"] = run_sweep(config, grid, &files); break;
  }
  rec.payload = payload;
  rec.payload_hash = fnv1a_hash(payload.dump());
  rec.finished = now_iso();
  rec.status = "ok";

  std::string dir = config.out_dir + "/" +
                    kind_name(config.experiment) + "-" + rec.config_hash;
  write_text(dir + "/record.json", rec.to_json().dump(2) + "\n");
  json manifest;
  manifest["series"] = json::array();
  for (auto& [name, content] : files) {
    write_text(dir + "/" + name, content);
    json s;
    s["file"] = name;
    s["format"] = "csv";
    manifest["series"].push_back(s);
  }
  write_text(dir + "/plots.json", manifest.dump(2) + "\n");
  return rec;
}

std::string report_markdown(const std::vector<RunRecord>& records) {
  std::ostringstream os;
  os << "| k | gamma | experiment | lhs | rhs | slack | stderr | C | gamma_k bracket | "
        "delta_k |\n";
  os << "|---|-------|------------|-----|-----|-------|--------|---|-----------------|------"
        "---|\n";
  for (const RunRecord& r : records) {
    const json& cfg = r.payload.at("config");
    const json& res = r.payload.at("result");
    std::string kind = cfg.at("experiment").get<std::string>();
    auto row = [&](const json& v) {
      os << "| " << cfg.at("k") << " | "
         << (v.contains("inputs") ? v["inputs"].value("gamma", 0.0)
                                  : cfg.value("gamma", 0.0))
         << " | " << kind + (v.contains("name") ? ":" + v["name"].get<std::string>() : "")
         << " | " << v.value("lhs", 0.0) << " | " << v.value("rhs", 0.0) << " | "
         << v.value("slack", 0.0) << " | " << v.value("stderr", 0.0) << " | "
         << (v.contains("extra") && v["extra"].contains("C")
                 ? std::to_string(v["extra"]["C"].get<double>())
                 : "-")
         << " | - | - |\n";
    };
    if (kind == "verify") {
      row(res.at("prop_key_inequality"));
      row(res.at("thm_quantized"));
      row(res.at("main_theorem"));
    } else if (kind == "sweep") {
      for (const json& cell : res.at("cells")) row(cell);
    } else if (kind == "thresholds") {
      os << "| " << cfg.at("k") << " | - | thresholds | - | - | - | - | - | ["
         << res["gamma_k"]["gamma_low"].get<double>() << ", "
         << res["gamma_k"]["gamma_high"].get<double>() << "] | "
         << res["delta_k"].get<double>() << " |\n";
    } else {
      os << "| " << cfg.at("k") << " | " << cfg.value("gamma", 0.0) << " | " << kind
         << " | - | - | - | - | - | - | - |\n";
    }
  }
  return os.str();
}

std::string report_csv(const std::vector<RunRecord>& records) {
  std::ostringstream os;
  os << "k,gamma,name,lhs,rhs,slack,stderr\n";
  os.precision(17);
  for (const RunRecord& r : records) {
    const json& cfg = r.payload.at("config");
    const json& res = r.payload.at("result");
    std::string kind = cfg.at("experiment").get<std::string>();
    auto row = [&](const json& v) {
      os << cfg.at("k").get<int>() << ","
         << (v.contains("inputs") ? v["inputs"].value("gamma", 0.0) : cfg.value("gamma", 0.0))
         << "," << v.value("name", kind) << "," << v.value("lhs", 0.0) << ","
         << v.value("rhs", 0.0) << "," << v.value("slack", 0.0) << ","
         << v.value("stderr", 0.0) << "\n";
    };
    if (kind == "verify") {
      row(res.at("prop_key_inequality"));
      row(res.at("thm_quantized"));
      row(res.at("main_theorem"));
    } else if (kind == "sweep") {
      for (const json& cell : res.at("cells")) row(cell);
    }
  }
  return os.str();
}

}  // namespace fanogibbs
