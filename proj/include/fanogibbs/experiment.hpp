#pragma once

// Experiment runner: strict config parsing, dispatch to the verifier and
// sampler machinery, flat-file persistence keyed by config hash, and
// plot-data emission (CSV series + JSON manifest; no rendering).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fanogibbs/serialize.hpp"

namespace fanogibbs {

enum class ExperimentKind { gram, donaldson, partition, sample, verify, thresholds, sweep };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::verify;
  int k = 1;
  std::optional<double> gamma;
  std::optional<double> beta;
  int grid_polar = 96, grid_azimuth = 64;
  std::int64_t budget = 100000;
  std::uint64_t seed = 1;
  AnalyticPotential phi0;
  std::string out_dir = "runs";
  std::vector<int> sweep_k{1, 2};
  std::vector<double> sweep_gamma{0.3, 0.5, 0.6};

  static ExperimentConfig parse(const json& j);  // unknown keys rejected
  json to_json() const;
  std::string hash() const;
};

struct RunRecord {
  std::string config_hash;
  std::string started, finished;  // ISO-8601, not part of the payload hash
  std::string artifact_version;
  json payload;
  std::string payload_hash;
  std::string status;  // "ok" | error text

  json to_json() const;
};

// Executes one experiment, persists record + CSV/JSON side files under
// <out_dir>/<experiment>-<hash>/, returns the record.
RunRecord run_experiment(const ExperimentConfig& config);

// Markdown + CSV summary table keyed by (k, gamma).
std::string report_markdown(const std::vector<RunRecord>& records);
std::string report_csv(const std::vector<RunRecord>& records);

std::string fnv1a_hash(const std::string& data);

}  // namespace fanogibbs
