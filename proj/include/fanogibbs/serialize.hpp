#pragma once

// File formats: JSON documents for grids/potentials/bases/metrics/reports,
// CSV for densities, traces, snapshots and sweep tables.

#include <string>

#include <json.hpp>

#include "fanogibbs/partition.hpp"
#include "fanogibbs/quantized.hpp"
#include "fanogibbs/sampler.hpp"

namespace fanogibbs {

using json = nlohmann::json;

json grid_to_json(const QuadratureGrid& grid, bool with_nodes = false);
json potential_to_json(const QuadratureGrid& grid, const Potential& phi);
Potential potential_from_json(const QuadratureGrid& grid, const json& j);

std::string density_to_csv(const QuadratureGrid& grid, const DensityMeasure& mu);

json basis_to_json(const SectionBasis& basis);
SectionBasis basis_from_json(const json& j);

json metric_to_json(const HermitianMetricK& H);
HermitianMetricK metric_from_json(const json& j);

json report_to_json(const FunctionalReport& r);
json verifier_to_json(const VerifierReport& r);
json threshold_to_json(const ThresholdEstimate& t);
json partition_estimate_to_json(const PartitionEstimate& e);
json summary_to_json(const EmpiricalSummary& s);

std::string snapshots_to_csv(const std::vector<ChainState>& snapshots);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace fanogibbs
