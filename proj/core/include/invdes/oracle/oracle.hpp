#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "invdes/circuit_ir/graph.hpp"
#include "invdes/classifier/dataset.hpp"
#include "invdes/metrics.hpp"

namespace invdes::oracle {

/// Closed-form synthetic circuit family. Its TopologySpec and netlist live in
/// the bundled oracle registry under the same code and id.
struct OracleFamily {
  std::string name;
  int topology_id = -1;
  std::vector<circuit_ir::ParamSpec> parameters;
  MetricMask mask;
  /// Metric evaluation without bounds checking.
  std::function<PerformanceVector(const circuit_ir::ParameterVector&)> evaluate;
};

/// rc_amp, lc_osc and rdiv_att, in that order.
const std::vector<OracleFamily>& builtin_families();
const OracleFamily& family(std::string_view name);
/// nullptr when no family occupies this topology id.
const OracleFamily* family_for_topology(int topology_id);

/// Deterministic metrics. Throws DomainError when x is outside the family's box.
PerformanceVector eval_oracle(const OracleFamily& family, const circuit_ir::ParameterVector& x);
PerformanceVector eval_oracle(const OracleFamily& family, const std::map<std::string, double>& x);

/// Uniform (linear) draw inside the parameter box.
circuit_ir::ParameterVector sample_parameters(const OracleFamily& family, std::uint64_t seed);

/// n records per family; record k of a family uses its own derived seed, so
/// output is independent of evaluation order.
Dataset generate_dataset(const std::vector<std::string>& families, std::size_t n, std::uint64_t seed);

}  // namespace invdes::oracle
