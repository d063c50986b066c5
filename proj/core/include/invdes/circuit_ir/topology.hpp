#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "invdes/circuit_ir/graph.hpp"
#include "invdes/circuit_ir/netlist.hpp"
#include "invdes/metrics.hpp"

namespace invdes::circuit_ir {

/// Per-topology metadata: sweep bounds, applicable metrics, area budget.
struct TopologySpec {
  int id = -1;
  std::string code;
  std::vector<ParamSpec> parameters;
  MetricMask metric_mask;
  double area_budget_mm2 = 1.0;
  std::filesystem::path netlist_path;  ///< absolute once loaded from a registry

  /// Throws Error when bounds, scales or the mask are invalid.
  void validate() const;
  [[nodiscard]] const ParamSpec* find_parameter(std::string_view name) const;

  [[nodiscard]] Netlist load_netlist() const;
  [[nodiscard]] CircuitGraph load_graph() const;

  /// JSON document; `base_dir` resolves relative netlist paths.
  static TopologySpec from_json(std::string_view text, const std::filesystem::path& base_dir);
  [[nodiscard]] std::string to_json() const;
};

/// Directory of TopologySpec JSON documents (*.json).
class TopologyRegistry {
 public:
  TopologyRegistry() = default;
  static TopologyRegistry load(const std::filesystem::path& dir);

  void add(TopologySpec spec);
  [[nodiscard]] const TopologySpec& by_id(int id) const;
  [[nodiscard]] const TopologySpec& by_code(std::string_view code) const;
  /// Accepts a code or a decimal id.
  [[nodiscard]] const TopologySpec& resolve(std::string_view code_or_id) const;
  [[nodiscard]] bool contains(int id) const { return by_id_.count(id) != 0; }
  [[nodiscard]] std::vector<const TopologySpec*> all() const;

  /// Graph of a topology's netlist, built when the entry is added.
  [[nodiscard]] const CircuitGraph& graph(int id) const;

 private:
  std::map<int, TopologySpec> by_id_;
  std::map<int, CircuitGraph> graphs_;
};

}  // namespace invdes::circuit_ir
