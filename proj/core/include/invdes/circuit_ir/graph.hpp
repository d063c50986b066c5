#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "invdes/circuit_ir/netlist.hpp"

namespace invdes::circuit_ir {

/// Diffusion extension used for drain/source areas: Ad = As = W * 0.1 um.
inline constexpr double kDiffusionExtension = 0.1e-6;

/// One component terminal pair. MOS devices contribute three (DG, DS, GS),
/// baluns three inductor edges (P, S, M) through an internal node.
struct Edge {
  std::string component;
  std::string role;   ///< "GS", "DS", "DG", "P", "S", "M" or empty
  std::string label;  ///< component, or component_role
  std::string etype;  ///< e.g. nmos_GS, resistor, inductor
  ComponentKind kind = ComponentKind::resistor;
  std::size_t u = 0;
  std::size_t v = 0;
  std::map<std::string, double> numeric;         ///< literal attrs (constants resolved)
  std::map<std::string, std::string> parametric;  ///< attr -> parameter symbol
  SourceKind source = SourceKind::none;
  std::map<std::string, double> computed;  ///< Ad/As when W is literal

  /// Every attribute key this edge carries (numeric, parametric, computed).
  [[nodiscard]] std::vector<std::string> attribute_keys() const;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected multigraph: nodes are nets, edges component terminal pairs.
struct CircuitGraph {
  std::string name;
  int topology_id = -1;
  std::vector<std::string> nodes;
  std::vector<Edge> edges;
  std::vector<ParamSpec> parameters;

  [[nodiscard]] std::size_t node_index(std::string_view net) const;
  [[nodiscard]] const ParamSpec* find_parameter(std::string_view symbol) const;

  friend bool operator==(const CircuitGraph&, const CircuitGraph&) = default;
};

/// Expands a parsed netlist into its graph. Nodes keep first-appearance order;
/// edges are sorted by (component id, role).
CircuitGraph build_graph(const Netlist& netlist, int topology_id);

/// Sorts nodes by name and edges by label, renumbering endpoints. Endpoints of
/// each edge are stored with the smaller node index first.
CircuitGraph canonicalize(const CircuitGraph& graph);

/// Applies a node permutation: new index of old node i is perm[i].
CircuitGraph relabel_nodes(const CircuitGraph& graph, const std::vector<std::size_t>& perm);

/// Throws Error if two edges of the same etype carry different attribute key sets.
void check_schema_uniformity(const CircuitGraph& graph);

/// Parameter values in SI units, ordered by name list.
class ParameterVector {
 public:
  ParameterVector() = default;
  ParameterVector(std::vector<std::string> names, std::vector<double> values);
  static ParameterVector from_map(const std::map<std::string, double>& values);

  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] std::size_t size() const { return names_.size(); }
  [[nodiscard]] const double* find(std::string_view name) const;
  [[nodiscard]] double at(std::string_view name) const;
  [[nodiscard]] std::map<std::string, double> to_map() const;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
};

class BindError : public Error {
 public:
  using Error::Error;
};

/// Graph with every parametric attribute resolved to a number.
struct BoundGraph {
  CircuitGraph graph;  ///< parametric maps kept as the symbol table
  std::vector<std::map<std::string, double>> attrs;  ///< per edge: numeric + bound + computed
  ParameterVector params;

  [[nodiscard]] double value(std::size_t edge, std::string_view attr) const;
};

/// Resolves every parametric attribute. Throws BindError on a missing symbol
/// or a value outside the parameter's declared bounds (no clipping here).
BoundGraph bind_parameters(const CircuitGraph& graph, const ParameterVector& x);

/// Deterministic Graphviz text. Edges sharing an etype share a color.
std::string export_dot(const CircuitGraph& graph);

}  // namespace invdes::circuit_ir
