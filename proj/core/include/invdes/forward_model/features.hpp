#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "invdes/circuit_ir/graph.hpp"
#include "invdes/diffnum/tensor.hpp"

namespace invdes::forward_model {

/// Width of the trailing source one-hot (dc, ac, none).
inline constexpr std::size_t kSourceOneHot = 3;

struct FeatureSlot {
  std::string attr;
  circuit_ir::Quantity quantity;
};

/// Feature layout of one etype: attribute slots, then the source one-hot.
struct EtypeSchema {
  std::string etype;
  std::vector<FeatureSlot> slots;
  [[nodiscard]] std::size_t dim() const { return slots.size() + kSourceOneHot; }
};

/// Every etype the graph builder can emit, sorted.
const std::vector<std::string>& known_etypes();
/// Throws Error naming the etype when it is unknown.
EtypeSchema etype_schema(const std::string& etype);

/// Divides each attribute by its unit scale (R/1e3, C/1e-13, L/1e-10, ...).
/// Attributes outside the etype's schema are dropped.
std::map<std::string, double> rescale_inputs(const std::map<std::string, double>& attrs, const std::string& etype);

/// Full feature vector of one bound edge: rescaled slots then the one-hot.
std::vector<double> edge_features(const circuit_ir::BoundGraph& graph, std::size_t edge);

/// Edges of one etype. Feature (row r, column c) equals
/// constant[r*dim + c] + coef[r*dim + c] * x_scaled[index[r*dim + c]], where
/// index == num_params selects an implicit zero.
struct EdgeGroup {
  std::string etype;
  std::size_t dim = 0;
  std::vector<std::size_t> edges;  ///< indices into the source graph
  std::vector<double> constant;
  std::vector<std::size_t> index;
  std::vector<double> coef;
};

/// A graph compiled for repeated evaluation at different parameter values.
/// Parameters enter in scaled units: x_scaled[j] = x_si[j] / scale[j].
class GraphTemplate {
 public:
  GraphTemplate() = default;
  /// `params` fixes the parameter order and scales.
  static GraphTemplate compile(const circuit_ir::CircuitGraph& graph, const std::vector<circuit_ir::ParamSpec>& params);

  [[nodiscard]] std::size_t num_nodes() const { return num_nodes_; }
  [[nodiscard]] std::size_t num_edges() const { return src_.size(); }
  [[nodiscard]] std::size_t num_params() const { return names_.size(); }
  [[nodiscard]] const std::vector<EdgeGroup>& groups() const { return groups_; }
  /// Endpoints in group-concatenated edge order.
  [[nodiscard]] const std::vector<std::size_t>& src() const { return src_; }
  [[nodiscard]] const std::vector<std::size_t>& dst() const { return dst_; }
  [[nodiscard]] const std::vector<std::string>& param_names() const { return names_; }
  [[nodiscard]] const std::vector<double>& param_scales() const { return scales_; }
  [[nodiscard]] const std::vector<circuit_ir::ParamSpec>& params() const { return params_; }

  /// SI parameter values in template order divided by their scales.
  [[nodiscard]] std::vector<double> scale(const circuit_ir::ParameterVector& x_si) const;
  [[nodiscard]] std::vector<double> scale(const std::map<std::string, double>& x_si) const;
  [[nodiscard]] circuit_ir::ParameterVector unscale(const std::vector<double>& x_scaled) const;

  /// Differentiable features {edges, dim} of group g.
  [[nodiscard]] diffnum::Tensor features(std::size_t g, const diffnum::Tensor& x_scaled) const;
  /// Plain features of group g written row-major into `out`.
  void features(std::size_t g, const std::vector<double>& x_scaled, std::vector<double>& out) const;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<EdgeGroup> groups_;
  std::vector<std::size_t> src_;
  std::vector<std::size_t> dst_;
  std::vector<std::string> names_;
  std::vector<double> scales_;
  std::vector<circuit_ir::ParamSpec> params_;
};

}  // namespace invdes::forward_model
