#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "invdes/circuit_ir/graph.hpp"
#include "invdes/classifier/performance.hpp"
#include "invdes/diffnum/nn.hpp"
#include "invdes/forward_model/features.hpp"

namespace invdes::forward_model {

struct ModelConfig {
  std::size_t dim = 64;          ///< edge embedding width D
  std::size_t layers = 4;        ///< message-passing rounds
  std::size_t hidden = 64;       ///< encoder / message / update hidden width
  std::size_t head_hidden = 256;
  /// Initial weight gain of the last message and update layers (sum
  /// aggregation compounds it across rounds).
  double trunk_out_gain = 0.5;
  std::vector<std::string> etypes = known_etypes();
  std::uint64_t seed = 42;
};

/// Maps raw metrics to the model's target space: optional log10 for
/// frequency-valued metrics, then a z-score over present training entries.
struct TargetCodec {
  std::array<bool, kNumMetrics> log_scale{};
  NormStats stats;

  /// log10 for BW and OscF, identity elsewhere.
  static std::array<bool, kNumMetrics> default_log_scale();
  static TargetCodec fit(const std::vector<PerformanceVector>& raw,
                         const std::array<bool, kNumMetrics>& log_scale = default_log_scale());

  [[nodiscard]] double encode(std::size_t metric, double raw) const;
  [[nodiscard]] double decode(std::size_t metric, double z) const;
  [[nodiscard]] PerformanceVector encode(const PerformanceVector& raw) const;

  [[nodiscard]] std::string to_json() const;
  static TargetCodec from_json(std::string_view text);
};

/// Concatenated graphs. Edges are grouped by etype; endpoints carry node offsets.
struct Batch {
  std::vector<std::string> etypes;            ///< one per feature block
  std::vector<diffnum::Tensor> features;      ///< {edges_of_etype, dim}
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  std::vector<std::size_t> graph_of_edge;
  std::size_t num_nodes = 0;
  std::size_t num_graphs = 0;
};

/// Builds a batch from compiled graphs and their scaled parameter vectors.
Batch make_batch(const std::vector<const GraphTemplate*>& graphs, const std::vector<std::vector<double>>& x_scaled);

using MessageFn = std::function<diffnum::Tensor(const diffnum::Tensor&)>;
/// (e, h_u, h_v) -> e'.
using UpdateFn = std::function<diffnum::Tensor(const diffnum::Tensor&, const diffnum::Tensor&, const diffnum::Tensor&)>;

/// `layers` rounds of: node states h = sum of msg(e) over incident edges
/// (both endpoints), then e' = upd(e, h_u, h_v). `e` is {edges, D}.
diffnum::Tensor message_pass(const diffnum::Tensor& e, const std::vector<std::size_t>& src,
                             const std::vector<std::size_t>& dst, std::size_t num_nodes, const MessageFn& msg,
                             const UpdateFn& upd, std::size_t layers);

/// Edge-centric GNN: per-etype encoders, shared message/update networks
/// reused at every layer, sum pooling and an MLP head onto 16 outputs.
class ForwardModel {
 public:
  explicit ForwardModel(ModelConfig config = {});

  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] bool has_etype(const std::string& etype) const { return encoders_.count(etype) != 0; }

  /// Initial embeddings {edges, D} in the graph's edge order.
  [[nodiscard]] diffnum::Tensor encode_edges(const circuit_ir::BoundGraph& graph) const;
  /// Normalized-space outputs {16}.
  [[nodiscard]] diffnum::Tensor predict(const circuit_ir::BoundGraph& graph) const;
  /// Same, differentiable with respect to scaled parameters x {p}.
  [[nodiscard]] diffnum::Tensor predict(const GraphTemplate& graph, const diffnum::Tensor& x_scaled) const;
  /// {graphs, 16}.
  [[nodiscard]] diffnum::Tensor forward(const Batch& batch) const;

  /// Node-side update with endpoint-order symmetrization.
  [[nodiscard]] diffnum::Tensor update(const diffnum::Tensor& e, const diffnum::Tensor& hu,
                                       const diffnum::Tensor& hv) const;

  [[nodiscard]] const diffnum::Mlp& message_net() const { return msg_; }
  [[nodiscard]] const diffnum::Mlp& update_net() const { return upd_; }
  [[nodiscard]] const diffnum::Mlp& head() const { return head_; }

  [[nodiscard]] std::vector<diffnum::NamedTensor> named_parameters() const;
  /// Encoders plus message and update networks.
  [[nodiscard]] std::vector<diffnum::NamedTensor> trunk_parameters() const;
  [[nodiscard]] std::vector<diffnum::NamedTensor> head_parameters() const;

  [[nodiscard]] const TargetCodec& codec() const { return codec_; }
  void set_codec(TargetCodec codec) { codec_ = std::move(codec); }

  /// Independent copy with its own weight storage.
  [[nodiscard]] ForwardModel clone() const;

  /// Writes forward.weights.json and the forward.json sidecar.
  void save(const std::filesystem::path& dir) const;
  static ForwardModel load(const std::filesystem::path& dir);

 private:
  [[nodiscard]] const diffnum::Mlp& encoder(const std::string& etype) const;
  [[nodiscard]] diffnum::Tensor readout(const diffnum::Tensor& e, const std::vector<std::size_t>& src,
                                        const std::vector<std::size_t>& dst, std::size_t num_nodes,
                                        const std::vector<std::size_t>& graph_of_edge, std::size_t num_graphs) const;

  ModelConfig config_;
  std::map<std::string, diffnum::Mlp> encoders_;
  diffnum::Mlp msg_;
  diffnum::Mlp upd_;
  diffnum::Mlp head_;
  TargetCodec codec_;
};

}  // namespace invdes::forward_model
