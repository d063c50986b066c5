#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "invdes/circuit_ir/topology.hpp"
#include "invdes/classifier/classifier.hpp"
#include "invdes/diffnum/tensor.hpp"
#include "invdes/forward_model/model.hpp"
#include "invdes/layout/layout.hpp"
#include "invdes/oracle/oracle.hpp"

namespace invdes::inverse {

/// g = 1 - sigmoid(gamma * (l_perf - tau)).
double gate(double l_perf, double tau = 0.05, double gamma = 50.0);
diffnum::Tensor gate(const diffnum::Tensor& l_perf, double tau = 0.05, double gamma = 50.0);

/// l_perf + lambda * l_layout * gate(l_perf), differentiable in both inputs.
diffnum::Tensor total_loss(const diffnum::Tensor& l_perf, const diffnum::Tensor& l_layout, double lambda_area = 0.02,
                           double tau = 0.05, double gamma = 50.0);

/// Log-uniform draw of every parameter inside its bounds (SI units). A
/// degenerate interval returns its bound; a non-positive lower bound falls
/// back to a linear draw.
circuit_ir::ParameterVector init_params(const std::vector<circuit_ir::ParamSpec>& params, std::uint64_t seed);

/// Mean of |pred - target| / |target| over masked metrics with nonzero target.
/// Throws DomainError when no metric qualifies.
double mean_relative_error(const PerformanceVector& predicted, const PerformanceVector& target, MetricMask mask);

/// Differentiable map from scaled parameters to the 16 normalized outputs.
class Surrogate {
 public:
  virtual ~Surrogate() = default;
  [[nodiscard]] virtual std::size_t num_params() const = 0;
  /// {16} in normalized target space.
  [[nodiscard]] virtual diffnum::Tensor predict(const diffnum::Tensor& x_scaled) const = 0;
  [[nodiscard]] virtual double encode(std::size_t metric, double raw) const = 0;
  [[nodiscard]] virtual double decode(std::size_t metric, double z) const = 0;
};

/// A trained forward model evaluated on one compiled topology graph.
class GraphSurrogate : public Surrogate {
 public:
  /// Throws Error when the model lacks an encoder for one of the graph's etypes.
  GraphSurrogate(const forward_model::ForwardModel& model, const circuit_ir::CircuitGraph& graph,
                 const std::vector<circuit_ir::ParamSpec>& params);

  [[nodiscard]] std::size_t num_params() const override { return template_.num_params(); }
  [[nodiscard]] diffnum::Tensor predict(const diffnum::Tensor& x_scaled) const override;
  [[nodiscard]] double encode(std::size_t metric, double raw) const override;
  [[nodiscard]] double decode(std::size_t metric, double z) const override;
  [[nodiscard]] const forward_model::GraphTemplate& graph_template() const { return template_; }

 private:
  const forward_model::ForwardModel& model_;
  forward_model::GraphTemplate template_;
};

struct DesignProblem {
  PerformanceVector target;  ///< raw units; the mask selects the optimized metrics
  std::vector<circuit_ir::ParamSpec> params;
  std::vector<layout::PassiveTerm> passives;  ///< indices follow `params`
  double area_budget_mm2 = 1.0;
  int topology_id = -1;
  std::string topology_code;

  /// Problem for a registry topology; the target mask is intersected with the
  /// topology's metrics. Throws Error when nothing remains to optimize.
  static DesignProblem for_topology(const circuit_ir::TopologySpec& spec, const circuit_ir::CircuitGraph& graph,
                                    const PerformanceVector& target);
};

struct DesignConfig {
  double lambda_area = 0.02;
  double tau = 0.05;
  double gamma = 50.0;
  double lr = 1e-6;
  double restart_lr_factor = 100.0;
  double max_lr = 1e-2;
  std::size_t max_restarts = 3;
  std::size_t max_steps = 20000;
  std::size_t window = 200;  ///< early stop after this many steps without improvement
  double min_rel_improvement = 1e-2;  ///< relative drop of the best loss that resets the window
  /// An attempt ends this many steps after its best point first converges.
  std::size_t polish_steps = 500;
  std::size_t scheduler_patience = 50;
  double scheduler_factor = 0.5;
  double min_lr = 1e-8;
  double converge_rel_err = 0.10;
  double success_rel_err = 0.20;
  /// Called with the scaled parameters after every clipped update.
  std::function<void(const std::vector<double>& x_scaled)> on_step;
};

struct Attempt {
  double lr = 0.0;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  double loss = 0.0;
  bool converged = false;
};

struct DesignResult {
  int topology_id = -1;
  std::string topology_code;
  circuit_ir::ParameterVector x;  ///< SI units
  PerformanceVector target;
  PerformanceVector predicted;    ///< raw units, target mask
  double predicted_rel_err = 0.0;
  double perf_loss = 0.0;
  double loss = 0.0;
  double area_mm2 = 0.0;
  double area_budget_mm2 = 0.0;
  bool converged = false;
  std::optional<double> oracle_rel_err;
  std::optional<PerformanceVector> oracle_metrics;
  bool success = false;
  std::vector<double> trace;  ///< best-so-far total loss per step of the selected attempt
  std::vector<Attempt> attempts;
  std::size_t restarts = 0;
  double seconds = 0.0;

  [[nodiscard]] std::string to_json(bool include_trace = false) const;
};

/// Adam on the scaled parameters with a plateau scheduler, clipping after every
/// step and restarts at a larger learning rate until a run converges.
DesignResult optimize(const DesignProblem& problem, const Surrogate& surrogate, std::uint64_t seed,
                      const DesignConfig& config = {});

struct OracleValidation {
  PerformanceVector metrics;
  std::array<std::optional<double>, kNumMetrics> rel_err;
  double mean_rel_err = 0.0;
  bool success = false;
};

/// Evaluates the oracle at result.x, compares with the target and records the
/// outcome in `result`. Throws Error when the family covers another topology.
OracleValidation validate_with_oracle(DesignResult& result, const oracle::OracleFamily& family,
                                      double success_rel_err = 0.20);

struct PipelineOptions {
  std::string topology = "auto";  ///< "auto" or a registry code / id
  std::uint64_t seed = 42;
  DesignConfig config;
};

/// Stage 1 picks the topology (unless forced), Stage 3 sizes it, and the
/// oracle validates the design when one covers the topology.
DesignResult end_to_end_design(const PerformanceVector& target, const classifier::Classifier& classifier,
                               const forward_model::ForwardModel& model,
                               const circuit_ir::TopologyRegistry& registry, const PipelineOptions& options);

}  // namespace invdes::inverse
