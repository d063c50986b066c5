#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "invdes/circuit_ir/topology.hpp"
#include "invdes/classifier/dataset.hpp"
#include "invdes/forward_model/model.hpp"

namespace invdes::forward_model {

/// Per-sample mean of squared error over masked entries, averaged over the
/// batch. Accepts {16} or {B, 16}. Throws when a sample's mask is all zero.
diffnum::Tensor masked_mse(const diffnum::Tensor& pred, const diffnum::Tensor& target, const diffnum::Tensor& mask);

/// Regression quality of one metric in raw units.
struct MetricStats {
  std::size_t count = 0;
  std::optional<double> r2;  ///< nullopt when the targets have zero variance
  double rmse = 0.0;
  double mae = 0.0;
  double mean_rel_err = 0.0;  ///< |pred - y| / |y| over entries with y != 0
};

struct RegressionReport {
  std::size_t count = 0;
  std::array<std::optional<MetricStats>, kNumMetrics> metrics;  ///< set for metrics present in the data
  double mean_rel_err = 0.0;  ///< mean of the per-metric relative errors

  [[nodiscard]] std::string to_json() const;
};

/// Builds the report from raw predictions and raw truths (masks from the truths).
RegressionReport compute_regression_report(const std::vector<PerformanceVector>& predicted,
                                           const std::vector<PerformanceVector>& truth);

struct ForwardTrainConfig {
  ModelConfig model;
  std::uint64_t seed = 42;  ///< shuffling; the model seed lives in `model`
  std::size_t max_epochs = 150;
  std::size_t batch = 256;
  double lr = 1e-3;
  std::size_t patience = 20;  ///< early stopping on validation loss
  std::size_t scheduler_patience = 5;
  double scheduler_factor = 0.5;
  double grad_clip = 1.0;  ///< global gradient-norm bound per step; 0 disables
  std::function<void(std::size_t epoch, double train_loss, double val_loss, double lr)> on_epoch;
};

struct ForwardTrainResult {
  ForwardModel model;
  RegressionReport test;
  std::size_t epochs = 0;
  double best_val_loss = 0.0;
};

/// Fits the target codec on the training split, trains every weight with Adam
/// and a plateau scheduler, restores the best validation weights and reports
/// on the test split. Throws Error when the loss becomes non-finite.
ForwardTrainResult train_forward(const circuit_ir::TopologyRegistry& registry, const Split& split,
                                 const ForwardTrainConfig& config);

/// Copies `base` and trains only its output head on `split`; the trunk and the
/// target codec are left untouched.
ForwardTrainResult finetune_head(const ForwardModel& base, const circuit_ir::TopologyRegistry& registry,
                                 const Split& split, const ForwardTrainConfig& config);

/// Raw-unit predictions, masked by each sample's metric mask.
std::vector<PerformanceVector> predict_raw(const ForwardModel& model, const circuit_ir::TopologyRegistry& registry,
                                           const Dataset& data);

RegressionReport evaluate_forward(const ForwardModel& model, const circuit_ir::TopologyRegistry& registry,
                                  const Dataset& data);

}  // namespace invdes::forward_model
