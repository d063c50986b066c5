#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "invdes/classifier/dataset.hpp"
#include "invdes/classifier/performance.hpp"
#include "invdes/diffnum/nn.hpp"

namespace invdes::classifier {

inline constexpr std::size_t kNumClasses = 20;

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// Confusion-matrix summary. Macro scores average over classes that occur in
/// the truth labels or the predictions; a class never predicted has precision 0.
/// Balanced accuracy averages recall over classes present in the truth.
struct Report {
  std::size_t count = 0;
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  ///< [truth][predicted]

  [[nodiscard]] std::string to_json() const;
};

Report compute_report(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted,
                      std::size_t num_classes = kNumClasses);

struct Prediction {
  std::size_t topology = 0;
  std::array<double, kNumClasses> probabilities{};
};

/// 16 -> 256 -> 256 -> 256 -> 256 -> 20 MLP with relu and a softmax head.
class Classifier {
 public:
  explicit Classifier(std::uint64_t seed = 42);

  /// Raw logits for a batch of normalized inputs {n, 16}.
  [[nodiscard]] diffnum::Tensor logits(const diffnum::Tensor& x) const;
  /// Normalizes with the stored statistics, then classifies.
  [[nodiscard]] Prediction predict(const PerformanceVector& raw) const;
  [[nodiscard]] Prediction predict_normalized(const PerformanceVector& normalized) const;

  [[nodiscard]] const NormStats& stats() const { return stats_; }
  void set_stats(NormStats stats) { stats_ = std::move(stats); }
  [[nodiscard]] std::vector<diffnum::NamedTensor> named_parameters() const;

  /// Writes classifier.weights.json and classifier.json into `dir`.
  void save(const std::filesystem::path& dir) const;
  static Classifier load(const std::filesystem::path& dir);

 private:
  diffnum::Mlp mlp_;
  NormStats stats_;
};

struct TrainConfig {
  std::uint64_t seed = 42;
  std::size_t max_epochs = 200;
  std::size_t batch = 256;
  double lr = 1e-3;
  std::size_t patience = 10;  ///< early stopping on validation cross-entropy
  std::function<void(std::size_t epoch, double train_loss, double val_loss)> on_epoch;
};

struct TrainResult {
  Classifier model;
  Report test;
  std::size_t epochs = 0;
  double best_val_loss = 0.0;
};

/// Fits normalization statistics on the training split, trains with
/// cross-entropy and Adam, restores the best validation weights and reports
/// on the test split. Throws when a class in val/test has no training samples.
TrainResult train_classifier(const Split& split, const TrainConfig& config);

Report evaluate(const Classifier& model, const Dataset& data);

/// Normalized inputs {n, 16} (absent metrics imputed as 0).
diffnum::Tensor input_matrix(const Dataset& data, const NormStats& stats);

}  // namespace invdes::classifier
