#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "invdes/metrics.hpp"

namespace invdes {

/// Per-metric z-score statistics over present entries only.
struct NormStats {
  std::array<double, kNumMetrics> mean{};
  std::array<double, kNumMetrics> std{};  ///< population standard deviation
  MetricMask fitted;                      ///< metrics seen at least once

  static NormStats fit(const std::vector<PerformanceVector>& samples);

  /// Present entries become (x - mean) / std; absent entries are 0 with mask 0.
  /// Throws DomainError when a present metric has std 0 or was never fitted.
  [[nodiscard]] PerformanceVector normalize(const PerformanceVector& raw) const;
  [[nodiscard]] double normalize(std::size_t metric, double value) const;
  [[nodiscard]] double denormalize(std::size_t metric, double z) const;

  [[nodiscard]] std::string to_json() const;
  static NormStats from_json(std::string_view text);
};

}  // namespace invdes
