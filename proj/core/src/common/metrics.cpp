#include "invdes/metrics.hpp"

#include <bit>

#include "invdes/error.hpp"

namespace invdes {

std::optional<std::size_t> metric_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (kMetricNames[i] == name) return i;
  }
  return std::nullopt;
}

MetricMask MetricMask::from_names(const std::vector<std::string>& names) {
  MetricMask m;
  for (const auto& n : names) {
    auto idx = metric_index(n);
    if (!idx) throw Error("unknown metric name '" + n + "'");
    m.set(*idx);
  }
  return m;
}

std::size_t MetricMask::count() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<std::string> MetricMask::names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (test(i)) out.emplace_back(kMetricNames[i]);
  }
  return out;
}

std::array<double, kNumMetrics> MetricMask::weights() const {
  std::array<double, kNumMetrics> w{};
  for (std::size_t i = 0; i < kNumMetrics; ++i) w[i] = test(i) ? 1.0 : 0.0;
  return w;
}

PerformanceVector PerformanceVector::from_optional(
    const std::array<std::optional<double>, kNumMetrics>& v) {
  PerformanceVector p;
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (v[i]) {
      p.values[i] = *v[i];
      p.mask.set(i);
    }
  }
  return p;
}

}  // namespace invdes
