#include "invdes/classifier/performance.hpp"

#include <cmath>

#include "invdes/error.hpp"
#include "json.hpp"

namespace invdes {

using nlohmann::ordered_json;

NormStats NormStats::fit(const std::vector<PerformanceVector>& samples) {
  NormStats s;
  std::array<double, kNumMetrics> count{};
  for (const auto& p : samples) {
    for (std::size_t i = 0; i < kNumMetrics; ++i) {
      if (!p.mask.test(i)) continue;
      s.mean[i] += p.values[i];
      count[i] += 1.0;
    }
  }
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (count[i] > 0.0) {
      s.mean[i] /= count[i];
      s.fitted.set(i);
    }
  }
  for (const auto& p : samples) {
    for (std::size_t i = 0; i < kNumMetrics; ++i) {
      if (!p.mask.test(i)) continue;
      const double d = p.values[i] - s.mean[i];
      s.std[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (count[i] > 0.0) s.std[i] = std::sqrt(s.std[i] / count[i]);
  }
  return s;
}

double NormStats::normalize(std::size_t metric, double value) const {
  if (!fitted.test(metric)) {
    throw DomainError("metric " + std::string(kMetricNames[metric]) + " has no fitted statistics");
  }
  if (!(std[metric] > 0.0)) {
    throw DomainError("metric " + std::string(kMetricNames[metric]) + " has zero spread in the training data");
  }
  return (value - mean[metric]) / std[metric];
}

double NormStats::denormalize(std::size_t metric, double z) const { return mean[metric] + std[metric] * z; }

PerformanceVector NormStats::normalize(const PerformanceVector& raw) const {
  PerformanceVector out;
  out.mask = raw.mask;
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (raw.mask.test(i)) out.values[i] = normalize(i, raw.values[i]);
  }
  return out;
}

std::string NormStats::to_json() const {
  ordered_json j = ordered_json::object();
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (!fitted.test(i)) continue;
    j[std::string(kMetricNames[i])] = {{"mean", mean[i]}, {"std", std[i]}};
  }
  return j.dump();
}

NormStats NormStats::from_json(std::string_view text) {
  NormStats s;
  try {
    auto j = ordered_json::parse(text);
    for (const auto& [k, v] : j.items()) {
      auto idx = metric_index(k);
      if (!idx) throw Error("unknown metric '" + k + "' in normalization statistics");
      s.mean[*idx] = v.at("mean").get<double>();
      s.std[*idx] = v.at("std").get<double>();
      s.fitted.set(*idx);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed normalization statistics: ") + e.what());
  }
  return s;
}

}  // namespace invdes
