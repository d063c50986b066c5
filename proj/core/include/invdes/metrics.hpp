#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace invdes {

inline constexpr std::size_t kNumMetrics = 16;

/// Canonical metric order. Never reorder: serialized vectors depend on it.
enum class Metric : std::uint8_t {
  DCP, VGain, PGain, CGain, S11, S22, NF, BW,
  OscF, TR, OutP, PSAT, DE, PAE, PN, VSwg,
};

inline constexpr std::array<std::string_view, kNumMetrics> kMetricNames = {
    "DCP", "VGain", "PGain", "CGain", "S11", "S22", "NF",  "BW",
    "OscF", "TR",   "OutP",  "PSAT",  "DE",  "PAE", "PN",  "VSwg"};

/// Index of a metric by canonical name; nullopt when unknown.
std::optional<std::size_t> metric_index(std::string_view name);

/// Bit i set means metric i is defined.
class MetricMask {
 public:
  constexpr MetricMask() = default;
  constexpr explicit MetricMask(std::uint16_t bits) : bits_(bits) {}

  static MetricMask from_names(const std::vector<std::string>& names);

  [[nodiscard]] constexpr bool test(std::size_t i) const { return (bits_ >> i) & 1U; }
  constexpr void set(std::size_t i, bool on = true) {
    if (on) {
      bits_ = static_cast<std::uint16_t>(bits_ | (1U << i));
    } else {
      bits_ = static_cast<std::uint16_t>(bits_ & ~(1U << i));
    }
  }
  [[nodiscard]] constexpr std::uint16_t bits() const { return bits_; }
  [[nodiscard]] constexpr bool empty() const { return bits_ == 0; }
  [[nodiscard]] std::size_t count() const;
  [[nodiscard]] std::vector<std::string> names() const;
  /// 0/1 weights in canonical order.
  [[nodiscard]] std::array<double, kNumMetrics> weights() const;

  friend constexpr bool operator==(MetricMask, MetricMask) = default;

 private:
  std::uint16_t bits_ = 0;
};

/// Raw metric values with a validity mask. Absent slots hold 0.
struct PerformanceVector {
  std::array<double, kNumMetrics> values{};
  MetricMask mask;

  static PerformanceVector from_optional(const std::array<std::optional<double>, kNumMetrics>& v);
};

}  // namespace invdes
