#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "invdes/metrics.hpp"

namespace invdes {

/// One labeled circuit instance: topology, SI parameter values, raw metrics.
struct Sample {
  int topology_id = -1;
  std::map<std::string, double> params;
  PerformanceVector metrics;

  friend bool operator==(const Sample& a, const Sample& b) {
    return a.topology_id == b.topology_id && a.params == b.params && a.metrics.values == b.metrics.values &&
           a.metrics.mask == b.metrics.mask;
  }
};

using Dataset = std::vector<Sample>;

/// One JSON object per line: {topology_id, params:{name:value}, metrics:{name:value|null}}.
/// Every one of the 16 metric keys is written; absent metrics are null.
std::string to_jsonl(const Dataset& data);
/// Missing metric keys count as absent. Throws Error with the line number.
Dataset parse_jsonl(std::string_view text);

void save_jsonl(const Dataset& data, const std::filesystem::path& path);
Dataset load_jsonl(const std::filesystem::path& path);

struct Split {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Per-class shuffle and cut. Each class contributes round(n*r_train) train and
/// round(n*r_val) val samples; the rest go to test. Throws when ratios do not
/// sum to 1, a ratio is negative, or a class has fewer than `min_per_class` samples.
Split stratified_split(const Dataset& data, const std::array<double, 3>& ratios, std::uint64_t seed,
                       std::size_t min_per_class = 10);

}  // namespace invdes
