#include "invdes/classifier/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "invdes/diffnum/init.hpp"
#include "invdes/error.hpp"
#include "json.hpp"

namespace invdes {

using nlohmann::ordered_json;

std::string to_jsonl(const Dataset& data) {
  std::string out;
  for (const auto& s : data) {
    ordered_json j;
    j["topology_id"] = s.topology_id;
    j["params"] = ordered_json::object();
    for (const auto& [k, v] : s.params) j["params"][k] = v;
    j["metrics"] = ordered_json::object();
    for (std::size_t i = 0; i < kNumMetrics; ++i) {
      const std::string name(kMetricNames[i]);
      if (s.metrics.mask.test(i)) {
        j["metrics"][name] = s.metrics.values[i];
      } else {
        j["metrics"][name] = nullptr;
      }
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

Dataset parse_jsonl(std::string_view text) {
  Dataset data;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      auto j = ordered_json::parse(line);
      Sample s;
      s.topology_id = j.at("topology_id").get<int>();
      for (const auto& [k, v] : j.at("params").items()) s.params[k] = v.get<double>();
      for (const auto& [k, v] : j.at("metrics").items()) {
        auto idx = metric_index(k);
        if (!idx) throw Error("unknown metric '" + k + "'");
        if (v.is_null()) continue;
        s.metrics.values[*idx] = v.get<double>();
        s.metrics.mask.set(*idx);
      }
      data.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

void save_jsonl(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_jsonl(data);
}

Dataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str());
}

Split stratified_split(const Dataset& data, const std::array<double, 3>& ratios, std::uint64_t seed,
                       std::size_t min_per_class) {
  for (double r : ratios) {
    if (r < 0.0) throw Error("split ratios must be nonnegative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw Error("split ratios must sum to 1");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data[i].topology_id].push_back(i);

  Split out;
  for (auto& [cls, idx] : by_class) {
    if (idx.size() < min_per_class) {
      throw Error("class " + std::to_string(cls) + " has " + std::to_string(idx.size()) +
                  " samples; at least " + std::to_string(min_per_class) + " required");
    }
    diffnum::Rng rng(diffnum::derive_seed(seed, static_cast<std::uint64_t>(cls)));
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    const auto n = static_cast<double>(idx.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * ratios[0]));
    const auto n_val = std::min(idx.size() - n_train, static_cast<std::size_t>(std::llround(n * ratios[1])));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Sample& s = data[idx[k]];
      if (k < n_train) {
        out.train.push_back(s);
      } else if (k < n_train + n_val) {
        out.val.push_back(s);
      } else {
        out.test.push_back(s);
      }
    }
  }
  return out;
}

}  // namespace invdes
