#include "invdes/oracle/oracle.hpp"

#include <cmath>
#include <numbers>

#include "invdes/diffnum/init.hpp"
#include "invdes/error.hpp"

namespace invdes::oracle {

using circuit_ir::ParameterVector;
using circuit_ir::ParamSpec;

namespace {

PerformanceVector with(std::initializer_list<std::pair<Metric, double>> values) {
  PerformanceVector p;
  for (const auto& [m, v] : values) {
    const auto i = static_cast<std::size_t>(m);
    p.values[i] = v;
    p.mask.set(i);
  }
  return p;
}

MetricMask mask_of(std::initializer_list<Metric> metrics) {
  MetricMask m;
  for (auto x : metrics) m.set(static_cast<std::size_t>(x));
  return m;
}

std::vector<OracleFamily> make_families() {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<OracleFamily> out;

  out.push_back({"rc_amp", 13,
                 {{"W", 2e-6, 20e-6, 1e-6}, {"R", 500.0, 2e3, 1e3}, {"C", 50e-15, 500e-15, 100e-15}},
                 mask_of({Metric::DCP, Metric::VGain, Metric::BW}),
                 [](const ParameterVector& x) {
                   const double w_um = x.at("W") * 1e6;
                   const double r = x.at("R");
                   const double c = x.at("C");
                   return with({{Metric::DCP, 0.2 * w_um},
                                {Metric::VGain, 20.0 * std::log10(1e-3 * w_um * r)},
                                {Metric::BW, 1.0 / (two_pi * r * c)}});
                 }});

  out.push_back({"lc_osc", 17,
                 {{"L", 200e-12, 1e-9, 100e-12}, {"C", 100e-15, 1e-12, 100e-15}, {"W", 5e-6, 30e-6, 1e-6}},
                 mask_of({Metric::DCP, Metric::OscF, Metric::OutP}),
                 [](const ParameterVector& x) {
                   const double w_um = x.at("W") * 1e6;
                   return with({{Metric::DCP, 0.3 * w_um},
                                {Metric::OscF, 1.0 / (two_pi * std::sqrt(x.at("L") * x.at("C")))},
                                {Metric::OutP, 10.0 * std::log10(w_um)}});
                 }});

  out.push_back({"rdiv_att", 15,
                 {{"R1", 100.0, 5e3, 1e3}, {"R2", 100.0, 5e3, 1e3}},
                 mask_of({Metric::VGain}),
                 [](const ParameterVector& x) {
                   const double r1 = x.at("R1");
                   const double r2 = x.at("R2");
                   return with({{Metric::VGain, 20.0 * std::log10(r2 / (r1 + r2))}});
                 }});
  return out;
}

}  // namespace

const std::vector<OracleFamily>& builtin_families() {
  static const std::vector<OracleFamily> families = make_families();
  return families;
}

const OracleFamily& family(std::string_view name) {
  for (const auto& f : builtin_families()) {
    if (f.name == name) return f;
  }
  throw Error("unknown oracle family '" + std::string(name) + "'");
}

const OracleFamily* family_for_topology(int topology_id) {
  for (const auto& f : builtin_families()) {
    if (f.topology_id == topology_id) return &f;
  }
  return nullptr;
}

PerformanceVector eval_oracle(const OracleFamily& family, const ParameterVector& x) {
  for (const auto& p : family.parameters) {
    const double* v = x.find(p.name);
    if (!v) throw Error("oracle " + family.name + " needs parameter '" + p.name + "'");
    const double tol = 1e-9 * p.upper;
    if (!std::isfinite(*v) || *v < p.lower - tol || *v > p.upper + tol) {
      throw DomainError("oracle " + family.name + ": " + p.name + " = " + std::to_string(*v) + " out of bounds");
    }
  }
  return family.evaluate(x);
}

PerformanceVector eval_oracle(const OracleFamily& family, const std::map<std::string, double>& x) {
  return eval_oracle(family, ParameterVector::from_map(x));
}

ParameterVector sample_parameters(const OracleFamily& family, std::uint64_t seed) {
  diffnum::Rng rng(seed);
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& p : family.parameters) {
    names.push_back(p.name);
    values.push_back(rng.uniform(p.lower, p.upper));
  }
  return {std::move(names), std::move(values)};
}

Dataset generate_dataset(const std::vector<std::string>& families, std::size_t n, std::uint64_t seed) {
  Dataset out;
  out.reserve(families.size() * n);
  for (const auto& name : families) {
    const OracleFamily& f = family(name);
    const std::uint64_t family_seed = diffnum::derive_seed(seed, static_cast<std::uint64_t>(f.topology_id));
    for (std::size_t k = 0; k < n; ++k) {
      auto x = sample_parameters(f, diffnum::derive_seed(family_seed, k));
      out.push_back({f.topology_id, x.to_map(), f.evaluate(x)});
    }
  }
  return out;
}

}  // namespace invdes::oracle
