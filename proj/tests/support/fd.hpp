#pragma once

#include <functional>
#include <string>
#include <vector>

namespace invdes::testing {

/// Central finite differences of a scalar function, step h per coordinate.
std::vector<double> central_diff(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                 double h);

/// |a - b| / max(|a|, |b|, floor).
double rel_err(double a, double b, double floor = 1e-8);

/// Largest rel_err over paired entries.
double max_rel_err(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-8);

}  // namespace invdes::testing

#ifdef INVDES_DATA_DIR
namespace invdes::testing {
inline std::string data_dir() { return INVDES_DATA_DIR; }
inline std::string oracle_registry() { return data_dir() + "/registry/oracle"; }
inline std::string library_registry() { return data_dir() + "/registry/library"; }
}  // namespace invdes::testing
#endif
