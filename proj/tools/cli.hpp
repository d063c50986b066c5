#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace CLI {
class App;
}

namespace invdes::cli {

/// Every flag the tool accepts. Optional fields fall back to library defaults.
struct RunConfig {
  std::string subcommand;
  std::string data;
  std::string out;
  std::string model;
  std::uint64_t seed = 42;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  std::string topology;
  std::string target;
  std::string netlist;
  std::string params;
  bool trace = false;
  std::string registry;
  std::size_t n = 2000;
  std::vector<std::string> families;
};

/// Builds the parser; parsed values land in `config`.
std::unique_ptr<CLI::App> make_app(RunConfig& config);

/// Registry directory: --registry, then $FALCON_REGISTRY, then the bundled
/// oracle registry.
std::string resolve_registry(const RunConfig& config);

/// Parses and runs one invocation. Exit codes: 0 success, 1 runtime failure,
/// 2 bad flags. The JSON result goes to `out` (or --out), logs and errors to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace invdes::cli
