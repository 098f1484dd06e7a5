#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nlresolvent/completeness.hpp"
#include "nlresolvent/dirichlet.hpp"
#include "nlresolvent/graph.hpp"

namespace nlresolvent::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfigError = 2,
  kNotConverged = 3,
};

/// Raised for malformed flags or config files; maps to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::string mode;
  std::string graph = "lattice-z";
  std::string phi = "identity";
  std::string potential = "const:1";
  std::string data = "delta:0";
  std::string domain;
  std::optional<VertexId> root;
  std::vector<int> radii;
  std::vector<double> alpha;
  std::vector<VertexId> probes;
  int random_probes = 4;
  Thresholds thresholds;
  SolveOptions solve;
  double resolvent_tol = 1e-9;
  std::size_t length = 100;
  std::vector<VertexId> path;
  int radius = 10;
  std::string out_dir = "nlresolvent-out";
  std::uint64_t seed = 0;
  bool parallel = true;

  /// Throws ConfigError when the mode is missing parameters or a tolerance
  /// is not positive.
  void check() const;
};

/// Parses `nlresolvent <mode> [flags]`, merging `--config file.json` when
/// given (flags win; each conflict is reported on `err`). Returns nullopt
/// when help was printed.
std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out,
                                    std::ostream& err);

/// Runs one mode and writes result.json and trace.csv into out_dir.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args + run with exit-code mapping for every error type.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nlresolvent::cli
