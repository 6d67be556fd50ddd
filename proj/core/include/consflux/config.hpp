#pragma once

// INI run configuration. Sections: [case], [geometry], [solver], [output].
// Unknown sections or keys are rejected.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "consflux/harness.hpp"

namespace consflux {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  CaseSpec spec;
  std::filesystem::path output_dir = "out";
  bool csv = true;
  bool vtk = true;
  bool flux_dump = false;
};

/// "sd" | "wd" | "rd"
DirichletMode parse_mode(const std::string& s);
/// "central" | "harmonic"
Averaging parse_averaging(const std::string& s);
/// "none" | "l2" | "wl2"
std::optional<WeightScheme> parse_weights(const std::string& s);
/// "none" | "ssor" | "jacobi"
Preconditioner parse_preconditioner(const std::string& s);

/// Defaults per scenario (time step, end time, averaging, cells) before
/// explicit keys are applied.
CaseSpec default_case(ScenarioId id);

/// Throws ConfigError on syntax errors, unknown keys, bad values or a spec
/// that fails validation.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace consflux
