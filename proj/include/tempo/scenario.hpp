#pragma once

// Declarative scenario execution.  A scenario is a single JSON document
// naming a system (inline classical definition or quantum Hamiltonian), an
// ordered list of checks, integrator overrides, a seed, and optional
// trajectory outputs.  Running it yields a JSON report that is,
// byte-for-byte, a function of (document, seed, toolkit version) apart from
// the timing_ms fields, plus CSV trajectories when an output directory is
// given.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tempo/flow.hpp"

namespace tempo::scenario {

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the document's seed
  std::optional<double> tol;          // overrides each check's headline "tol"
  std::optional<double> horizon;      // overrides the integrator horizon
  std::string out_dir;                // report + CSV target ("" = stdout only)
};

struct RunResult {
  nlohmann::json report;
  bool all_passed = false;
  std::vector<std::string> written_files;

  int exit_code() const { return all_passed ? 0 : 1; }
};

// Loads a scenario document from the builtin registry (exact name match) or
// from a file path.  Throws ParseError (malformed JSON, with byte position)
// or ConfigError (unreadable file / unknown name).  `source_label` receives
// "builtin:<name>" or the path.
nlohmann::json load_scenario(const std::string& ref,
                             std::string* source_label = nullptr);

// Executes the checks in declaration order.  Configuration and parse
// problems throw (ConfigError / ParseError / DimensionMismatch); runtime
// failures inside a check are recorded as verdict "error" and execution
// continues with the remaining checks.  all_passed is true iff every check's
// verdict is "pass".
RunResult run_scenario(const nlohmann::json& doc, const RunOptions& options = {},
                       const std::string& source_label = "inline");

// FNV-1a (64-bit) of the canonical (sorted-key) document dump, hex-encoded;
// identifies the scenario configuration in reports.
std::string config_hash(const nlohmann::json& doc);

// "t,<coordinate names>" header, one row per sample, 17 significant digits.
std::string trajectory_csv(const flow::Trajectory& trajectory,
                           const std::vector<std::string>& coordinate_names);

// Builtin example registry.
struct BuiltinExample {
  std::string name;
  std::string description;
};
const std::vector<BuiltinExample>& builtin_examples();
// Parsed builtin document; std::nullopt when the name is unknown.
std::optional<nlohmann::json> builtin_document(const std::string& name);

}  // namespace tempo::scenario
