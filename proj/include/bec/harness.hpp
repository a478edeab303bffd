#pragma once

// Configuration, manifests and the batch commands behind the CLI.
//
// Config files are JSON with the sections species, trap, atoms, grid,
// solver, protocol, output and sweep. Unknown keys are rejected. Values
// resolve as flag > file > default; relative output directories live under
// $BEC_RAMSEY_OUTPUT_ROOT (default "runs").

#include "bec/ground.hpp"
#include "bec/params.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bec {

using json = nlohmann::json;

struct ProtocolConfig {
  double horizon_s = 0.12;
  double sample_interval_s = 5e-4;
  double dt = 0.02; // real-time step, trap units

  bool operator==(const ProtocolConfig&) const = default;
};

struct SweepConfig {
  double N_min = 100.0;
  double N_max = 100000.0;
  int points = 16;
  int workers = 1;
  std::vector<FitWindow> windows{{"1d", 100.0, 3000.0}};

  bool operator==(const SweepConfig&) const = default;
};

struct RunConfig {
  SpeciesSpec species;
  // The trap is stored resolved: omega_T in Hz as given, k in SI. The file
  // may instead name omega_z_hz (q = 2) or match_crossover (a target
  // N_T_bar, or "reference"); with neither, q = 2 uses omega_z = 3.5 Hz and
  // q != 2 matches the crossover number of that reference trap.
  double omega_T_hz = 350.0;
  TrapSpec trap;
  std::string trap_source; // how k was obtained, for the manifest
  std::vector<double> N{1000.0};
  GridPolicy grid;
  GroundOptions solver;
  ProtocolConfig protocol;
  std::string output_dir = "out";
  bool snapshots = false;
  SweepConfig sweep;

  /// Compares the resolved values; trap_source is informational.
  bool operator==(const RunConfig& o) const;
};

/// Parses, applies overrides ("section.key" -> JSON text or bare string),
/// validates and resolves. Throws ConfigError naming the offending key, or
/// with "line L, column C" for syntax errors.
RunConfig load_config(const std::filesystem::path& path,
                      const std::map<std::string, std::string>& overrides = {});
RunConfig parse_config(const std::string& text,
                       const std::map<std::string, std::string>& overrides = {});
RunConfig default_config(const std::map<std::string, std::string>& overrides = {});

/// Fully resolved form: the trap carries k_si only, every default explicit.
json to_json(const RunConfig& cfg);

/// Flattened "section.key" -> value, as written into CSV headers.
std::map<std::string, std::string> provenance(const RunConfig& cfg);

std::filesystem::path output_root();
std::filesystem::path resolve_output_dir(const RunConfig& cfg);

std::string code_version();
std::string sha256_file(const std::filesystem::path& path);

/// manifest_<command>.json in the run directory: written with status
/// "running" when the run starts, rewritten with wall time and output
/// digests at the end.
class Manifest {
public:
  Manifest(std::filesystem::path dir, std::string command, const RunConfig& cfg);
  void add_output(const std::filesystem::path& file);
  json& diagnostics() { return doc_["diagnostics"]; }
  void add_grid(double N, const CylGrid& grid);
  void finalize(const std::string& status);
  const std::filesystem::path& path() const { return path_; }

private:
  void write() const;
  std::filesystem::path dir_;
  std::filesystem::path path_;
  json doc_;
  std::vector<std::filesystem::path> outputs_;
  std::chrono::steady_clock::time_point start_;
};

/// Batch commands. Each writes into resolve_output_dir(cfg), returns the
/// process exit code, and reports progress and failures on `log`.
int cmd_ground(const RunConfig& cfg, std::ostream& log);
int cmd_eta_sweep(const RunConfig& cfg, std::ostream& log);
int cmd_evolve(const RunConfig& cfg, std::ostream& log);
int cmd_models(const RunConfig& cfg, const std::vector<std::string>& models,
               const std::optional<std::filesystem::path>& ground_summary, std::ostream& log);
int cmd_analyze(const std::filesystem::path& series, const std::optional<std::filesystem::path>& against,
                double horizon_s, const std::optional<std::filesystem::path>& out, std::ostream& log);
int cmd_reproduce_figure(const RunConfig& cfg, int fig, std::optional<double> horizon_s,
                         std::ostream& log);

} // namespace bec
