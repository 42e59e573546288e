#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qdyn/common.hpp"

namespace qdyn {

// Declarative scenarios: a JSON document naming one engine, its model and method blocks,
// the observables to record and where to write them.

enum class ScenarioKind { exact_doublewell, wigner, plusp, plusp_reverse, entropy, variational, dimension_count };

ScenarioKind parse_scenario_kind(const std::string& name);
std::string to_string(ScenarioKind kind);
const std::vector<ScenarioKind>& all_scenario_kinds();
std::string describe(ScenarioKind kind);

struct ScenarioError {
  std::string path;  // JSON pointer style, e.g. /method/trajectories
  std::string message;
};

/// Thrown by parse_scenario with every problem found, not just the first.
class ScenarioInvalid : public InvalidInput {
 public:
  explicit ScenarioInvalid(std::vector<ScenarioError> errors);
  const std::vector<ScenarioError>& errors() const { return errors_; }

 private:
  std::vector<ScenarioError> errors_;
};

struct LatticeConfig {
  std::vector<int> dims{1};
  std::vector<double> box_length{1.0};
  int spin_count = 1;
  std::vector<double> mass{1.0};
  std::string units = "dimensionless";
  RMatrix chi = RMatrix::Zero(1, 1);  // field units
  std::vector<std::vector<double>> trap;  // harmonic frequency per spin per axis; empty for none
  std::vector<double> internal_energy;
};

struct EnsembleSettings {
  int trajectories = 1000;
  double dt = 1e-3;
  double t_max = 0.0;
  int samples = 20;  // output intervals on [0, t_max]
  int threads = 1;
  std::string reduction = "deterministic";
  int groups = 1;
  std::string scheme = "midpoint";
  int midpoint_iterations = 4;
  std::string interpretation = "ito";
  double divergence_ceiling = 1e6;
  double unreliable_fraction = 0.01;
};

struct LossConfig {
  std::vector<int> multiplicity;
  double rate = 0.0;
};

struct WignerScenario {
  LatticeConfig lattice;
  CVector amplitude;  // one per mode, or a single value for all
  std::vector<LossConfig> losses;
  bool symmetric_correction = true;
  EnsembleSettings ensemble;
};

struct PlusPScenario {
  LatticeConfig lattice;
  std::string family = "coherent";
  CVector amplitude;
  std::vector<double> occupation;
  std::string sampling = "canonical";
  std::optional<double> reversal_time;
  EnsembleSettings ensemble;
  // plusp-reverse only
  int mode = 0;
  double error_ceiling = 1.0;
};

struct DoubleWellScenario {
  std::vector<double> atoms{200.0};
  std::optional<double> alpha_squared;
  double a11 = 100.4, a22 = 95.5, a12 = 80.8;
  std::vector<double> tau;
  std::optional<double> delta_theta;
  double mixing_angle = kPi / 4;
  double splitter_phase = 0.0;
  std::string criterion_theta = "minimize_product";
  double truncation_tolerance = 1e-10;
};

struct EntropyPoint {
  CMatrix n;
  double weight = 1.0;
};

struct EntropyScenario {
  std::string species = "boson";
  std::string pairing = "disjoint";
  std::vector<EntropyPoint> points;
};

struct VariationalScenario {
  CMatrix omega = CMatrix::Zero(1, 1);
  RMatrix chi = RMatrix::Constant(1, 1, 1.0);
  CVector target;
  int components = 16;
  double radius = 1e-3;
  double dt = 2.0 * kPi / 2000.0;
  double lambda = 1e-4;
  int iterations = 4;
  int max_halvings = 12;
  double t_max = 2.0 * kPi;
  int record_every = 10;
  int mode = 0;
  bool compare_exact = false;  // single-mode omega + Kerr only
};

struct DimensionScenario {
  std::int64_t particles = 0;
  std::int64_t modes = 1;
  std::string statistics = "boson";
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::dimension_count;
  std::string name = "scenario";
  std::string description;
  std::uint64_t seed = 1;
  std::vector<std::string> observables;
  std::string output_stem;  // defaults to name
  nlohmann::json metadata = nlohmann::json::object();  // free-form, e.g. fixture tolerances
  std::variant<DimensionScenario, DoubleWellScenario, WignerScenario, PlusPScenario, EntropyScenario,
               VariationalScenario>
      body;

  const std::string& stem() const { return output_stem.empty() ? name : output_stem; }
};

/// Parses and validates; throws ScenarioInvalid listing every error.
Scenario parse_scenario(const std::string& text);
Scenario parse_scenario(const nlohmann::json& document);
inline Scenario parse_scenario(const char* text) { return parse_scenario(std::string(text)); }
Scenario load_scenario(const std::filesystem::path& file);

/// Canonical JSON with every default written out; parse(serialize(s)) reproduces s.
nlohmann::json serialize(const Scenario& scenario);

/// FNV-1a hash of the canonical serialization, as 16 hex digits.
std::string parameter_hash(const Scenario& scenario);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool deterministic = false;
  std::filesystem::path out_dir = ".";
};

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitRuntime = 3, kExitInconclusive = 4 };

struct RunReport {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> files;
  nlohmann::json manifest;
  nlohmann::json summary;  // the scalar report, also written as <stem>.json
  std::string message;     // one line for the terminal
};

/// Runs the scenario and writes <stem>.csv (time series), <stem>.json (scalar report) and
/// <stem>.manifest.json into options.out_dir. Engine errors propagate as exceptions.
RunReport run_scenario(Scenario scenario, const RunOptions& options);

}  // namespace qdyn
