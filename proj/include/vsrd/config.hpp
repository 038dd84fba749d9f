#pragma once

#include "vsrd/diagnostics.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace vsrd {

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct MeshConfig {
  int rings = 4;
  int refinements = 3;
};

struct Gamma2Config {
  double theta_min = 0.0;
  double theta_max = 3.141592653589793;
};

struct TimeConfig {
  double tau = 0.01;
  double t_final = 2.0;
};

struct RunOptions {
  bool lumping = false;
  /// Snapshot every k steps (0: none).
  int snapshot_every = 0;
  /// Snapshot times, rounded to the nearest step.
  std::vector<double> snapshot_times;
  std::string output_dir = "output";
};

struct ConvergenceBlock {
  /// Number of table rows.
  int levels = 4;
  std::vector<double> taus = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  int tau_level = 4;
};

struct DecayBlock {
  std::vector<int> levels = {0, 1, 2};
  double tau = 0.5;
  double t_final = 500.0;
  /// "exact" or "discrete"
  std::string fit_entropy = "exact";
};

struct GapBlock {
  int block_size = 6;
  int max_iterations = 500;
  double tolerance = 1e-8;
};

/// Parsed run configuration. Defaults depend on the model: the
/// four-species model defaults to its builtin data, T = 3 and the
/// snapshot times 0, 0.13, 1.56, 3.
struct RunConfig {
  std::string model = "two-species";
  ModelParams params = TwoSpeciesParams{};
  MeshConfig mesh;
  Gamma2Config gamma2;
  TimeConfig time;
  /// Builtin name, or empty when expressions are given.
  std::string initial_data = "paper-2species";
  /// One expression per species in layout order.
  std::vector<std::string> expressions;
  RunOptions options;
  ConvergenceBlock convergence;
  DecayBlock decay;
  GapBlock gap;

  static RunConfig defaults(const std::string& model);
  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig load(const std::string& path);

  nlohmann::json to_json() const;
  void validate() const;

  InitialData initial_data_fields() const;
  Mesh2D build_mesh(int refinements) const;
  Mesh2D build_mesh() const { return build_mesh(mesh.refinements); }
  TimeGrid time_grid() const { return TimeGrid::until(time.tau, time.t_final); }
  StepperOptions stepper_options() const;
  ConvergenceConfig convergence_config() const;
  DecayConfig decay_config() const;
  SpectralGapOptions gap_options() const;
  /// Steps selected by snapshot_every and snapshot_times, sorted and unique.
  std::vector<Index> snapshot_steps() const;
};

}  // namespace vsrd
