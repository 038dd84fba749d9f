#pragma once

#include "vsrd/stepper.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace vsrd {

// ---------------------------------------------------------------------------
// grid transfer and norms

/// Evaluates a coarse P1 function at the vertices of refine_uniform(coarse).
/// Midpoint vertices take the average of their parents; fine boundary
/// vertices take the coarse value at their closest point on the coarse
/// boundary chain. `space` is volume or boundary.
Vector prolong(const Mesh2D& coarse, const Mesh2D& fine, const Vector& coarse_values, Space space);
StateVector prolong(const Mesh2D& coarse, const Mesh2D& fine, const StateVector& coarse_state);

struct NormPair {
  double l2 = 0.0;
  /// Full H1 norm (L2 part plus gradient seminorm).
  double h1 = 0.0;
};

/// Per-species norms of u_fine - u_coarse_prolonged on the fine mesh.
std::vector<NormPair> grid_difference_norms(const AssembledForms& fine_forms, const StateVector& u_fine,
                                            const StateVector& u_coarse_prolonged);

// ---------------------------------------------------------------------------
// convergence tables

/// One row per parameter value; errors ordered eL2_vol, eL2_surf, eH1_vol, eH1_surf.
struct EocRow {
  double h_or_tau = 0.0;
  std::array<double, 4> errors{};
  std::array<std::optional<double>, 4> rates{};
};

struct EocTable {
  std::string parameter = "h";
  std::vector<EocRow> rows;
};

/// Fills rates as log2(e_coarse / e_fine); the first row and rows where
/// either error is at round-off level stay empty.
void compute_rates(EocTable& table);

struct ConvergenceConfig {
  TwoSpeciesParams params;
  InitialData data = builtin_initial_data("paper-2species");
  int base_rings = 4;
  /// Table rows; the h study solves on levels 0..rows.
  int rows = 4;
  double tau = 0.01;
  double t_final = 2.0;
  /// Time steps of the tau study rows; one extra solve at taus.back()/2.
  std::vector<double> taus = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  /// Refinement level of the fixed mesh of the tau study.
  int tau_level = 4;
  StepperOptions stepper;
};

/// Differences of final-time solutions on consecutive uniform refinements.
EocTable h_convergence_study(const ConvergenceConfig& config);
/// Differences of final-time solutions for tau and tau/2 on a fixed mesh.
EocTable tau_convergence_study(const ConvergenceConfig& config);

// ---------------------------------------------------------------------------
// spectral gap

struct SpectralGapOptions {
  int block_size = 6;
  int max_iterations = 500;
  double tolerance = 1e-8;
  /// Shift relative to the diagonal scale; keeps the factored matrix SPD.
  double relative_shift = 1e-8;
  unsigned seed = 12345;
};

struct SpectralGap {
  /// Sharp constant in D >= c0 E on the zero-mass subspace (= 2 mu_1).
  double c0 = 0.0;
  /// Smallest nonzero eigenvalue of the pencil (W A, W M).
  double mu = 0.0;
  /// Minimizing mode (zero total mass).
  StateVector certificate;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;
};

SpectralGap spectral_gap(const AssembledForms& forms, const ModelParams& params,
                         const SpectralGapOptions& options = {});

// ---------------------------------------------------------------------------
// exponential decay

struct DecayReport {
  double fitted_rate = 0.0;
  double fit_start = 0.0;
  double fit_end = 0.0;
  Index fit_samples = 0;
  double saturation_level = 0.0;
  double spectral_gap = 0.0;
  double relative_gap_mismatch = 0.0;
};

/// Least-squares slope of ln E over the samples above 100x the saturation
/// floor (mean of the last 10%), skipping the first 5% of the time span.
DecayReport decay_fit(const std::vector<double>& times, const std::vector<double>& entropy, double spectral_gap);

struct DecayConfig {
  ModelParams params = TwoSpeciesParams{};
  InitialData data = builtin_initial_data("paper-2species");
  int base_rings = 4;
  std::vector<int> levels = {0, 1, 2};
  double tau = 0.5;
  double t_final = 500.0;
  double gamma2_theta_min = 0.0;
  double gamma2_theta_max = 3.141592653589793;
  /// Fit E_exact (two species) or E_disc.
  bool fit_exact_entropy = true;
  StepperOptions stepper;
};

struct DecayLevel {
  int level = 0;
  double h = 0.0;
  DecayReport report;
  bool entropy_strictly_decreasing = false;
  double max_relative_mass_drift = 0.0;
  double max_identity_residual = 0.0;
  std::vector<double> times, E_disc, E_exact;
};

struct DecayStudy {
  std::vector<DecayLevel> levels;
  /// saturation(level k) / saturation(level k+1)
  std::vector<double> floor_ratios;
};

DecayStudy decay_study(const DecayConfig& config);

/// Mesh used by the studies: build_disk_mesh(base_rings) refined `level`
/// times, with Gamma_2 marked when the model needs it.
Mesh2D study_mesh(const ModelParams& params, int base_rings, int level, double theta_min, double theta_max);

}  // namespace vsrd
