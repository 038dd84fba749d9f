#pragma once

#include "vsrd/models.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace vsrd {

struct TimeGrid {
  double tau = 0.01;
  Index n_steps = 1;

  /// Grid with n_steps = round(t_final / tau).
  static TimeGrid until(double tau, double t_final);
  double time(Index n) const { return static_cast<double>(n) * tau; }
  void validate() const;
};

struct StepperOptions {
  /// Replace every mass matrix (time derivative and reaction terms) by its
  /// row-sum diagonal.
  bool lumping = false;
  /// Fail instead of falling back to the nonsymmetric path when no
  /// symmetrizing entropy weights exist.
  bool require_symmetric = false;
  double residual_tolerance = 1e-11;
};

/// Per-step linear system (M/tau + A) u^n = M u^{n-1} / tau with the block
/// structure of the model. When detailed balance holds, each species row is
/// scaled by its entropy weight, giving the SPD form W M / tau + W A that is
/// factored once by sparse Cholesky.
class SystemOperator {
 public:
  static SystemOperator build(const AssembledForms& forms, const ModelParams& params, double tau,
                              const StepperOptions& options = {});

  double tau() const { return tau_; }
  bool symmetric() const { return symmetric_; }
  bool lumped() const { return options_.lumping; }
  const StepperOptions& options() const { return options_; }
  const ModelParams& params() const { return params_; }
  const std::vector<SpeciesInfo>& layout() const { return layout_; }
  Index size() const { return offsets_.back(); }
  Index offset(std::size_t species) const { return offsets_[species]; }
  Index species_size(std::size_t species) const { return offsets_[species + 1] - offsets_[species]; }

  /// Block-diagonal mass (lumped if requested), unscaled.
  const SparseMatrix& mass() const { return mass_; }
  /// Unscaled spatial operator: u^T A v = a_h(u; v).
  const SparseMatrix& spatial_operator() const { return operator_; }
  /// W M; equals mass() on the nonsymmetric path.
  const SparseMatrix& scaled_mass() const { return scaled_mass_; }
  /// Symmetric W A; empty on the nonsymmetric path.
  const SparseMatrix& scaled_operator() const { return scaled_operator_; }
  /// Matrix that is factored for each step.
  const SparseMatrix& system_matrix() const { return system_; }
  /// Entropy weight per species (unit total mass for the four-species model).
  const std::vector<double>& species_weights() const { return species_weights_; }

  /// Solves system_matrix() x = rhs with iterative refinement; returns the
  /// relative residual through `residual`.
  Vector solve(const Vector& rhs, double* residual = nullptr) const;

  Vector pack(const StateVector& state) const;
  StateVector unpack(const Vector& values, double time) const;

 private:
  struct Factorization;

  double tau_ = 0.0;
  bool symmetric_ = false;
  StepperOptions options_;
  ModelParams params_;
  std::vector<SpeciesInfo> layout_;
  std::vector<Index> offsets_;
  SparseMatrix mass_, operator_, scaled_mass_, scaled_operator_, system_;
  std::vector<double> species_weights_;
  std::shared_ptr<const Factorization> factorization_;
};

/// Equilibria against which entropy diagnostics are measured.
struct EntropyReference {
  Equilibrium discrete;  ///< closed form with |Omega_h|, |Gamma_h| and M_h^0
  Equilibrium exact;     ///< closed form with |Omega|, |Gamma| and the exact mass
  Vector discrete_values;
  Vector exact_values;
  /// Converts the operator's weights into the entropy weights of the actual
  /// mass (1 for two species).
  double weight_scale = 1.0;
};

/// Requires op.symmetric().
EntropyReference make_entropy_reference(const SystemOperator& op, const AssembledForms& forms,
                                        double discrete_mass, double exact_mass);

struct StepDiagnostics {
  Index n = 0;
  double t = 0.0;
  double mass = 0.0;
  double E_disc = 0.0;
  double E_exact = 0.0;
  double D = 0.0;
  /// Half the squared increment in the scaled mass norm.
  double increment_energy = 0.0;
  double linear_residual = 0.0;
};

struct StepResult {
  StateVector state;
  StepDiagnostics diagnostics;
};

/// L2 projection of the data onto the model's spaces.
StateVector initial_state(const AssembledForms& forms, const ModelParams& params, const InitialData& data);

/// Diagnostics of a state without stepping (n = 0 row). Entropy columns are
/// NaN when no reference is supplied.
StepDiagnostics evaluate(const SystemOperator& op, const StateVector& state, const EntropyReference* reference);

/// One backward Euler step. With a reference the solve is carried out for the
/// deviation from the discrete equilibrium.
StepResult step(const SystemOperator& op, const StateVector& state, const EntropyReference* reference = nullptr,
                Index n = 1);

/// Observer for run(); every callback is optional.
struct TrajectorySink {
  std::function<void(const StepDiagnostics&)> on_diagnostics;
  std::function<void(Index n, const StateVector&)> on_snapshot;
  /// Snapshot every k steps (0 disables).
  Index snapshot_every = 0;
  /// Additional explicit snapshot steps.
  std::vector<Index> snapshot_steps;
};

struct TrajectorySummary {
  Index steps = 0;
  StepDiagnostics initial;
  StepDiagnostics final;
  std::vector<StepDiagnostics> history;
  StateVector final_state;
  /// max_n |M(t_n) - M(0)| / M(0)
  double max_relative_mass_drift = 0.0;
  /// max_n |E^n - E^{n-1} + increment + tau D^n| / E^{n-1}
  double max_identity_residual = 0.0;
  bool entropy_nonincreasing = true;
  bool entropy_strictly_decreasing = true;
  /// Smallest nodal value of any species over the whole run.
  double min_value = 0.0;
};

TrajectorySummary run(const SystemOperator& op, const StateVector& initial, const TimeGrid& grid,
                      const TrajectorySink& sink = {}, const EntropyReference* reference = nullptr);

/// True when every stiffness matrix has nonpositive off-diagonal entries, the
/// mesh condition under which the lumped scheme preserves nonnegativity.
bool stiffness_is_z_matrix(const AssembledForms& forms);

}  // namespace vsrd
