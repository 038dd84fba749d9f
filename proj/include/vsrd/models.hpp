#pragma once

#include "vsrd/femcore.hpp"

#include <string>
#include <variant>
#include <vector>

namespace vsrd {

/// Volume species L coupled to a surface species l on the whole boundary:
/// d_L dn L = gamma l - lambda L.
struct TwoSpeciesParams {
  double d_L = 0.01;
  double d_l = 0.02;
  double lambda = 4.0;
  double gamma = 2.0;

  void validate() const;
};

/// Volume species L, P; surface species l on Gamma and p on Gamma_2.
/// Reactions: L <-> P (beta, alpha), L <-> l (lambda, gamma),
/// l <-> p (sigma, kappa), P <-> p (eta, xi).
struct FourSpeciesParams {
  double d_L = 0.01;
  double d_P = 0.01;
  double d_l = 0.02;
  double d_p = 0.02;
  double alpha = 1.0;
  double beta = 1.0;
  double lambda = 4.0;
  double gamma = 2.0;
  double sigma = 1.0;
  double kappa = 1.0;
  double eta = 2.0;
  double xi = 1.0;

  void validate() const;
  /// |alpha lambda sigma xi / (beta gamma kappa eta) - 1|
  double detailed_balance_residual() const;
  bool has_detailed_balance(double tolerance = 1e-10) const { return detailed_balance_residual() <= tolerance; }
};

using ModelParams = std::variant<TwoSpeciesParams, FourSpeciesParams>;

struct SpeciesInfo {
  std::string name;
  Space space;
};

/// Species order used by every state vector: (L, l) or (L, P, l, p).
std::vector<SpeciesInfo> species_layout(const ModelParams& params);

struct Geometry {
  double area = 0.0;
  double perimeter = 0.0;
  double gamma2_length = 0.0;

  /// |Omega_h|, |Gamma_h|, |Gamma_2,h|.
  static Geometry discrete(const AssembledForms& forms);
  /// |Omega|, |Gamma|, |Gamma_2| of the curve the mesh approximates.
  static Geometry exact(const Mesh2D& mesh);
};

/// Constant detailed-balance equilibrium, one value per species.
struct Equilibrium {
  std::vector<double> values;
  Geometry geometry;
  double mass = 0.0;
};

Equilibrium equilibrium2(const TwoSpeciesParams& params, double area, double perimeter, double mass);
Equilibrium equilibrium4(const FourSpeciesParams& params, double area, double perimeter, double gamma2_length,
                         double mass);
Equilibrium equilibrium(const ModelParams& params, const Geometry& geometry, double mass);

/// Nodal coefficients per species plus the time stamp.
struct StateVector {
  std::vector<Vector> fields;
  std::vector<Space> spaces;
  double time = 0.0;
};

/// State with every species constant at its equilibrium value.
StateVector constant_state(const AssembledForms& forms, const ModelParams& params, const std::vector<double>& values);

double total_mass(const AssembledForms& forms, const StateVector& state);

struct EntropyValues {
  double entropy = 0.0;
  double dissipation = 0.0;
};

/// Relative entropy and its dissipation from the discrete forms, term by term.
/// Two species: E = (lambda |L-L*|^2 + gamma |l-l*|^2) / 2. Four species:
/// weights 1/X* per species; requires detailed balance.
EntropyValues entropy(const AssembledForms& forms, const ModelParams& params, const StateVector& state,
                      const Equilibrium& equilibrium);

/// Pointwise initial data, one field per species.
struct InitialData {
  std::string name;
  std::vector<ScalarField> fields;
};

/// "paper-2species" or "paper-4species".
InitialData builtin_initial_data(const std::string& name);
std::vector<std::string> builtin_initial_data_names();

/// Total mass of pointwise data on the exact (curved) domain and boundary arcs.
double exact_mass(const Mesh2D& mesh, const ModelParams& params, const InitialData& data);

}  // namespace vsrd
