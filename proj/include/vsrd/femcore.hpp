#pragma once

#include "vsrd/mesh.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsrd {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using ScalarField = std::function<double(double, double)>;

/// Raised when an iterative or direct solve misses its residual target.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Function space a nodal vector lives on.
enum class Space { volume, boundary, gamma2 };

const char* to_string(Space space);

enum class FormRole { mass, stiffness, coupling };

/// Symmetric sparse bilinear form with its role.
struct SparseForm {
  SparseMatrix matrix;
  FormRole role = FormRole::mass;

  Index size() const { return matrix.rows(); }
};

/// Volume, boundary and Gamma_2 degrees of freedom. Volume DOFs are mesh
/// vertices; boundary DOFs follow the boundary chain; Gamma_2 DOFs follow the
/// marked arc (endpoints included).
struct DofMap {
  Index n_volume = 0;
  Index n_boundary = 0;
  Index n_gamma2 = 0;
  /// n_boundary x n_volume, one unit entry per row.
  SparseMatrix trace;
  /// n_gamma2 x n_boundary, one unit entry per row.
  SparseMatrix gamma2_embed;
  /// Boundary DOF of each Gamma_2 DOF.
  std::vector<Index> gamma2_boundary_dofs;

  Index size(Space space) const;
};

/// All P1 bilinear forms needed by the volume-surface models.
struct AssembledForms {
  Mesh2D mesh;
  DofMap dofs;
  SparseForm M_vol, A_vol;
  SparseForm M_bnd, A_bnd;
  SparseForm M_g2, A_g2;
  double area = 0.0;
  double perimeter = 0.0;
  double gamma2_length = 0.0;

  const SparseForm& mass(Space space) const;
  const SparseForm& stiffness(Space space) const;
  /// Map from volume DOFs into the given space (identity, trace, or Gamma_2 trace).
  SparseMatrix restriction(Space space) const;
};

AssembledForms assemble(const Mesh2D& mesh);

/// Load vector (f, phi_i) with a rule exact for quadratics: edge midpoints on
/// triangles, Simpson on edges.
Vector load_vector(const AssembledForms& forms, Space space, const ScalarField& f);

/// Degree-2 quadrature of f over Omega_h, Gamma_h or Gamma_2,h.
double integrate(const AssembledForms& forms, Space space, const ScalarField& f);

/// L2 projection onto the P1 space of the given target.
Vector l2_project(const AssembledForms& forms, Space space, const ScalarField& f);

/// u^T A v.
double quadratic_form(const SparseForm& form, const Vector& u, const Vector& v);
double quadratic_form(const SparseMatrix& matrix, const Vector& u, const Vector& v);

/// Row-sum diagonal of a matrix.
SparseMatrix lump(const SparseMatrix& matrix);

/// Largest absolute entry.
double max_abs(const SparseMatrix& matrix);

/// Solves the SPD system `matrix * x = rhs` by sparse Cholesky with iterative
/// refinement until the relative residual drops below `tolerance`.
Vector solve_spd(const SparseMatrix& matrix, const Vector& rhs, double tolerance = 1e-13);

}  // namespace vsrd
