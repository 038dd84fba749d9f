#include "vsrd/femcore.hpp"

#include "vsrd/element.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace vsrd {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

constexpr double kMinMeasure = 1e-14;

SparseMatrix from_triplets(Index rows, Index cols, const Triplets& triplets) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

// Gamma_2 boundary edges in arc order, starting at the first marked edge
// whose predecessor is unmarked.
std::vector<Index> gamma2_edges_in_arc_order(const Mesh2D& mesh) {
  std::vector<Index> edges;
  const Index nb = mesh.n_boundary_edges();
  const auto& mask = mesh.gamma2_edge_mask();
  Index start = -1;
  for (Index e = 0; e < nb; ++e) {
    if (mask[static_cast<std::size_t>(e)] && !mask[static_cast<std::size_t>((e + nb - 1) % nb)]) {
      start = e;
      break;
    }
  }
  if (start < 0) return edges;
  for (Index k = 0; k < nb; ++k) {
    const Index e = (start + k) % nb;
    if (!mask[static_cast<std::size_t>(e)]) break;
    edges.push_back(e);
  }
  return edges;
}

}  // namespace

const char* to_string(Space space) {
  switch (space) {
    case Space::volume: return "volume";
    case Space::boundary: return "boundary";
    case Space::gamma2: return "gamma2";
  }
  return "?";
}

Index DofMap::size(Space space) const {
  switch (space) {
    case Space::volume: return n_volume;
    case Space::boundary: return n_boundary;
    case Space::gamma2: return n_gamma2;
  }
  return 0;
}

const SparseForm& AssembledForms::mass(Space space) const {
  switch (space) {
    case Space::volume: return M_vol;
    case Space::boundary: return M_bnd;
    case Space::gamma2: return M_g2;
  }
  return M_vol;
}

const SparseForm& AssembledForms::stiffness(Space space) const {
  switch (space) {
    case Space::volume: return A_vol;
    case Space::boundary: return A_bnd;
    case Space::gamma2: return A_g2;
  }
  return A_vol;
}

SparseMatrix AssembledForms::restriction(Space space) const {
  switch (space) {
    case Space::volume: {
      SparseMatrix id(dofs.n_volume, dofs.n_volume);
      id.setIdentity();
      return id;
    }
    case Space::boundary: return dofs.trace;
    case Space::gamma2: return SparseMatrix(dofs.gamma2_embed * dofs.trace);
  }
  return {};
}

AssembledForms assemble(const Mesh2D& mesh) {
  AssembledForms forms;
  forms.mesh = mesh;
  DofMap& dofs = forms.dofs;
  dofs.n_volume = mesh.n_vertices();
  dofs.n_boundary = mesh.n_boundary_edges();

  // volume forms
  Triplets mass, stiff;
  mass.reserve(static_cast<std::size_t>(9 * mesh.n_triangles()));
  stiff.reserve(static_cast<std::size_t>(9 * mesh.n_triangles()));
  for (Index t = 0; t < mesh.n_triangles(); ++t) {
    const auto tri = mesh.triangles().col(t);
    const double area = mesh.signed_area(t);
    if (area < kMinMeasure) throw StructuralError("assemble: degenerate triangle " + std::to_string(t));
    const Eigen::Matrix3d k = triangle_stiffness<double>(mesh.vertex(tri(0)), mesh.vertex(tri(1)), mesh.vertex(tri(2)));
    const Eigen::Matrix3d m = triangle_mass(area);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        mass.emplace_back(tri(i), tri(j), m(i, j));
        stiff.emplace_back(tri(i), tri(j), k(i, j));
      }
    }
  }
  forms.M_vol = {from_triplets(dofs.n_volume, dofs.n_volume, mass), FormRole::mass};
  forms.A_vol = {from_triplets(dofs.n_volume, dofs.n_volume, stiff), FormRole::stiffness};

  // boundary chain: boundary DOF k is the source vertex of edge k
  Triplets trace;
  for (Index k = 0; k < dofs.n_boundary; ++k) trace.emplace_back(k, mesh.boundary_vertex_ids()[static_cast<std::size_t>(k)], 1.0);
  dofs.trace = from_triplets(dofs.n_boundary, dofs.n_volume, trace);

  const auto curve_forms = [&](const std::vector<Index>& edges, const auto& local_dof, Index n,
                               SparseForm& m_out, SparseForm& a_out) {
    Triplets m_trip, a_trip;
    for (Index e : edges) {
      const double len = mesh.boundary_edge_length(e);
      if (len < kMinMeasure) throw StructuralError("assemble: degenerate boundary edge " + std::to_string(e));
      const Eigen::Matrix2d m = edge_mass(len);
      const Eigen::Matrix2d k = edge_stiffness(len);
      const Index ids[2] = {local_dof(e, 0), local_dof(e, 1)};
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          m_trip.emplace_back(ids[i], ids[j], m(i, j));
          a_trip.emplace_back(ids[i], ids[j], k(i, j));
        }
      }
    }
    m_out = {from_triplets(n, n, m_trip), FormRole::mass};
    a_out = {from_triplets(n, n, a_trip), FormRole::stiffness};
  };

  std::vector<Index> all_edges(static_cast<std::size_t>(dofs.n_boundary));
  for (Index e = 0; e < dofs.n_boundary; ++e) all_edges[static_cast<std::size_t>(e)] = e;
  const Index nb = dofs.n_boundary;
  curve_forms(all_edges, [nb](Index e, int end) { return end == 0 ? e : (e + 1) % nb; }, nb, forms.M_bnd, forms.A_bnd);

  // Gamma_2: arc DOFs j = 0..n_edges, edge j connects arc DOFs j and j+1
  const std::vector<Index> arc = gamma2_edges_in_arc_order(mesh);
  dofs.n_gamma2 = arc.empty() ? 0 : static_cast<Index>(arc.size()) + 1;
  Triplets embed;
  for (Index j = 0; j < dofs.n_gamma2; ++j) {
    const Index bdof = j < static_cast<Index>(arc.size()) ? arc[static_cast<std::size_t>(j)] : (arc.back() + 1) % nb;
    dofs.gamma2_boundary_dofs.push_back(bdof);
    embed.emplace_back(j, bdof, 1.0);
  }
  dofs.gamma2_embed = from_triplets(dofs.n_gamma2, dofs.n_boundary, embed);
  std::vector<Index> arc_position(static_cast<std::size_t>(nb), -1);
  for (std::size_t j = 0; j < arc.size(); ++j) arc_position[static_cast<std::size_t>(arc[j])] = static_cast<Index>(j);
  curve_forms(
      arc, [&](Index e, int end) { return arc_position[static_cast<std::size_t>(e)] + end; }, dofs.n_gamma2, forms.M_g2,
      forms.A_g2);

  forms.area = mesh.area();
  forms.perimeter = mesh.perimeter();
  forms.gamma2_length = mesh.gamma2_length();
  return forms;
}

Vector load_vector(const AssembledForms& forms, Space space, const ScalarField& f) {
  const Mesh2D& mesh = forms.mesh;
  Vector b = Vector::Zero(forms.dofs.size(space));
  if (space == Space::volume) {
    for (Index t = 0; t < mesh.n_triangles(); ++t) {
      const auto tri = mesh.triangles().col(t);
      const double w = mesh.signed_area(t) / 3.0;
      Eigen::Vector3d fm;  // f at the midpoint opposite to vertex i
      for (int i = 0; i < 3; ++i) {
        const Point2 m = 0.5 * (mesh.vertex(tri((i + 1) % 3)) + mesh.vertex(tri((i + 2) % 3)));
        fm(i) = f(m.x(), m.y());
      }
      // phi_i is 1/2 at the two midpoints adjacent to vertex i and 0 at the opposite one
      for (int i = 0; i < 3; ++i) b(tri(i)) += w * 0.5 * (fm((i + 1) % 3) + fm((i + 2) % 3));
    }
    return b;
  }

  const Index nb = mesh.n_boundary_edges();
  const auto simpson = [&](Index e, Index dof_a, Index dof_b) {
    const Point2 pa = mesh.vertex(mesh.boundary_edges()(0, e));
    const Point2 pb = mesh.vertex(mesh.boundary_edges()(1, e));
    const Point2 pm = 0.5 * (pa + pb);
    const double w = mesh.boundary_edge_length(e) / 6.0;
    const double fm = f(pm.x(), pm.y());
    b(dof_a) += w * (f(pa.x(), pa.y()) + 2.0 * fm);
    b(dof_b) += w * (2.0 * fm + f(pb.x(), pb.y()));
  };
  if (space == Space::boundary) {
    for (Index e = 0; e < nb; ++e) simpson(e, e, (e + 1) % nb);
  } else {
    const auto& ids = forms.dofs.gamma2_boundary_dofs;
    for (std::size_t j = 0; j + 1 < ids.size(); ++j)
      simpson(ids[j], static_cast<Index>(j), static_cast<Index>(j + 1));
  }
  return b;
}

double integrate(const AssembledForms& forms, Space space, const ScalarField& f) {
  return load_vector(forms, space, f).sum();
}

Vector l2_project(const AssembledForms& forms, Space space, const ScalarField& f) {
  const Vector b = load_vector(forms, space, f);
  if (b.size() == 0) return b;
  return solve_spd(forms.mass(space).matrix, b, 1e-14);
}

double quadratic_form(const SparseMatrix& matrix, const Vector& u, const Vector& v) {
  if (matrix.rows() != u.size() || matrix.cols() != v.size())
    throw std::invalid_argument("quadratic_form: dimension mismatch");
  return u.dot(matrix * v);
}

double quadratic_form(const SparseForm& form, const Vector& u, const Vector& v) {
  return quadratic_form(form.matrix, u, v);
}

SparseMatrix lump(const SparseMatrix& matrix) {
  const Vector diag = matrix * Vector::Ones(matrix.cols());
  SparseMatrix out(matrix.rows(), matrix.cols());
  Triplets t;
  for (Index i = 0; i < diag.size(); ++i) t.emplace_back(i, i, diag(i));
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

double max_abs(const SparseMatrix& matrix) {
  double m = 0.0;
  for (Index k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

Vector solve_spd(const SparseMatrix& matrix, const Vector& rhs, double tolerance) {
  Eigen::SimplicialLDLT<SparseMatrix> chol(matrix);
  if (chol.info() != Eigen::Success) throw NumericalError("solve_spd: factorization failed");
  const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
  Vector x = chol.solve(rhs);
  double rel = (rhs - matrix * x).norm() / scale;
  for (int it = 0; it < 5 && rel > tolerance; ++it) {
    x += chol.solve(rhs - matrix * x);
    rel = (rhs - matrix * x).norm() / scale;
  }
  if (rel > std::max(tolerance, 1e-12))
    throw NumericalError("solve_spd: relative residual " + std::to_string(rel) + " above target");
  return x;
}

}  // namespace vsrd
