#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsrd {

using Index = Eigen::Index;
using Point2 = Eigen::Vector2d;

/// Raised when a mesh or an assembled structure violates a geometric or
/// combinatorial invariant (inverted element, broken boundary chain, ...).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed star-shaped curve r = radius(theta) bounding the target domain.
/// The unit circle is the default.
class BoundaryCurve {
 public:
  using RadiusFunction = std::function<double(double)>;

  BoundaryCurve();
  explicit BoundaryCurve(RadiusFunction radius, std::string name = "star");

  static BoundaryCurve unit_circle();

  double radius(double theta) const { return radius_(theta); }
  Point2 point(double theta) const;
  /// Radial projection of p (p != 0) onto the curve.
  Point2 project(const Point2& p) const;
  bool is_unit_circle() const { return unit_circle_; }
  const std::string& name() const { return name_; }

  /// Enclosed area, computed by periodic quadrature of r^2/2.
  double area() const;
  /// Length of the arc theta_min..theta_max (full length for a 2*pi span).
  double arc_length(double theta_min, double theta_max) const;
  double length() const;

 private:
  RadiusFunction radius_;
  std::string name_;
  bool unit_circle_ = false;
};

/// Shape-regularity report.
struct MeshQuality {
  double min_angle_deg = 0.0;
  /// max over triangles of h_T / rho_T with rho_T the inscribed-circle diameter.
  double max_ratio = 0.0;
  /// Largest element diameter.
  double h = 0.0;
  Index n_triangles = 0;
  Index n_boundary_edges = 0;
};

/// Immutable triangulation of a polygonal approximation Omega_h of a smooth
/// domain, together with its counterclockwise boundary chain Gamma_h and the
/// marked sub-arc Gamma_2,h.
class Mesh2D {
 public:
  using Vertices = Eigen::Matrix<double, 2, Eigen::Dynamic>;
  using Triangles = Eigen::Matrix<Index, 3, Eigen::Dynamic>;
  using Edges = Eigen::Matrix<Index, 2, Eigen::Dynamic>;

  Mesh2D() = default;

  const Vertices& vertices() const { return vertices_; }
  const Triangles& triangles() const { return triangles_; }
  /// Closed chain; edge k goes from boundary_edges(0,k) to boundary_edges(1,k).
  const Edges& boundary_edges() const { return boundary_edges_; }
  const std::vector<Index>& boundary_vertex_ids() const { return boundary_vertex_ids_; }
  const std::vector<bool>& gamma2_edge_mask() const { return gamma2_edge_mask_; }
  /// For each vertex, the pair of parent-mesh vertices it was created from
  /// (equal entries for inherited vertices). Empty for level-0 meshes.
  const Edges& vertex_parents() const { return vertex_parents_; }
  int level() const { return level_; }
  const BoundaryCurve& curve() const { return *curve_; }
  bool has_gamma2() const;
  double gamma2_theta_min() const { return gamma2_theta_[0]; }
  double gamma2_theta_max() const { return gamma2_theta_[1]; }

  Index n_vertices() const { return vertices_.cols(); }
  Index n_triangles() const { return triangles_.cols(); }
  Index n_boundary_edges() const { return boundary_edges_.cols(); }

  Point2 vertex(Index i) const { return vertices_.col(i); }
  double signed_area(Index t) const;
  /// |Omega_h| as the sum of triangle areas.
  double area() const;
  /// |Gamma_h|.
  double perimeter() const;
  /// |Gamma_2,h| (zero when nothing is marked).
  double gamma2_length() const;
  double boundary_edge_length(Index e) const;

  /// Throws StructuralError if any documented invariant fails.
  void validate() const;

  friend Mesh2D build_star_mesh(int rings, BoundaryCurve curve);
  friend Mesh2D refine_uniform(const Mesh2D& mesh);
  friend Mesh2D mark_gamma2(const Mesh2D& mesh, double theta_min, double theta_max);

 private:
  Vertices vertices_;
  Triangles triangles_;
  Edges boundary_edges_;
  std::vector<Index> boundary_vertex_ids_;
  std::vector<bool> gamma2_edge_mask_;
  Edges vertex_parents_;
  int level_ = 0;
  std::shared_ptr<const BoundaryCurve> curve_ = std::make_shared<BoundaryCurve>();
  Eigen::Vector2d gamma2_theta_{0.0, 0.0};
};

/// Concentric-ring triangulation of the unit disk: ring k carries 6k vertices
/// on the circle of radius k/rings, 6*rings^2 triangles in total.
Mesh2D build_disk_mesh(int rings);

/// Same construction scaled by the radius function of a star-shaped curve.
Mesh2D build_star_mesh(int rings, BoundaryCurve curve);

/// Red refinement: every triangle is split into four through its edge
/// midpoints; boundary midpoints are projected radially onto the curve.
Mesh2D refine_uniform(const Mesh2D& mesh);

/// Mesh after `levels` uniform refinements of build_disk_mesh(rings).
Mesh2D refined_disk_mesh(int rings, int levels);

/// Marks the boundary edges whose midpoint angle lies in [theta_min, theta_max].
Mesh2D mark_gamma2(const Mesh2D& mesh, double theta_min, double theta_max);

MeshQuality quality(const Mesh2D& mesh);

/// Boundary chain reconstructed from the triangle list alone, starting at the
/// first stored boundary vertex.
Mesh2D::Edges derive_boundary_chain(const Mesh2D& mesh);

/// Shoelace area of the boundary polygon.
double boundary_polygon_area(const Mesh2D& mesh);

}  // namespace vsrd
