#include "vsrd/mesh.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace vsrd;

TEST_CASE("ring mesh counts") {
  for (int R = 1; R <= 6; ++R) {
    const Mesh2D m = build_disk_mesh(R);
    CHECK(m.n_vertices() == 1 + 3 * R * (R + 1));
    CHECK(m.n_triangles() == 6 * R * R);
    CHECK(m.n_boundary_edges() == 6 * R);
    CHECK(m.level() == 0);
    CHECK_NOTHROW(m.validate());
  }
  CHECK(build_disk_mesh(1).n_vertices() == 7);
  CHECK(build_disk_mesh(2).n_vertices() == 19);
  CHECK(build_disk_mesh(2).n_triangles() == 24);
  CHECK_THROWS_AS(build_disk_mesh(0), std::invalid_argument);
}

TEST_CASE("hexagon geometry") {
  const Mesh2D m = build_disk_mesh(1);
  CHECK(m.area() == doctest::Approx(3.0 * std::sqrt(3.0) / 2.0).epsilon(1e-14));
  CHECK(m.perimeter() == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(boundary_polygon_area(m) == doctest::Approx(m.area()).epsilon(1e-14));
  const MeshQuality q = quality(m);
  CHECK(q.min_angle_deg == doctest::Approx(60.0).epsilon(1e-12));
  CHECK(q.h == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(q.max_ratio == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("boundary vertices lie on the circle") {
  Mesh2D m = build_disk_mesh(3);
  for (int l = 0; l < 3; ++l) {
    for (Index v : m.boundary_vertex_ids()) CHECK(std::abs(m.vertex(v).norm() - 1.0) <= 1e-12);
    m = refine_uniform(m);
  }
}

TEST_CASE("uniform refinement combinatorics") {
  const Mesh2D coarse = build_disk_mesh(2);
  const Mesh2D fine = refine_uniform(coarse);
  const Index V = coarse.n_vertices(), T = coarse.n_triangles();
  const Index E = V + T - 1;  // Euler for a disk
  CHECK(fine.n_vertices() == V + E);
  CHECK(fine.n_triangles() == 4 * T);
  CHECK(fine.n_boundary_edges() == 2 * coarse.n_boundary_edges());
  CHECK(fine.level() == 1);
  CHECK_NOTHROW(fine.validate());
  const auto& parents = fine.vertex_parents();
  REQUIRE(parents.cols() == fine.n_vertices());
  for (Index i = 0; i < V; ++i) {
    CHECK(parents(0, i) == i);
    CHECK(parents(1, i) == i);
    CHECK(fine.vertex(i) == coarse.vertex(i));
  }
  for (Index i = V; i < fine.n_vertices(); ++i) CHECK(parents(0, i) != parents(1, i));
  CHECK(refined_disk_mesh(2, 1).n_vertices() == fine.n_vertices());
}

TEST_CASE("area error is second order") {
  Mesh2D m = build_disk_mesh(2);
  std::vector<double> err;
  for (int l = 0; l < 5; ++l) {
    err.push_back(std::numbers::pi - m.area());
    if (l < 4) m = refine_uniform(m);
  }
  for (std::size_t k = 0; k + 1 < err.size(); ++k) {
    const double ratio = err[k] / err[k + 1];
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }
}

TEST_CASE("shape regularity under refinement") {
  Mesh2D m = build_disk_mesh(4);
  const double angle0 = quality(m).min_angle_deg;
  for (int l = 0; l < 4; ++l) {
    m = refine_uniform(m);
    const MeshQuality q = quality(m);
    CHECK(q.min_angle_deg > 0.9 * angle0);
    CHECK(q.max_ratio < 4.0);
  }
}

TEST_CASE("gamma2 marking") {
  const Mesh2D m = mark_gamma2(build_disk_mesh(2), 0.0, std::numbers::pi);
  CHECK(m.has_gamma2());
  Index marked = 0;
  for (bool b : m.gamma2_edge_mask()) marked += b ? 1 : 0;
  CHECK(m.n_boundary_edges() == 12);
  CHECK(marked == 6);
  CHECK(m.gamma2_length() == doctest::Approx(0.5 * m.perimeter()).epsilon(1e-14));
  CHECK_NOTHROW(m.validate());

  const Mesh2D fine = refine_uniform(m);
  Index fine_marked = 0;
  for (bool b : fine.gamma2_edge_mask()) fine_marked += b ? 1 : 0;
  CHECK(fine_marked == 12);
  CHECK(fine.gamma2_theta_min() == m.gamma2_theta_min());
  CHECK_NOTHROW(fine.validate());

  CHECK_FALSE(build_disk_mesh(2).has_gamma2());
  CHECK_THROWS_AS(mark_gamma2(build_disk_mesh(2), 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(mark_gamma2(build_disk_mesh(2), 0.0, 7.0), std::invalid_argument);
  CHECK_THROWS_AS(mark_gamma2(build_disk_mesh(2), 0.01, 0.02), std::invalid_argument);
}

TEST_CASE("gamma2 arc may wrap through angle zero") {
  const Mesh2D m = mark_gamma2(build_disk_mesh(3), 5.5, 7.0);
  CHECK_NOTHROW(m.validate());
  CHECK(m.gamma2_length() > 0.0);
}

TEST_CASE("derived boundary chain matches the stored one") {
  const Mesh2D m = refined_disk_mesh(3, 2);
  CHECK(derive_boundary_chain(m) == m.boundary_edges());
}

TEST_CASE("construction is deterministic") {
  const Mesh2D a = refined_disk_mesh(3, 2), b = refined_disk_mesh(3, 2);
  CHECK(a.vertices() == b.vertices());
  CHECK(a.triangles() == b.triangles());
  CHECK(a.boundary_edges() == b.boundary_edges());
}

TEST_CASE("star-shaped curve") {
  const BoundaryCurve curve([](double t) { return 1.0 + 0.2 * std::cos(3.0 * t); }, "trefoil");
  // area of r = 1 + a cos(3t): pi (1 + a^2 / 2)
  CHECK(curve.area() == doctest::Approx(std::numbers::pi * (1.0 + 0.02)).epsilon(1e-12));
  Mesh2D m = build_star_mesh(4, curve);
  CHECK_NOTHROW(m.validate());
  m = refine_uniform(m);
  CHECK_NOTHROW(m.validate());
  for (Index v : m.boundary_vertex_ids()) {
    const Point2 p = m.vertex(v);
    CHECK(std::abs(p.norm() - curve.radius(std::atan2(p.y(), p.x()))) <= 1e-12);
  }
  CHECK(std::abs(m.area() - curve.area()) < 0.05);
}

TEST_CASE("unit circle helpers") {
  const BoundaryCurve c = BoundaryCurve::unit_circle();
  CHECK(c.is_unit_circle());
  CHECK(c.length() == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(c.arc_length(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(c.project(Point2(2.0, 0.0)).isApprox(Point2(1.0, 0.0)));
  CHECK_THROWS_AS(c.project(Point2(0.0, 0.0)), StructuralError);
}
