#include "oracles.hpp"
#include "vsrd/element.hpp"
#include "vsrd/femcore.hpp"
#include "vsrd/quadrature.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace vsrd;

namespace {

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace

TEST_CASE("reference element matrices") {
  const Eigen::Vector2d p0(0, 0), p1(1, 0), p2(0, 1);
  Eigen::Matrix3d K;
  K << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
  CHECK(rel_diff(triangle_stiffness(p0, p1, p2), K) < 1e-15);
  Eigen::Matrix3d M;
  M << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  CHECK(rel_diff(triangle_mass(0.5), M / 24.0) < 1e-15);

  Eigen::Matrix2d em, ek;
  em << 2, 1, 1, 2;
  ek << 1, -1, -1, 1;
  CHECK(rel_diff(edge_mass(3.0), em / 2.0) < 1e-15);
  CHECK(rel_diff(edge_stiffness(0.5), 2.0 * ek) < 1e-15);

  // templated on the scalar type
  const Eigen::Vector2f q0(0, 0), q1(1, 0), q2(0, 1);
  CHECK(std::abs(triangle_stiffness(q0, q1, q2)(0, 0) - 1.0f) < 1e-6f);
}

TEST_CASE("element matrices agree with a quadrature oracle on random triangles") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int tested = 0;
  while (tested < 50) {
    Eigen::Vector2d p0(u(rng), u(rng)), p1(u(rng), u(rng)), p2(u(rng), u(rng));
    double twice = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
    if (std::abs(twice) < 0.05) continue;
    if (twice < 0) std::swap(p1, p2);
    twice = std::abs(twice);
    Eigen::Matrix3d m_ref, k_ref;
    oracle::element_matrices(p0, p1, p2, m_ref, k_ref);
    CHECK(rel_diff(triangle_stiffness(p0, p1, p2), k_ref) < 1e-12);
    CHECK(rel_diff(triangle_mass(0.5 * twice), m_ref) < 1e-12);

    const double len = (p1 - p0).norm();
    Eigen::Matrix2d em, ek;
    oracle::edge_matrices(len, em, ek);
    CHECK(rel_diff(edge_mass(len), em) < 1e-12);
    CHECK(rel_diff(edge_stiffness(len), ek) < 1e-12);
    ++tested;
  }
}

TEST_CASE("global forms match a dense brute-force assembly") {
  const Mesh2D mesh = refined_disk_mesh(2, 1);
  const AssembledForms f = assemble(mesh);
  const oracle::DenseForms d = oracle::dense_forms(mesh);
  CHECK(rel_diff(Eigen::MatrixXd(f.M_vol.matrix), d.M_vol) < 1e-12);
  CHECK(rel_diff(Eigen::MatrixXd(f.A_vol.matrix), d.A_vol) < 1e-12);
  CHECK(rel_diff(Eigen::MatrixXd(f.M_bnd.matrix), d.M_bnd) < 1e-12);
  CHECK(rel_diff(Eigen::MatrixXd(f.A_bnd.matrix), d.A_bnd) < 1e-12);
  CHECK(rel_diff(Eigen::MatrixXd(f.dofs.trace), d.trace) == 0.0);
}

TEST_CASE("row sums, positivity and measures") {
  const Mesh2D mesh = mark_gamma2(refined_disk_mesh(3, 2), 0.0, std::numbers::pi);
  const AssembledForms f = assemble(mesh);
  for (const SparseForm* k : {&f.A_vol, &f.A_bnd, &f.A_g2}) {
    const Vector ones = Vector::Ones(k->size());
    CHECK((k->matrix * ones).cwiseAbs().maxCoeff() <= 1e-12 * max_abs(k->matrix));
    CHECK(k->role == FormRole::stiffness);
  }
  for (const SparseForm* m : {&f.M_vol, &f.M_bnd, &f.M_g2}) {
    CHECK(m->role == FormRole::mass);
    for (Index k = 0; k < m->matrix.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m->matrix, k); it; ++it) CHECK(it.value() > 0.0);
    CHECK(Eigen::MatrixXd(m->matrix).llt().info() == Eigen::Success);
  }
  CHECK(f.M_vol.matrix.sum() == doctest::Approx(f.area).epsilon(1e-13));
  CHECK(f.M_bnd.matrix.sum() == doctest::Approx(f.perimeter).epsilon(1e-13));
  CHECK(f.M_g2.matrix.sum() == doctest::Approx(f.gamma2_length).epsilon(1e-13));
  CHECK(f.area == doctest::Approx(mesh.area()).epsilon(1e-14));
  CHECK(f.gamma2_length == doctest::Approx(mesh.gamma2_length()).epsilon(1e-14));
  CHECK(f.dofs.n_gamma2 == f.dofs.gamma2_boundary_dofs.size());
}

TEST_CASE("symmetry of the forms") {
  const AssembledForms f = assemble(mark_gamma2(refined_disk_mesh(2, 2), 1.0, 3.0));
  for (const SparseForm* m : {&f.M_vol, &f.A_vol, &f.M_bnd, &f.A_bnd, &f.M_g2, &f.A_g2}) {
    const SparseMatrix d = m->matrix - SparseMatrix(m->matrix.transpose());
    CHECK((d.nonZeros() == 0 || max_abs(d) == 0.0));
  }
}

TEST_CASE("trace compatibility") {
  const Mesh2D mesh = mark_gamma2(refined_disk_mesh(3, 1), 0.5, 2.5);
  const AssembledForms f = assemble(mesh);
  Vector lin(mesh.n_vertices());
  for (Index i = 0; i < mesh.n_vertices(); ++i) lin(i) = 2.0 * mesh.vertex(i).x() - mesh.vertex(i).y() + 0.3;
  const Vector tr = f.dofs.trace * lin;
  for (Index k = 0; k < f.dofs.n_boundary; ++k) {
    const Point2 p = mesh.vertex(mesh.boundary_edges()(0, k));
    CHECK(tr(k) == doctest::Approx(2.0 * p.x() - p.y() + 0.3).epsilon(1e-15));
  }
  const Vector g2 = f.dofs.gamma2_embed * tr;
  for (Index j = 0; j < f.dofs.n_gamma2; ++j)
    CHECK(g2(j) == tr(f.dofs.gamma2_boundary_dofs[static_cast<std::size_t>(j)]));
  CHECK((f.restriction(Space::gamma2) * lin - g2).norm() == 0.0);
  CHECK((f.restriction(Space::volume) * lin - lin).norm() == 0.0);
}

TEST_CASE("quadrature is exact for quadratics") {
  const Mesh2D mesh = refined_disk_mesh(2, 1);
  const AssembledForms f = assemble(mesh);
  const auto q = [](double x, double y) { return 1.0 + x - 2.0 * y + 3.0 * x * x - x * y + 0.5 * y * y; };
  double ref = 0.0;
  for (Index t = 0; t < mesh.n_triangles(); ++t) {
    Eigen::Matrix3d m, k;
    const Point2 a = mesh.vertex(mesh.triangles()(0, t)), b = mesh.vertex(mesh.triangles()(1, t)),
                 c = mesh.vertex(mesh.triangles()(2, t));
    const double area = 0.5 * std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
    for (const auto& [u, wu] : oracle::gauss3())
      for (const auto& [v, wv] : oracle::gauss3()) {
        const Point2 x = a + u * (b - a) + v * (1.0 - u) * (c - a);
        ref += 2.0 * area * wu * wv * (1.0 - u) * q(x.x(), x.y());
      }
  }
  CHECK(integrate(f, Space::volume, q) == doctest::Approx(ref).epsilon(1e-13));

  double edge_ref = 0.0;
  for (Index e = 0; e < mesh.n_boundary_edges(); ++e) {
    const Point2 a = mesh.vertex(mesh.boundary_edges()(0, e)), b = mesh.vertex(mesh.boundary_edges()(1, e));
    for (const auto& [s, w] : oracle::gauss3()) {
      const Point2 x = a + s * (b - a);
      edge_ref += w * (b - a).norm() * q(x.x(), x.y());
    }
  }
  CHECK(integrate(f, Space::boundary, q) == doctest::Approx(edge_ref).epsilon(1e-13));
}

TEST_CASE("L2 projection") {
  const Mesh2D mesh = mark_gamma2(refined_disk_mesh(3, 1), 0.0, std::numbers::pi);
  const AssembledForms f = assemble(mesh);
  for (Space s : {Space::volume, Space::boundary, Space::gamma2}) {
    const Vector c = l2_project(f, s, [](double, double) { return 2.5; });
    CHECK((c.array() - 2.5).abs().maxCoeff() <= 1e-13);

    const auto lin = [](double x, double y) { return 1.0 + 2.0 * x - 3.0 * y; };
    const Vector p = l2_project(f, s, lin);
    const Vector nodal = f.restriction(s) * l2_project(f, Space::volume, lin);
    CHECK((p - nodal).cwiseAbs().maxCoeff() <= 1e-12);

    const auto g = [](double x, double y) { return std::sin(x + 1.0) * (2.0 - y); };
    const Vector pg = l2_project(f, s, g);
    CHECK((f.mass(s).matrix * pg).sum() == doctest::Approx(integrate(f, s, g)).epsilon(1e-12));
  }
}

TEST_CASE("solver and helpers") {
  const AssembledForms f = assemble(build_disk_mesh(2));
  const Vector rhs = Vector::LinSpaced(f.dofs.n_volume, 0.0, 1.0);
  const Vector x = solve_spd(f.M_vol.matrix, rhs);
  CHECK((f.M_vol.matrix * x - rhs).norm() <= 1e-12 * rhs.norm());
  const SparseMatrix L = lump(f.M_vol.matrix);
  CHECK(L.nonZeros() == f.dofs.n_volume);
  CHECK(L.sum() == doctest::Approx(f.area));
  CHECK_THROWS_AS(quadratic_form(f.M_vol, Vector::Ones(3), Vector::Ones(3)), std::invalid_argument);
  CHECK(quadratic_form(f.M_vol, Vector::Ones(f.dofs.n_volume), Vector::Ones(f.dofs.n_volume)) ==
        doctest::Approx(f.area));
  CHECK(std::string(to_string(Space::gamma2)) == "gamma2");
}

TEST_CASE("gauss-legendre rule") {
  for (int n : {1, 2, 5, 12}) {
    const auto [x, w] = gauss_legendre(n);
    CHECK(w.sum() == doctest::Approx(2.0).epsilon(1e-14));
    // integrates t^(2n-2) exactly
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += w(i) * std::pow(x(i), 2 * n - 2);
    CHECK(s == doctest::Approx(2.0 / (2 * n - 1)).epsilon(1e-13));
  }
}
