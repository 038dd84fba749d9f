#pragma once

// Brute-force reference computations used by the tests. Nothing here calls
// into the element or assembly code of the library.

#include "vsrd/mesh.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace oracle {

using Eigen::MatrixXd;
using vsrd::Index;
using vsrd::Mesh2D;
using vsrd::Point2;

/// 3-point Gauss-Legendre on [0,1].
inline const std::array<std::pair<double, double>, 3>& gauss3() {
  static const double a = std::sqrt(0.6);
  static const std::array<std::pair<double, double>, 3> rule = {
      {{0.5 * (1.0 - a), 5.0 / 18.0}, {0.5, 8.0 / 18.0}, {0.5 * (1.0 + a), 5.0 / 18.0}}};
  return rule;
}

/// Hat-function coefficients c0 + c1 x + c2 y for the three vertices of a triangle.
inline Eigen::Matrix3d hat_coefficients(const Point2& p0, const Point2& p1, const Point2& p2) {
  Eigen::Matrix3d V;
  V << 1, p0.x(), p0.y(), 1, p1.x(), p1.y(), 1, p2.x(), p2.y();
  return V.inverse();  // column i holds the coefficients of hat i
}

/// Element mass and stiffness by a collapsed (Duffy) Gauss product rule,
/// exact for polynomials of degree <= 4 on the triangle.
inline void element_matrices(const Point2& p0, const Point2& p1, const Point2& p2, Eigen::Matrix3d& mass,
                             Eigen::Matrix3d& stiffness) {
  const Eigen::Matrix3d C = hat_coefficients(p0, p1, p2);
  const double jac = std::abs((p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x());
  mass.setZero();
  stiffness.setZero();
  for (const auto& [u, wu] : gauss3()) {
    for (const auto& [v, wv] : gauss3()) {
      const double s = u, t = v * (1.0 - u);
      const double w = wu * wv * (1.0 - u) * jac;
      const Point2 x = p0 + s * (p1 - p0) + t * (p2 - p0);
      Eigen::Vector3d phi;
      for (int i = 0; i < 3; ++i) phi(i) = C(0, i) + C(1, i) * x.x() + C(2, i) * x.y();
      mass += w * phi * phi.transpose();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) stiffness(i, j) += w * (C(1, i) * C(1, j) + C(2, i) * C(2, j));
    }
  }
}

/// Edge mass by 3-point Gauss, stiffness from the tangential derivative.
inline void edge_matrices(double length, Eigen::Matrix2d& mass, Eigen::Matrix2d& stiffness) {
  mass.setZero();
  for (const auto& [s, w] : gauss3()) {
    const Eigen::Vector2d phi(1.0 - s, s);
    mass += w * length * phi * phi.transpose();
  }
  stiffness << 1.0, -1.0, -1.0, 1.0;
  stiffness /= length;
}

struct DenseForms {
  MatrixXd M_vol, A_vol, M_bnd, A_bnd, trace;
};

/// Dense global matrices; boundary DOF k is the source vertex of chain edge k.
inline DenseForms dense_forms(const Mesh2D& mesh) {
  const Index nv = mesh.n_vertices(), nb = mesh.n_boundary_edges();
  DenseForms f;
  f.M_vol = MatrixXd::Zero(nv, nv);
  f.A_vol = MatrixXd::Zero(nv, nv);
  f.M_bnd = MatrixXd::Zero(nb, nb);
  f.A_bnd = MatrixXd::Zero(nb, nb);
  f.trace = MatrixXd::Zero(nb, nv);
  for (Index t = 0; t < mesh.n_triangles(); ++t) {
    std::array<Index, 3> v{mesh.triangles()(0, t), mesh.triangles()(1, t), mesh.triangles()(2, t)};
    Eigen::Matrix3d m, a;
    element_matrices(mesh.vertex(v[0]), mesh.vertex(v[1]), mesh.vertex(v[2]), m, a);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        f.M_vol(v[i], v[j]) += m(i, j);
        f.A_vol(v[i], v[j]) += a(i, j);
      }
  }
  for (Index e = 0; e < nb; ++e) {
    const Index a = mesh.boundary_edges()(0, e), b = mesh.boundary_edges()(1, e);
    f.trace(e, a) = 1.0;
    Eigen::Matrix2d m, s;
    edge_matrices((mesh.vertex(b) - mesh.vertex(a)).norm(), m, s);
    const std::array<Index, 2> d{e, (e + 1) % nb};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        f.M_bnd(d[i], d[j]) += m(i, j);
        f.A_bnd(d[i], d[j]) += s(i, j);
      }
  }
  return f;
}

/// Unscaled two-species operator from the weak form
/// d_L (grad L, grad v) + d_l (grad l, grad w) + (lambda L - gamma l, v - w)_Gamma.
inline MatrixXd two_species_operator(const DenseForms& f, double d_L, double d_l, double lambda, double gamma) {
  const Index nv = f.M_vol.rows(), nb = f.M_bnd.rows();
  MatrixXd A = MatrixXd::Zero(nv + nb, nv + nb);
  const MatrixXd& T = f.trace;
  A.topLeftCorner(nv, nv) = d_L * f.A_vol + lambda * T.transpose() * f.M_bnd * T;
  A.topRightCorner(nv, nb) = -gamma * T.transpose() * f.M_bnd;
  A.bottomLeftCorner(nb, nv) = -lambda * f.M_bnd * T;
  A.bottomRightCorner(nb, nb) = d_l * f.A_bnd + gamma * f.M_bnd;
  return A;
}

inline MatrixXd block_mass(const DenseForms& f) {
  const Index nv = f.M_vol.rows(), nb = f.M_bnd.rows();
  MatrixXd M = MatrixXd::Zero(nv + nb, nv + nb);
  M.topLeftCorner(nv, nv) = f.M_vol;
  M.bottomRightCorner(nb, nb) = f.M_bnd;
  return M;
}

}  // namespace oracle
