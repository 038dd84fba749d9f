#pragma once

#include <Eigen/Core>

namespace vsrd {

/// P1 stiffness matrix (grad phi_i, grad phi_j)_T on the triangle p0 p1 p2.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> triangle_stiffness(const Eigen::Matrix<Scalar, 2, 1>& p0,
                                               const Eigen::Matrix<Scalar, 2, 1>& p1,
                                               const Eigen::Matrix<Scalar, 2, 1>& p2) {
  // Rows of `edges` are the edges opposite to each vertex, rotated by 90 degrees
  // they are |T|-scaled gradients: grad phi_i = rot(e_i) / (2|T|).
  Eigen::Matrix<Scalar, 3, 2> edges;
  edges.row(0) = (p2 - p1).transpose();
  edges.row(1) = (p0 - p2).transpose();
  edges.row(2) = (p1 - p0).transpose();
  const Scalar twice_area = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
  return edges * edges.transpose() / (Scalar(2) * twice_area);
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> triangle_mass(Scalar area) {
  Eigen::Matrix<Scalar, 3, 3> m;
  m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  return m * (area / Scalar(12));
}

/// Tangential P1 stiffness along a straight edge of the given length.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> edge_stiffness(Scalar length) {
  Eigen::Matrix<Scalar, 2, 2> k;
  k << 1, -1, -1, 1;
  return k / length;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> edge_mass(Scalar length) {
  Eigen::Matrix<Scalar, 2, 2> m;
  m << 2, 1, 1, 2;
  return m * (length / Scalar(6));
}

}  // namespace vsrd
