#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "hfvrom/error.hpp"

namespace hfvrom {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

/// Tetrahedron vertex coordinates, one vertex per column.
template <typename Scalar>
using TetCoords = Eigen::Matrix<Scalar, 3, 4>;

using Vec3 = Vector3<double>;

template <typename Scalar>
Scalar signed_volume(const TetCoords<Scalar>& tet) {
  Eigen::Matrix<Scalar, 3, 3> edges;
  edges << tet.col(1) - tet.col(0), tet.col(2) - tet.col(0), tet.col(3) - tet.col(0);
  return edges.determinant() / Scalar(6);
}

/// Volume of the regular tetrahedron with the mean edge length of `tet`; the
/// scale used by the degeneracy guard when no mesh-wide mean is available.
template <typename Scalar>
Scalar reference_volume(const TetCoords<Scalar>& tet) {
  using std::sqrt;
  Scalar sum(0);
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) sum += (tet.col(a) - tet.col(b)).norm();
  const Scalar h = sum / Scalar(6);
  return h * h * h / (Scalar(6) * sqrt(Scalar(2)));
}

/// Gradients of the four barycentric coordinates, column k belonging to vertex k.
/// Throws degenerate-element when |volume| < 1e-14 * reference.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 4> barycentric_gradients(const TetCoords<Scalar>& tet, Scalar reference) {
  using std::abs;
  Eigen::Matrix<Scalar, 3, 3> edges;
  edges << tet.col(1) - tet.col(0), tet.col(2) - tet.col(0), tet.col(3) - tet.col(0);
  const Scalar volume = edges.determinant() / Scalar(6);
  if (!(abs(volume) >= Scalar(1e-14) * reference))
    fail(ErrorKind::kDegenerateElement, "tetrahedron volume below degeneracy threshold");
  // Rows of edges^{-1} are the gradients of lambda_1..lambda_3.
  const Eigen::Matrix<Scalar, 3, 3> inv_t = edges.inverse().transpose();
  Eigen::Matrix<Scalar, 3, 4> grads;
  grads.template rightCols<3>() = inv_t;
  grads.col(0) = -inv_t.rowwise().sum();
  return grads;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 4> barycentric_gradients(const TetCoords<Scalar>& tet) {
  return barycentric_gradients(tet, reference_volume(tet));
}

/// Exact gradient of the affine function taking `values` at the tet vertices.
template <typename Scalar>
Vector3<Scalar> p1_gradient(const TetCoords<Scalar>& tet, const Eigen::Matrix<Scalar, 4, 1>& values) {
  return barycentric_gradients(tet) * values;
}

template <typename Scalar>
Vector3<Scalar> p1_gradient(const TetCoords<Scalar>& tet, const Eigen::Matrix<Scalar, 4, 1>& values,
                            Scalar reference) {
  return barycentric_gradients(tet, reference) * values;
}

/// Jacobian (components x 3) of the affine field taking column k of
/// `face_values` at the barycentre of the face opposite vertex k. The face
/// barycentres are the vertices reflected through the centroid and scaled by
/// 1/3, so the result is -3x the vertex-based gradient.
template <typename Scalar, typename Derived>
auto face_field_jacobian(const Eigen::Matrix<Scalar, 3, 4>& grad_lambda,
                         const Eigen::MatrixBase<Derived>& face_values) {
  static_assert(Derived::ColsAtCompileTime == 4, "one column per tet face");
  return (Scalar(-3) * (face_values * grad_lambda.transpose())).eval();
}

/// Area vector (area times unit normal) of triangle (a, b, c), right-hand rule.
template <typename Scalar>
Vector3<Scalar> area_vector(const Vector3<Scalar>& a, const Vector3<Scalar>& b, const Vector3<Scalar>& c) {
  return Scalar(0.5) * (b - a).cross(c - a);
}

}  // namespace hfvrom
