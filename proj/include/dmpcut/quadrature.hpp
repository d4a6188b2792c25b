#pragma once

#include <Eigen/Core>

namespace dmpcut {

/// Rule on the reference triangle. Points are barycentric coordinates,
/// weights sum to 1/2 (the reference area).
struct QuadratureRule {
  int degree = 0;
  Eigen::MatrixX3d points;
  Eigen::VectorXd weights;

  Eigen::Index size() const { return weights.size(); }
};

/// Positive-weight rule exact for polynomials of total degree <= `degree`,
/// for degree in [1, 10]. Degrees 1, 2, 4 and 5 use the classical symmetric
/// 1-, 3-, 6- and 7-point rules (degree 3 reuses the 6-point rule); higher
/// degrees use collapsed Gauss-Legendre products.
const QuadratureRule& quadrature(int degree);

/// n-point Gauss-Legendre rule on [0, 1]: (nodes, weights).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n);

} // namespace dmpcut
