#include "dmpcut/errors.hpp"
#include "dmpcut/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dmpcut;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

// int over {x, y >= 0, x + y <= 1} of x^a y^b
double monomial_integral(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

double apply(const QuadratureRule& q, int a, int b) {
  double s = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    s += q.weights(i) * std::pow(q.points(i, 1), a) * std::pow(q.points(i, 2), b);
  return s;
}

} // namespace

TEST(Quadrature, ExactUpToStatedDegree) {
  for (int degree = 1; degree <= 10; ++degree) {
    const QuadratureRule& q = quadrature(degree);
    EXPECT_GE(q.degree, degree);
    EXPECT_NEAR(q.weights.sum(), 0.5, 1e-15);
    EXPECT_GT(q.weights.minCoeff(), 0.0);
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      EXPECT_NEAR(q.points.row(i).sum(), 1.0, 1e-15);
      EXPECT_GE(q.points.row(i).minCoeff(), 0.0);
    }
    for (int a = 0; a <= degree; ++a)
      for (int b = 0; a + b <= degree; ++b)
        EXPECT_NEAR(apply(q, a, b), monomial_integral(a, b), 1e-15) << degree << ' ' << a << ' ' << b;
  }
}

TEST(Quadrature, ClassicalRules) {
  const QuadratureRule& q1 = quadrature(1);
  ASSERT_EQ(q1.size(), 1);
  EXPECT_DOUBLE_EQ(q1.weights(0), 0.5);
  EXPECT_NEAR(q1.points(0, 0), 1.0 / 3.0, 1e-16);

  EXPECT_EQ(quadrature(2).size(), 3);
  EXPECT_NEAR(apply(quadrature(2), 2, 0), 1.0 / 12.0, 1e-16);
  EXPECT_NEAR(apply(quadrature(2), 1, 1), 1.0 / 24.0, 1e-16);

  EXPECT_EQ(quadrature(5).size(), 7);
  EXPECT_NEAR(quadrature(5).weights.sum(), 0.5, 1e-16);
}

TEST(Quadrature, NotExactBeyondDegree) {
  // the centroid rule misses x^2
  EXPECT_GT(std::abs(apply(quadrature(1), 2, 0) - monomial_integral(2, 0)), 1e-3);
}

TEST(Quadrature, RejectsUnsupportedDegree) {
  EXPECT_THROW(quadrature(0), ConfigError);
  EXPECT_THROW(quadrature(11), ConfigError);
}

TEST(Quadrature, GaussLegendre) {
  for (int n = 1; n <= 8; ++n) {
    const auto [x, w] = gauss_legendre(n);
    for (int k = 0; k < 2 * n; ++k) {
      double s = 0;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        s += w(i) * std::pow(x(i), k);
      EXPECT_NEAR(s, 1.0 / (k + 1), 1e-15) << n << ' ' << k;
    }
  }
}
