#include "dmpcut/quadrature.hpp"
#include "dmpcut/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace dmpcut {

namespace {

struct Builder {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;

  void centroid(double w) { add({1.0 / 3, 1.0 / 3, 1.0 / 3}, w); }
  // orbit (a, a, 1-2a) and its two rotations
  void orbit(double a, double w) {
    const double b = 1.0 - 2.0 * a;
    add({a, a, b}, w);
    add({a, b, a}, w);
    add({b, a, a}, w);
  }
  void add(const Eigen::Vector3d& p, double w) {
    points.push_back(p);
    weights.push_back(w);
  }

  QuadratureRule finish(int degree, double weight_scale) const {
    QuadratureRule rule;
    rule.degree = degree;
    rule.points.resize(static_cast<Eigen::Index>(points.size()), 3);
    rule.weights.resize(static_cast<Eigen::Index>(weights.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
      rule.points.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
      rule.weights(static_cast<Eigen::Index>(i)) = weights[i] * weight_scale;
    }
    return rule;
  }
};

QuadratureRule collapsed_rule(int degree) {
  // x = s (1 - t), y = t, Jacobian (1 - t): degree + 1 in t
  const int n = (degree + 3) / 2; // 2n - 1 >= degree + 1
  const auto [nodes, weights] = gauss_legendre(n);
  Builder b;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = nodes(i), t = nodes(j);
      const double x = s * (1.0 - t), y = t;
      b.add({1.0 - x - y, x, y}, weights(i) * weights(j) * (1.0 - t));
    }
  }
  return b.finish(degree, 1.0);
}

QuadratureRule build_rule(int degree) {
  Builder b;
  switch (degree) {
  case 1:
    b.centroid(1.0);
    return b.finish(1, 0.5);
  case 2:
    b.orbit(1.0 / 6.0, 1.0 / 3.0);
    return b.finish(2, 0.5);
  case 3:
  case 4:
    b.orbit(0.445948490915965, 0.223381589678011);
    b.orbit(0.091576213509771, 0.109951743655322);
    return b.finish(degree, 0.5);
  case 5: {
    const double r = std::sqrt(15.0);
    b.centroid(9.0 / 40.0);
    b.orbit((6.0 - r) / 21.0, (155.0 - r) / 1200.0);
    b.orbit((6.0 + r) / 21.0, (155.0 + r) / 1200.0);
    return b.finish(5, 0.5);
  }
  default:
    return collapsed_rule(degree);
  }
}

} // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n) {
  Eigen::VectorXd x(n), w(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n from the Chebyshev-like initial guess
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16)
        break;
    }
    // map [-1, 1] -> [0, 1]
    x(i) = 0.5 * (1.0 - z);
    w(i) = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

const QuadratureRule& quadrature(int degree) {
  static const std::array<QuadratureRule, 10> rules = [] {
    std::array<QuadratureRule, 10> r;
    for (int d = 1; d <= 10; ++d)
      r[static_cast<std::size_t>(d - 1)] = build_rule(d);
    return r;
  }();
  if (degree < 1 || degree > 10)
    throw ConfigError("unsupported quadrature degree " + std::to_string(degree) +
                      " (supported: 1..10)");
  return rules[static_cast<std::size_t>(degree - 1)];
}

} // namespace dmpcut
