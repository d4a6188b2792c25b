#pragma once

#include <Eigen/Core>

#include <memory>
#include <string>

namespace dmpcut {

/// Arithmetic expression in x and y: numbers, pi, + - * / ^, parentheses,
/// and sin cos tan exp log sqrt abs min max.
///
///   Expression e = Expression::parse("-2*pi^2*sin(pi*x)*sin(pi*y)");
///   double v = e({0.5, 0.5});
class Expression {
public:
  struct Node;

  /// Throws ConfigError with the offending column on malformed input.
  static Expression parse(const std::string& text);

  double operator()(const Eigen::Vector2d& x) const;
  const std::string& text() const { return text_; }
  /// True when the expression does not mention x or y.
  bool is_constant() const;

private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

} // namespace dmpcut
