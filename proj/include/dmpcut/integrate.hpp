#pragma once

#include "dmpcut/fespace.hpp"

#include <functional>
#include <limits>
#include <span>

namespace dmpcut {

/// One scalar component of a field, optionally truncated from above:
/// value = min(base, level). level = +inf is the untruncated field.
struct FieldView {
  const FEFunction* base = nullptr;
  int component = 0;
  double level = std::numeric_limits<double>::infinity();

  FieldView() = default;
  FieldView(const FEFunction& f, int comp = 0) : base(&f), component(comp) {} // NOLINT
  FieldView(const FEFunction& f, int comp, double lvl) : base(&f), component(comp), level(lvl) {}

  bool truncated() const { return level < std::numeric_limits<double>::infinity(); }
};

struct PointSample {
  double value = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
};

using PointIntegrand = std::function<double(const Eigen::Vector2d& x, std::span<const PointSample>)>;

struct IntegrationOptions {
  int quadrature_degree = 6;
  int subdivision_depth = 5;
};

struct Integral {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Integrates integrand(x, samples of all fields) over the common mesh.
///
/// Triangles where no truncated field crosses its level are integrated with
/// the plain rule. Where only P1 fields are cut, the triangle is split
/// exactly along the straight level lines. Where a P2 field is cut, the
/// triangle is subdivided uniformly `subdivision_depth` times (subtriangles
/// proven uncut by Bernstein bounds stop early) and leaves are split along
/// the linearized level lines; the error estimate is the summed difference
/// to the result one level coarser.
Integral integrate(std::span<const FieldView> fields, const PointIntegrand& integrand,
                   const IntegrationOptions& options = {});

/// Plain quadrature of an integrand over the mesh (no fields).
double integrate_function(const Mesh& mesh, const ScalarFunction& g, int degree = 6);

/// Calls visit(x, samples) at every quadrature point of every triangle, using
/// the same piecewise treatment as integrate().
void for_each_sample_point(std::span<const FieldView> fields,
                           const std::function<void(const Eigen::Vector2d&, std::span<const PointSample>)>& visit,
                           const IntegrationOptions& options = {});

/// Value and gradient of a view at a point of triangle t (pointwise min).
PointSample sample(const FieldView& view, Index t, const Eigen::Vector3d& barycentric);

} // namespace dmpcut
