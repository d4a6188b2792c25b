#include "dmpcut/convexproj.hpp"
#include "dmpcut/errors.hpp"
#include "dmpcut/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace dmpcut {

namespace {

void require_p1_vector(const FEFunction& U) {
  if (U.components() != 2)
    throw TypeError("convex projection needs a field with two components");
  if (U.space().degree() != 1)
    throw UnsupportedError("convex projection is implemented for P1 vector fields only");
}

struct LocalVector {
  Eigen::Matrix<double, 3, 2> values; // row k: value at vertex k
  Eigen::Matrix<double, 2, 2> gradient; // row c: gradient of component c
};

LocalVector local_vector(const FEFunction& U, Index t, const TriangleGeometry& geo) {
  LocalVector lv;
  for (int k = 0; k < 3; ++k)
    lv.values.row(k) = U.coefficients().row(U.space().dof_map()(t, k));
  lv.gradient = lv.values.transpose() * geo.grad_barycentric;
  return lv;
}

double leaf_integral(const ProjectedField& field, const LocalVector& lv, const TriangleGeometry& geo,
                     const Eigen::Matrix3d& B, VectorIntegral kind, const QuadratureRule& rule) {
  const double ref_area = 0.5 * std::abs((B(1, 1) - B(0, 1)) * (B(2, 2) - B(0, 2)) -
                                         (B(1, 2) - B(0, 2)) * (B(2, 1) - B(0, 1)));
  double sum = 0.0;
  for (Index q = 0; q < rule.size(); ++q) {
    const Eigen::Vector3d l = B.transpose() * rule.points.row(q).transpose();
    const Eigen::Vector2d u = lv.values.transpose() * l;
    double v;
    if (kind == VectorIntegral::dirichlet_energy)
      v = (field.region().projection_jacobian(u) * lv.gradient).squaredNorm();
    else
      v = field.region().project(u).squaredNorm();
    sum += rule.weights(q) * v;
  }
  return 2.0 * (2.0 * geo.area * ref_area) * sum;
}

double subdivide(const ProjectedField& field, const LocalVector& lv, const TriangleGeometry& geo,
                 const Eigen::Matrix3d& B, int depth, VectorIntegral kind, const QuadratureRule& rule) {
  if (depth == 0)
    return leaf_integral(field, lv, geo, B, kind, rule);
  const Eigen::RowVector3d a = B.row(0), b = B.row(1), c = B.row(2);
  const Eigen::RowVector3d ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  Eigen::Matrix3d child;
  double sum = 0.0;
  child << a, ab, ca;
  sum += subdivide(field, lv, geo, child, depth - 1, kind, rule);
  child << ab, b, bc;
  sum += subdivide(field, lv, geo, child, depth - 1, kind, rule);
  child << ca, bc, c;
  sum += subdivide(field, lv, geo, child, depth - 1, kind, rule);
  child << ab, bc, ca;
  sum += subdivide(field, lv, geo, child, depth - 1, kind, rule);
  return sum;
}

} // namespace

Region boundary_hull(const FEFunction& U, bool include_origin) {
  require_p1_vector(U);
  const auto vertices = boundary_vertices(U.space().mesh());
  if (vertices.empty())
    throw PreconditionError("mesh has no boundary");
  std::vector<Region::Point> points;
  points.reserve(vertices.size() + 1);
  for (int v : vertices)
    points.push_back(U.coefficients().row(v).transpose());
  if (include_origin)
    points.push_back(Region::Point::Zero());
  return Region::hull(std::move(points));
}

ProjectedField::ProjectedField(FEFunction base, Region region)
    : base_(std::move(base)), region_(std::move(region)) {
  require_p1_vector(base_);
}

Eigen::Vector2d ProjectedField::eval(Index t, const Eigen::Vector3d& barycentric) const {
  return region_.project(dmpcut::eval(base_, t, barycentric));
}

Eigen::Matrix2d ProjectedField::eval_gradient(Index t, const Eigen::Vector3d& barycentric) const {
  const Eigen::Vector2d u = dmpcut::eval(base_, t, barycentric);
  return region_.projection_jacobian(u) * dmpcut::eval_gradient(base_, t, barycentric);
}

ProjectedField make_projected(const FEFunction& U, bool include_origin) {
  return ProjectedField(U, boundary_hull(U, include_origin));
}

Integral integrate_projected(const ProjectedField& field, VectorIntegral kind,
                             const IntegrationOptions& options) {
  if (options.subdivision_depth < 2 || options.subdivision_depth > 10)
    throw ConfigError("subdivision depth must lie in [2, 10]");
  const QuadratureRule& rule = quadrature(options.quadrature_degree);
  const Mesh& mesh = field.base().space().mesh();
  Integral result;
  for (Index t = 0; t < mesh.triangle_count(); ++t) {
    const TriangleGeometry geo = triangle_geometry(mesh, t);
    const LocalVector lv = local_vector(field.base(), t, geo);
    bool inside = true;
    for (int k = 0; k < 3 && inside; ++k)
      inside = field.region().project(lv.values.row(k).transpose()) == lv.values.row(k).transpose();
    if (inside) {
      // the region is convex, so the whole image of the triangle is inside
      result.value += leaf_integral(field, lv, geo, Eigen::Matrix3d::Identity(), kind, rule);
      continue;
    }
    const double fine = subdivide(field, lv, geo, Eigen::Matrix3d::Identity(),
                                  options.subdivision_depth, kind, rule);
    const double coarse = subdivide(field, lv, geo, Eigen::Matrix3d::Identity(),
                                    options.subdivision_depth - 1, kind, rule);
    result.value += fine;
    result.error_estimate += std::abs(fine - coarse);
  }
  return result;
}

double integrate_vector(const FEFunction& U, VectorIntegral kind, int quadrature_degree) {
  double sum = 0.0;
  for (int c = 0; c < U.components(); ++c) {
    const FieldView view(U, c);
    PointIntegrand integrand;
    if (kind == VectorIntegral::dirichlet_energy)
      integrand = [](const Eigen::Vector2d&, std::span<const PointSample> s) {
        return s[0].gradient.squaredNorm();
      };
    else
      integrand = [](const Eigen::Vector2d&, std::span<const PointSample> s) {
        return s[0].value * s[0].value;
      };
    IntegrationOptions options;
    options.quadrature_degree = quadrature_degree;
    sum += integrate(std::span<const FieldView>(&view, 1), integrand, options).value;
  }
  return sum;
}

} // namespace dmpcut
