#include "dmpcut/cutoff.hpp"
#include "dmpcut/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace dmpcut {

namespace {

void require_scalar(const FEFunction& U) {
  if (U.components() != 1)
    throw TypeError("cutoff needs a scalar field; use the convex projection for vector fields");
}

Index edge_dof(const FESpace& space, int a, int b) {
  const Eigen::MatrixX2i& edges = space.edges();
  const int lo = std::min(a, b), hi = std::max(a, b);
  Index first = 0, last = edges.rows();
  while (first < last) {
    const Index mid = (first + last) / 2;
    if (edges(mid, 0) < lo || (edges(mid, 0) == lo && edges(mid, 1) < hi))
      first = mid + 1;
    else
      last = mid;
  }
  if (first == edges.rows() || edges(first, 0) != lo || edges(first, 1) != hi)
    throw ValidationError("boundary edge missing from the edge list");
  return space.mesh().vertex_count() + first;
}

// max over t in [0,1] of the quadratic with q(0)=u0, q(1/2)=um, q(1)=u1
double edge_quadratic_max(double u0, double um, double u1) {
  double m = std::max(u0, u1);
  const double a = 2.0 * u0 - 4.0 * um + 2.0 * u1;
  const double b = -3.0 * u0 + 4.0 * um - u1;
  if (a < 0.0) {
    const double t = -b / (2.0 * a);
    if (t > 0.0 && t < 1.0)
      m = std::max(m, u0 - b * b / (4.0 * a));
  }
  return m;
}

} // namespace

std::string to_string(CutoffMode mode) {
  return mode == CutoffMode::plain_sup ? "plain_sup" : "positive_part_sup";
}

CutoffField::CutoffField(FEFunction base, double level, CutoffMode mode)
    : base_(std::move(base)), level_(level), mode_(mode) {
  require_scalar(base_);
  if (!std::isfinite(level_))
    throw DataError("cutoff level must be finite");
}

double CutoffField::eval(Index t, const Eigen::Vector3d& barycentric) const {
  return std::min(dmpcut::eval(base_, t, barycentric)(0), level_);
}

Eigen::Vector2d CutoffField::eval_gradient(Index t, const Eigen::Vector3d& barycentric) const {
  if (dmpcut::eval(base_, t, barycentric)(0) > level_)
    return Eigen::Vector2d::Zero();
  return dmpcut::eval_gradient(base_, t, barycentric).row(0).transpose();
}

double sup_boundary(const FEFunction& U, CutoffMode mode) {
  require_scalar(U);
  const FESpace& space = U.space();
  const Mesh& mesh = space.mesh();
  if (mesh.boundary_edges.rows() == 0)
    throw PreconditionError("mesh has no boundary edges");
  const Eigen::VectorXd u = U.coefficients().col(0);
  double m = -std::numeric_limits<double>::infinity();
  for (Index e = 0; e < mesh.boundary_edges.rows(); ++e) {
    const int a = mesh.boundary_edges(e, 0), b = mesh.boundary_edges(e, 1);
    if (space.degree() == 1)
      m = std::max({m, u(a), u(b)});
    else
      m = std::max(m, edge_quadratic_max(u(a), u(edge_dof(space, a, b)), u(b)));
  }
  // + 0.0 turns a -0 level into +0
  return (mode == CutoffMode::positive_part_sup ? std::max(m, 0.0) : m) + 0.0;
}

CutoffField make_cutoff(const FEFunction& U, CutoffMode mode) {
  return CutoffField(U, sup_boundary(U, mode), mode);
}

Integral integrate_cut(const CutoffField& field, CutIntegral kind, const ScalarFunction& f,
                       const IntegrationOptions& options) {
  const FieldView view = field;
  PointIntegrand integrand;
  switch (kind) {
  case CutIntegral::dirichlet_energy:
    integrand = [](const Eigen::Vector2d&, std::span<const PointSample> s) {
      return s[0].gradient.squaredNorm();
    };
    break;
  case CutIntegral::l2_sq:
    integrand = [](const Eigen::Vector2d&, std::span<const PointSample> s) {
      return s[0].value * s[0].value;
    };
    break;
  case CutIntegral::source_pairing:
    if (!f)
      throw PreconditionError("source pairing needs a source density");
    integrand = [&f](const Eigen::Vector2d& x, std::span<const PointSample> s) {
      return f(x) * s[0].value;
    };
    break;
  }
  return integrate(std::span<const FieldView>(&view, 1), integrand, options);
}

bool pointwise_error_bound_check(const FEFunction& u_ref, const FEFunction& U, double level,
                                 std::span<const Eigen::Vector2d> extra_points) {
  require_scalar(u_ref);
  require_scalar(U);
  if (&u_ref.space().mesh() != &U.space().mesh())
    throw PreconditionError("reference and approximation must share the mesh");

  std::vector<std::pair<double, double>> values; // (u_ref, U)
  const FieldView views[2] = {FieldView(u_ref), FieldView(U)};
  for_each_sample_point(views, [&](const Eigen::Vector2d&, std::span<const PointSample> s) {
    values.emplace_back(s[0].value, s[1].value);
  });
  if (!extra_points.empty()) {
    const PointLocator locator(U.space().mesh());
    for (const Eigen::Vector2d& x : extra_points) {
      const auto loc = locator.locate(x);
      if (!loc)
        continue;
      values.emplace_back(sample(views[0], loc->triangle, loc->barycentric).value,
                          sample(views[1], loc->triangle, loc->barycentric).value);
    }
  }

  for (const auto& [ur, u] : values)
    if (ur > level + 1e-12)
      throw PreconditionError("reference field exceeds the cutoff level (" + std::to_string(ur) +
                              " > " + std::to_string(level) +
                              "); the pointwise bound needs the maximum principle for it");
  return std::all_of(values.begin(), values.end(), [level](const auto& p) {
    const auto [ur, u] = p;
    return std::abs(ur - std::min(u, level)) <= std::abs(ur - u) + 1e-12;
  });
}

} // namespace dmpcut
