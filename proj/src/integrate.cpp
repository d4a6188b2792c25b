#include "dmpcut/integrate.hpp"
#include "dmpcut/errors.hpp"
#include "dmpcut/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace dmpcut {

namespace {

enum class State : signed char { below, above, cut };

using Corners = Eigen::Matrix3d; // row k: barycentric coords (in the mesh triangle) of corner k

// Polygon vertex: barycentric coords w.r.t. the current subtriangle.
using Polygon = std::vector<Eigen::Vector3d>;

struct FieldData {
  const FieldView* view;
  int degree;
  Eigen::VectorXd coeffs;
  State state;
};

struct TriangleContext {
  Index t;
  TriangleGeometry geo;
  std::vector<FieldData> fields;
};

double value_at(const FieldData& f, const Eigen::Vector3d& l) {
  return f.coeffs.dot(shape_values(f.degree, l));
}

// Range classification on a subtriangle; P2 uses Bernstein coefficients,
// whose hull contains the range.
State classify(const FieldData& f, const Corners& B) {
  if (!f.view->truncated())
    return State::below;
  double lo, hi;
  if (f.degree == 1) {
    const Eigen::Vector3d v = B * f.coeffs;
    lo = v.minCoeff();
    hi = v.maxCoeff();
  } else {
    double u[3], m[3];
    for (int k = 0; k < 3; ++k) {
      u[k] = value_at(f, B.row(k).transpose());
      m[k] = value_at(f, 0.5 * (B.row(k) + B.row((k + 1) % 3)).transpose());
    }
    lo = hi = u[0];
    for (int k = 0; k < 3; ++k) {
      const double edge = 2.0 * m[k] - 0.5 * (u[k] + u[(k + 1) % 3]);
      lo = std::min({lo, u[k], edge});
      hi = std::max({hi, u[k], edge});
    }
  }
  const double level = f.view->level;
  if (hi <= level)
    return State::below;
  if (lo >= level)
    return State::above;
  return State::cut;
}

void split(const Polygon& poly, const std::vector<double>& phi, Polygon& below, Polygon& above) {
  below.clear();
  above.clear();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    if (phi[i] <= 0.0)
      below.push_back(poly[i]);
    if (phi[i] >= 0.0)
      above.push_back(poly[i]);
    if ((phi[i] < 0.0 && phi[j] > 0.0) || (phi[i] > 0.0 && phi[j] < 0.0)) {
      const double s = phi[i] / (phi[i] - phi[j]);
      const Eigen::Vector3d x = poly[i] + s * (poly[j] - poly[i]);
      below.push_back(x);
      above.push_back(x);
    }
  }
}

// A piece: triangle in mesh-triangle barycentrics plus, per field, whether
// the truncation is active (value = level) on it.
using PieceVisitor = std::function<void(const Corners&, const std::vector<char>&)>;

void emit_clipped(const TriangleContext& ctx, const Corners& B, const std::vector<State>& states,
                  const PieceVisitor& visit) {
  struct Part {
    Polygon poly;
    std::vector<char> active;
  };
  std::vector<Part> parts;
  Part whole;
  whole.poly = {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(0, 0, 1)};
  for (std::size_t i = 0; i < ctx.fields.size(); ++i)
    whole.active.push_back(states[i] == State::above);
  parts.push_back(std::move(whole));

  for (std::size_t i = 0; i < ctx.fields.size(); ++i) {
    if (states[i] != State::cut)
      continue;
    const FieldData& f = ctx.fields[i];
    // linear interpolation of the corner values (exact for P1)
    Eigen::Vector3d corner_values;
    for (int k = 0; k < 3; ++k)
      corner_values(k) = value_at(f, B.row(k).transpose()) - f.view->level;
    std::vector<Part> next;
    Polygon below, above;
    for (const Part& part : parts) {
      std::vector<double> phi(part.poly.size());
      for (std::size_t v = 0; v < part.poly.size(); ++v)
        phi[v] = part.poly[v].dot(corner_values);
      split(part.poly, phi, below, above);
      if (below.size() >= 3) {
        next.push_back({below, part.active});
        next.back().active[i] = 0;
      }
      if (above.size() >= 3) {
        next.push_back({above, part.active});
        next.back().active[i] = 1;
      }
    }
    parts = std::move(next);
  }

  for (const Part& part : parts) {
    for (std::size_t k = 1; k + 1 < part.poly.size(); ++k) {
      Eigen::Matrix3d mu;
      mu.row(0) = part.poly[0].transpose();
      mu.row(1) = part.poly[k].transpose();
      mu.row(2) = part.poly[k + 1].transpose();
      visit(mu * B, part.active);
    }
  }
}

void traverse(const TriangleContext& ctx, const Corners& B, int depth, const PieceVisitor& visit) {
  std::vector<State> states(ctx.fields.size());
  bool any_cut = false, p2_cut = false;
  for (std::size_t i = 0; i < ctx.fields.size(); ++i) {
    states[i] = ctx.fields[i].state == State::cut ? classify(ctx.fields[i], B) : ctx.fields[i].state;
    if (states[i] == State::cut) {
      any_cut = true;
      p2_cut = p2_cut || ctx.fields[i].degree > 1;
    }
  }
  if (!any_cut) {
    std::vector<char> active(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
      active[i] = states[i] == State::above;
    visit(B, active);
    return;
  }
  if (!p2_cut || depth == 0) {
    emit_clipped(ctx, B, states, visit);
    return;
  }
  const Eigen::RowVector3d a = B.row(0), b = B.row(1), c = B.row(2);
  const Eigen::RowVector3d ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  Corners child;
  child << a, ab, ca;
  traverse(ctx, child, depth - 1, visit);
  child << ab, b, bc;
  traverse(ctx, child, depth - 1, visit);
  child << ca, bc, c;
  traverse(ctx, child, depth - 1, visit);
  child << ab, bc, ca;
  traverse(ctx, child, depth - 1, visit);
}

const Mesh& common_mesh(std::span<const FieldView> fields) {
  if (fields.empty())
    throw PreconditionError("integration needs at least one field");
  const Mesh* mesh = &fields[0].base->space().mesh();
  for (const FieldView& f : fields) {
    if (&f.base->space().mesh() != mesh)
      throw PreconditionError("all integrated fields must live on the same mesh");
    if (f.component < 0 || f.component >= f.base->components())
      throw TypeError("field component out of range");
  }
  return *mesh;
}

TriangleContext make_context(std::span<const FieldView> fields, const Mesh& mesh, Index t) {
  TriangleContext ctx{t, triangle_geometry(mesh, t), {}};
  ctx.fields.reserve(fields.size());
  for (const FieldView& f : fields) {
    FieldData d{&f, f.base->space().degree(), f.base->local(t, f.component), State::below};
    d.state = classify(d, Corners::Identity());
    ctx.fields.push_back(std::move(d));
  }
  return ctx;
}

bool needs_subdivision(const TriangleContext& ctx) {
  for (const FieldData& f : ctx.fields)
    if (f.state == State::cut && f.degree > 1)
      return true;
  return false;
}

void sample_piece(const TriangleContext& ctx, const Eigen::Vector3d& l, const std::vector<char>& active,
                  std::vector<PointSample>& out) {
  out.resize(ctx.fields.size());
  for (std::size_t i = 0; i < ctx.fields.size(); ++i) {
    const FieldData& f = ctx.fields[i];
    // P1 pieces are exact; for P2 the linearized pieces only place the
    // quadrature points and the truncation is applied pointwise
    const bool truncate = f.degree == 1 ? active[i] != 0 : value_at(f, l) >= f.view->level;
    if (truncate) {
      out[i].value = f.view->level;
      out[i].gradient.setZero();
    } else {
      out[i].value = value_at(f, l);
      out[i].gradient =
          (f.coeffs.transpose() * shape_barycentric_derivatives(f.degree, l) * ctx.geo.grad_barycentric)
              .transpose();
    }
  }
}

// Quadrature over one piece.
double integrate_piece(const TriangleContext& ctx, const Corners& P, const std::vector<char>& active,
                       const QuadratureRule& rule, const PointIntegrand& integrand,
                       std::vector<PointSample>& samples) {
  const double ref_area = 0.5 * std::abs((P(1, 1) - P(0, 1)) * (P(2, 2) - P(0, 2)) -
                                         (P(1, 2) - P(0, 2)) * (P(2, 1) - P(0, 1)));
  const double scale = 2.0 * (2.0 * ctx.geo.area * ref_area);
  if (scale == 0.0)
    return 0.0;
  double sum = 0.0;
  for (Index q = 0; q < rule.size(); ++q) {
    const Eigen::Vector3d l = P.transpose() * rule.points.row(q).transpose();
    sample_piece(ctx, l, active, samples);
    sum += rule.weights(q) * integrand(ctx.geo.point(l), samples);
  }
  return scale * sum;
}

void check_options(const IntegrationOptions& options) {
  if (options.subdivision_depth < 2 || options.subdivision_depth > 10)
    throw ConfigError("subdivision depth must lie in [2, 10]");
}

} // namespace

PointSample sample(const FieldView& view, Index t, const Eigen::Vector3d& barycentric) {
  const FEFunction& f = *view.base;
  const int degree = f.space().degree();
  const Eigen::VectorXd c = f.local(t, view.component);
  PointSample s;
  s.value = c.dot(shape_values(degree, barycentric));
  if (s.value > view.level) {
    s.value = view.level;
    return s;
  }
  const TriangleGeometry geo = triangle_geometry(f.space().mesh(), t);
  s.gradient = (c.transpose() * shape_barycentric_derivatives(degree, barycentric) * geo.grad_barycentric)
                   .transpose();
  return s;
}

Integral integrate(std::span<const FieldView> fields, const PointIntegrand& integrand,
                   const IntegrationOptions& options) {
  check_options(options);
  const Mesh& mesh = common_mesh(fields);
  const QuadratureRule& rule = quadrature(options.quadrature_degree);
  Integral result;
  std::vector<PointSample> samples;
  for (Index t = 0; t < mesh.triangle_count(); ++t) {
    const TriangleContext ctx = make_context(fields, mesh, t);
    double fine = 0.0;
    traverse(ctx, Corners::Identity(), options.subdivision_depth,
             [&](const Corners& P, const std::vector<char>& active) {
               fine += integrate_piece(ctx, P, active, rule, integrand, samples);
             });
    if (needs_subdivision(ctx)) {
      double coarse = 0.0;
      traverse(ctx, Corners::Identity(), options.subdivision_depth - 1,
               [&](const Corners& P, const std::vector<char>& active) {
                 coarse += integrate_piece(ctx, P, active, rule, integrand, samples);
               });
      result.error_estimate += std::abs(fine - coarse);
    }
    result.value += fine;
  }
  return result;
}

void for_each_sample_point(std::span<const FieldView> fields,
                           const std::function<void(const Eigen::Vector2d&, std::span<const PointSample>)>& visit,
                           const IntegrationOptions& options) {
  check_options(options);
  const Mesh& mesh = common_mesh(fields);
  const QuadratureRule& rule = quadrature(options.quadrature_degree);
  std::vector<PointSample> samples;
  for (Index t = 0; t < mesh.triangle_count(); ++t) {
    const TriangleContext ctx = make_context(fields, mesh, t);
    traverse(ctx, Corners::Identity(), options.subdivision_depth,
             [&](const Corners& P, const std::vector<char>& active) {
               for (Index q = 0; q < rule.size(); ++q) {
                 const Eigen::Vector3d l = P.transpose() * rule.points.row(q).transpose();
                 sample_piece(ctx, l, active, samples);
                 visit(ctx.geo.point(l), samples);
               }
             });
  }
}

double integrate_function(const Mesh& mesh, const ScalarFunction& g, int degree) {
  const QuadratureRule& rule = quadrature(degree);
  double sum = 0.0;
  for (Index t = 0; t < mesh.triangle_count(); ++t) {
    const TriangleGeometry geo = triangle_geometry(mesh, t);
    double local = 0.0;
    for (Index q = 0; q < rule.size(); ++q)
      local += rule.weights(q) * g(geo.point(rule.points.row(q).transpose()));
    sum += 2.0 * geo.area * local;
  }
  return sum;
}

} // namespace dmpcut
