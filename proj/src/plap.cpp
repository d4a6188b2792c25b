#include "dmpcut/plap.hpp"
#include "dmpcut/assembly.hpp"
#include "dmpcut/errors.hpp"
#include "dmpcut/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>

namespace dmpcut {

namespace {

// Gradient of v at every (triangle, quadrature point) of the assembly rule,
// passed to fn(t, q, x, value, gradient, weight).
template <typename Fn>
void visit_quadrature(const FEFunction& v, Fn&& fn) {
  const FESpace& space = v.space();
  const Mesh& mesh = space.mesh();
  const QuadratureRule& rule = quadrature(assembly_quadrature_degree(space.degree()));
  for (Index t = 0; t < mesh.triangle_count(); ++t) {
    const TriangleGeometry geo = triangle_geometry(mesh, t);
    const Eigen::VectorXd c = v.local(t);
    for (Index q = 0; q < rule.size(); ++q) {
      const Eigen::Vector3d l = rule.points.row(q).transpose();
      const double value = c.dot(shape_values(space.degree(), l));
      const Eigen::Vector2d grad =
          (c.transpose() * shape_barycentric_derivatives(space.degree(), l) * geo.grad_barycentric).transpose();
      fn(t, q, geo.point(l), value, grad, rule.weights(q) * 2.0 * geo.area);
    }
  }
}

Eigen::MatrixXd kacanov_weights(const FEFunction& v, const PLaplaceSpec& spec) {
  const QuadratureRule& rule = quadrature(assembly_quadrature_degree(v.space().degree()));
  Eigen::MatrixXd w(v.space().mesh().triangle_count(), rule.size());
  const double eps2 = spec.epsilon * spec.epsilon;
  visit_quadrature(v, [&](Index t, Index q, const Eigen::Vector2d&, double, const Eigen::Vector2d& g, double) {
    w(t, q) = std::pow(eps2 + g.squaredNorm(), 0.5 * (spec.p - 2.0));
  });
  return w;
}

FEFunction axpy(const FEFunction& a, double theta, const FEFunction& b) {
  // a + theta (b - a)
  return FEFunction(a.space_ptr(), a.coefficients() + theta * (b.coefficients() - a.coefficients()));
}

// J(b) - J(a) for the regularized energy, accumulated per quadrature point
// so that tiny differences between nearby iterates are not lost to rounding.
double regularized_energy_change(const FEFunction& a, const FEFunction& b, const PLaplaceSpec& spec) {
  const FEFunction diff(a.space_ptr(), b.coefficients() - a.coefficients());
  const double eps2 = spec.epsilon * spec.epsilon;
  std::vector<Eigen::Vector2d> grad_a;
  visit_quadrature(a, [&](Index, Index, const Eigen::Vector2d&, double, const Eigen::Vector2d& g, double) {
    grad_a.push_back(g);
  });
  double sum = 0.0;
  std::size_t k = 0;
  visit_quadrature(diff, [&](Index, Index, const Eigen::Vector2d& x, double dv, const Eigen::Vector2d& dg, double w) {
    const Eigen::Vector2d& ga = grad_a[k++];
    const double base = eps2 + ga.squaredNorm();
    const double delta = dg.dot(2.0 * ga + dg); // |ga + dg|^2 - |ga|^2
    double term;
    if (base > 0.0)
      term = std::pow(base, 0.5 * spec.p) * std::expm1(0.5 * spec.p * std::log1p(delta / base)) / spec.p;
    else
      term = std::pow(delta, 0.5 * spec.p) / spec.p;
    sum += w * (term - spec.f(x) * dv);
  });
  return sum;
}

} // namespace

void validate(const PLaplaceSpec& spec) {
  if (!(spec.p >= 1.2 && spec.p <= 8.0))
    throw ConfigError("p-Laplace exponent must lie in [1.2, 8]");
  if (!(spec.epsilon >= 0.0))
    throw ConfigError("regularization epsilon must be >= 0");
}

Integral p_energy(const FieldView& v, const PLaplaceSpec& spec, const IntegrationOptions& options) {
  validate(spec);
  const double p = spec.p;
  const auto& f = spec.f;
  return integrate(
      std::span<const FieldView>(&v, 1),
      [p, &f](const Eigen::Vector2d& x, std::span<const PointSample> s) {
        return std::pow(s[0].gradient.norm(), p) / p - f(x) * s[0].value;
      },
      options);
}

double regularized_p_energy(const FEFunction& v, const PLaplaceSpec& spec) {
  const double eps2 = spec.epsilon * spec.epsilon;
  double sum = 0.0;
  visit_quadrature(v, [&](Index, Index, const Eigen::Vector2d& x, double value, const Eigen::Vector2d& g, double w) {
    sum += w * (std::pow(eps2 + g.squaredNorm(), 0.5 * spec.p) / spec.p - spec.f(x) * value);
  });
  return sum;
}

Eigen::VectorXd p_energy_first_variation(const FEFunction& v, const PLaplaceSpec& spec) {
  const auto space = v.space_ptr();
  const SparseSystem sys =
      assemble_weighted(space, kacanov_weights(v, spec), spec.f, boundary_values(*space, spec.g));
  const Eigen::VectorXd r = sys.full_matrix * v.coefficients().col(0) - sys.full_load;
  Eigen::VectorXd free(static_cast<Index>(sys.free_dofs.size()));
  for (std::size_t i = 0; i < sys.free_dofs.size(); ++i)
    free(static_cast<Index>(i)) = r(sys.free_dofs[i]);
  return free;
}

PLaplaceResult solve_plaplace(std::shared_ptr<const FESpace> space, const PLaplaceSpec& spec, double tol) {
  validate(spec);
  if (!(tol > 0.0 && tol <= 1e-4))
    throw ConfigError("solver tolerance must lie in (0, 1e-4]");
  const Eigen::VectorXd dirichlet = boundary_values(*space, spec.g);
  const std::vector<Index> free_dofs = space->free_dofs();
  auto free_part = [&](const FEFunction& w) {
    Eigen::VectorXd out(static_cast<Index>(free_dofs.size()));
    for (std::size_t i = 0; i < free_dofs.size(); ++i)
      out(static_cast<Index>(i)) = w.coefficients()(free_dofs[i], 0);
    return out;
  };

  // start from the Laplace solution with the same data
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(
      space->mesh().triangle_count(), quadrature(assembly_quadrature_degree(space->degree())).size());
  FEFunction v = direct_solve(assemble_weighted(space, ones, spec.f, dirichlet));
  double energy = regularized_p_energy(v, spec);
  Eigen::VectorXd gradient = p_energy_first_variation(v, spec);

  PLaplaceResult result{v, {energy}, 0, gradient.lpNorm<Eigen::Infinity>()};
  auto converged = [&](double slack) { return result.residual <= slack * tol * (1.0 + std::abs(energy)); };
  constexpr int kMaxIterations = 200;
  for (int it = 1; it <= kMaxIterations; ++it) {
    const FEFunction target = direct_solve(assemble_weighted(space, kacanov_weights(v, spec), spec.f, dirichlet));
    const Eigen::VectorXd direction = free_part(target) - free_part(v);
    // phi(theta) = J(v + theta d) is convex; find theta with phi'(theta) ~ 0
    auto slope = [&](double theta) { return p_energy_first_variation(axpy(v, theta, target), spec).dot(direction); };
    const double s0 = gradient.dot(direction);
    if (!(s0 < 0.0)) {
      if (converged(10.0))
        return result;
      throw ConvergenceError("Kacanov direction is not a descent direction; first variation " +
                             std::to_string(result.residual));
    }
    double lo = 0.0, s_lo = s0, hi = 1.0, s_hi = slope(1.0);
    while (s_hi < 0.0 && hi < 64.0) {
      lo = hi;
      s_lo = s_hi;
      hi *= 2.0;
      s_hi = slope(hi);
    }
    double theta = hi;
    if (s_hi > 0.0) {
      // Illinois false position on the bracket [lo, hi]
      int side = 0;
      for (int k = 0; k < 60; ++k) {
        theta = (lo * s_hi - hi * s_lo) / (s_hi - s_lo);
        const double s = slope(theta);
        if (std::abs(s) <= 1e-3 * std::abs(s0) || hi - lo <= 1e-12 * hi)
          break;
        if (s < 0.0) {
          lo = theta;
          s_lo = s;
          if (side == -1)
            s_hi *= 0.5;
          side = -1;
        } else {
          hi = theta;
          s_hi = s;
          if (side == 1)
            s_lo *= 0.5;
          side = 1;
        }
      }
    }
    const FEFunction next = axpy(v, theta, target);
    const double change = regularized_energy_change(v, next, spec);
    if (!(change <= 0.0)) {
      if (converged(10.0))
        return result;
      std::ostringstream msg;
      msg << "Kacanov step stalled at iteration " << it << " with first variation " << result.residual;
      throw ConvergenceError(msg.str());
    }
    const double next_energy = energy + change;
    const double decrease = -change / std::max(1.0, std::abs(next_energy));
    v = next;
    energy = next_energy;
    gradient = p_energy_first_variation(v, spec);
    result.solution = v;
    result.energies.push_back(energy);
    result.iterations = it;
    result.residual = gradient.lpNorm<Eigen::Infinity>();
    if (decrease < tol && converged(1.0))
      return result;
  }
  std::ostringstream msg;
  msg.precision(6);
  const auto& e = result.energies;
  msg << "Kacanov iteration did not converge in " << kMaxIterations << " iterations; last energy decrease "
      << (e.size() > 1 ? e[e.size() - 2] - e.back() : 0.0);
  throw ConvergenceError(msg.str());
}

double quasi_norm_sq(const FieldView& u_ref, const FieldView& v, double p, QuasiNormForm form,
                     const IntegrationOptions& options) {
  const FieldView views[2] = {u_ref, v};
  return integrate(
             views,
             [p, form](const Eigen::Vector2d&, std::span<const PointSample> s) {
               double weight_base, diff2;
               if (form == QuasiNormForm::gradient) {
                 weight_base = s[0].gradient.norm() + s[1].gradient.norm();
                 diff2 = (s[0].gradient - s[1].gradient).squaredNorm();
               } else {
                 weight_base = std::abs(s[0].value) + std::abs(s[1].value);
                 diff2 = (s[0].value - s[1].value) * (s[0].value - s[1].value);
               }
               if (diff2 == 0.0)
                 return 0.0;
               return std::pow(weight_base, p - 2.0) * diff2;
             },
             options)
      .value;
}

PLaplaceCompareReport plap_cutoff_compare(std::shared_ptr<const FESpace> space, const PLaplaceSpec& spec,
                                          double tol, int reference_levels) {
  PLaplaceCompareReport report;
  report.p = spec.p;
  const PLaplaceResult solved = solve_plaplace(space, spec, tol);
  report.iterations = solved.iterations;
  const FEFunction& U = solved.solution;
  const CutoffField Ustar = make_cutoff(U, CutoffMode::plain_sup);
  report.level = Ustar.level();

  const Integral jU = p_energy(FieldView(U), spec);
  const Integral jUs = p_energy(Ustar, spec);
  report.energy_U = jU.value;
  report.energy_Ustar = jUs.value;
  report.quadrature_error = jU.error_estimate + jUs.error_estimate;
  report.energy_ordered = jUs.value <= jU.value + 1e-9 * (1.0 + std::abs(jU.value));

  const Refinement refinement = refine(space->mesh(), reference_levels);
  auto fine_mesh = std::make_shared<const Mesh>(refinement.fine);
  const PLaplaceResult reference = solve_plaplace(make_space(fine_mesh, 2), spec, tol);
  report.energy_reference = p_energy(FieldView(reference.solution), spec).value;
  report.gap_U = report.energy_U - report.energy_reference;
  report.gap_Ustar = report.energy_Ustar - report.energy_reference;

  const FEFunction U_fine = prolong(U, refinement, make_space(fine_mesh, space->degree()));
  const FieldView ref_view(reference.solution);
  report.quasi_norm_U = quasi_norm_sq(ref_view, FieldView(U_fine), spec.p);
  report.quasi_norm_Ustar = quasi_norm_sq(ref_view, FieldView(U_fine, 0, Ustar.level()), spec.p);
  return report;
}

} // namespace dmpcut
