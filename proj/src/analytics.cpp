#include "dmpcut/analytics.hpp"
#include "dmpcut/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace dmpcut {

namespace {

void check_signs(const Eigen::Vector2d& x, double c, double f) {
  if (c < 0.0 || f > 0.0) {
    std::ostringstream msg;
    msg << (c < 0.0 ? "reaction coefficient c = " : "source f = ") << (c < 0.0 ? c : f) << " at (" << x.x()
        << ", " << x.y() << ") violates " << (c < 0.0 ? "c >= 0" : "f <= 0");
    throw SignConditionError(msg.str());
  }
}

const Mesh& mesh_of(const FieldView& v) { return v.base->space().mesh(); }

double max_over_samples(const FEFunction& U, double level) {
  double top = std::min(U.coefficients().col(0).maxCoeff(), level);
  if (U.space().degree() == 1)
    return top; // a P1 field takes its maximum at a vertex
  const Mesh& mesh = U.space().mesh();
  const PointLocator locator(mesh);
  for (const Eigen::Vector2d& x : sample_grid(mesh, kViolationGrid)) {
    const auto loc = locator.locate(x);
    if (!loc)
      continue;
    top = std::max(top, std::min(eval(U, loc->triangle, loc->barycentric)(0), level));
  }
  return top;
}

// off-dof samples carry a few ulp of evaluation error
double excess(double sampled_max, double level, const FEFunction& U) {
  const double d = sampled_max - level;
  const double floor = 64 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, U.coefficients().cwiseAbs().maxCoeff());
  return d > floor ? d : 0.0;
}

} // namespace

Integral energy(const FieldView& v, const ProblemSpec& spec, const IntegrationOptions& options) {
  return integrate(
      std::span<const FieldView>(&v, 1),
      [&spec](const Eigen::Vector2d& x, std::span<const PointSample> s) {
        const double c = spec.c(x), f = spec.f(x);
        check_signs(x, c, f);
        return 0.5 * (s[0].gradient.squaredNorm() + c * s[0].value * s[0].value) - f * s[0].value;
      },
      options);
}

Integral energy_norm_sq(const FieldView& a, const FieldView& b, const ScalarFunction& c,
                        const IntegrationOptions& options) {
  if (&mesh_of(a) != &mesh_of(b))
    throw PreconditionError("energy norm of fields on different meshes");
  const FieldView views[2] = {a, b};
  return integrate(
      views,
      [&c](const Eigen::Vector2d& x, std::span<const PointSample> s) {
        const double d = s[0].value - s[1].value;
        return (s[0].gradient - s[1].gradient).squaredNorm() + c(x) * d * d;
      },
      options);
}

Integral l2_norm_sq(const FieldView& a, const FieldView& b, const IntegrationOptions& options) {
  if (&mesh_of(a) != &mesh_of(b))
    throw PreconditionError("L2 norm of fields on different meshes");
  const FieldView views[2] = {a, b};
  return integrate(
      views,
      [](const Eigen::Vector2d&, std::span<const PointSample> s) {
        const double d = s[0].value - s[1].value;
        return d * d;
      },
      options);
}

double energy_gap_identity_check(const FEFunction& u_h, const FEFunction& v, const ProblemSpec& spec) {
  if (u_h.space_ptr() != v.space_ptr() && &u_h.space().mesh() != &v.space().mesh())
    throw PreconditionError("identity check needs both fields on one mesh");
  if (u_h.space().degree() != v.space().degree())
    throw PreconditionError("identity check needs both fields in one space");
  for (Index d : u_h.space().boundary_dofs()) {
    const double a = u_h.coefficients()(d, 0), b = v.coefficients()(d, 0);
    if (std::abs(a - b) > 1e-14 * (1.0 + std::abs(a))) {
      std::ostringstream msg;
      msg << "boundary dof " << d << " differs: " << a << " vs " << b;
      throw PreconditionError(msg.str());
    }
  }
  const double jv = energy(FieldView(v), spec).value;
  const double ju = energy(FieldView(u_h), spec).value;
  const double gap = energy_norm_sq(FieldView(v), FieldView(u_h), spec.c).value;
  return std::abs((jv - ju) - 0.5 * gap);
}

double dmp_violation(const FEFunction& U, CutoffMode mode) {
  if (U.components() != 1)
    throw TypeError("dmp_violation needs a scalar field");
  const double level = sup_boundary(U, mode);
  return excess(max_over_samples(U, std::numeric_limits<double>::infinity()), level, U);
}

double dmp_violation(const CutoffField& Ustar) {
  const double level = sup_boundary(Ustar.base(), Ustar.mode());
  return excess(max_over_samples(Ustar.base(), Ustar.level()), level, Ustar.base());
}

FEFunction ReferenceSolution::prolong(const FEFunction& U) const {
  if (U.space().mesh().vertex_count() != coarse->vertex_count() ||
      U.space().mesh().triangle_count() != coarse->triangle_count())
    throw PreconditionError("field does not live on the reference's coarse mesh");
  return dmpcut::prolong(U, refinement, make_space(fine, U.space().degree()));
}

ReferenceSolution reference_on(const ReferenceSolution& ref, std::shared_ptr<const Mesh> coarser, int levels) {
  Refinement refinement = refine(*coarser, levels);
  if (refinement.fine.triangles != ref.fine->triangles ||
      (refinement.fine.vertices - ref.fine->vertices).cwiseAbs().maxCoeff() > 1e-12)
    throw PreconditionError("mesh does not refine to the reference mesh");
  ReferenceSolution out = ref;
  out.coarse = std::move(coarser);
  out.refinement = std::move(refinement);
  out.level = levels;
  return out;
}

ReferenceSolution reference_solution(std::shared_ptr<const Mesh> coarse, const ProblemSpec& spec, int level) {
  if (level < 0 || level > 7)
    throw ConfigError("reference level must lie in [0, 7]");
  // P2 dofs ~ 4^level (V + E) with E ~ 3V
  const double dofs = std::pow(4.0, level) * 4.0 * static_cast<double>(coarse->vertex_count());
  if (dofs > 2e6)
    throw ConfigError("reference solve exceeds the 2e6 dof resource cap");

  Refinement refinement = refine(*coarse, level);
  auto fine = std::make_shared<const Mesh>(refinement.fine);
  auto space = make_space(fine, 2);
  FEFunction solution = direct_solve(assemble(space, spec));
  ReferenceSolution ref{coarse, fine, std::move(refinement), std::move(solution), level, 0.0, 0.0};
  if (level == 0)
    return ref;

  const Refinement previous = refine(*coarse, level - 1);
  auto previous_mesh = std::make_shared<const Mesh>(previous.fine);
  const FEFunction u_prev = direct_solve(assemble(make_space(previous_mesh, 2), spec));
  const Refinement step = refine(*previous_mesh, 1);
  if (step.fine.triangles != fine->triangles)
    throw Error("refinement is not nested level by level");
  const FEFunction u_prev_fine = dmpcut::prolong(u_prev, step, space);
  ref.error_estimate = std::sqrt(energy_norm_sq(FieldView(ref.solution), FieldView(u_prev_fine), spec.c).value);
  ref.l2_error_estimate = std::sqrt(l2_norm_sq(FieldView(ref.solution), FieldView(u_prev_fine)).value);
  return ref;
}

std::string format_number(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void EnergyReport::write_key_values(std::ostream& out, const std::string& prefix) const {
  const std::pair<const char*, double> rows[] = {{"J_U", J_U},
                                                 {"J_Ustar", J_Ustar},
                                                 {"energy_norm_err_U", energy_norm_err_U},
                                                 {"energy_norm_err_Ustar", energy_norm_err_Ustar},
                                                 {"l2_err_U", l2_err_U},
                                                 {"l2_err_Ustar", l2_err_Ustar},
                                                 {"dmp_violation", dmp_violation},
                                                 {"quadrature_error_estimate", quadrature_error_estimate},
                                                 {"level", level},
                                                 {"reference_error_estimate", reference_error_estimate},
                                                 {"reference_l2_error_estimate", reference_l2_error_estimate}};
  for (const auto& [key, value] : rows)
    out << prefix << key << '=' << format_number(value) << '\n';
  out << prefix << "has_reference=" << (has_reference ? 1 : 0) << '\n';
}

std::string EnergyReport::csv_header() {
  return "J_U,J_Ustar,energy_norm_err_U,energy_norm_err_Ustar,l2_err_U,l2_err_Ustar,dmp_violation,"
         "quadrature_error_estimate,level,reference_error_estimate,reference_l2_error_estimate,has_reference";
}

void EnergyReport::write_csv_row(std::ostream& out) const {
  for (double v : {J_U, J_Ustar, energy_norm_err_U, energy_norm_err_Ustar, l2_err_U, l2_err_Ustar, dmp_violation,
                   quadrature_error_estimate, level, reference_error_estimate, reference_l2_error_estimate})
    out << format_number(v) << ',';
  out << (has_reference ? 1 : 0);
}

EnergyReport certify(const FEFunction& U, const ProblemSpec& spec, CutoffMode mode,
                     const ReferenceSolution* reference, const IntegrationOptions& options) {
  EnergyReport r;
  const CutoffField Ustar = make_cutoff(U, mode);
  r.level = Ustar.level();
  r.dmp_violation = dmp_violation(U, mode);
  const Integral jU = energy(FieldView(U), spec, options);
  const Integral jUs = energy(Ustar, spec, options);
  r.J_U = jU.value;
  r.J_Ustar = jUs.value;
  double quad_sq = jU.error_estimate + jUs.error_estimate;
  if (reference) {
    r.has_reference = true;
    r.reference_error_estimate = reference->error_estimate;
    r.reference_l2_error_estimate = reference->l2_error_estimate;
    const FEFunction U_fine = reference->prolong(U);
    const FieldView ref(reference->solution);
    const FieldView cut(U_fine, 0, Ustar.level());
    const Integral eU = energy_norm_sq(ref, FieldView(U_fine), spec.c, options);
    const Integral eUs = energy_norm_sq(ref, cut, spec.c, options);
    const Integral lU = l2_norm_sq(ref, FieldView(U_fine), options);
    const Integral lUs = l2_norm_sq(ref, cut, options);
    r.energy_norm_err_U = std::sqrt(eU.value);
    r.energy_norm_err_Ustar = std::sqrt(eUs.value);
    r.l2_err_U = std::sqrt(lU.value);
    r.l2_err_Ustar = std::sqrt(lUs.value);
    // error of a square root from the error of its argument
    quad_sq += std::sqrt(eU.error_estimate) + std::sqrt(eUs.error_estimate) + std::sqrt(lU.error_estimate) +
               std::sqrt(lUs.error_estimate);
  }
  r.quadrature_error_estimate = quad_sq;
  return r;
}

std::vector<Inequality> report_inequalities(const EnergyReport& r) {
  std::vector<Inequality> out;
  out.push_back({"J(U*) <= J(U)", r.J_Ustar, r.J_U + 1e-10 * (1.0 + std::abs(r.J_U))});
  if (r.has_reference) {
    const double slack = 1e-8 + 2.0 * (r.reference_error_estimate + r.quadrature_error_estimate);
    const double l2_slack = 1e-8 + 2.0 * (r.reference_l2_error_estimate + r.quadrature_error_estimate);
    out.push_back({"|||u - U*||| <= |||u - U|||", r.energy_norm_err_Ustar, r.energy_norm_err_U + slack});
    out.push_back({"||u - U*|| <= ||u - U||", r.l2_err_Ustar, r.l2_err_U + l2_slack});
  }
  return out;
}

} // namespace dmpcut
