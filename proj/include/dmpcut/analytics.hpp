#pragma once

#include "dmpcut/assembly.hpp"
#include "dmpcut/cutoff.hpp"
#include "dmpcut/integrate.hpp"

#include <iosfwd>
#include <memory>
#include <string>

namespace dmpcut {

/// J(v) = 1/2 int |grad v|^2 + c v^2 - int f v. Throws SignConditionError
/// if c < 0 or f > 0 at a quadrature point.
Integral energy(const FieldView& v, const ProblemSpec& spec, const IntegrationOptions& options = {});

/// |||a - b|||^2 = int |grad(a - b)|^2 + c (a - b)^2. Both views must live on
/// the same mesh.
Integral energy_norm_sq(const FieldView& a, const FieldView& b, const ScalarFunction& c,
                        const IntegrationOptions& options = {});

/// ||a - b||^2 in L2.
Integral l2_norm_sq(const FieldView& a, const FieldView& b, const IntegrationOptions& options = {});

/// |(J(v) - J(u_h)) - 1/2 |||v - u_h|||^2|. v must carry the boundary values
/// of u_h (PreconditionError otherwise).
double energy_gap_identity_check(const FEFunction& u_h, const FEFunction& v, const ProblemSpec& spec);

/// Samples used by dmp_violation: every dof plus this many grid points per
/// direction.
inline constexpr int kViolationGrid = 100;

/// max(0, sup U - level) over the dofs and a 100 x 100 grid, with the level
/// from sup_boundary(U, mode). For P1 the grid is skipped since the maximum
/// sits at a vertex. Excesses within 64 ulp of the largest coefficient count
/// as rounding and report 0.
double dmp_violation(const FEFunction& U, CutoffMode mode);

/// Same samples for a truncated field, measured against the level of its base.
double dmp_violation(const CutoffField& Ustar);

/// P2 solve on the coarse mesh refined `level` times, standing in for the
/// exact solution.
struct ReferenceSolution {
  std::shared_ptr<const Mesh> coarse;
  std::shared_ptr<const Mesh> fine;
  Refinement refinement; // coarse -> fine
  FEFunction solution;
  int level = 0;
  /// |||u_L - u_{L-1}||| and ||u_L - u_{L-1}|| (0 when level = 0).
  double error_estimate = 0.0;
  double l2_error_estimate = 0.0;

  /// Exact representation of a field on the coarse mesh in the same-degree
  /// space on the fine mesh.
  FEFunction prolong(const FEFunction& U) const;
};

/// Throws ConfigError for level outside [0, 7] or when the fine P2 space
/// would exceed 2e6 dofs.
ReferenceSolution reference_solution(std::shared_ptr<const Mesh> coarse, const ProblemSpec& spec, int level);

/// The same reference seen from a coarser mesh `coarser` that refines to it in
/// `levels` steps (for comparing fields from several nested meshes).
ReferenceSolution reference_on(const ReferenceSolution& ref, std::shared_ptr<const Mesh> coarser, int levels);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

struct EnergyReport {
  double J_U = 0.0;
  double J_Ustar = 0.0;
  double energy_norm_err_U = 0.0;
  double energy_norm_err_Ustar = 0.0;
  double l2_err_U = 0.0;
  double l2_err_Ustar = 0.0;
  double dmp_violation = 0.0;
  double quadrature_error_estimate = 0.0;
  double level = 0.0;
  double reference_error_estimate = 0.0;
  double reference_l2_error_estimate = 0.0;
  bool has_reference = false;

  /// "key=value" lines in field order.
  void write_key_values(std::ostream& out, const std::string& prefix = "") const;
  /// Column names of write_csv_row, comma separated.
  static std::string csv_header();
  void write_csv_row(std::ostream& out) const;
};

/// Energies, errors against the reference (if given) and the violation of U
/// for U and its cutoff. `reference` must be built on U's mesh.
EnergyReport certify(const FEFunction& U, const ProblemSpec& spec, CutoffMode mode,
                     const ReferenceSolution* reference = nullptr, const IntegrationOptions& options = {});

struct Inequality {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs; }
};

/// The orderings a report must satisfy: J(U*) <= J(U) + 1e-10 (1 + |J(U)|)
/// always; with a reference also the energy and L2 error orderings, each
/// with slack 1e-8 + 2 (reference estimate + quadrature estimate).
std::vector<Inequality> report_inequalities(const EnergyReport& report);

} // namespace dmpcut
