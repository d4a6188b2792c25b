#pragma once

#include "dmpcut/cutoff.hpp"
#include "dmpcut/fespace.hpp"
#include "dmpcut/integrate.hpp"

#include <memory>
#include <vector>

namespace dmpcut {

/// -div(|grad u|^{p-2} grad u) = f <= 0, u = g on the boundary.
/// epsilon regularizes the solver weights only.
struct PLaplaceSpec {
  double p = 2.0;
  ScalarFunction f = [](const Eigen::Vector2d&) { return 0.0; };
  ScalarFunction g = [](const Eigen::Vector2d&) { return 0.0; };
  double epsilon = 1e-7;
};

/// Throws ConfigError unless p lies in [1.2, 8] and epsilon >= 0.
void validate(const PLaplaceSpec& spec);

/// int (1/p) |grad v|^p - f v (unregularized); cut fields are integrated
/// piecewise.
Integral p_energy(const FieldView& v, const PLaplaceSpec& spec, const IntegrationOptions& options = {});

/// The regularized energy int (1/p)(eps^2 + |grad v|^2)^{p/2} - f v that the
/// solver minimizes.
double regularized_p_energy(const FEFunction& v, const PLaplaceSpec& spec);

/// Derivative of the regularized energy against every free-dof basis function.
Eigen::VectorXd p_energy_first_variation(const FEFunction& v, const PLaplaceSpec& spec);

struct PLaplaceResult {
  FEFunction solution;
  std::vector<double> energies; // regularized energy of each accepted iterate
  int iterations = 0;
  double residual = 0.0; // max |first variation| at the solution
};

/// Kacanov fixed point: w_k = (eps^2 + |grad v_k|^2)^{(p-2)/2}, solve the
/// weighted Laplacian, then a line search toward that solution (root of the
/// directional derivative) so the regularized energy never increases. Stops once the relative energy decrease is below tol
/// and the first variation is below tol * (1 + |J|). Throws ConvergenceError
/// after 200 iterations.
PLaplaceResult solve_plaplace(std::shared_ptr<const FESpace> space, const PLaplaceSpec& spec, double tol);

enum class QuasiNormForm {
  gradient, // int (|grad u| + |grad v|)^{p-2} |grad u - grad v|^2
  literal   // int (|u| + |v|)^{p-2} |u - v|^2
};

double quasi_norm_sq(const FieldView& u_ref, const FieldView& v, double p,
                     QuasiNormForm form = QuasiNormForm::gradient, const IntegrationOptions& options = {});

struct PLaplaceCompareReport {
  double p = 2.0;
  double level = 0.0;
  double energy_U = 0.0;
  double energy_Ustar = 0.0;
  double energy_reference = 0.0;
  double gap_U = 0.0;     // J(U) - J(u_ref)
  double gap_Ustar = 0.0; // J(U*) - J(u_ref)
  double quasi_norm_U = 0.0;
  double quasi_norm_Ustar = 0.0;
  double quadrature_error = 0.0;
  int iterations = 0;
  bool energy_ordered = false; // J(U*) <= J(U) + 1e-9 (1 + |J(U)|)
};

/// Solves on `space`, truncates with the plain boundary supremum, and
/// compares both fields against a P2 solve on the mesh refined
/// `reference_levels` times.
PLaplaceCompareReport plap_cutoff_compare(std::shared_ptr<const FESpace> space, const PLaplaceSpec& spec,
                                          double tol, int reference_levels = 2);

} // namespace dmpcut
