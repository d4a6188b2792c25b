#pragma once

#include "dmpcut/fespace.hpp"

#include <Eigen/SparseCore>

#include <memory>
#include <vector>

namespace dmpcut {

/// Data of  -div grad u + c u = f  with u = g on the boundary.
/// F(v) = int f v; the sign conditions c >= 0 and f <= 0 are checked
/// wherever the functions are sampled.
struct ProblemSpec {
  ScalarFunction c = [](const Eigen::Vector2d&) { return 0.0; };
  ScalarFunction f = [](const Eigen::Vector2d&) { return 0.0; };
  ScalarFunction g = [](const Eigen::Vector2d&) { return 0.0; };
  double p = 2.0;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

struct SparseSystem {
  std::shared_ptr<const FESpace> space;
  SparseMatrix matrix;      // free x free, after symmetric elimination
  Eigen::VectorXd rhs;      // load minus boundary lift
  SparseMatrix full_matrix; // all dofs, before elimination
  Eigen::VectorXd full_load;
  std::vector<Index> free_dofs;
  std::vector<Index> constrained_dofs;
  Eigen::VectorXd constrained_values;
};

/// 2k + 2 for elements of degree k.
int assembly_quadrature_degree(int element_degree);

/// Dirichlet values g(dof_coords) on the boundary dofs of `space`.
Eigen::VectorXd boundary_values(const FESpace& space, const ScalarFunction& g);

SparseSystem assemble(std::shared_ptr<const FESpace> space, const ProblemSpec& spec);

/// Weighted Laplacian  int w grad u . grad v  with the weight given per
/// triangle and quadrature point of `quadrature(assembly_quadrature_degree)`;
/// used by the p-Laplace fixed point.
SparseSystem assemble_weighted(std::shared_ptr<const FESpace> space, const Eigen::MatrixXd& weights,
                               const ScalarFunction& f, const Eigen::VectorXd& dirichlet);

struct SolveInfo {
  Index iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned CG on the free dofs; boundary dofs carry the
/// prescribed values exactly. Throws SolverError when the relative residual
/// does not reach `tol` within 20 * dof_count iterations.
FEFunction solve(const SparseSystem& system, double tol, SolveInfo* info = nullptr);

/// Dense Cholesky solve of the same system; refuses more than 500 dofs.
FEFunction dense_oracle(std::shared_ptr<const FESpace> space, const ProblemSpec& spec);

/// Sparse direct (LDL^T) solve, for reference computations.
FEFunction direct_solve(const SparseSystem& system);

/// Scatter free-dof values and the Dirichlet values into one field.
FEFunction assemble_field(const SparseSystem& system, const Eigen::VectorXd& free_values);

/// Bilinear form a(u, v) = int grad u . grad v + c u v, evaluated through the
/// full (pre-elimination) matrix.
double bilinear_form(const SparseSystem& system, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Componentwise discrete harmonic extension of vector boundary data.
FEFunction solve_harmonic_vector(std::shared_ptr<const FESpace> space, const VectorFunction& g,
                                 int components, double tol);

} // namespace dmpcut
