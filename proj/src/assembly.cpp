#include "dmpcut/assembly.hpp"
#include "dmpcut/errors.hpp"
#include "dmpcut/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <sstream>

namespace dmpcut {

namespace {

std::string describe(const Eigen::Vector2d& x) {
  std::ostringstream s;
  s.precision(17);
  s << "(" << x.x() << ", " << x.y() << ")";
  return s.str();
}

// diffusion(t, q) -> weight at quadrature point q of triangle t
template <typename Diffusion>
SparseSystem assemble_core(std::shared_ptr<const FESpace> space, Diffusion&& diffusion,
                           const ScalarFunction* reaction, const ScalarFunction& source,
                           const Eigen::VectorXd& dirichlet) {
  const FESpace& V = *space;
  const Mesh& mesh = V.mesh();
  const int nloc = V.local_size();
  const QuadratureRule& rule = quadrature(assembly_quadrature_degree(V.degree()));

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.triangle_count() * nloc * nloc));
  Eigen::VectorXd load = Eigen::VectorXd::Zero(V.dof_count());

  for (Index t = 0; t < mesh.triangle_count(); ++t) {
    const TriangleGeometry geo = triangle_geometry(mesh, t);
    Eigen::MatrixXd Ke = Eigen::MatrixXd::Zero(nloc, nloc);
    Eigen::VectorXd fe = Eigen::VectorXd::Zero(nloc);
    for (Index q = 0; q < rule.size(); ++q) {
      const Eigen::Vector3d l = rule.points.row(q).transpose();
      const Eigen::Vector2d x = geo.point(l);
      const double w = rule.weights(q) * 2.0 * geo.area;
      const Eigen::VectorXd phi = shape_values(V.degree(), l);
      const Eigen::MatrixX2d dphi = shape_barycentric_derivatives(V.degree(), l) * geo.grad_barycentric;
      Ke.noalias() += (w * diffusion(t, q)) * dphi * dphi.transpose();
      if (reaction) {
        const double c = (*reaction)(x);
        if (!(c >= 0.0))
          throw SignConditionError("reaction coefficient c = " + std::to_string(c) +
                                   " < 0 at " + describe(x));
        Ke.noalias() += (w * c) * phi * phi.transpose();
      }
      const double f = source(x);
      if (!(f <= 0.0))
        throw SignConditionError("source density f = " + std::to_string(f) + " > 0 at " +
                                 describe(x) + " (F(v) <= 0 for v >= 0 is required)");
      fe += (w * f) * phi;
    }
    Ke = 0.5 * (Ke + Ke.transpose()).eval();
    for (int i = 0; i < nloc; ++i) {
      const int gi = V.dof_map()(t, i);
      load(gi) += fe(i);
      for (int j = 0; j < nloc; ++j)
        triplets.emplace_back(gi, V.dof_map()(t, j), Ke(i, j));
    }
  }

  SparseSystem sys;
  sys.space = space;
  sys.full_matrix.resize(V.dof_count(), V.dof_count());
  sys.full_matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.full_load = load;
  sys.free_dofs = V.free_dofs();
  sys.constrained_dofs = V.boundary_dofs();
  sys.constrained_values = dirichlet;

  std::vector<Index> free_index(static_cast<std::size_t>(V.dof_count()), -1);
  for (std::size_t i = 0; i < sys.free_dofs.size(); ++i)
    free_index[static_cast<std::size_t>(sys.free_dofs[i])] = static_cast<Index>(i);
  Eigen::VectorXd g_full = Eigen::VectorXd::Zero(V.dof_count());
  for (std::size_t i = 0; i < sys.constrained_dofs.size(); ++i)
    g_full(sys.constrained_dofs[i]) = dirichlet(static_cast<Index>(i));

  const Index nfree = static_cast<Index>(sys.free_dofs.size());
  sys.rhs.resize(nfree);
  for (Index i = 0; i < nfree; ++i)
    sys.rhs(i) = load(sys.free_dofs[static_cast<std::size_t>(i)]);
  std::vector<Eigen::Triplet<double>> reduced;
  for (Index col = 0; col < sys.full_matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(sys.full_matrix, col); it; ++it) {
      const Index fi = free_index[static_cast<std::size_t>(it.row())];
      const Index fj = free_index[static_cast<std::size_t>(it.col())];
      if (fi < 0)
        continue;
      if (fj >= 0)
        reduced.emplace_back(fi, fj, it.value());
      else
        sys.rhs(fi) -= it.value() * g_full(it.col());
    }
  }
  sys.matrix.resize(nfree, nfree);
  sys.matrix.setFromTriplets(reduced.begin(), reduced.end());
  return sys;
}

} // namespace

int assembly_quadrature_degree(int element_degree) { return 2 * element_degree + 2; }

Eigen::VectorXd boundary_values(const FESpace& space, const ScalarFunction& g) {
  const auto& dofs = space.boundary_dofs();
  Eigen::VectorXd values(static_cast<Index>(dofs.size()));
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    const double v = g(space.dof_coords().row(dofs[i]).transpose());
    if (!std::isfinite(v))
      throw DataError("boundary data is not finite at dof " + std::to_string(dofs[i]));
    values(static_cast<Index>(i)) = v;
  }
  return values;
}

SparseSystem assemble(std::shared_ptr<const FESpace> space, const ProblemSpec& spec) {
  const Eigen::VectorXd dirichlet = boundary_values(*space, spec.g);
  return assemble_core(
      space, [](Index, Index) { return 1.0; }, &spec.c, spec.f, dirichlet);
}

SparseSystem assemble_weighted(std::shared_ptr<const FESpace> space, const Eigen::MatrixXd& weights,
                               const ScalarFunction& f, const Eigen::VectorXd& dirichlet) {
  const QuadratureRule& rule = quadrature(assembly_quadrature_degree(space->degree()));
  if (weights.rows() != space->mesh().triangle_count() || weights.cols() != rule.size())
    throw PreconditionError("weight matrix must be triangles x quadrature points");
  return assemble_core(
      space, [&weights](Index t, Index q) { return weights(t, q); }, nullptr, f, dirichlet);
}

FEFunction assemble_field(const SparseSystem& system, const Eigen::VectorXd& free_values) {
  Eigen::VectorXd u(system.space->dof_count());
  for (std::size_t i = 0; i < system.free_dofs.size(); ++i)
    u(system.free_dofs[i]) = free_values(static_cast<Index>(i));
  for (std::size_t i = 0; i < system.constrained_dofs.size(); ++i)
    u(system.constrained_dofs[i]) = system.constrained_values(static_cast<Index>(i));
  return FEFunction(system.space, Eigen::MatrixXd(u));
}

FEFunction solve(const SparseSystem& system, double tol, SolveInfo* info) {
  if (!(tol > 0.0 && tol <= 1e-4))
    throw ConfigError("solver tolerance must lie in (0, 1e-4]");
  if (system.matrix.rows() == 0)
    return assemble_field(system, Eigen::VectorXd());

  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(20 * system.space->dof_count());
  cg.compute(system.matrix);
  const Eigen::VectorXd x = cg.solve(system.rhs);
  if (cg.info() != Eigen::Success)
    throw SolverError("conjugate gradients did not converge: relative residual " +
                      std::to_string(cg.error()) + " after " + std::to_string(cg.iterations()) +
                      " iterations");
  if (info) {
    info->iterations = cg.iterations();
    info->relative_residual = cg.error();
  }
  return assemble_field(system, x);
}

FEFunction dense_oracle(std::shared_ptr<const FESpace> space, const ProblemSpec& spec) {
  if (space->dof_count() > 500)
    throw PreconditionError("dense oracle refuses systems with more than 500 dofs");
  const SparseSystem system = assemble(space, spec);
  if (system.matrix.rows() == 0)
    return assemble_field(system, Eigen::VectorXd());
  const Eigen::MatrixXd A(system.matrix);
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw SolverError("dense Cholesky failed: matrix is not positive definite");
  return assemble_field(system, llt.solve(system.rhs));
}

FEFunction direct_solve(const SparseSystem& system) {
  if (system.matrix.rows() == 0)
    return assemble_field(system, Eigen::VectorXd());
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(system.matrix);
  if (ldlt.info() != Eigen::Success)
    throw SolverError("sparse LDL^T factorization failed");
  return assemble_field(system, ldlt.solve(system.rhs));
}

double bilinear_form(const SparseSystem& system, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return u.dot(system.full_matrix * v);
}

FEFunction solve_harmonic_vector(std::shared_ptr<const FESpace> space, const VectorFunction& g,
                                 int components, double tol) {
  Eigen::MatrixXd c(space->dof_count(), components);
  for (int k = 0; k < components; ++k) {
    ProblemSpec spec;
    spec.g = [&g, k](const Eigen::Vector2d& x) { return g(x)(k); };
    c.col(k) = solve(assemble(space, spec), tol).coefficients().col(0);
  }
  return FEFunction(std::move(space), std::move(c));
}

} // namespace dmpcut
