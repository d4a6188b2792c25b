#include "dmpcut/analytics.hpp"
#include "dmpcut/assembly.hpp"
#include "dmpcut/errors.hpp"
#include "dmpcut/experiment.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dmpcut;
using dmpcut::testing::make_mesh;
using dmpcut::testing::uniform;

namespace {

ScalarFunction constant(double v) {
  return [v](const Eigen::Vector2d&) { return v; };
}

// P1 stiffness assembled by hand from edge vectors: K_ij = (e_i . e_j) / (4 area)
Eigen::MatrixXd hand_p1_stiffness(const Mesh& m) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m.vertex_count(), m.vertex_count());
  for (Index t = 0; t < m.triangle_count(); ++t) {
    Eigen::Vector2d e[3];
    for (int k = 0; k < 3; ++k)
      e[k] = m.vertex(m.triangles(t, (k + 2) % 3)) - m.vertex(m.triangles(t, (k + 1) % 3));
    const Eigen::Vector2d a = m.vertex(m.triangles(t, 1)) - m.vertex(m.triangles(t, 0));
    const Eigen::Vector2d b = m.vertex(m.triangles(t, 2)) - m.vertex(m.triangles(t, 0));
    const double area = 0.5 * (a.x() * b.y() - a.y() * b.x());
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        K(m.triangles(t, i), m.triangles(t, j)) += e[i].dot(e[j]) / (4 * area);
  }
  return K;
}

int vertex_at(const Mesh& m, double x, double y) {
  for (Index v = 0; v < m.vertex_count(); ++v)
    if ((m.vertex(v) - Eigen::Vector2d(x, y)).norm() < 1e-14)
      return static_cast<int>(v);
  return -1;
}

} // namespace

TEST(Assembly, StiffnessKernelContainsConstants) {
  for (int degree : {1, 2}) {
    const auto space = make_space(make_mesh(MeshKind::obtuse_band, 4, 0.3, 1), degree);
    const SparseSystem s = assemble(space, ProblemSpec{});
    const Eigen::VectorXd rows = s.full_matrix * Eigen::VectorXd::Ones(space->dof_count());
    EXPECT_LT(rows.cwiseAbs().maxCoeff(), 1e-12);
  }
  const SparseSystem s1 = assemble(make_space(make_mesh(MeshKind::structured, 1), 1), ProblemSpec{});
  const Eigen::MatrixXd K(s1.full_matrix);
  EXPECT_LT((K - hand_p1_stiffness(*make_mesh(MeshKind::structured, 1))).norm(), 1e-14);
}

TEST(Assembly, MassRaisesDiagonal) {
  const auto space = make_space(make_mesh(MeshKind::perturbed, 3, 0.2, 4), 2);
  ProblemSpec reaction;
  reaction.c = constant(1.0);
  const SparseSystem a = assemble(space, ProblemSpec{});
  const SparseSystem b = assemble(space, reaction);
  for (Index i = 0; i < space->dof_count(); ++i)
    EXPECT_GT(b.full_matrix.coeff(i, i), a.full_matrix.coeff(i, i));
  // mass matrix total equals the area
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(space->dof_count());
  EXPECT_NEAR(ones.dot((b.full_matrix - a.full_matrix) * ones), 1.0, 1e-13);
}

TEST(Assembly, MatchesHandAssembledStiffness) {
  for (MeshKind kind : {MeshKind::structured, MeshKind::obtuse_band}) {
    const auto mesh = make_mesh(kind, kind == MeshKind::structured ? 2 : 4, 0.3, 2);
    const SparseSystem s = assemble(make_space(mesh, 1), ProblemSpec{});
    EXPECT_LT((Eigen::MatrixXd(s.full_matrix) - hand_p1_stiffness(*mesh)).cwiseAbs().maxCoeff(), 1e-13);
  }
  // five-point pattern at the centre of the 2x2 grid
  const auto mesh = make_mesh(MeshKind::structured, 2);
  const Eigen::MatrixXd K(assemble(make_space(mesh, 1), ProblemSpec{}).full_matrix);
  const int c = vertex_at(*mesh, 0.5, 0.5);
  EXPECT_NEAR(K(c, c), 4, 1e-14);
  for (auto [x, y] : {std::pair{0.0, 0.5}, {1.0, 0.5}, {0.5, 0.0}, {0.5, 1.0}})
    EXPECT_NEAR(K(c, vertex_at(*mesh, x, y)), -1, 1e-14);
  for (auto [x, y] : {std::pair{0.0, 0.0}, {1.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}})
    EXPECT_NEAR(K(c, vertex_at(*mesh, x, y)), 0, 1e-14);
}

TEST(Assembly, ObtuseMeshHasPositiveOffDiagonal) {
  const auto mesh = make_mesh(MeshKind::obtuse_band, 4, 0.45, 2);
  const Eigen::MatrixXd K = hand_p1_stiffness(*mesh);
  double largest = 0;
  for (Index i = 0; i < K.rows(); ++i)
    for (Index j = 0; j < K.cols(); ++j)
      if (i != j)
        largest = std::max(largest, K(i, j));
  EXPECT_GT(largest, 1e-3);
}

TEST(Assembly, SymmetricExactly) {
  ProblemSpec spec;
  spec.c = [](const Eigen::Vector2d& x) { return 1 + x.x() * x.y(); };
  for (int degree : {1, 2}) {
    const SparseSystem s = assemble(make_space(make_mesh(MeshKind::perturbed, 5, 0.4, 3), degree), spec);
    EXPECT_EQ((s.matrix - SparseMatrix(s.matrix.transpose())).norm(), 0.0);
    EXPECT_EQ((s.full_matrix - SparseMatrix(s.full_matrix.transpose())).norm(), 0.0);
  }
}

TEST(Assembly, SignConditions) {
  const auto space = make_space(make_mesh(MeshKind::structured, 2), 1);
  ProblemSpec bad_c;
  bad_c.c = [](const Eigen::Vector2d& x) { return x.x() - 0.9; };
  ProblemSpec bad_f;
  bad_f.f = constant(1e-3);
  EXPECT_THROW(assemble(space, bad_c), SignConditionError);
  EXPECT_THROW(assemble(space, bad_f), SignConditionError);
  try {
    assemble(space, bad_f);
  } catch (const SignConditionError& e) {
    EXPECT_NE(std::string(e.what()).find("f ="), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("at ("), std::string::npos);
  }
}

TEST(Solve, LinearAndConstantDataExact) {
  for (int degree : {1, 2})
    for (MeshKind kind : {MeshKind::structured, MeshKind::obtuse_band}) {
      const auto space = make_space(make_mesh(kind, 5, 0.4, 6), degree);
      ProblemSpec spec;
      spec.g = [](const Eigen::Vector2d& x) { return x.x(); };
      const FEFunction U = solve(assemble(space, spec), 1e-12);
      EXPECT_LT((U.coefficients().col(0) - space->dof_coords().col(0)).cwiseAbs().maxCoeff(), 1e-10);

      spec.g = constant(1.0);
      const FEFunction one = solve(assemble(space, spec), 1e-12);
      EXPECT_LT((one.coefficients().array() - 1.0).abs().maxCoeff(), 1e-10);
    }
}

TEST(Solve, BoundaryValuesAreExact) {
  const auto space = make_space(make_mesh(MeshKind::perturbed, 4, 0.3, 1), 2);
  ProblemSpec spec;
  spec.g = [](const Eigen::Vector2d& x) { return std::sin(3 * x.x()) + x.y() * x.y(); };
  spec.f = constant(-2.0);
  const FEFunction U = solve(assemble(space, spec), 1e-10);
  for (Index d : space->boundary_dofs())
    EXPECT_EQ(U.coefficients()(d, 0), spec.g(space->dof_coords().row(d).transpose()));
}

TEST(Solve, ToleranceRange) {
  const SparseSystem s = assemble(make_space(make_mesh(MeshKind::structured, 2), 1), ProblemSpec{});
  EXPECT_THROW(solve(s, 0.0), ConfigError);
  EXPECT_THROW(solve(s, 2e-4), ConfigError);
  EXPECT_NO_THROW(solve(s, 1e-4));
}

TEST(Solve, AgreesWithDenseOracle) {
  const double tol = 1e-10;
  std::mt19937_64 rng(12);
  for (int degree : {1, 2})
    for (MeshKind kind : {MeshKind::structured, MeshKind::perturbed, MeshKind::obtuse_band})
      for (int n = 2; n <= 4; ++n) {
        const auto space = make_space(make_mesh(kind, n, 0.35, rng() % 100), degree);
        ProblemSpec spec;
        const double a = uniform(rng, 0, 5), b = uniform(rng, 0, 3);
        spec.c = [a](const Eigen::Vector2d& x) { return a * x.x() * x.x(); };
        spec.f = [b](const Eigen::Vector2d& x) { return -b * (1 + x.y()); };
        spec.g = [](const Eigen::Vector2d& x) { return std::cos(2 * x.x()) - x.y(); };
        const FEFunction cg = solve(assemble(space, spec), tol);
        const FEFunction dense = dense_oracle(space, spec);
        EXPECT_LE((cg.coefficients() - dense.coefficients()).cwiseAbs().maxCoeff(), 10 * tol);
      }
}

TEST(Solve, DenseOracleContract) {
  const auto big = make_space(make_mesh(MeshKind::structured, 22), 1); // 529 dofs
  EXPECT_THROW(dense_oracle(big, ProblemSpec{}), PreconditionError);

  // no free dofs: the boundary interpolant comes back
  const auto tiny = make_space(make_mesh(MeshKind::structured, 1), 1);
  ProblemSpec spec;
  spec.g = [](const Eigen::Vector2d& x) { return 3 * x.x() - x.y(); };
  const FEFunction U = dense_oracle(tiny, spec);
  for (Index i = 0; i < 4; ++i)
    EXPECT_EQ(U.coefficients()(i, 0), spec.g(tiny->dof_coords().row(i).transpose()));

  const auto space = make_space(make_mesh(MeshKind::obtuse_band, 4, 0.2, 5), 2);
  spec.f = constant(-1.0);
  EXPECT_EQ(dense_oracle(space, spec).coefficients(), dense_oracle(space, spec).coefficients());
}

TEST(Solve, GalerkinOrthogonality) {
  const double tol = 1e-9;
  const auto space = make_space(make_mesh(MeshKind::obtuse_band, 6, 0.4, 3), 2);
  ProblemSpec spec;
  spec.c = [](const Eigen::Vector2d& x) { return 2 + x.x(); };
  spec.f = [](const Eigen::Vector2d& x) { return -x.y(); };
  spec.g = [](const Eigen::Vector2d& x) { return x.x() * x.y(); };
  const SparseSystem s = assemble(space, spec);
  const FEFunction U = solve(s, tol);
  const Eigen::VectorXd r = s.full_matrix * U.coefficients().col(0) - s.full_load;
  for (Index d : space->free_dofs())
    EXPECT_LE(std::abs(r(d)), tol * s.rhs.norm());
}

TEST(Solve, DiscreteMinimizer) {
  std::mt19937_64 rng(4);
  for (int degree : {1, 2}) {
    const auto space = make_space(make_mesh(MeshKind::obtuse_band, 4, 0.3, 9), degree);
    ProblemSpec spec;
    spec.c = constant(3.0);
    spec.f = [](const Eigen::Vector2d& x) { return -1 - x.x(); };
    spec.g = [](const Eigen::Vector2d& x) { return x.y() - x.x(); };
    const FEFunction U = solve(assemble(space, spec), 1e-12);
    const double J = energy(U, spec).value;
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(space->dof_count(), 1);
      for (Index d : space->free_dofs())
        phi(d, 0) = uniform(rng, -1, 1);
      for (double eps : {1e-3, -1e-3}) {
        const FEFunction V(space, U.coefficients() + eps * phi);
        EXPECT_LE(J, energy(V, spec).value + 1e-9);
      }
    }
  }
}

TEST(Solve, ObtuseSpikeViolatesAndDenseConfirms) {
  const auto mesh = make_mesh(MeshKind::obtuse_band, 4, 0.45, 2);
  const auto space = make_space(mesh, 1);
  ProblemSpec spec;
  spec.g = boundary_spike(*mesh, 0, -1.0);
  const FEFunction U = solve(assemble(space, spec), 1e-12);
  const FEFunction D = dense_oracle(space, spec);
  EXPECT_GT(dmp_violation(U, CutoffMode::positive_part_sup), 1e-3);
  EXPECT_NEAR(dmp_violation(D, CutoffMode::positive_part_sup), dmp_violation(U, CutoffMode::positive_part_sup),
              1e-10);
  // the largest dof value exceeds the boundary maximum 0 directly
  EXPECT_GT(D.coefficients().maxCoeff(), 1e-3);
}

TEST(Solve, HarmonicVectorReproducesIdentity) {
  const auto space = make_space(make_mesh(MeshKind::obtuse_band, 5, 0.3, 0), 1);
  const FEFunction U = solve_harmonic_vector(
      space, [](const Eigen::Vector2d& x) -> Eigen::VectorXd { return x; }, 2, 1e-12);
  EXPECT_LT((U.coefficients() - Eigen::MatrixXd(space->dof_coords())).cwiseAbs().maxCoeff(), 1e-10);
}
