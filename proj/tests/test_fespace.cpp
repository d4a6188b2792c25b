#include "dmpcut/errors.hpp"
#include "dmpcut/fespace.hpp"
#include "dmpcut/quadrature.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace dmpcut;
using dmpcut::testing::make_mesh;
using dmpcut::testing::uniform;

namespace {

Eigen::Vector3d random_barycentric(std::mt19937_64& rng) {
  double a = uniform(rng), b = uniform(rng);
  if (a + b > 1) {
    a = 1 - a;
    b = 1 - b;
  }
  return {1 - a - b, a, b};
}

std::shared_ptr<const Mesh> obtuse() { return make_mesh(MeshKind::obtuse_band, 4, 0.3, 7); }

} // namespace

TEST(FESpace, DofCounts) {
  const auto mesh = obtuse();
  const auto edges = build_edges(*mesh);
  EXPECT_EQ(make_space(mesh, 1)->dof_count(), mesh->vertex_count());
  EXPECT_EQ(make_space(mesh, 2)->dof_count(), mesh->vertex_count() + edges.edges.rows());
  EXPECT_THROW(FESpace(mesh, 3), UnsupportedError);
}

TEST(FESpace, SharedEntitiesShareDofs) {
  // dof identity is checked through coordinates: equal nodes get equal indices
  for (int degree : {1, 2}) {
    const auto space = make_space(obtuse(), degree);
    const Eigen::MatrixX3d nodes = local_nodes(degree);
    std::map<std::pair<double, double>, Index> seen;
    for (Index t = 0; t < space->mesh().triangle_count(); ++t) {
      const TriangleGeometry g = triangle_geometry(space->mesh(), t);
      for (int k = 0; k < space->local_size(); ++k) {
        const Eigen::Vector2d x = g.point(nodes.row(k).transpose());
        const Index dof = space->dof_map()(t, k);
        EXPECT_NEAR((space->dof_coords().row(dof).transpose() - x).norm(), 0, 1e-15);
        auto [it, inserted] = seen.emplace(std::pair{std::round(x.x() * 1e9), std::round(x.y() * 1e9)}, dof);
        if (!inserted)
          EXPECT_EQ(it->second, dof);
      }
    }
    EXPECT_EQ(static_cast<Index>(seen.size()), space->dof_count());
  }
}

TEST(FESpace, BoundaryAndFreeDofsPartition) {
  const auto space = make_space(obtuse(), 2);
  std::set<Index> all(space->boundary_dofs().begin(), space->boundary_dofs().end());
  for (Index d : space->free_dofs())
    EXPECT_TRUE(all.insert(d).second);
  EXPECT_EQ(static_cast<Index>(all.size()), space->dof_count());
  for (Index d : space->boundary_dofs()) {
    const Eigen::Vector2d x = space->dof_coords().row(d);
    EXPECT_TRUE(x.x() == 0 || x.x() == 1 || x.y() == 0 || x.y() == 1);
  }
  // 4 * 4 boundary edges: 16 vertices + 16 midpoints
  EXPECT_EQ(space->boundary_dofs().size(), 32u);
}

TEST(FESpace, PartitionOfUnity) {
  for (int degree : {1, 2}) {
    const QuadratureRule& q = quadrature(6);
    for (Index i = 0; i < q.size(); ++i) {
      const Eigen::VectorXd phi = shape_values(degree, q.points.row(i).transpose());
      EXPECT_NEAR(phi.sum(), 1.0, 1e-13);
      const Eigen::MatrixX3d d = shape_barycentric_derivatives(degree, q.points.row(i).transpose());
      // sum of shape functions is constant along the simplex
      const Eigen::RowVector3d s = d.colwise().sum();
      EXPECT_NEAR(s(1) - s(0), 0, 1e-13);
      EXPECT_NEAR(s(2) - s(0), 0, 1e-13);
    }
  }
}

TEST(FESpace, LagrangeProperty) {
  for (int degree : {1, 2}) {
    const Eigen::MatrixX3d nodes = local_nodes(degree);
    for (int k = 0; k < nodes.rows(); ++k) {
      const Eigen::VectorXd phi = shape_values(degree, nodes.row(k).transpose());
      for (int j = 0; j < phi.size(); ++j)
        EXPECT_NEAR(phi(j), j == k ? 1.0 : 0.0, 1e-15);
    }
  }
}

TEST(FESpace, EvalReproducesPolynomials) {
  std::mt19937_64 rng(1);
  const auto mesh = make_mesh(MeshKind::perturbed, 5, 0.4, 2);
  const auto p1 = make_space(mesh, 1), p2 = make_space(mesh, 2);
  const FEFunction fx = interpolate(p1, [](const Eigen::Vector2d& x) { return x.x(); });
  const FEFunction lin = interpolate(p1, [](const Eigen::Vector2d& x) { return 2 - 3 * x.x() + 0.5 * x.y(); });
  const FEFunction quad =
      interpolate(p2, [](const Eigen::Vector2d& x) { return x.x() * x.x() - 2 * x.x() * x.y() + 3 * x.y(); });
  const FEFunction zero(p2, 1);
  for (int s = 0; s < 300; ++s) {
    const Index t = static_cast<Index>(rng() % mesh->triangle_count());
    const Eigen::Vector3d lam = random_barycentric(rng);
    const Eigen::Vector2d x = triangle_geometry(*mesh, t).point(lam);
    EXPECT_NEAR(eval(fx, t, lam)(0), x.x(), 1e-14);
    EXPECT_NEAR((eval_gradient(fx, t, lam).row(0) - Eigen::RowVector2d(1, 0)).norm(), 0, 1e-12);
    EXPECT_NEAR(eval(lin, t, lam)(0), 2 - 3 * x.x() + 0.5 * x.y(), 1e-13);
    EXPECT_NEAR(eval(quad, t, lam)(0), x.x() * x.x() - 2 * x.x() * x.y() + 3 * x.y(), 1e-13);
    const Eigen::RowVector2d gq(2 * x.x() - 2 * x.y(), -2 * x.x() + 3);
    EXPECT_NEAR((eval_gradient(quad, t, lam).row(0) - gq).norm(), 0, 1e-12);
    EXPECT_EQ(eval(zero, t, lam)(0), 0.0);
    EXPECT_EQ(eval_gradient(zero, t, lam).norm(), 0.0);
  }
}

TEST(FESpace, XSquaredOnP2) {
  const auto space = make_space(make_mesh(MeshKind::obtuse_band, 4, 0.2, 1), 2);
  const FEFunction f = interpolate(space, [](const Eigen::Vector2d& x) { return x.x() * x.x(); });
  const QuadratureRule& q = quadrature(4);
  for (Index t = 0; t < space->mesh().triangle_count(); ++t)
    for (Index i = 0; i < q.size(); ++i) {
      const Eigen::Vector3d lam = q.points.row(i).transpose();
      const Eigen::Vector2d x = triangle_geometry(space->mesh(), t).point(lam);
      EXPECT_NEAR(eval(f, t, lam)(0), x.x() * x.x(), 1e-13);
      EXPECT_NEAR(eval_gradient(f, t, lam)(0, 0), 2 * x.x(), 1e-12);
      EXPECT_NEAR(eval_gradient(f, t, lam)(0, 1), 0, 1e-12);
    }
}

TEST(FESpace, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int degree : {1, 2}) {
    const auto space = make_space(make_mesh(MeshKind::perturbed, 4, 0.3, 9), degree);
    const FEFunction f = dmpcut::testing::random_field(space, rng, -1, 1);
    const double h = 1e-7;
    for (int s = 0; s < 100; ++s) {
      const Index t = static_cast<Index>(rng() % space->mesh().triangle_count());
      Eigen::Vector3d lam = random_barycentric(rng);
      lam = 0.8 * lam + Eigen::Vector3d::Constant(0.2 / 3); // interior
      const TriangleGeometry g = triangle_geometry(space->mesh(), t);
      const Eigen::Vector2d x = g.point(lam);
      const Eigen::Vector2d dir(uniform(rng, -1, 1), uniform(rng, -1, 1));
      const Eigen::Vector3d fwd = barycentric_coordinates(space->mesh(), t, x + h * dir);
      const Eigen::Vector3d bwd = barycentric_coordinates(space->mesh(), t, x - h * dir);
      const double fd = (eval(f, t, fwd)(0) - eval(f, t, bwd)(0)) / (2 * h);
      EXPECT_NEAR(fd, eval_gradient(f, t, lam).row(0).dot(dir), 1e-6);
    }
  }
}

TEST(FESpace, EvalPreconditions) {
  const auto space = make_space(obtuse(), 1);
  const FEFunction f(space, 1);
  EXPECT_THROW(eval(f, space->mesh().triangle_count(), Eigen::Vector3d(1, 0, 0)), std::out_of_range);
  EXPECT_THROW(eval(f, -1, Eigen::Vector3d(1, 0, 0)), std::out_of_range);
  EXPECT_THROW(eval(f, 0, Eigen::Vector3d(0.5, 0.6, -0.1)), PreconditionError);
  EXPECT_THROW(eval(f, 0, Eigen::Vector3d(0.5, 0.2, 0.2)), PreconditionError);
  EXPECT_NO_THROW(eval(f, 0, Eigen::Vector3d(0.5, 0.5, 1e-13)));
}

TEST(FESpace, Interpolate) {
  const auto space = make_space(obtuse(), 2);
  const FEFunction three = interpolate(space, [](const Eigen::Vector2d&) { return 3.0; });
  EXPECT_TRUE((three.coefficients().array() == 3.0).all());

  const auto p1 = make_space(obtuse(), 1);
  const FEFunction sum = interpolate(p1, [](const Eigen::Vector2d& x) { return x.x() + x.y(); });
  for (Index i = 0; i < p1->dof_count(); ++i)
    EXPECT_EQ(sum.coefficients()(i, 0), p1->dof_coords()(i, 0) + p1->dof_coords()(i, 1));

  const FEFunction id = interpolate(space, VectorFunction([](const Eigen::Vector2d& x) -> Eigen::VectorXd { return x; }), 2);
  EXPECT_EQ(id.components(), 2);
  EXPECT_EQ(id.coefficients(), Eigen::MatrixXd(space->dof_coords()));

  EXPECT_THROW(interpolate(space, [](const Eigen::Vector2d& x) { return 1.0 / (x.x() - x.x()); }), DataError);
  EXPECT_THROW(interpolate(space, [](const Eigen::Vector2d&) { return std::nan(""); }), DataError);
  EXPECT_THROW(FEFunction(space, 0), TypeError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(space->dof_count(), 1);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(FEFunction(space, bad), DataError);
}

TEST(FESpace, ProlongIsExact) {
  std::mt19937_64 rng(8);
  const auto coarse = make_mesh(MeshKind::obtuse_band, 3, 0.35, 2);
  const Refinement r = refine(*coarse, 2);
  const auto fine = std::make_shared<const Mesh>(r.fine);
  for (int degree : {1, 2}) {
    const auto cs = make_space(coarse, degree);
    const auto fs = make_space(fine, degree);
    const FEFunction U = dmpcut::testing::random_field(cs, rng, -2, 2);
    const FEFunction V = prolong(U, r, fs);
    for (Index t = 0; t < fine->triangle_count(); t += 3) {
      const Eigen::Vector3d lam = random_barycentric(rng);
      const Eigen::Vector2d x = triangle_geometry(*fine, t).point(lam);
      const Index p = r.parent(t);
      const Eigen::Vector3d mu = barycentric_coordinates(*coarse, p, x).cwiseMax(0.0);
      EXPECT_NEAR(eval(V, t, lam)(0), eval(U, p, mu / mu.sum())(0), 1e-12);
    }
  }
}

TEST(FESpace, FefRoundTrip) {
  std::mt19937_64 rng(2);
  const auto space = make_space(obtuse(), 2);
  const FEFunction U = dmpcut::testing::random_field(space, rng, -1e3, 1e3, 2);
  std::stringstream s;
  write_fef(s, U);
  EXPECT_EQ(s.str().rfind("fef v1", 0), 0u);
  const FEFunction R = read_fef(s, space);
  EXPECT_EQ(R.coefficients(), U.coefficients());

  std::istringstream wrong_space(s.str());
  EXPECT_THROW(read_fef(wrong_space, make_space(obtuse(), 1)), ValidationError);
  std::istringstream bad("fef v2\n");
  EXPECT_THROW(read_fef(bad, space), ParseError);
}
