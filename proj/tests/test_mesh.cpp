#include "dmpcut/errors.hpp"
#include "dmpcut/mesh.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace dmpcut;
using dmpcut::testing::make_mesh;

namespace {

// law of cosines, independent of interior_angles()
double largest_angle(const Mesh& m) {
  double best = 0;
  for (Index t = 0; t < m.triangle_count(); ++t)
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector2d a = m.vertex(m.triangles(t, k));
      const Eigen::Vector2d b = m.vertex(m.triangles(t, (k + 1) % 3));
      const Eigen::Vector2d c = m.vertex(m.triangles(t, (k + 2) % 3));
      const double ab = (b - a).norm(), ac = (c - a).norm(), bc = (c - b).norm();
      best = std::max(best, std::acos((ab * ab + ac * ac - bc * bc) / (2 * ab * ac)));
    }
  return best;
}

std::set<std::pair<int, int>> all_edges(const Mesh& m) {
  std::set<std::pair<int, int>> e;
  for (Index t = 0; t < m.triangle_count(); ++t)
    for (int k = 0; k < 3; ++k) {
      const int a = m.triangles(t, k), b = m.triangles(t, (k + 1) % 3);
      e.insert({std::min(a, b), std::max(a, b)});
    }
  return e;
}

std::string serialized(const Mesh& m) {
  std::ostringstream s;
  write_mesh(s, m);
  return s.str();
}

const char* kTwoTriangles = R"(mesh2d v1
# unit square
vertices 4
0 0
1 0
1 1
0 1
triangles 2
0 1 2
0 2 3
boundary 4
0 1 1
1 2 1
2 3 1
3 0 1
)";

} // namespace

TEST(Mesh, StructuredCounts) {
  const Mesh m1 = generate({MeshKind::structured, 1, 0, 0});
  EXPECT_EQ(m1.vertex_count(), 4);
  EXPECT_EQ(m1.triangle_count(), 2);
  EXPECT_EQ(m1.boundary_edges.rows(), 4);

  const Mesh m2 = generate({MeshKind::structured, 2, 0, 0});
  EXPECT_EQ(m2.vertex_count(), 9);
  EXPECT_EQ(m2.triangle_count(), 8);
  EXPECT_EQ(m2.boundary_edges.rows(), 8);
}

TEST(Mesh, ObtuseBandHasLargeAngle) {
  for (double pert : {0.0, 0.3, 0.45}) {
    const Mesh m = generate({MeshKind::obtuse_band, 4, pert, 7});
    EXPECT_GT(largest_angle(m), std::numbers::pi / 2 + 0.1) << pert;
    EXPECT_NEAR(max_interior_angle(m), largest_angle(m), 1e-12);
  }
  for (std::uint64_t seed = 0; seed < 30; ++seed)
    for (int n = 2; n <= 8; ++n)
      EXPECT_GT(largest_angle(generate({MeshKind::obtuse_band, n, 0.2, seed})), std::numbers::pi / 2 + 0.1);
}

TEST(Mesh, StructuredHasNoObtuseAngle) {
  EXPECT_NEAR(largest_angle(generate({MeshKind::structured, 5, 0, 0})), std::numbers::pi / 2, 1e-12);
}

TEST(Mesh, GenerateRejectsBadFamilies) {
  EXPECT_THROW(generate({MeshKind::structured, 0, 0, 0}), ConfigError);
  EXPECT_THROW(generate({MeshKind::perturbed, 3, 0.5, 0}), ConfigError);
  EXPECT_THROW(generate({MeshKind::perturbed, 3, -0.1, 0}), ConfigError);
  EXPECT_THROW(generate({MeshKind::obtuse_band, 1, 0.2, 0}), ConfigError);
  EXPECT_THROW(parse_mesh_kind("hexagonal"), ConfigError);
  EXPECT_EQ(parse_mesh_kind("obtuse_band"), MeshKind::obtuse_band);
}

TEST(Mesh, GeneratedMeshesAreValid) {
  for (MeshKind kind : {MeshKind::structured, MeshKind::perturbed, MeshKind::obtuse_band})
    for (int n : {2, 3, 7})
      for (std::uint64_t seed : {0u, 5u}) {
        const Mesh m = generate({kind, n, 0.4, seed});
        EXPECT_NO_THROW(validate(m));
        double area = 0;
        for (Index t = 0; t < m.triangle_count(); ++t) {
          EXPECT_GT(m.signed_area(t), 0);
          area += m.signed_area(t);
        }
        EXPECT_NEAR(area, 1.0, 1e-12);
        // Euler: V - E + T = 1
        const auto edges = all_edges(m);
        EXPECT_EQ(m.vertex_count() - static_cast<Index>(edges.size()) + m.triangle_count(), 1);
      }
}

TEST(Mesh, PerturbedKeepsBoundaryGeometry) {
  const Mesh s = generate({MeshKind::structured, 6, 0, 0});
  const Mesh p = generate({MeshKind::perturbed, 6, 0.45, 11});
  for (int v : boundary_vertices(p))
    EXPECT_EQ(p.vertex(v), s.vertex(v));
  EXPECT_NE(p.vertices, s.vertices);
}

TEST(Mesh, Determinism) {
  for (MeshKind kind : {MeshKind::perturbed, MeshKind::obtuse_band}) {
    const MeshFamily fam{kind, 5, 0.3, 1234567890123ULL};
    EXPECT_EQ(serialized(generate(fam)), serialized(generate(fam)));
  }
  EXPECT_NE(serialized(generate({MeshKind::perturbed, 5, 0.3, 1})),
            serialized(generate({MeshKind::perturbed, 5, 0.3, 2})));
}

TEST(Mesh, BoundaryVertices) {
  const auto b1 = boundary_vertices(generate({MeshKind::structured, 1, 0, 0}));
  EXPECT_EQ(b1, (std::vector<int>{0, 1, 2, 3}));

  const Mesh m2 = generate({MeshKind::structured, 2, 0, 0});
  const auto b2 = boundary_vertices(m2);
  EXPECT_EQ(b2.size(), 8u);
  for (int v : b2)
    EXPECT_NE(m2.vertex(v), Eigen::Vector2d(0.5, 0.5));

  const Mesh m = generate({MeshKind::obtuse_band, 4, 0.3, 7});
  std::set<int> ends;
  for (Index e = 0; e < m.boundary_edges.rows(); ++e) {
    ends.insert(m.boundary_edges(e, 0));
    ends.insert(m.boundary_edges(e, 1));
  }
  const auto b = boundary_vertices(m);
  EXPECT_TRUE(std::is_sorted(b.begin(), b.end()));
  EXPECT_EQ(std::vector<int>(ends.begin(), ends.end()), b);
}

TEST(Mesh, BoundaryEdgesAreSingleIncidence) {
  const Mesh m = generate({MeshKind::obtuse_band, 5, 0.2, 3});
  std::map<std::pair<int, int>, int> count;
  for (Index t = 0; t < m.triangle_count(); ++t)
    for (int k = 0; k < 3; ++k) {
      const int a = m.triangles(t, k), b = m.triangles(t, (k + 1) % 3);
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  std::set<std::pair<int, int>> single, listed;
  for (const auto& [e, c] : count)
    if (c == 1)
      single.insert(e);
  for (Index e = 0; e < m.boundary_edges.rows(); ++e) {
    const int a = m.boundary_edges(e, 0), b = m.boundary_edges(e, 1);
    listed.insert({std::min(a, b), std::max(a, b)});
  }
  EXPECT_EQ(single, listed);
}

TEST(MeshIo, RoundTripIsExact) {
  for (MeshKind kind : {MeshKind::structured, MeshKind::perturbed, MeshKind::obtuse_band}) {
    const Mesh m = generate({kind, 4, 0.37, 99});
    std::stringstream s;
    write_mesh(s, m);
    const Mesh r = read_mesh(s);
    EXPECT_EQ(r.vertices, m.vertices);
    EXPECT_EQ(r.triangles, m.triangles);
    EXPECT_EQ(r.boundary_edges, m.boundary_edges);
    EXPECT_EQ(r.boundary_markers, m.boundary_markers);
  }
}

TEST(MeshIo, ReadsCommentedFile) {
  std::istringstream in(kTwoTriangles);
  const Mesh m = read_mesh(in);
  EXPECT_EQ(m.triangle_count(), 2);
  EXPECT_DOUBLE_EQ(m.total_area(), 1.0);
}

TEST(MeshIo, ParseErrorsCarryLineNumbers) {
  std::string text = kTwoTriangles;
  text.replace(text.find("1 1\n0 1"), 3, "1 q");
  std::istringstream in(text);
  try {
    read_mesh(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6);
    EXPECT_NE(std::string(e.what()).find("line 6"), std::string::npos);
  }

  std::istringstream bad_header("mesh3d v1\n");
  EXPECT_THROW(read_mesh(bad_header), ParseError);
  std::istringstream truncated("mesh2d v1\nvertices 3\n0 0\n1 0\n");
  EXPECT_THROW(read_mesh(truncated), ParseError);
}

TEST(MeshIo, ZeroAreaTriangleIsInvalid) {
  std::istringstream in(R"(mesh2d v1
vertices 4
0 0
1 0
2 0
0 1
triangles 2
0 1 3
0 1 2
boundary 3
1 3 0
3 0 0
0 1 0
)");
  EXPECT_THROW(read_mesh(in), ValidationError);
}

TEST(MeshIo, EdgeSharedByThreeTrianglesIsInvalid) {
  std::istringstream in(R"(mesh2d v1
vertices 5
0 0
1 0
0.5 1
0.5 -1
0.5 0.5
triangles 3
0 1 2
1 0 3
0 1 4
boundary 4
1 2 0
2 0 0
0 3 0
3 1 0
)");
  EXPECT_THROW(read_mesh(in), ValidationError);
}

TEST(MeshIo, HangingVertexIsInvalid) {
  Mesh m;
  m.vertices.resize(5, 2);
  m.vertices << 0, 0, 1, 0, 1, 1, 0, 1, 0.5, 0.5;
  m.triangles.resize(3, 3);
  // vertex 4 sits on the diagonal of triangle 0
  m.triangles << 0, 1, 2, 0, 4, 3, 4, 2, 3;
  m.boundary_edges.resize(5, 2);
  m.boundary_edges << 0, 1, 1, 2, 2, 3, 3, 0, 0, 4;
  m.boundary_markers = Eigen::VectorXi::Zero(5);
  EXPECT_THROW(validate(m), ValidationError);
}

TEST(MeshRefine, NestedAndAreaPreserving) {
  const Mesh coarse = generate({MeshKind::obtuse_band, 3, 0.3, 4});
  for (int levels : {0, 1, 2}) {
    const Refinement r = refine(coarse, levels);
    EXPECT_NO_THROW(validate(r.fine));
    EXPECT_EQ(r.fine.triangle_count(), coarse.triangle_count() << (2 * levels));
    EXPECT_NEAR(r.fine.total_area(), 1.0, 1e-12);
    for (Index t = 0; t < r.fine.triangle_count(); ++t) {
      const int p = r.parent(t);
      for (int k = 0; k < 3; ++k) {
        const Eigen::Vector3d lam = r.vertex_barycentric[t].row(k).transpose();
        EXPECT_GE(lam.minCoeff(), -1e-14);
        EXPECT_NEAR(lam.sum(), 1.0, 1e-14);
        Eigen::Vector2d x = Eigen::Vector2d::Zero();
        for (int j = 0; j < 3; ++j)
          x += lam(j) * coarse.vertex(coarse.triangles(p, j));
        EXPECT_NEAR((x - r.fine.vertex(r.fine.triangles(t, k))).norm(), 0, 1e-14);
      }
    }
  }
  EXPECT_THROW(refine(coarse, -1), ConfigError);
}

TEST(MeshLocate, FindsContainingTriangle) {
  const Mesh m = generate({MeshKind::perturbed, 6, 0.4, 8});
  const PointLocator loc(m);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector2d x(dmpcut::testing::uniform(rng), dmpcut::testing::uniform(rng));
    const auto hit = loc.locate(x);
    ASSERT_TRUE(hit.has_value());
    EXPECT_GE(hit->barycentric.minCoeff(), 0.0);
    EXPECT_NEAR(hit->barycentric.sum(), 1.0, 1e-13);
    Eigen::Vector2d y = Eigen::Vector2d::Zero();
    for (int j = 0; j < 3; ++j)
      y += hit->barycentric(j) * m.vertex(m.triangles(hit->triangle, j));
    EXPECT_NEAR((x - y).norm(), 0, 1e-12);
  }
  EXPECT_FALSE(loc.locate(Eigen::Vector2d(1.5, 0.5)).has_value());
}

TEST(MeshLocate, SampleGridCoversBox) {
  const auto pts = sample_grid(generate({MeshKind::structured, 2, 0, 0}), 5);
  ASSERT_EQ(pts.size(), 25u);
  EXPECT_EQ(pts.front(), Eigen::Vector2d(0, 0));
  EXPECT_EQ(pts.back(), Eigen::Vector2d(1, 1));
  EXPECT_EQ(pts[1], Eigen::Vector2d(0.25, 0));
}
