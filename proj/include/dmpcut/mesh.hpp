#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dmpcut {

using Eigen::Index;

/// Conforming 2D triangulation. Triangles are counterclockwise; boundary
/// edges are oriented as in their (unique) incident triangle.
struct Mesh {
  Eigen::MatrixX2d vertices;
  Eigen::MatrixX3i triangles;
  Eigen::MatrixX2i boundary_edges;
  Eigen::VectorXi boundary_markers;

  Index vertex_count() const { return vertices.rows(); }
  Index triangle_count() const { return triangles.rows(); }
  Eigen::Vector2d vertex(Index i) const { return vertices.row(i).transpose(); }
  double signed_area(Index t) const;
  double total_area() const;
};

/// Throws ValidationError if the mesh breaks any structural invariant:
/// index range, positive area, edge manifoldness, boundary edge set,
/// hanging vertices on boundary edges.
void validate(const Mesh& mesh);

/// Unique undirected edges (sorted endpoints, lexicographic order) and the
/// per-triangle local edge numbering (0,1), (1,2), (2,0).
struct MeshEdges {
  Eigen::MatrixX2i edges;
  Eigen::MatrixX3i triangle_edges;
  Eigen::VectorXi incidence;
};

MeshEdges build_edges(const Mesh& mesh);

enum class MeshKind { structured, perturbed, obtuse_band };

struct MeshFamily {
  MeshKind kind = MeshKind::structured;
  int n = 1;
  double perturbation = 0.0;
  std::uint64_t seed = 0;
};

std::string to_string(MeshKind kind);
MeshKind parse_mesh_kind(const std::string& name);

/// Unit-square triangulation.
///
/// - structured: (n+1)^2 grid, every cell split along its (i,j)-(i+1,j+1)
///   diagonal (right triangles only).
/// - perturbed: structured, interior vertices displaced by at most
///   perturbation*h/3 per coordinate; boundary vertices fixed.
/// - obtuse_band: structured, then one band row j (chosen by the seed) is
///   compressed to height (1 - 2*perturbation)*h by moving grid line j+1
///   down, and the interior vertices of that line are sheared horizontally
///   by +/-(0.35..0.45)*h. Every such mesh has an angle > pi/2 + 0.1.
///   Requires n >= 2.
Mesh generate(const MeshFamily& family);

std::vector<int> boundary_vertices(const Mesh& mesh);

/// Interior angles, one row per triangle (angle at local vertex k).
Eigen::MatrixX3d interior_angles(const Mesh& mesh);
double max_interior_angle(const Mesh& mesh);

void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh load_mesh(const std::filesystem::path& path);

/// Uniform red refinement, repeated `levels` times. For every fine triangle
/// the parent triangle in the original mesh and the barycentric coordinates
/// (w.r.t. that parent) of its three vertices are recorded.
struct Refinement {
  Mesh fine;
  Eigen::VectorXi parent;
  std::vector<Eigen::Matrix3d> vertex_barycentric; // row k: fine vertex k
};

Refinement refine(const Mesh& coarse, int levels);

struct PointLocation {
  Index triangle;
  Eigen::Vector3d barycentric;
};

Eigen::Vector3d barycentric_coordinates(const Mesh& mesh, Index t, const Eigen::Vector2d& x);

/// Bucket grid over triangle bounding boxes.
class PointLocator {
public:
  explicit PointLocator(const Mesh& mesh);
  std::optional<PointLocation> locate(const Eigen::Vector2d& x) const;

private:
  const Mesh* mesh_;
  Eigen::Vector2d lo_, hi_;
  int bins_;
  std::vector<std::vector<int>> buckets_;
};

/// n x n equispaced points over the mesh bounding box (corners included).
std::vector<Eigen::Vector2d> sample_grid(const Mesh& mesh, int n);

} // namespace dmpcut
