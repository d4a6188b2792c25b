#pragma once

#include "dmpcut/mesh.hpp"

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace dmpcut {

using ScalarFunction = std::function<double(const Eigen::Vector2d&)>;
using VectorFunction = std::function<Eigen::VectorXd(const Eigen::Vector2d&)>;

/// Affine map data of one triangle.
struct TriangleGeometry {
  Eigen::Matrix<double, 3, 2> corners;
  Eigen::Matrix<double, 3, 2> grad_barycentric; // row k: grad of lambda_k
  double area = 0.0;

  Eigen::Vector2d point(const Eigen::Vector3d& barycentric) const {
    return corners.transpose() * barycentric;
  }
};

TriangleGeometry triangle_geometry(const Mesh& mesh, Index t);

/// Lagrange shape functions in barycentric coordinates. P1: lambda_k.
/// P2: lambda_k (2 lambda_k - 1) at the vertices, then 4 lambda_i lambda_j
/// on the local edges (0,1), (1,2), (2,0).
int local_dof_count(int degree);
Eigen::VectorXd shape_values(int degree, const Eigen::Vector3d& barycentric);
/// Derivatives with respect to (lambda_0, lambda_1, lambda_2); one row per
/// shape function.
Eigen::MatrixX3d shape_barycentric_derivatives(int degree, const Eigen::Vector3d& barycentric);
/// Barycentric coordinates of the local nodes.
Eigen::MatrixX3d local_nodes(int degree);

/// Conforming Lagrange space of degree 1 or 2. Vertex dofs come first (same
/// numbering as the mesh), then one dof per edge in sorted-endpoint order.
class FESpace {
public:
  FESpace(std::shared_ptr<const Mesh> mesh, int degree);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  int local_size() const { return local_dof_count(degree_); }
  Index dof_count() const { return dof_coords_.rows(); }
  const Eigen::MatrixXi& dof_map() const { return dof_map_; }
  const Eigen::MatrixX2d& dof_coords() const { return dof_coords_; }
  const Eigen::MatrixX2i& edges() const { return edges_; }
  /// Sorted dofs on the boundary (boundary vertices plus, for P2, the
  /// midpoints of boundary edges).
  const std::vector<Index>& boundary_dofs() const { return boundary_dofs_; }
  const std::vector<Index>& free_dofs() const { return free_dofs_; }

private:
  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  Eigen::MatrixXi dof_map_;
  Eigen::MatrixX2d dof_coords_;
  Eigen::MatrixX2i edges_;
  std::vector<Index> boundary_dofs_;
  std::vector<Index> free_dofs_;
};

std::shared_ptr<const FESpace> make_space(std::shared_ptr<const Mesh> mesh, int degree);

/// Piecewise polynomial field with `components` values per dof.
class FEFunction {
public:
  FEFunction(std::shared_ptr<const FESpace> space, int components);
  FEFunction(std::shared_ptr<const FESpace> space, Eigen::MatrixXd coefficients);

  const FESpace& space() const { return *space_; }
  const std::shared_ptr<const FESpace>& space_ptr() const { return space_; }
  int components() const { return static_cast<int>(coefficients_.cols()); }
  const Eigen::MatrixXd& coefficients() const { return coefficients_; }
  /// Coefficients of one component on one triangle, in local dof order.
  Eigen::VectorXd local(Index t, int component = 0) const;

private:
  std::shared_ptr<const FESpace> space_;
  Eigen::MatrixXd coefficients_;
};

/// Field values (one per component) at a point given in barycentric
/// coordinates of triangle t.
Eigen::VectorXd eval(const FEFunction& f, Index t, const Eigen::Vector3d& barycentric);
/// Spatial gradients, one row per component.
Eigen::MatrixX2d eval_gradient(const FEFunction& f, Index t, const Eigen::Vector3d& barycentric);

FEFunction interpolate(std::shared_ptr<const FESpace> space, const ScalarFunction& g);
FEFunction interpolate(std::shared_ptr<const FESpace> space, const VectorFunction& g, int components);

/// Exact transfer of a coarse field onto the refined mesh (same degree).
FEFunction prolong(const FEFunction& coarse, const Refinement& refinement,
                   std::shared_ptr<const FESpace> fine_space);

/// "fef v1" text block: header, "degree k", "components m", "dofs N", then
/// N lines of m values with 17 significant digits.
void write_fef(std::ostream& out, const FEFunction& f);
FEFunction read_fef(std::istream& in, std::shared_ptr<const FESpace> space);

} // namespace dmpcut
