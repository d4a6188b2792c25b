#pragma once

#include "dmpcut/convex.hpp"
#include "dmpcut/fespace.hpp"
#include "dmpcut/integrate.hpp"

namespace dmpcut {

using Region = ConvexRegion<double>;

/// Hull of the boundary-vertex values of a P1 vector field (plus the origin
/// on request). For P1 this contains the whole boundary trace image.
Region boundary_hull(const FEFunction& U, bool include_origin);

/// U* = Pi_K U, evaluated on demand.
class ProjectedField {
public:
  ProjectedField(FEFunction base, Region region);

  const FEFunction& base() const { return base_; }
  const Region& region() const { return region_; }

  Eigen::Vector2d eval(Index t, const Eigen::Vector3d& barycentric) const;
  /// Rows are the gradients of the two components.
  Eigen::Matrix2d eval_gradient(Index t, const Eigen::Vector3d& barycentric) const;

private:
  FEFunction base_;
  Region region_;
};

ProjectedField make_projected(const FEFunction& U, bool include_origin);

enum class VectorIntegral { dirichlet_energy, l2_sq };

/// Uniform subdivision to `subdivision_depth` on triangles whose vertex
/// values are not all inside the region, quadrature at the leaves, error
/// estimate from the difference to one level coarser.
Integral integrate_projected(const ProjectedField& field, VectorIntegral kind,
                             const IntegrationOptions& options = {});

/// Same integrals for the unprojected field (exact quadrature).
double integrate_vector(const FEFunction& U, VectorIntegral kind, int quadrature_degree = 6);

} // namespace dmpcut
