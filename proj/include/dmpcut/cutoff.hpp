#pragma once

#include "dmpcut/fespace.hpp"
#include "dmpcut/integrate.hpp"

#include <span>

namespace dmpcut {

/// positive_part_sup: level = sup over the boundary of max(U, 0), the
/// general reaction-diffusion case. plain_sup: level = sup of the boundary
/// trace itself, admissible when there is no reaction term.
enum class CutoffMode { positive_part_sup, plain_sup };

std::string to_string(CutoffMode mode);

/// The truncated field U* = min(U, level). Evaluated on demand and never
/// interpolated back into the finite element space.
class CutoffField {
public:
  CutoffField(FEFunction base, double level, CutoffMode mode);

  const FEFunction& base() const { return base_; }
  double level() const { return level_; }
  CutoffMode mode() const { return mode_; }

  double eval(Index t, const Eigen::Vector3d& barycentric) const;
  Eigen::Vector2d eval_gradient(Index t, const Eigen::Vector3d& barycentric) const;

  operator FieldView() const { return FieldView(base_, 0, level_); } // NOLINT

private:
  FEFunction base_;
  double level_;
  CutoffMode mode_;
};

/// Exact maximum of the boundary trace: vertex values for P1, closed-form
/// edge-quadratic maxima for P2.
double sup_boundary(const FEFunction& U, CutoffMode mode);

CutoffField make_cutoff(const FEFunction& U, CutoffMode mode);

enum class CutIntegral { dirichlet_energy, l2_sq, source_pairing };

/// int |grad U*|^2, int |U*|^2 or int f U*.
Integral integrate_cut(const CutoffField& field, CutIntegral kind, const ScalarFunction& f = {},
                       const IntegrationOptions& options = {});

/// |u_ref - U*| <= |u_ref - U| + 1e-12 at every quadrature point (and at the
/// extra sample points). Throws PreconditionError if u_ref exceeds the level
/// by more than 1e-12 anywhere on those samples. u_ref and U must share the
/// mesh.
bool pointwise_error_bound_check(const FEFunction& u_ref, const FEFunction& U, double level,
                                 std::span<const Eigen::Vector2d> extra_points = {});

} // namespace dmpcut
