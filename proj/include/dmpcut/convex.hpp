#pragma once

#include "dmpcut/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace dmpcut {

/// Planar convex polytope: a point, a segment, or a CCW polygon with no
/// three consecutive collinear vertices.
template <typename Scalar>
class ConvexRegion {
public:
  using Point = Eigen::Matrix<Scalar, 2, 1>;
  using Jacobian = Eigen::Matrix<Scalar, 2, 2>;
  enum class Form { point, segment, polygon };

  /// Monotone chain hull. Points within rel_tol * diameter of a line are
  /// treated as collinear; degenerate sets collapse to segment or point.
  static ConvexRegion hull(std::vector<Point> points, Scalar rel_tol = Scalar(1e-12));

  Form form() const { return form_; }
  const std::vector<Point>& vertices() const { return vertices_; }

  /// Closest point of the region (Euclidean).
  Point project(const Point& x) const;

  /// Derivative of project at x: identity inside, the tangent projector on an
  /// edge's normal slab, zero in a vertex cone.
  Jacobian projection_jacobian(const Point& x) const;

  bool contains(const Point& x, Scalar tol = Scalar(0)) const;

  Scalar diameter() const;

private:
  Form form_ = Form::point;
  std::vector<Point> vertices_;
  Scalar scale_ = Scalar(0);

  static Scalar cross(const Point& o, const Point& a, const Point& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  }
  // closest point on segment [a,b]; t in [0,1] via *t_out
  static Point segment_foot(const Point& a, const Point& b, const Point& x, Scalar* t_out) {
    const Point d = b - a;
    const Scalar len2 = d.squaredNorm();
    Scalar t = len2 > Scalar(0) ? (x - a).dot(d) / len2 : Scalar(0);
    t = std::clamp(t, Scalar(0), Scalar(1));
    if (t_out)
      *t_out = t;
    return a + t * d;
  }
  Scalar snap_tol() const { return Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale_; }
};

template <typename Scalar>
ConvexRegion<Scalar> ConvexRegion<Scalar>::hull(std::vector<Point> pts, Scalar rel_tol) {
  if (pts.empty())
    throw PreconditionError("convex hull of an empty point set");
  ConvexRegion r;
  for (const Point& p : pts)
    r.scale_ = std::max(r.scale_, p.cwiseAbs().maxCoeff());
  r.scale_ = std::max(r.scale_, Scalar(1e-300));

  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  Scalar diam = 0;
  Point far_a = pts.front(), far_b = pts.front();
  for (const Point& p : pts)
    for (const Point& q : pts)
      if ((p - q).norm() > diam) {
        diam = (p - q).norm();
        far_a = p;
        far_b = q;
      }
  if (diam <= rel_tol * r.scale_) {
    r.form_ = Form::point;
    r.vertices_ = {pts.front()};
    return r;
  }

  const Scalar tol = rel_tol * diam * diam;
  const std::size_t n = pts.size();
  std::vector<Point> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= tol)
      --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= tol)
      --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);

  if (h.size() < 3) {
    r.form_ = Form::segment;
    r.vertices_ = {far_a, far_b};
    return r;
  }
  r.form_ = Form::polygon;
  r.vertices_ = std::move(h);
  return r;
}

template <typename Scalar>
Scalar ConvexRegion<Scalar>::diameter() const {
  Scalar d = 0;
  for (const Point& p : vertices_)
    for (const Point& q : vertices_)
      d = std::max(d, (p - q).norm());
  return d;
}

template <typename Scalar>
bool ConvexRegion<Scalar>::contains(const Point& x, Scalar tol) const {
  return (project(x) - x).norm() <= tol;
}

template <typename Scalar>
typename ConvexRegion<Scalar>::Point ConvexRegion<Scalar>::project(const Point& x) const {
  switch (form_) {
  case Form::point:
    return vertices_.front();
  case Form::segment: {
    const Point foot = segment_foot(vertices_[0], vertices_[1], x, nullptr);
    // points already on the segment are fixed exactly
    return (foot - x).norm() <= snap_tol() ? x : foot;
  }
  case Form::polygon:
    break;
  }
  const std::size_t n = vertices_.size();
  bool inside = true;
  for (std::size_t i = 0; i < n && inside; ++i) {
    const Point& a = vertices_[i];
    const Point& b = vertices_[(i + 1) % n];
    if (cross(a, b, x) < -snap_tol() * (b - a).norm())
      inside = false;
  }
  if (inside)
    return x;
  Point best = vertices_.front();
  Scalar best_d = std::numeric_limits<Scalar>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Point foot = segment_foot(vertices_[i], vertices_[(i + 1) % n], x, nullptr);
    const Scalar d = (foot - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = foot;
    }
  }
  return best;
}

template <typename Scalar>
typename ConvexRegion<Scalar>::Jacobian ConvexRegion<Scalar>::projection_jacobian(const Point& x) const {
  auto tangent_projector = [](const Point& a, const Point& b) {
    const Point t = (b - a).normalized();
    return Jacobian(t * t.transpose());
  };
  switch (form_) {
  case Form::point:
    return Jacobian::Zero();
  case Form::segment: {
    Scalar t = 0;
    segment_foot(vertices_[0], vertices_[1], x, &t);
    if (t <= Scalar(0) || t >= Scalar(1))
      return Jacobian::Zero();
    return tangent_projector(vertices_[0], vertices_[1]);
  }
  case Form::polygon:
    break;
  }
  const Point p = project(x);
  if (p == x)
    return Jacobian::Identity();
  const std::size_t n = vertices_.size();
  Scalar best_d = std::numeric_limits<Scalar>::infinity();
  Jacobian J = Jacobian::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    Scalar t = 0;
    const Point foot = segment_foot(vertices_[i], vertices_[(i + 1) % n], x, &t);
    const Scalar d = (foot - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      J = (t > Scalar(0) && t < Scalar(1)) ? tangent_projector(vertices_[i], vertices_[(i + 1) % n])
                                           : Jacobian::Zero();
    }
  }
  return J;
}

} // namespace dmpcut
