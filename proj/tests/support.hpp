#pragma once

#include "dmpcut/fespace.hpp"
#include "dmpcut/mesh.hpp"

#include <cstdint>
#include <memory>
#include <random>

namespace dmpcut::testing {

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::shared_ptr<const Mesh> make_mesh(MeshKind kind, int n, double perturbation = 0.0,
                                             std::uint64_t seed = 0) {
  return std::make_shared<const Mesh>(generate({kind, n, perturbation, seed}));
}

inline std::shared_ptr<const Mesh> unit_square(int n) { return make_mesh(MeshKind::structured, n); }

/// Field with i.i.d. uniform coefficients in [lo, hi].
inline FEFunction random_field(std::shared_ptr<const FESpace> space, std::mt19937_64& rng, double lo, double hi,
                               int components = 1) {
  Eigen::MatrixXd c(space->dof_count(), components);
  for (Index i = 0; i < c.size(); ++i)
    c.data()[i] = uniform(rng, lo, hi);
  return FEFunction(std::move(space), std::move(c));
}

/// Calls fn(triangle, barycentric, x) at every point of an n x n grid.
template <typename Fn>
void for_each_grid_point(const Mesh& mesh, int n, Fn&& fn) {
  const PointLocator locator(mesh);
  for (const Eigen::Vector2d& x : sample_grid(mesh, n))
    if (const auto loc = locator.locate(x))
      fn(loc->triangle, loc->barycentric, x);
}

inline FEFunction interpolant(std::shared_ptr<const FESpace> space, ScalarFunction g) {
  return interpolate(std::move(space), g);
}

} // namespace dmpcut::testing
