#include "dmpcut/fespace.hpp"
#include "dmpcut/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace dmpcut {

namespace {

void check_triangle(const FEFunction& f, Index t) {
  if (t < 0 || t >= f.space().mesh().triangle_count())
    throw std::out_of_range("triangle index " + std::to_string(t) + " out of range");
}

void check_barycentric(const Eigen::Vector3d& l) {
  if (l.minCoeff() < -1e-12 || std::abs(l.sum() - 1.0) > 1e-12)
    throw PreconditionError("barycentric coordinates must be nonnegative and sum to 1");
}

} // namespace

TriangleGeometry triangle_geometry(const Mesh& mesh, Index t) {
  TriangleGeometry g;
  for (int k = 0; k < 3; ++k)
    g.corners.row(k) = mesh.vertices.row(mesh.triangles(t, k));
  Eigen::Matrix2d B;
  B.col(0) = (g.corners.row(1) - g.corners.row(0)).transpose();
  B.col(1) = (g.corners.row(2) - g.corners.row(0)).transpose();
  g.area = 0.5 * B.determinant();
  const Eigen::Matrix2d Binv = B.inverse();
  g.grad_barycentric.row(1) = Binv.row(0);
  g.grad_barycentric.row(2) = Binv.row(1);
  g.grad_barycentric.row(0) = -(Binv.row(0) + Binv.row(1));
  return g;
}

int local_dof_count(int degree) {
  if (degree == 1)
    return 3;
  if (degree == 2)
    return 6;
  throw UnsupportedError("only P1 and P2 elements are implemented");
}

Eigen::VectorXd shape_values(int degree, const Eigen::Vector3d& l) {
  if (degree == 1)
    return l;
  Eigen::VectorXd v(local_dof_count(degree));
  v << l(0) * (2 * l(0) - 1), l(1) * (2 * l(1) - 1), l(2) * (2 * l(2) - 1), 4 * l(0) * l(1),
      4 * l(1) * l(2), 4 * l(2) * l(0);
  return v;
}

Eigen::MatrixX3d shape_barycentric_derivatives(int degree, const Eigen::Vector3d& l) {
  if (degree == 1)
    return Eigen::Matrix3d::Identity();
  Eigen::MatrixX3d d = Eigen::MatrixX3d::Zero(local_dof_count(degree), 3);
  for (int k = 0; k < 3; ++k)
    d(k, k) = 4 * l(k) - 1;
  d(3, 0) = 4 * l(1), d(3, 1) = 4 * l(0);
  d(4, 1) = 4 * l(2), d(4, 2) = 4 * l(1);
  d(5, 2) = 4 * l(0), d(5, 0) = 4 * l(2);
  return d;
}

Eigen::MatrixX3d local_nodes(int degree) {
  Eigen::MatrixX3d nodes(local_dof_count(degree), 3);
  nodes.topRows(3) = Eigen::Matrix3d::Identity();
  if (degree == 2)
    nodes.bottomRows(3) << 0.5, 0.5, 0, 0, 0.5, 0.5, 0.5, 0, 0.5;
  return nodes;
}

FESpace::FESpace(std::shared_ptr<const Mesh> mesh, int degree)
    : mesh_(std::move(mesh)), degree_(degree) {
  const int nloc = local_dof_count(degree);
  const Mesh& m = *mesh_;
  const MeshEdges topo = build_edges(m);
  edges_ = topo.edges;
  const Index nv = m.vertex_count();
  const Index ndof = degree == 1 ? nv : nv + edges_.rows();

  dof_map_.resize(m.triangle_count(), nloc);
  dof_map_.leftCols(3) = m.triangles;
  if (degree == 2)
    dof_map_.rightCols(3) = topo.triangle_edges.array() + static_cast<int>(nv);

  dof_coords_.resize(ndof, 2);
  dof_coords_.topRows(nv) = m.vertices;
  if (degree == 2)
    for (Index e = 0; e < edges_.rows(); ++e)
      dof_coords_.row(nv + e) = 0.5 * (m.vertices.row(edges_(e, 0)) + m.vertices.row(edges_(e, 1)));

  std::vector<char> on_boundary(static_cast<std::size_t>(ndof), 0);
  for (Index e = 0; e < m.boundary_edges.rows(); ++e) {
    on_boundary[static_cast<std::size_t>(m.boundary_edges(e, 0))] = 1;
    on_boundary[static_cast<std::size_t>(m.boundary_edges(e, 1))] = 1;
  }
  if (degree == 2)
    for (Index e = 0; e < edges_.rows(); ++e)
      if (topo.incidence(e) == 1)
        on_boundary[static_cast<std::size_t>(nv + e)] = 1;
  for (Index i = 0; i < ndof; ++i)
    (on_boundary[static_cast<std::size_t>(i)] ? boundary_dofs_ : free_dofs_).push_back(i);
}

std::shared_ptr<const FESpace> make_space(std::shared_ptr<const Mesh> mesh, int degree) {
  return std::make_shared<const FESpace>(std::move(mesh), degree);
}

FEFunction::FEFunction(std::shared_ptr<const FESpace> space, int components)
    : space_(std::move(space)),
      coefficients_(Eigen::MatrixXd::Zero(space_->dof_count(), components)) {
  if (components < 1)
    throw TypeError("a field needs at least one component");
}

FEFunction::FEFunction(std::shared_ptr<const FESpace> space, Eigen::MatrixXd coefficients)
    : space_(std::move(space)), coefficients_(std::move(coefficients)) {
  if (coefficients_.rows() != space_->dof_count() || coefficients_.cols() < 1)
    throw ValidationError("coefficient matrix does not match the space dimension");
  if (!coefficients_.allFinite())
    throw DataError("non-finite field coefficient");
}

Eigen::VectorXd FEFunction::local(Index t, int component) const {
  const int nloc = space_->local_size();
  Eigen::VectorXd c(nloc);
  for (int k = 0; k < nloc; ++k)
    c(k) = coefficients_(space_->dof_map()(t, k), component);
  return c;
}

Eigen::VectorXd eval(const FEFunction& f, Index t, const Eigen::Vector3d& barycentric) {
  check_triangle(f, t);
  check_barycentric(barycentric);
  const Eigen::VectorXd phi = shape_values(f.space().degree(), barycentric);
  Eigen::VectorXd v(f.components());
  for (int c = 0; c < f.components(); ++c)
    v(c) = f.local(t, c).dot(phi);
  return v;
}

Eigen::MatrixX2d eval_gradient(const FEFunction& f, Index t, const Eigen::Vector3d& barycentric) {
  check_triangle(f, t);
  check_barycentric(barycentric);
  const TriangleGeometry geo = triangle_geometry(f.space().mesh(), t);
  const Eigen::MatrixX2d grad_phi =
      shape_barycentric_derivatives(f.space().degree(), barycentric) * geo.grad_barycentric;
  Eigen::MatrixX2d g(f.components(), 2);
  for (int c = 0; c < f.components(); ++c)
    g.row(c) = f.local(t, c).transpose() * grad_phi;
  return g;
}

FEFunction interpolate(std::shared_ptr<const FESpace> space, const ScalarFunction& g) {
  return interpolate(
      std::move(space),
      [&g](const Eigen::Vector2d& x) { return Eigen::VectorXd::Constant(1, g(x)); }, 1);
}

FEFunction interpolate(std::shared_ptr<const FESpace> space, const VectorFunction& g,
                       int components) {
  Eigen::MatrixXd c(space->dof_count(), components);
  for (Index i = 0; i < space->dof_count(); ++i) {
    const Eigen::VectorXd v = g(space->dof_coords().row(i).transpose());
    if (v.size() != components)
      throw TypeError("interpolated function returned the wrong number of components");
    if (!v.allFinite())
      throw DataError("interpolated function is not finite at dof " + std::to_string(i));
    c.row(i) = v.transpose();
  }
  return FEFunction(std::move(space), std::move(c));
}

FEFunction prolong(const FEFunction& coarse, const Refinement& refinement,
                   std::shared_ptr<const FESpace> fine_space) {
  const int degree = fine_space->degree();
  if (degree < coarse.space().degree())
    throw PreconditionError("prolongation needs a fine space of at least the coarse degree");
  const Eigen::MatrixX3d nodes = local_nodes(degree);
  const int coarse_degree = coarse.space().degree();
  Eigen::MatrixXd c(fine_space->dof_count(), coarse.components());
  for (Index t = 0; t < refinement.fine.triangle_count(); ++t) {
    const Index parent = refinement.parent(t);
    const Eigen::Matrix3d& vb = refinement.vertex_barycentric[static_cast<std::size_t>(t)];
    for (int k = 0; k < nodes.rows(); ++k) {
      const Eigen::Vector3d l = vb.transpose() * nodes.row(k).transpose();
      const Eigen::VectorXd phi = shape_values(coarse_degree, l);
      for (int comp = 0; comp < coarse.components(); ++comp)
        c(fine_space->dof_map()(t, k), comp) = coarse.local(parent, comp).dot(phi);
    }
  }
  return FEFunction(std::move(fine_space), std::move(c));
}

void write_fef(std::ostream& out, const FEFunction& f) {
  const auto precision = out.precision(17);
  out << "fef v1\n"
      << "degree " << f.space().degree() << '\n'
      << "components " << f.components() << '\n'
      << "dofs " << f.space().dof_count() << '\n';
  for (Index i = 0; i < f.coefficients().rows(); ++i) {
    for (int c = 0; c < f.components(); ++c)
      out << (c ? " " : "") << f.coefficients()(i, c);
    out << '\n';
  }
  out.precision(precision);
}

FEFunction read_fef(std::istream& in, std::shared_ptr<const FESpace> space) {
  int line_no = 0;
  auto next_line = [&](std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos)
        line.erase(hash);
      std::istringstream ss(line);
      tokens.clear();
      for (std::string tok; ss >> tok;)
        tokens.push_back(tok);
      if (!tokens.empty())
        return;
    }
    throw ParseError(line_no + 1, "unexpected end of fef block");
  };
  auto number = [&](const std::string& tok) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw ParseError(line_no, "invalid number '" + tok + "'");
    return v;
  };
  auto keyed = [&](const char* key) {
    std::vector<std::string> tok;
    next_line(tok);
    if (tok.size() != 2 || tok[0] != key)
      throw ParseError(line_no, std::string("expected '") + key + " <value>'");
    return static_cast<long long>(number(tok[1]));
  };

  std::vector<std::string> tok;
  next_line(tok);
  if (tok.size() != 2 || tok[0] != "fef" || tok[1] != "v1")
    throw ParseError(line_no, "expected header 'fef v1'");
  const auto degree = keyed("degree");
  const auto m = keyed("components");
  const auto n = keyed("dofs");
  if (degree != space->degree() || n != space->dof_count() || m < 1)
    throw ValidationError("fef block does not match the target space");
  Eigen::MatrixXd c(n, m);
  for (Index i = 0; i < n; ++i) {
    next_line(tok);
    if (static_cast<long long>(tok.size()) != m)
      throw ParseError(line_no, "expected " + std::to_string(m) + " values");
    for (Index j = 0; j < m; ++j)
      c(i, j) = number(tok[static_cast<std::size_t>(j)]);
  }
  return FEFunction(std::move(space), std::move(c));
}

} // namespace dmpcut
