#include "dmpcut/mesh.hpp"
#include "dmpcut/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <utility>

namespace dmpcut {

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

constexpr int kLocalEdges[3][2] = {{0, 1}, {1, 2}, {2, 0}};

double uniform01(std::mt19937_64& rng) {
  // explicit 53-bit conversion: std::uniform_real_distribution is not
  // reproducible across standard libraries
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Side of the unit square an edge lies on: 1 bottom, 2 right, 3 top, 4 left.
int unit_square_marker(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d m = 0.5 * (a + b);
  const double d[4] = {std::abs(m.y()), std::abs(1.0 - m.x()), std::abs(1.0 - m.y()),
                       std::abs(m.x())};
  return static_cast<int>(std::min_element(d, d + 4) - d) + 1;
}

// Fills boundary_edges from the triangle topology, in triangle order.
void attach_unit_square_boundary(Mesh& mesh) {
  std::map<EdgeKey, int> count;
  for (Index t = 0; t < mesh.triangle_count(); ++t)
    for (const auto& e : kLocalEdges)
      ++count[edge_key(mesh.triangles(t, e[0]), mesh.triangles(t, e[1]))];

  std::vector<std::array<int, 3>> edges;
  for (Index t = 0; t < mesh.triangle_count(); ++t) {
    for (const auto& e : kLocalEdges) {
      const int a = mesh.triangles(t, e[0]);
      const int b = mesh.triangles(t, e[1]);
      if (count[edge_key(a, b)] == 1)
        edges.push_back({a, b, unit_square_marker(mesh.vertex(a), mesh.vertex(b))});
    }
  }
  mesh.boundary_edges.resize(static_cast<Index>(edges.size()), 2);
  mesh.boundary_markers.resize(static_cast<Index>(edges.size()));
  for (std::size_t k = 0; k < edges.size(); ++k) {
    mesh.boundary_edges(static_cast<Index>(k), 0) = edges[k][0];
    mesh.boundary_edges(static_cast<Index>(k), 1) = edges[k][1];
    mesh.boundary_markers(static_cast<Index>(k)) = edges[k][2];
  }
}

Mesh structured_mesh(int n) {
  Mesh mesh;
  const int nv = n + 1;
  const double h = 1.0 / n;
  mesh.vertices.resize(nv * nv, 2);
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nv; ++i)
      mesh.vertices.row(j * nv + i) << (i == n ? 1.0 : i * h), (j == n ? 1.0 : j * h);

  mesh.triangles.resize(2 * n * n, 3);
  Index t = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = j * nv + i, v10 = v00 + 1, v01 = v00 + nv, v11 = v01 + 1;
      mesh.triangles.row(t++) << v00, v10, v11;
      mesh.triangles.row(t++) << v00, v11, v01;
    }
  }
  return mesh;
}

// Strips comments and splits into tokens; empty lines are skipped.
struct LineReader {
  std::istream& in;
  int line_no = 0;

  bool next(std::vector<std::string>& tokens) {
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
        return true;
    }
    return false;
  }

  std::vector<std::string> expect(std::size_t count, const char* what) {
    std::vector<std::string> tokens;
    if (!next(tokens))
      throw ParseError(line_no + 1, std::string("unexpected end of file, expected ") + what);
    if (tokens.size() != count)
      throw ParseError(line_no, std::string("expected ") + std::to_string(count) +
                                    " fields for " + what + ", got " +
                                    std::to_string(tokens.size()));
    return tokens;
  }
};

template <typename T>
T parse_number(const std::string& token, int line) {
  T value{};
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError(line, "invalid number '" + token + "'");
  return value;
}

Index parse_count(LineReader& reader, const char* keyword) {
  auto tokens = reader.expect(2, keyword);
  if (tokens[0] != keyword)
    throw ParseError(reader.line_no, std::string("expected '") + keyword + "'");
  const long long count = parse_number<long long>(tokens[1], reader.line_no);
  if (count < 0)
    throw ParseError(reader.line_no, "negative count");
  return static_cast<Index>(count);
}

} // namespace

double Mesh::signed_area(Index t) const {
  const Eigen::Vector2d a = vertex(triangles(t, 0));
  const Eigen::Vector2d b = vertex(triangles(t, 1));
  const Eigen::Vector2d c = vertex(triangles(t, 2));
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

double Mesh::total_area() const {
  double area = 0.0;
  for (Index t = 0; t < triangle_count(); ++t)
    area += signed_area(t);
  return area;
}

void validate(const Mesh& mesh) {
  const Index nv = mesh.vertex_count();
  if (nv < 3 || mesh.triangle_count() < 1)
    throw ValidationError("mesh needs at least one triangle");
  if (!mesh.vertices.allFinite())
    throw ValidationError("non-finite vertex coordinate");

  const Eigen::Vector2d lo = mesh.vertices.colwise().minCoeff();
  const Eigen::Vector2d hi = mesh.vertices.colwise().maxCoeff();
  const double bbox_area = (hi - lo).prod();
  if (!(bbox_area > 0.0))
    throw ValidationError("degenerate bounding box");

  std::vector<char> used(static_cast<std::size_t>(nv), 0);
  std::map<EdgeKey, int> count;
  for (Index t = 0; t < mesh.triangle_count(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const int v = mesh.triangles(t, k);
      if (v < 0 || v >= nv)
        throw ValidationError("triangle " + std::to_string(t) + " references vertex " +
                              std::to_string(v) + " out of range");
      used[static_cast<std::size_t>(v)] = 1;
    }
    if (!(mesh.signed_area(t) > 1e-14 * bbox_area))
      throw ValidationError("triangle " + std::to_string(t) +
                            " has non-positive or vanishing area");
    for (const auto& e : kLocalEdges) {
      const int c = ++count[edge_key(mesh.triangles(t, e[0]), mesh.triangles(t, e[1]))];
      if (c > 2)
        throw ValidationError("edge shared by more than two triangles (triangle " +
                              std::to_string(t) + ")");
    }
  }
  if (std::find(used.begin(), used.end(), 0) != used.end())
    throw ValidationError("vertex not referenced by any triangle");

  if (mesh.boundary_markers.size() != mesh.boundary_edges.rows())
    throw ValidationError("boundary marker count does not match boundary edge count");

  std::set<EdgeKey> declared;
  for (Index e = 0; e < mesh.boundary_edges.rows(); ++e) {
    const int a = mesh.boundary_edges(e, 0), b = mesh.boundary_edges(e, 1);
    if (a < 0 || a >= nv || b < 0 || b >= nv || a == b)
      throw ValidationError("boundary edge " + std::to_string(e) + " is invalid");
    if (!declared.insert(edge_key(a, b)).second)
      throw ValidationError("duplicate boundary edge " + std::to_string(e));
  }
  std::set<EdgeKey> actual;
  for (const auto& [key, c] : count)
    if (c == 1)
      actual.insert(key);
  if (declared != actual)
    throw ValidationError("boundary edges differ from the edges with a single incident triangle");

  // A hanging vertex lies inside a single-incidence edge and is itself an
  // endpoint of single-incidence edges, so checking those endpoints suffices.
  std::set<int> candidates;
  for (const auto& [a, b] : actual) {
    candidates.insert(a);
    candidates.insert(b);
  }
  for (const auto& [a, b] : actual) {
    const Eigen::Vector2d pa = mesh.vertex(a), pb = mesh.vertex(b);
    const Eigen::Vector2d d = pb - pa;
    const double len2 = d.squaredNorm();
    for (int v : candidates) {
      if (v == a || v == b)
        continue;
      const Eigen::Vector2d w = mesh.vertex(v) - pa;
      const double t = w.dot(d) / len2;
      const double cross = d.x() * w.y() - d.y() * w.x();
      if (t > 1e-12 && t < 1.0 - 1e-12 && std::abs(cross) <= 1e-12 * len2)
        throw ValidationError("nonconforming mesh: vertex " + std::to_string(v) +
                              " hangs on edge (" + std::to_string(a) + "," +
                              std::to_string(b) + ")");
    }
  }
}

MeshEdges build_edges(const Mesh& mesh) {
  std::map<EdgeKey, int> index;
  for (Index t = 0; t < mesh.triangle_count(); ++t)
    for (const auto& e : kLocalEdges)
      index.emplace(edge_key(mesh.triangles(t, e[0]), mesh.triangles(t, e[1])), 0);

  MeshEdges result;
  result.edges.resize(static_cast<Index>(index.size()), 2);
  result.incidence = Eigen::VectorXi::Zero(static_cast<Index>(index.size()));
  int k = 0;
  for (auto& [key, id] : index) {
    id = k;
    result.edges.row(k++) << key.first, key.second;
  }
  result.triangle_edges.resize(mesh.triangle_count(), 3);
  for (Index t = 0; t < mesh.triangle_count(); ++t) {
    for (int l = 0; l < 3; ++l) {
      const int id = index.at(
          edge_key(mesh.triangles(t, kLocalEdges[l][0]), mesh.triangles(t, kLocalEdges[l][1])));
      result.triangle_edges(t, l) = id;
      ++result.incidence(id);
    }
  }
  return result;
}

std::string to_string(MeshKind kind) {
  switch (kind) {
  case MeshKind::structured:
    return "structured";
  case MeshKind::perturbed:
    return "perturbed";
  case MeshKind::obtuse_band:
    return "obtuse_band";
  }
  return "?";
}

MeshKind parse_mesh_kind(const std::string& name) {
  if (name == "structured")
    return MeshKind::structured;
  if (name == "perturbed")
    return MeshKind::perturbed;
  if (name == "obtuse_band")
    return MeshKind::obtuse_band;
  throw ConfigError("unknown mesh kind '" + name + "'");
}

Mesh generate(const MeshFamily& family) {
  const int n = family.n;
  if (n < 1)
    throw ConfigError("mesh resolution n must be >= 1");
  if (!(family.perturbation >= 0.0 && family.perturbation < 0.5))
    throw ConfigError("mesh perturbation must lie in [0, 0.5)");
  if (family.kind == MeshKind::obtuse_band && n < 2)
    throw ConfigError("obtuse_band meshes need n >= 2");

  Mesh mesh = structured_mesh(n);
  const int nv = n + 1;
  const double h = 1.0 / n;
  std::mt19937_64 rng(family.seed);

  switch (family.kind) {
  case MeshKind::structured:
    break;
  case MeshKind::perturbed: {
    const double amplitude = family.perturbation * h / 3.0;
    for (int j = 1; j < n; ++j) {
      for (int i = 1; i < n; ++i) {
        const double dx = 2.0 * uniform01(rng) - 1.0;
        const double dy = 2.0 * uniform01(rng) - 1.0;
        mesh.vertices(j * nv + i, 0) += amplitude * dx;
        mesh.vertices(j * nv + i, 1) += amplitude * dy;
      }
    }
    break;
  }
  case MeshKind::obtuse_band: {
    const int row = static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
    const double sign = (rng() & 1u) ? 1.0 : -1.0;
    const double shear = sign * (0.35 + 0.1 * uniform01(rng)) * h;
    const int line = row + 1;
    const double y = (row + 1.0 - 2.0 * family.perturbation) * h;
    for (int i = 0; i <= n; ++i) {
      mesh.vertices(line * nv + i, 1) = y;
      if (i > 0 && i < n)
        mesh.vertices(line * nv + i, 0) += shear;
    }
    break;
  }
  }

  attach_unit_square_boundary(mesh);
  validate(mesh);
  return mesh;
}

std::vector<int> boundary_vertices(const Mesh& mesh) {
  std::vector<int> result(mesh.boundary_edges.data(),
                          mesh.boundary_edges.data() + mesh.boundary_edges.size());
  std::sort(result.begin(), result.end());
  result.erase(std::unique(result.begin(), result.end()), result.end());
  return result;
}

Eigen::MatrixX3d interior_angles(const Mesh& mesh) {
  Eigen::MatrixX3d angles(mesh.triangle_count(), 3);
  for (Index t = 0; t < mesh.triangle_count(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector2d p = mesh.vertex(mesh.triangles(t, k));
      const Eigen::Vector2d a = mesh.vertex(mesh.triangles(t, (k + 1) % 3)) - p;
      const Eigen::Vector2d b = mesh.vertex(mesh.triangles(t, (k + 2) % 3)) - p;
      angles(t, k) = std::atan2(std::abs(a.x() * b.y() - a.y() * b.x()), a.dot(b));
    }
  }
  return angles;
}

double max_interior_angle(const Mesh& mesh) { return interior_angles(mesh).maxCoeff(); }

void write_mesh(std::ostream& out, const Mesh& mesh) {
  const auto precision = out.precision(17);
  out << "mesh2d v1\n";
  out << "vertices " << mesh.vertex_count() << '\n';
  for (Index i = 0; i < mesh.vertex_count(); ++i)
    out << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << '\n';
  out << "triangles " << mesh.triangle_count() << '\n';
  for (Index t = 0; t < mesh.triangle_count(); ++t)
    out << mesh.triangles(t, 0) << ' ' << mesh.triangles(t, 1) << ' ' << mesh.triangles(t, 2)
        << '\n';
  out << "boundary " << mesh.boundary_edges.rows() << '\n';
  for (Index e = 0; e < mesh.boundary_edges.rows(); ++e)
    out << mesh.boundary_edges(e, 0) << ' ' << mesh.boundary_edges(e, 1) << ' '
        << mesh.boundary_markers(e) << '\n';
  out.precision(precision);
}

Mesh read_mesh(std::istream& in) {
  LineReader reader{in};
  auto header = reader.expect(2, "header");
  if (header[0] != "mesh2d" || header[1] != "v1")
    throw ParseError(reader.line_no, "expected header 'mesh2d v1'");

  Mesh mesh;
  const Index nv = parse_count(reader, "vertices");
  mesh.vertices.resize(nv, 2);
  for (Index i = 0; i < nv; ++i) {
    auto tok = reader.expect(2, "vertex");
    mesh.vertices(i, 0) = parse_number<double>(tok[0], reader.line_no);
    mesh.vertices(i, 1) = parse_number<double>(tok[1], reader.line_no);
  }
  const Index nt = parse_count(reader, "triangles");
  mesh.triangles.resize(nt, 3);
  for (Index t = 0; t < nt; ++t) {
    auto tok = reader.expect(3, "triangle");
    for (int k = 0; k < 3; ++k)
      mesh.triangles(t, k) = parse_number<int>(tok[static_cast<std::size_t>(k)], reader.line_no);
  }
  const Index nb = parse_count(reader, "boundary");
  mesh.boundary_edges.resize(nb, 2);
  mesh.boundary_markers.resize(nb);
  for (Index e = 0; e < nb; ++e) {
    auto tok = reader.expect(3, "boundary edge");
    mesh.boundary_edges(e, 0) = parse_number<int>(tok[0], reader.line_no);
    mesh.boundary_edges(e, 1) = parse_number<int>(tok[1], reader.line_no);
    mesh.boundary_markers(e) = parse_number<int>(tok[2], reader.line_no);
  }
  std::vector<std::string> extra;
  if (reader.next(extra))
    throw ParseError(reader.line_no, "trailing content after boundary section");

  validate(mesh);
  return mesh;
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw Error("cannot open '" + path.string() + "' for writing");
  write_mesh(out, mesh);
  if (!out)
    throw Error("failed writing '" + path.string() + "'");
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open '" + path.string() + "'");
  return read_mesh(in);
}

Refinement refine(const Mesh& coarse, int levels) {
  if (levels < 0)
    throw ConfigError("refinement levels must be >= 0");
  Refinement r;
  r.fine = coarse;
  r.parent.resize(coarse.triangle_count());
  r.vertex_barycentric.assign(static_cast<std::size_t>(coarse.triangle_count()),
                              Eigen::Matrix3d::Identity());
  for (Index t = 0; t < coarse.triangle_count(); ++t)
    r.parent(t) = static_cast<int>(t);

  for (int level = 0; level < levels; ++level) {
    const Mesh& m = r.fine;
    const MeshEdges topo = build_edges(m);
    const Index nv = m.vertex_count();
    const Index ne = topo.edges.rows();

    Mesh next;
    next.vertices.resize(nv + ne, 2);
    next.vertices.topRows(nv) = m.vertices;
    for (Index e = 0; e < ne; ++e)
      next.vertices.row(nv + e) =
          0.5 * (m.vertices.row(topo.edges(e, 0)) + m.vertices.row(topo.edges(e, 1)));

    next.triangles.resize(4 * m.triangle_count(), 3);
    Eigen::VectorXi parent(4 * m.triangle_count());
    std::vector<Eigen::Matrix3d> bary(static_cast<std::size_t>(4 * m.triangle_count()));
    for (Index t = 0; t < m.triangle_count(); ++t) {
      const int a = m.triangles(t, 0), b = m.triangles(t, 1), c = m.triangles(t, 2);
      const int ab = static_cast<int>(nv + topo.triangle_edges(t, 0));
      const int bc = static_cast<int>(nv + topo.triangle_edges(t, 1));
      const int ca = static_cast<int>(nv + topo.triangle_edges(t, 2));
      const Eigen::Matrix3d& pb = r.vertex_barycentric[static_cast<std::size_t>(t)];
      const Eigen::RowVector3d ba = pb.row(0), bb = pb.row(1), bcc = pb.row(2);
      const Eigen::RowVector3d mab = 0.5 * (ba + bb), mbc = 0.5 * (bb + bcc),
                               mca = 0.5 * (bcc + ba);
      const Index base = 4 * t;
      next.triangles.row(base + 0) << a, ab, ca;
      next.triangles.row(base + 1) << ab, b, bc;
      next.triangles.row(base + 2) << ca, bc, c;
      next.triangles.row(base + 3) << ab, bc, ca;
      Eigen::Matrix3d child;
      child << ba, mab, mca;
      bary[static_cast<std::size_t>(base + 0)] = child;
      child << mab, bb, mbc;
      bary[static_cast<std::size_t>(base + 1)] = child;
      child << mca, mbc, bcc;
      bary[static_cast<std::size_t>(base + 2)] = child;
      child << mab, mbc, mca;
      bary[static_cast<std::size_t>(base + 3)] = child;
      for (int k = 0; k < 4; ++k)
        parent(base + k) = r.parent(t);
    }

    std::map<EdgeKey, int> edge_id;
    for (Index e = 0; e < ne; ++e)
      edge_id.emplace(EdgeKey{topo.edges(e, 0), topo.edges(e, 1)}, static_cast<int>(e));
    next.boundary_edges.resize(2 * m.boundary_edges.rows(), 2);
    next.boundary_markers.resize(2 * m.boundary_edges.rows());
    for (Index e = 0; e < m.boundary_edges.rows(); ++e) {
      const int a = m.boundary_edges(e, 0), b = m.boundary_edges(e, 1);
      const int mid = static_cast<int>(nv + edge_id.at(edge_key(a, b)));
      next.boundary_edges.row(2 * e) << a, mid;
      next.boundary_edges.row(2 * e + 1) << mid, b;
      next.boundary_markers(2 * e) = next.boundary_markers(2 * e + 1) = m.boundary_markers(e);
    }

    r.fine = std::move(next);
    r.parent = std::move(parent);
    r.vertex_barycentric = std::move(bary);
  }
  return r;
}

Eigen::Vector3d barycentric_coordinates(const Mesh& mesh, Index t, const Eigen::Vector2d& x) {
  const Eigen::Vector2d a = mesh.vertex(mesh.triangles(t, 0));
  Eigen::Matrix2d B;
  B.col(0) = mesh.vertex(mesh.triangles(t, 1)) - a;
  B.col(1) = mesh.vertex(mesh.triangles(t, 2)) - a;
  const Eigen::Vector2d l = B.inverse() * (x - a);
  return {1.0 - l.x() - l.y(), l.x(), l.y()};
}

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
  lo_ = mesh.vertices.colwise().minCoeff().transpose();
  hi_ = mesh.vertices.colwise().maxCoeff().transpose();
  bins_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.triangle_count()))));
  buckets_.assign(static_cast<std::size_t>(bins_ * bins_), {});
  const Eigen::Vector2d extent = hi_ - lo_;
  auto bin = [&](double v, int axis) {
    const int b = static_cast<int>((v - lo_(axis)) / extent(axis) * bins_);
    return std::clamp(b, 0, bins_ - 1);
  };
  for (Index t = 0; t < mesh.triangle_count(); ++t) {
    Eigen::Vector2d tlo = mesh.vertex(mesh.triangles(t, 0)), thi = tlo;
    for (int k = 1; k < 3; ++k) {
      tlo = tlo.cwiseMin(mesh.vertex(mesh.triangles(t, k)));
      thi = thi.cwiseMax(mesh.vertex(mesh.triangles(t, k)));
    }
    for (int by = bin(tlo.y(), 1); by <= bin(thi.y(), 1); ++by)
      for (int bx = bin(tlo.x(), 0); bx <= bin(thi.x(), 0); ++bx)
        buckets_[static_cast<std::size_t>(by * bins_ + bx)].push_back(static_cast<int>(t));
  }
}

std::optional<PointLocation> PointLocator::locate(const Eigen::Vector2d& x) const {
  const Eigen::Vector2d extent = hi_ - lo_;
  const int bx = std::clamp(static_cast<int>((x.x() - lo_.x()) / extent.x() * bins_), 0, bins_ - 1);
  const int by = std::clamp(static_cast<int>((x.y() - lo_.y()) / extent.y() * bins_), 0, bins_ - 1);
  std::optional<PointLocation> best;
  double best_min = -1e-10;
  for (int t : buckets_[static_cast<std::size_t>(by * bins_ + bx)]) {
    const Eigen::Vector3d l = barycentric_coordinates(*mesh_, t, x);
    if (l.minCoeff() > best_min) {
      best_min = l.minCoeff();
      Eigen::Vector3d clamped = l.cwiseMax(0.0);
      clamped /= clamped.sum();
      best = PointLocation{t, clamped};
    }
  }
  return best;
}

std::vector<Eigen::Vector2d> sample_grid(const Mesh& mesh, int n) {
  const Eigen::Vector2d lo = mesh.vertices.colwise().minCoeff().transpose();
  const Eigen::Vector2d hi = mesh.vertices.colwise().maxCoeff().transpose();
  std::vector<Eigen::Vector2d> points;
  points.reserve(static_cast<std::size_t>(n * n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double sx = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
      const double sy = n == 1 ? 0.5 : static_cast<double>(j) / (n - 1);
      points.emplace_back(lo.x() + sx * (hi.x() - lo.x()), lo.y() + sy * (hi.y() - lo.y()));
    }
  return points;
}

} // namespace dmpcut
