#include "dbc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <unordered_map>

namespace dbc {

namespace {

constexpr double kPlaneTol = 1e-10;

double shoelace_area(const std::vector<Eigen::Vector2d>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * twice;
}

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-14 ? r : v;
}

std::uint64_t face_key(int a, int b, int c) {
  std::array<std::uint64_t, 3> s{static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b),
                                 static_cast<std::uint64_t>(c)};
  std::sort(s.begin(), s.end());
  return (s[0] << 42) | (s[1] << 21) | s[2];
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

// Vertices of the face opposite local vertex k.
constexpr std::array<std::array<int, 3>, 4> kFaceLocal{{{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};
constexpr std::array<std::array<int, 2>, 6> kEdgeLocal{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

void orient(const std::vector<Vector3d>& x, Tet& t) {
  if (signed_volume(x[t[0]], x[t[1]], x[t[2]], x[t[3]]) < 0.0) std::swap(t[2], t[3]);
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based uniform in [-1, 1) keyed by (seed, vertex, draw).
double keyed_uniform(std::uint64_t seed, std::uint64_t vertex, std::uint64_t draw) {
  const std::uint64_t bits = splitmix64(splitmix64(seed ^ 0x5851f42d4c957f2dULL) ^
                                        splitmix64(vertex * 0x2545f4914f6cdd1dULL + draw));
  return 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
}

} // namespace

double HalfSpaceDomain::volume() const { return shoelace_area(base_polygon); }

double HalfSpaceDomain::surface_area() const {
  double perimeter = 0.0;
  for (std::size_t i = 0; i < base_polygon.size(); ++i)
    perimeter += (base_polygon[(i + 1) % base_polygon.size()] - base_polygon[i]).norm();
  return 2.0 * shoelace_area(base_polygon) + perimeter;
}

HalfSpaceDomain make_prism_domain(double omega) {
  constexpr double pi = std::numbers::pi;
  if (!(omega >= 0.5 * pi - 1e-14 && omega < pi))
    throw DomainError("edge angle must lie in [pi/2, pi), got " + std::to_string(omega));

  HalfSpaceDomain d;
  d.omega = omega;
  d.lambda = pi / omega;
  const double s = snap(std::sin(omega));
  const double c = snap(std::cos(omega));
  d.halfspaces = {
      {Vector3d(0.0, -1.0, 0.0), 0.0}, // phi >= 0
      {Vector3d(-s, c, 0.0), 0.0},     // phi <= omega
      {Vector3d(1.0, 0.0, 0.0), 1.0},
      {Vector3d(0.0, 1.0, 0.0), 1.0},
      {Vector3d(0.0, 0.0, -1.0), 0.0},
      {Vector3d(0.0, 0.0, 1.0), 1.0},
  };
  d.base_polygon = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}};
  const double cot = snap(c / s);
  if (cot >= -1.0) {
    d.base_polygon.emplace_back(cot, 1.0);
  } else {
    // the sector ray leaves the square through x1 = -1
    d.halfspaces.push_back({Vector3d(-1.0, 0.0, 0.0), 1.0});
    d.base_polygon.emplace_back(-1.0, 1.0);
    d.base_polygon.emplace_back(-1.0, snap(-s / c));
  }
  validate_domain(d);
  return d;
}

void validate_domain(const HalfSpaceDomain& domain) {
  constexpr double pi = std::numbers::pi;
  for (const auto& hs : domain.halfspaces)
    if (std::abs(hs.normal.norm() - 1.0) > 1e-12) throw DomainError("half-space normal is not unit length");
  if (!(domain.omega >= 0.5 * pi - 1e-14 && domain.omega < pi))
    throw DomainError("edge angle outside [pi/2, pi)");
  if (!(domain.lambda > 1.0 && domain.lambda <= 2.0 + 1e-14)) throw DomainError("lambda outside (1, 2]");
  const Vector3d on_edge(0.0, 0.0, 0.5);
  int touching = 0;
  for (const auto& hs : domain.halfspaces)
    if (std::abs(hs.offset - hs.normal.dot(on_edge)) <= 1e-12) ++touching;
  if (touching != 2) throw DomainError("the edge r = 0 must lie on exactly two boundary planes");
}

double distance_to_boundary(const HalfSpaceDomain& domain, const Vector3d& x) {
  double dist = std::numeric_limits<double>::infinity();
  for (const auto& hs : domain.halfspaces) {
    const double gap = hs.offset - hs.normal.dot(x);
    if (gap < -1e-12) throw DomainError("point lies outside the domain");
    dist = std::min(dist, gap);
  }
  return std::max(dist, 0.0);
}

double signed_volume(const Vector3d& a, const Vector3d& b, const Vector3d& c, const Vector3d& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

double tet_volume(const Mesh& mesh, int t) {
  const auto& v = mesh.tets[t];
  const auto& x = mesh.vertices;
  return signed_volume(x[v[0]], x[v[1]], x[v[2]], x[v[3]]);
}

double triangle_area(const Mesh& mesh, const Tri& tri) {
  const auto& x = mesh.vertices;
  return 0.5 * (x[tri[1]] - x[tri[0]]).cross(x[tri[2]] - x[tri[0]]).norm();
}

double total_volume(const Mesh& mesh) {
  double v = 0.0;
  for (int t = 0; t < mesh.num_tets(); ++t) v += tet_volume(mesh, t);
  return v;
}

double total_boundary_area(const Mesh& mesh) {
  double a = 0.0;
  for (const auto& f : mesh.boundary_faces) a += triangle_area(mesh, f.vertices);
  return a;
}

double mesh_size(const Mesh& mesh) {
  double h = 0.0;
  for (const auto& t : mesh.tets)
    for (const auto& e : kEdgeLocal)
      h = std::max(h, (mesh.vertices[t[e[0]]] - mesh.vertices[t[e[1]]]).norm());
  return h;
}

double min_shape_quality(const Mesh& mesh) {
  double q = std::numeric_limits<double>::infinity();
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& v = mesh.tets[t];
    double area = 0.0;
    for (const auto& f : kFaceLocal) area += triangle_area(mesh, {v[f[0]], v[f[1]], v[f[2]]});
    double diam = 0.0;
    for (const auto& e : kEdgeLocal) diam = std::max(diam, (mesh.vertices[v[e[0]]] - mesh.vertices[v[e[1]]]).norm());
    q = std::min(q, 3.0 * tet_volume(mesh, t) / area / diam);
  }
  return q;
}

namespace {

struct FaceRecord {
  std::uint64_t key;
  int tet;
  int local;
};

std::vector<FaceRecord> sorted_faces(const Mesh& mesh) {
  if (mesh.num_vertices() >= (1 << 21)) throw DomainError("mesh too large for 21-bit face keys");
  std::vector<FaceRecord> faces;
  faces.reserve(4 * mesh.tets.size());
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& v = mesh.tets[t];
    for (int k = 0; k < 4; ++k) {
      const auto& f = kFaceLocal[k];
      faces.push_back({face_key(v[f[0]], v[f[1]], v[f[2]]), t, k});
    }
  }
  std::sort(faces.begin(), faces.end(), [](const FaceRecord& a, const FaceRecord& b) {
    return a.key != b.key ? a.key < b.key : a.tet < b.tet;
  });
  return faces;
}

int plane_of(const Mesh& mesh, const Tri& tri) {
  const auto& hs = mesh.domain->halfspaces;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    bool on = true;
    for (int v : tri) on = on && std::abs(hs[i].offset - hs[i].normal.dot(mesh.vertices[v])) <= kPlaneTol;
    if (on) return static_cast<int>(i);
  }
  return -1;
}

} // namespace

void finalize_topology(Mesh& mesh) {
  const auto faces = sorted_faces(mesh);
  mesh.boundary_faces.clear();
  for (std::size_t i = 0; i < faces.size();) {
    std::size_t j = i;
    while (j < faces.size() && faces[j].key == faces[i].key) ++j;
    if (j - i > 2) throw DomainError("non-manifold face shared by more than two tets");
    if (j - i == 1) {
      const auto& t = mesh.tets[faces[i].tet];
      const auto& f = kFaceLocal[faces[i].local];
      BoundaryFace bf{{t[f[0]], t[f[1]], t[f[2]]}, -1, faces[i].tet};
      bf.face_id = plane_of(mesh, bf.vertices);
      if (bf.face_id < 0) throw DomainError("free face does not lie on the domain boundary");
      mesh.boundary_faces.push_back(bf);
    }
    i = j;
  }
  std::sort(mesh.boundary_faces.begin(), mesh.boundary_faces.end(),
            [](const BoundaryFace& a, const BoundaryFace& b) {
              return a.tet != b.tet ? a.tet < b.tet : a.vertices < b.vertices;
            });
  mesh.boundary_vertex_flags.assign(mesh.vertices.size(), false);
  for (const auto& f : mesh.boundary_faces)
    for (int v : f.vertices) mesh.boundary_vertex_flags[v] = true;
  mesh.h = mesh_size(mesh);
}

MeshCheck check_mesh(const Mesh& mesh) {
  MeshCheck check;
  for (int t = 0; t < mesh.num_tets(); ++t)
    if (!(tet_volume(mesh, t) > 0.0)) {
      check.positive_volumes = false;
      check.message = "tet " + std::to_string(t) + " has non-positive volume";
    }

  const auto faces = sorted_faces(mesh);
  std::vector<std::uint64_t> free_faces;
  for (std::size_t i = 0; i < faces.size();) {
    std::size_t j = i;
    while (j < faces.size() && faces[j].key == faces[i].key) ++j;
    if (j - i > 2) {
      check.conforming = false;
      check.message = "face shared by more than two tets";
    }
    if (j - i == 1) free_faces.push_back(faces[i].key);
    i = j;
  }

  std::vector<std::uint64_t> stored;
  stored.reserve(mesh.boundary_faces.size());
  for (const auto& f : mesh.boundary_faces) {
    stored.push_back(face_key(f.vertices[0], f.vertices[1], f.vertices[2]));
    if (f.face_id < 0 || plane_of(mesh, f.vertices) < 0) {
      check.boundary_consistent = false;
      check.message = "boundary face off the domain boundary";
    }
  }
  std::sort(stored.begin(), stored.end());
  if (stored != free_faces) {
    check.boundary_consistent = false;
    check.message = "stored boundary faces differ from the topological boundary";
  }
  // A hole inside the polyhedron would show up as a free face off every plane.
  for (const auto key : free_faces) {
    Tri tri{static_cast<int>(key >> 42), static_cast<int>((key >> 21) & 0x1fffff), static_cast<int>(key & 0x1fffff)};
    if (plane_of(mesh, tri) < 0) {
      check.conforming = false;
      check.message = "free face inside the domain (non-conforming mesh)";
    }
  }
  return check;
}

Mesh build_prism_mesh(const HalfSpaceDomain& domain, int level) {
  return build_prism_mesh(std::make_shared<const HalfSpaceDomain>(domain), level);
}

Mesh build_prism_mesh(std::shared_ptr<const HalfSpaceDomain> domain, int level) {
  if (level < 0) throw DomainError("refinement level must be non-negative");
  validate_domain(*domain);
  const auto& base = domain->base_polygon;
  const int n = static_cast<int>(base.size());
  if (n < 3) throw DomainError("base polygon needs at least three vertices");

  Mesh mesh;
  mesh.domain = domain;
  for (int layer = 0; layer < 2; ++layer)
    for (const auto& p : base) mesh.vertices.emplace_back(p.x(), p.y(), static_cast<double>(layer));

  // Fan from the origin keeps the (0,0)-(1,1) diagonal. Each prism is cut so
  // that every quad face carries the diagonal from its lower-index bottom
  // vertex to its higher-index top vertex, which makes neighbours agree.
  for (int i = 1; i + 1 < n; ++i) {
    std::array<int, 3> tri{0, i, i + 1};
    std::sort(tri.begin(), tri.end());
    const int a0 = tri[0], b0 = tri[1], c0 = tri[2];
    const int a1 = a0 + n, b1 = b0 + n, c1 = c0 + n;
    for (Tet t : {Tet{a0, b0, c0, c1}, Tet{a0, b0, b1, c1}, Tet{a0, a1, b1, c1}}) {
      orient(mesh.vertices, t);
      mesh.tets.push_back(t);
    }
  }
  finalize_topology(mesh);
  for (int l = 0; l < level; ++l) mesh = refine_uniform(mesh);
  return mesh;
}

Mesh refine_uniform(const Mesh& mesh) {
  Mesh fine;
  fine.domain = mesh.domain;
  fine.level = mesh.level + 1;
  fine.vertices = mesh.vertices;
  fine.tets.reserve(8 * mesh.tets.size());
  fine.midpoint_parents = mesh.midpoint_parents;
  auto& parents = fine.midpoint_parents.emplace_back();

  std::unordered_map<std::uint64_t, int> midpoint;
  midpoint.reserve(mesh.tets.size() * 2);
  auto mid = [&](int a, int b) {
    const auto [it, inserted] = midpoint.try_emplace(edge_key(a, b), static_cast<int>(fine.vertices.size()));
    if (inserted) {
      fine.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
      parents.push_back({a, b});
    }
    return it->second;
  };

  for (const auto& t : mesh.tets) {
    std::array<int, 6> m{};
    for (int e = 0; e < 6; ++e) m[e] = mid(t[kEdgeLocal[e][0]], t[kEdgeLocal[e][1]]);
    const int m01 = m[0], m02 = m[1], m03 = m[2], m12 = m[3], m13 = m[4], m23 = m[5];

    std::array<Tet, 8> kids{};
    kids[0] = {t[0], m01, m02, m03};
    kids[1] = {m01, t[1], m12, m13};
    kids[2] = {m02, m12, t[2], m23};
    kids[3] = {m03, m13, m23, t[3]};

    const auto& x = fine.vertices;
    const double d0 = (x[m01] - x[m23]).squaredNorm();
    const double d1 = (x[m02] - x[m13]).squaredNorm();
    const double d2 = (x[m03] - x[m12]).squaredNorm();
    // octahedron: the diagonal plus the 4-cycle of remaining midpoints
    std::array<int, 2> diag{};
    std::array<int, 4> ring{};
    if (d0 <= d1 && d0 <= d2) {
      diag = {m01, m23};
      ring = {m02, m03, m13, m12};
    } else if (d1 <= d2) {
      diag = {m02, m13};
      ring = {m01, m03, m23, m12};
    } else {
      diag = {m03, m12};
      ring = {m01, m02, m23, m13};
    }
    for (int k = 0; k < 4; ++k) kids[4 + k] = {diag[0], diag[1], ring[k], ring[(k + 1) % 4]};

    for (auto& kid : kids) {
      orient(fine.vertices, kid);
      fine.tets.push_back(kid);
    }
  }
  finalize_topology(fine);
  return fine;
}

Mesh perturb_interior(const Mesh& mesh, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0 && sigma <= 0.3)) throw DomainError("perturbation sigma must lie in [0, 0.3]");
  Mesh out = mesh;
  if (sigma == 0.0) return out;

  const int nv = mesh.num_vertices();
  std::vector<int> offsets(nv + 1, 0);
  for (const auto& t : mesh.tets)
    for (int v : t) ++offsets[v + 1];
  for (int v = 0; v < nv; ++v) offsets[v + 1] += offsets[v];
  std::vector<int> incident(offsets[nv]);
  {
    auto fill = offsets;
    for (int t = 0; t < mesh.num_tets(); ++t)
      for (int v : mesh.tets[t]) incident[fill[v]++] = t;
  }

  std::vector<double> min_edge(nv, std::numeric_limits<double>::infinity());
  for (const auto& t : mesh.tets)
    for (const auto& e : kEdgeLocal) {
      const double len = (mesh.vertices[t[e[0]]] - mesh.vertices[t[e[1]]]).norm();
      min_edge[t[e[0]]] = std::min(min_edge[t[e[0]]], len);
      min_edge[t[e[1]]] = std::min(min_edge[t[e[1]]], len);
    }

  for (int v = 0; v < nv; ++v) {
    if (mesh.boundary_vertex_flags[v]) continue;
    Vector3d dir;
    std::uint64_t draw = 0;
    do {
      dir = Vector3d(keyed_uniform(seed, v, draw), keyed_uniform(seed, v, draw + 1), keyed_uniform(seed, v, draw + 2));
      draw += 3;
    } while (dir.squaredNorm() > 1.0);

    const Vector3d origin = out.vertices[v];
    Vector3d step = sigma * min_edge[v] * dir;
    for (int attempt = 0; attempt < 60; ++attempt) {
      out.vertices[v] = origin + step;
      bool valid = true;
      for (int k = offsets[v]; k < offsets[v + 1] && valid; ++k) valid = tet_volume(out, incident[k]) > 0.0;
      if (valid) break;
      out.vertices[v] = origin;
      step *= 0.5;
    }
  }
  out.h = mesh_size(out);
  return out;
}

void write_vtk(const Mesh& mesh, const std::filesystem::path& path, std::span<const PointField> fields) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
  file.precision(17);
  file << "# vtk DataFile Version 3.0\n";
  file << "dirichlet boundary control level " << mesh.level << "\n";
  file << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  file << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& x : mesh.vertices) file << x.x() << ' ' << x.y() << ' ' << x.z() << '\n';
  file << "CELLS " << mesh.num_tets() << ' ' << 5 * mesh.num_tets() << '\n';
  for (const auto& t : mesh.tets) file << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  file << "CELL_TYPES " << mesh.num_tets() << '\n';
  for (int t = 0; t < mesh.num_tets(); ++t) file << "10\n";
  if (!fields.empty()) {
    file << "POINT_DATA " << mesh.num_vertices() << '\n';
    for (const auto& field : fields) {
      if (static_cast<int>(field.values.size()) != mesh.num_vertices())
        throw std::invalid_argument("point field '" + field.name + "' has wrong length");
      file << "SCALARS " << field.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : field.values) file << v << '\n';
    }
  }
}

} // namespace dbc
