#pragma once

#include "dbc/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dbc {

/// Closed half-space { x : normal . x <= offset } with a unit normal.
struct HalfSpace {
  Vector3d normal;
  double offset = 0.0;
};

/// Convex polyhedron given as an intersection of half-spaces. The prism
/// benchmarks have an interior edge along the x3 axis with opening angle
/// `omega`; `lambda = pi / omega` is the corresponding singular exponent.
struct HalfSpaceDomain {
  std::vector<HalfSpace> halfspaces;
  double omega = 0.0;
  double lambda = 0.0;

  /// Base polygon in the (x1, x2) plane, counter-clockwise, starting at the
  /// origin. The domain is this polygon times (0, 1).
  std::vector<Eigen::Vector2d> base_polygon;

  double volume() const;
  double surface_area() const;
};

/// Prism over ((-1,1)^2 intersected with the sector 0 < phi < omega) x (0,1).
/// Throws DomainError unless omega lies in [pi/2, pi).
HalfSpaceDomain make_prism_domain(double omega);

/// Checks unit normals, the two-plane edge condition and the angle range.
void validate_domain(const HalfSpaceDomain& domain);

/// min_i (b_i - a_i . x); the exact distance to the boundary for a convex
/// half-space intersection. Throws DomainError for points outside.
double distance_to_boundary(const HalfSpaceDomain& domain, const Vector3d& x);

using Tet = std::array<int, 4>;
using Tri = std::array<int, 3>;

struct BoundaryFace {
  Tri vertices;
  int face_id = -1; ///< index into HalfSpaceDomain::halfspaces
  int tet = -1;     ///< the unique tet owning this face
};

/// Conforming, positively oriented tetrahedral mesh. Immutable once built.
struct Mesh {
  std::shared_ptr<const HalfSpaceDomain> domain;
  std::vector<Vector3d> vertices;
  std::vector<Tet> tets;
  std::vector<BoundaryFace> boundary_faces;
  std::vector<bool> boundary_vertex_flags;
  int level = 0;
  double h = 0.0;
  /// Refinement history, coarsest step first. Step k lists, for every vertex
  /// created by that refinement, the two vertices of the parent edge; the
  /// created vertices follow the parent's vertices in index order.
  std::vector<std::vector<std::array<int, 2>>> midpoint_parents;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_tets() const { return static_cast<int>(tets.size()); }
};

double signed_volume(const Vector3d& a, const Vector3d& b, const Vector3d& c,
                     const Vector3d& d);
double tet_volume(const Mesh& mesh, int t);
double triangle_area(const Mesh& mesh, const Tri& tri);
double total_volume(const Mesh& mesh);
double total_boundary_area(const Mesh& mesh);

/// Longest edge over all tets.
double mesh_size(const Mesh& mesh);

/// min over tets of inradius / longest edge.
double min_shape_quality(const Mesh& mesh);

/// Coarsest extruded mesh refined `level` times.
Mesh build_prism_mesh(const HalfSpaceDomain& domain, int level);
Mesh build_prism_mesh(std::shared_ptr<const HalfSpaceDomain> domain, int level);

/// Red refinement: each tet split into 8 through its edge midpoints. The
/// inner octahedron is cut along its shortest diagonal.
Mesh refine_uniform(const Mesh& mesh);

/// Moves every interior vertex by a reproducible pseudo-random vector of
/// length at most sigma times its shortest incident edge. Boundary vertices
/// stay put; a displacement that would invert a tet is halved until valid.
Mesh perturb_interior(const Mesh& mesh, double sigma, std::uint64_t seed);

/// Recomputes boundary faces (faces owned by one tet), labels them with the
/// polyhedron face they lie on, and sets boundary flags and h. Throws
/// DomainError if a free face does not lie on the domain boundary.
void finalize_topology(Mesh& mesh);

struct MeshCheck {
  bool positive_volumes = true;
  bool conforming = true;      ///< every interior face shared by exactly two tets
  bool boundary_consistent = true;
  std::string message;
  bool ok() const { return positive_volumes && conforming && boundary_consistent; }
};

MeshCheck check_mesh(const Mesh& mesh);

/// Legacy ASCII VTK unstructured grid (cell type 10) with optional point data.
struct PointField {
  std::string name;
  std::span<const double> values;
};
void write_vtk(const Mesh& mesh, const std::filesystem::path& path,
               std::span<const PointField> fields = {});

} // namespace dbc
