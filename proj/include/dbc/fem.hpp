#pragma once

#include "dbc/mesh.hpp"
#include "dbc/quadrature.hpp"
#include "dbc/types.hpp"

#include <functional>
#include <vector>

namespace dbc {

/// P1 degrees of freedom: one per vertex. Boundary vertices span the trace
/// space, interior vertices the homogeneous-Dirichlet space.
struct DofMap {
  std::vector<int> boundary;       ///< boundary vertex ids, increasing
  std::vector<int> interior;       ///< interior vertex ids, increasing
  std::vector<int> boundary_index; ///< vertex -> position in `boundary`, or -1

  int num_vertices() const { return static_cast<int>(boundary_index.size()); }
  int num_boundary() const { return static_cast<int>(boundary.size()); }
  int num_interior() const { return static_cast<int>(interior.size()); }
  bool is_boundary(int v) const { return boundary_index[v] >= 0; }

  /// Boundary coefficients scattered into a full vertex vector (zero inside).
  VectorXd extend_by_zero(const VectorXd& boundary_values) const;
  /// Boundary entries of a full vertex vector.
  VectorXd restrict_to_boundary(const VectorXd& values) const;
};

DofMap make_dof_map(const Mesh& mesh);

SparseMatrix assemble_stiffness(const Mesh& mesh);
SparseMatrix assemble_mass_domain(const Mesh& mesh);
/// Gram matrix of the boundary hat functions, indexed by DofMap::boundary.
SparseMatrix assemble_mass_boundary(const Mesh& mesh, const DofMap& dofs);

/// (f, phi_y) for every vertex y.
VectorXd assemble_load(const Mesh& mesh, const ScalarField& f, int quad_degree);

/// A quadrature point on a boundary triangle.
struct BoundaryPoint {
  int face = -1;       ///< index into Mesh::boundary_faces
  Vector3d bary;       ///< barycentric coordinates w.r.t. the face vertices
  Vector3d x;
  double weight = 0.0; ///< includes the triangle area
};

/// Calls `fn(const BoundaryPoint&)` for every quadrature point on the boundary.
template <typename Fn>
void for_each_boundary_point(const Mesh& mesh, int quad_degree, Fn&& fn) {
  const auto rule = triangle_rule<double>(quad_degree);
  BoundaryPoint p;
  for (std::size_t f = 0; f < mesh.boundary_faces.size(); ++f) {
    const auto& tri = mesh.boundary_faces[f].vertices;
    const double area = triangle_area(mesh, tri);
    p.face = static_cast<int>(f);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      p.bary = rule.points[q];
      p.x = p.bary[0] * mesh.vertices[tri[0]] + p.bary[1] * mesh.vertices[tri[1]] + p.bary[2] * mesh.vertices[tri[2]];
      p.weight = 2.0 * area * rule.weights[q];
      fn(p);
    }
  }
}

/// Value of a boundary FE function (coefficients over DofMap::boundary) at a
/// boundary quadrature point.
double eval_boundary(const Mesh& mesh, const DofMap& dofs, const VectorXd& q, const BoundaryPoint& p);

/// (g, phi_y)_{boundary} for every boundary dof, with g given per point.
template <typename PointFn>
VectorXd assemble_boundary_load_at(const Mesh& mesh, const DofMap& dofs, int quad_degree, PointFn&& g) {
  VectorXd load = VectorXd::Zero(dofs.num_boundary());
  for_each_boundary_point(mesh, quad_degree, [&](const BoundaryPoint& p) {
    const double gw = g(p) * p.weight;
    const auto& tri = mesh.boundary_faces[p.face].vertices;
    for (int k = 0; k < 3; ++k) load[dofs.boundary_index[tri[k]]] += gw * p.bary[k];
  });
  return load;
}

VectorXd assemble_boundary_load(const Mesh& mesh, const DofMap& dofs, const ScalarField& g, int quad_degree);

/// Calls `fn(tet, bary, x, weight)` for every quadrature point in the domain.
template <typename Fn>
void for_each_cell_point(const Mesh& mesh, int quad_degree, Fn&& fn) {
  const auto rule = tet_rule<double>(quad_degree);
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& v = mesh.tets[t];
    const double vol = tet_volume(mesh, t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& b = rule.points[q];
      const Vector3d x = b[0] * mesh.vertices[v[0]] + b[1] * mesh.vertices[v[1]] + b[2] * mesh.vertices[v[2]] +
                         b[3] * mesh.vertices[v[3]];
      fn(t, b, x, 6.0 * vol * rule.weights[q]);
    }
  }
}

/// ||u_h - exact||_{L2(Omega)} with u_h given by vertex coefficients.
double integrate_L2_error_domain(const Mesh& mesh, const VectorXd& coeffs, const ScalarField& exact, int quad_degree);

/// ||q_h - exact||_{L2(boundary)} with q_h given over DofMap::boundary.
double integrate_L2_error_boundary(const Mesh& mesh, const DofMap& dofs, const VectorXd& boundary_coeffs,
                                   const ScalarField& exact, int quad_degree);

/// ||rho_tilde^{1/2} grad u_h||_{L2(Omega)} with rho_tilde = sqrt(rho^2 + kappa^2 h^2),
/// rho the distance to the boundary and h the mesh size.
double weighted_gradient_norm(const Mesh& mesh, const VectorXd& coeffs, double kappa);

/// ||grad u_h||_{L2(Omega)}.
double gradient_norm(const Mesh& mesh, const VectorXd& coeffs);

/// Gradients of the four barycentric coordinates of tet `t` (columns).
Eigen::Matrix<double, 3, 4> barycentric_gradients(const Mesh& mesh, int t);

} // namespace dbc
