#include "dbc/fem.hpp"

#include <cmath>

namespace dbc {

namespace {

using Triplet = Eigen::Triplet<double, int>;

SparseMatrix from_triplets(int n, const std::vector<Triplet>& triplets) {
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

} // namespace

VectorXd DofMap::extend_by_zero(const VectorXd& boundary_values) const {
  VectorXd full = VectorXd::Zero(num_vertices());
  for (int i = 0; i < num_boundary(); ++i) full[boundary[i]] = boundary_values[i];
  return full;
}

VectorXd DofMap::restrict_to_boundary(const VectorXd& values) const {
  VectorXd out(num_boundary());
  for (int i = 0; i < num_boundary(); ++i) out[i] = values[boundary[i]];
  return out;
}

DofMap make_dof_map(const Mesh& mesh) {
  DofMap dofs;
  dofs.boundary_index.assign(mesh.vertices.size(), -1);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.boundary_vertex_flags[v]) {
      dofs.boundary_index[v] = static_cast<int>(dofs.boundary.size());
      dofs.boundary.push_back(v);
    } else {
      dofs.interior.push_back(v);
    }
  }
  return dofs;
}

Eigen::Matrix<double, 3, 4> barycentric_gradients(const Mesh& mesh, int t) {
  const auto& v = mesh.tets[t];
  const auto& x = mesh.vertices;
  Eigen::Matrix3d jac;
  jac.col(0) = x[v[1]] - x[v[0]];
  jac.col(1) = x[v[2]] - x[v[0]];
  jac.col(2) = x[v[3]] - x[v[0]];
  const double det = jac.determinant();
  if (!(det > 0.0)) throw AssemblyError("degenerate or inverted tet " + std::to_string(t));
  const Eigen::Matrix3d inv_t = jac.inverse().transpose();
  Eigen::Matrix<double, 3, 4> grads;
  grads.col(1) = inv_t.col(0);
  grads.col(2) = inv_t.col(1);
  grads.col(3) = inv_t.col(2);
  grads.col(0) = -(grads.col(1) + grads.col(2) + grads.col(3));
  return grads;
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  std::vector<Triplet> triplets;
  triplets.reserve(16 * mesh.tets.size());
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto grads = barycentric_gradients(mesh, t);
    const double vol = tet_volume(mesh, t);
    const Eigen::Matrix4d local = vol * grads.transpose() * grads;
    const auto& v = mesh.tets[t];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) triplets.emplace_back(v[i], v[j], local(i, j));
  }
  return from_triplets(mesh.num_vertices(), triplets);
}

SparseMatrix assemble_mass_domain(const Mesh& mesh) {
  // P1 mass is integrated exactly by the degree-2 rule: vol/20 * (1 + delta_ij).
  std::vector<Triplet> triplets;
  triplets.reserve(16 * mesh.tets.size());
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const double vol = tet_volume(mesh, t);
    if (!(vol > 0.0)) throw AssemblyError("degenerate or inverted tet " + std::to_string(t));
    const auto& v = mesh.tets[t];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) triplets.emplace_back(v[i], v[j], vol / 20.0 * (i == j ? 2.0 : 1.0));
  }
  return from_triplets(mesh.num_vertices(), triplets);
}

SparseMatrix assemble_mass_boundary(const Mesh& mesh, const DofMap& dofs) {
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.boundary_faces.size());
  for (const auto& face : mesh.boundary_faces) {
    const double area = triangle_area(mesh, face.vertices);
    if (!(area > 0.0)) throw AssemblyError("degenerate boundary triangle");
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        triplets.emplace_back(dofs.boundary_index[face.vertices[i]], dofs.boundary_index[face.vertices[j]],
                              area / 12.0 * (i == j ? 2.0 : 1.0));
  }
  return from_triplets(dofs.num_boundary(), triplets);
}

VectorXd assemble_load(const Mesh& mesh, const ScalarField& f, int quad_degree) {
  VectorXd load = VectorXd::Zero(mesh.num_vertices());
  for_each_cell_point(mesh, quad_degree, [&](int t, const Eigen::Vector4d& b, const Vector3d& x, double w) {
    const double fw = f(x) * w;
    const auto& v = mesh.tets[t];
    for (int k = 0; k < 4; ++k) load[v[k]] += fw * b[k];
  });
  return load;
}

double eval_boundary(const Mesh& mesh, const DofMap& dofs, const VectorXd& q, const BoundaryPoint& p) {
  const auto& tri = mesh.boundary_faces[p.face].vertices;
  return p.bary[0] * q[dofs.boundary_index[tri[0]]] + p.bary[1] * q[dofs.boundary_index[tri[1]]] +
         p.bary[2] * q[dofs.boundary_index[tri[2]]];
}

VectorXd assemble_boundary_load(const Mesh& mesh, const DofMap& dofs, const ScalarField& g, int quad_degree) {
  return assemble_boundary_load_at(mesh, dofs, quad_degree, [&](const BoundaryPoint& p) { return g(p.x); });
}

double integrate_L2_error_domain(const Mesh& mesh, const VectorXd& coeffs, const ScalarField& exact,
                                 int quad_degree) {
  double sum = 0.0;
  for_each_cell_point(mesh, quad_degree, [&](int t, const Eigen::Vector4d& b, const Vector3d& x, double w) {
    const auto& v = mesh.tets[t];
    const double uh = b[0] * coeffs[v[0]] + b[1] * coeffs[v[1]] + b[2] * coeffs[v[2]] + b[3] * coeffs[v[3]];
    const double e = uh - exact(x);
    sum += w * e * e;
  });
  return std::sqrt(sum);
}

double integrate_L2_error_boundary(const Mesh& mesh, const DofMap& dofs, const VectorXd& boundary_coeffs,
                                   const ScalarField& exact, int quad_degree) {
  double sum = 0.0;
  for_each_boundary_point(mesh, quad_degree, [&](const BoundaryPoint& p) {
    const double e = eval_boundary(mesh, dofs, boundary_coeffs, p) - exact(p.x);
    sum += p.weight * e * e;
  });
  return std::sqrt(sum);
}

double weighted_gradient_norm(const Mesh& mesh, const VectorXd& coeffs, double kappa) {
  if (!(kappa >= 1.0)) throw DomainError("kappa must be at least 1");
  const auto rule = tet_rule<double>(5);
  const double kh2 = kappa * kappa * mesh.h * mesh.h;
  double sum = 0.0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& v = mesh.tets[t];
    const auto grads = barycentric_gradients(mesh, t);
    const Vector3d grad = grads * Eigen::Vector4d(coeffs[v[0]], coeffs[v[1]], coeffs[v[2]], coeffs[v[3]]);
    const double vol = tet_volume(mesh, t);
    double weight_integral = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& b = rule.points[q];
      const Vector3d x = b[0] * mesh.vertices[v[0]] + b[1] * mesh.vertices[v[1]] + b[2] * mesh.vertices[v[2]] +
                         b[3] * mesh.vertices[v[3]];
      const double rho = distance_to_boundary(*mesh.domain, x);
      weight_integral += 6.0 * vol * rule.weights[q] * std::sqrt(rho * rho + kh2);
    }
    sum += grad.squaredNorm() * weight_integral;
  }
  return std::sqrt(sum);
}

double gradient_norm(const Mesh& mesh, const VectorXd& coeffs) {
  double sum = 0.0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& v = mesh.tets[t];
    const Vector3d grad =
        barycentric_gradients(mesh, t) * Eigen::Vector4d(coeffs[v[0]], coeffs[v[1]], coeffs[v[2]], coeffs[v[3]]);
    sum += grad.squaredNorm() * tet_volume(mesh, t);
  }
  return std::sqrt(sum);
}

} // namespace dbc
