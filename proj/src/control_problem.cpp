#include "dbc/control_problem.hpp"

#include <cmath>

namespace dbc {

void ProblemData::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be positive and finite");
  // q_a = q_b = 0 is admitted as the degenerate admissible set {0}.
  if (!(q_a <= 0.0 && 0.0 <= q_b)) throw DomainError("control bounds must satisfy q_a <= 0 <= q_b");
}

bool ProblemData::bounded() const { return std::isfinite(q_a) || std::isfinite(q_b); }

namespace {

std::vector<bool> boundary_mask(const Mesh& mesh) { return mesh.boundary_vertex_flags; }

VectorXd inverse_diagonal(const SparseMatrix& m) { return m.diagonal().cwiseInverse(); }

} // namespace

ControlProblem::ControlProblem(Mesh mesh, ProblemData data, SolverSettings settings)
    : mesh_(std::move(mesh)),
      data_(std::move(data)),
      settings_(settings),
      dofs_(make_dof_map(mesh_)),
      stiffness_(assemble_stiffness(mesh_)),
      mass_(assemble_mass_domain(mesh_)),
      boundary_mass_(assemble_mass_boundary(mesh_, dofs_)),
      interior_op_(stiffness_, boundary_mask(mesh_)) {
  data_.validate();
  if (settings_.multigrid)
    multigrid_ = std::make_unique<const MultigridPreconditioner>(stiffness_, boundary_mask(mesh_),
                                                                 mesh_.midpoint_parents);
  boundary_inv_diag_ = inverse_diagonal(boundary_mass_);
  boundary_lumped_ = boundary_mass_ * VectorXd::Ones(dofs_.num_boundary());

  source_load_ = data_.source ? assemble_load(mesh_, data_.source, settings_.quad_degree)
                              : VectorXd::Zero(mesh_.num_vertices());
  desired_load_ = data_.desired_state ? assemble_load(mesh_, data_.desired_state, settings_.quad_degree)
                                      : VectorXd::Zero(mesh_.num_vertices());
  source_state_ = solve_interior(source_load_);
}

VectorXd ControlProblem::solve_interior(const VectorXd& rhs_full) const {
  VectorXd rhs = rhs_full;
  interior_op_.zero_fixed(rhs);
  CgOptions<double> options;
  options.tol_rel = settings_.inner_tol;
  options.max_iter = settings_.inner_max_iter;
  if (multigrid_)
    options.preconditioner = [this](const VectorXd& r, VectorXd& z) { multigrid_->apply(r, z); };
  else
    options.inverse_diagonal = interior_op_.inverse_diagonal();
  auto [x, report] = cg_solve(interior_op_, rhs, options);
  cg_iterations_ += report.iterations;
  if (!report.converged)
    throw SolverError("interior Poisson solve did not converge (residual " +
                      std::to_string(report.relative_residual) + ")");
  return x;
}

VectorXd ControlProblem::solve_boundary_mass(const VectorXd& load) const {
  CgOptions<double> options;
  options.tol_rel = settings_.inner_tol;
  options.max_iter = settings_.inner_max_iter;
  options.inverse_diagonal = boundary_inv_diag_;
  auto [x, report] = cg_solve(MatrixOperator<SparseMatrix>(boundary_mass_), load, options);
  cg_iterations_ += report.iterations;
  if (!report.converged) throw SolverError("boundary mass solve did not converge");
  return x;
}

VectorXd ControlProblem::boundary_projection(const ScalarField& g) const {
  return solve_boundary_mass(assemble_boundary_load(mesh_, dofs_, g, settings_.quad_degree));
}

VectorXd ControlProblem::solve_state_homogeneous(const VectorXd& q) const {
  const VectorXd lift = dofs_.extend_by_zero(q);
  return solve_interior(-(stiffness_ * lift)) + lift;
}

VectorXd ControlProblem::solve_state(const VectorXd& q) const {
  const VectorXd lift = dofs_.extend_by_zero(q);
  return solve_interior(source_load_ - stiffness_ * lift) + lift;
}

VectorXd ControlProblem::residual_vector(const VectorXd& state, bool with_desired) const {
  VectorXd w = mass_ * state;
  if (with_desired) w -= desired_load_;
  return w;
}

VectorXd ControlProblem::solve_adjoint(const VectorXd& state) const {
  return solve_interior(residual_vector(state, true));
}

VectorXd ControlProblem::solve_adjoint_homogeneous(const VectorXd& state) const {
  return solve_interior(residual_vector(state, false));
}

VectorXd ControlProblem::normal_trace_load(const VectorXd& state, const VectorXd& adjoint) const {
  const VectorXd full = stiffness_ * adjoint - residual_vector(state, true);
  return dofs_.restrict_to_boundary(full);
}

VectorXd ControlProblem::normal_trace(const VectorXd& state, const VectorXd& adjoint) const {
  return solve_boundary_mass(normal_trace_load(state, adjoint));
}

VectorXd ControlProblem::normal_trace_harmonic(const VectorXd& state, const VectorXd& adjoint) const {
  const VectorXd az = stiffness_ * adjoint;
  const VectorXd w = residual_vector(state, true);
  VectorXd load(dofs_.num_boundary());
  VectorXd unit = VectorXd::Zero(dofs_.num_boundary());
  for (int y = 0; y < dofs_.num_boundary(); ++y) {
    unit[y] = 1.0;
    const VectorXd ext = solve_state_homogeneous(unit);
    unit[y] = 0.0;
    load[y] = az.dot(ext) - w.dot(ext);
  }
  return solve_boundary_mass(load);
}

double ControlProblem::tracking_cost(const VectorXd& state) const {
  double sum = 0.0;
  for_each_cell_point(mesh_, settings_.quad_degree,
                      [&](int t, const Eigen::Vector4d& b, const Vector3d& x, double w) {
                        const auto& v = mesh_.tets[t];
                        const double uh =
                            b[0] * state[v[0]] + b[1] * state[v[1]] + b[2] * state[v[2]] + b[3] * state[v[3]];
                        const double e = uh - (data_.desired_state ? data_.desired_state(x) : 0.0);
                        sum += w * e * e;
                      });
  return 0.5 * sum;
}

double ControlProblem::reduced_cost(const VectorXd& q) const {
  return tracking_cost(solve_state(q)) + 0.5 * data_.alpha * boundary_inner(q, q);
}

VectorXd ControlProblem::reduced_gradient(const VectorXd& q) const {
  const VectorXd u = solve_state(q);
  const VectorXd z = solve_adjoint(u);
  return data_.alpha * q - normal_trace(u, z);
}

VectorXd ControlProblem::hessian_dual_apply(const VectorXd& dq) const {
  const VectorXd du = solve_state_homogeneous(dq);
  const VectorXd dz = solve_adjoint_homogeneous(du);
  const VectorXd r = dofs_.restrict_to_boundary(stiffness_ * dz - mass_ * du);
  return data_.alpha * (boundary_mass_ * dq) - r;
}

VectorXd ControlProblem::hessian_apply(const VectorXd& dq) const {
  return solve_boundary_mass(hessian_dual_apply(dq));
}

VectorXd ControlProblem::reduced_rhs() const {
  return normal_trace_load(source_state_, solve_adjoint(source_state_));
}

double ControlProblem::boundary_inner(const VectorXd& a, const VectorXd& b) const {
  return a.dot(boundary_mass_ * b);
}

double ControlProblem::boundary_norm(const VectorXd& q) const { return std::sqrt(boundary_inner(q, q)); }

} // namespace dbc
