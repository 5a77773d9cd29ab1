#pragma once

#include "dbc/fem.hpp"
#include "dbc/linear_solver.hpp"
#include "dbc/mesh.hpp"
#include "dbc/multigrid.hpp"

#include <atomic>
#include <memory>
#include <limits>

namespace dbc {

/// Cost weight, box bounds, source and desired state of
///   min 1/2 ||u - u_d||^2 + alpha/2 ||q||^2_{boundary},  -lap u = f, u = q on the boundary.
/// Empty callables stand for zero.
struct ProblemData {
  double alpha = 1.0;
  double q_a = -std::numeric_limits<double>::infinity();
  double q_b = std::numeric_limits<double>::infinity();
  ScalarField source;
  ScalarField desired_state;

  /// alpha > 0 and q_a <= 0 <= q_b.
  void validate() const;
  bool bounded() const;
};

struct SolverSettings {
  double inner_tol = 1e-12; ///< relative tolerance of every PDE and mass solve
  int inner_max_iter = 0;   ///< 0 selects 10 * n
  int quad_degree = 5;      ///< rule for f, u_d and the tracking term
  bool multigrid = true;    ///< V-cycle preconditioning of PDE solves; Jacobi otherwise
};

/// Discrete control problem on one mesh: assembled operators plus the data
/// terms that do not depend on the control. Immutable after construction apart
/// from the CG iteration counter.
///
/// Vectors named q / dq / t live on DofMap::boundary (the trace space); state
/// and adjoint vectors are indexed by vertex.
class ControlProblem {
public:
  ControlProblem(Mesh mesh, ProblemData data, SolverSettings settings = {});

  const Mesh& mesh() const { return mesh_; }
  const DofMap& dofs() const { return dofs_; }
  const ProblemData& data() const { return data_; }
  const SolverSettings& settings() const { return settings_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& boundary_mass() const { return boundary_mass_; }
  /// (f, phi_y) and (u_d, phi_y) over all vertices.
  const VectorXd& source_load() const { return source_load_; }
  const VectorXd& desired_load() const { return desired_load_; }
  /// Homogeneous-Dirichlet solution for the source f.
  const VectorXd& source_state() const { return source_state_; }

  /// Solves M_bdry x = load.
  VectorXd solve_boundary_mass(const VectorXd& load) const;
  /// L2(boundary) projection of g onto the trace space.
  VectorXd boundary_projection(const ScalarField& g) const;

  /// Discrete state: boundary values q, interior (grad u, grad phi) = (f, phi).
  VectorXd solve_state(const VectorXd& q) const;
  /// Discrete harmonic extension of q (the state with f = 0).
  VectorXd solve_state_homogeneous(const VectorXd& q) const;
  /// z in V_h with (grad phi, grad z) = (u - u_d, phi) for interior phi.
  VectorXd solve_adjoint(const VectorXd& state) const;
  /// Same with u_d replaced by zero.
  VectorXd solve_adjoint_homogeneous(const VectorXd& state) const;

  /// r_y = (grad z, grad E phi_y) - (u - u_d, E phi_y) with E the extension by zero.
  VectorXd normal_trace_load(const VectorXd& state, const VectorXd& adjoint) const;
  /// Discrete variational normal trace: M_bdry^{-1} normal_trace_load.
  VectorXd normal_trace(const VectorXd& state, const VectorXd& adjoint) const;
  /// The same trace tested with discrete harmonic extensions of every boundary
  /// hat function (one PDE solve per boundary dof; for small meshes only).
  VectorXd normal_trace_harmonic(const VectorXd& state, const VectorXd& adjoint) const;

  /// j_h(q) = 1/2 ||u_h(q) - u_d||^2 + alpha/2 q^T M_bdry q.
  double reduced_cost(const VectorXd& q) const;
  /// 1/2 ||u - u_d||^2 by quadrature.
  double tracking_cost(const VectorXd& state) const;
  /// alpha q - normal trace, as a trace-space function.
  VectorXd reduced_gradient(const VectorXd& q) const;
  /// Hessian in the M_bdry inner product: alpha dq - t(S^0 dq).
  VectorXd hessian_apply(const VectorXd& dq) const;
  /// M_bdry * hessian_apply(dq) without the final mass solve.
  VectorXd hessian_dual_apply(const VectorXd& dq) const;
  /// Normal-trace load at q = 0 with the full data; the unconstrained optimum
  /// solves hessian_dual_apply(q) = this vector.
  VectorXd reduced_rhs() const;

  double boundary_norm(const VectorXd& q) const;
  double boundary_inner(const VectorXd& a, const VectorXd& b) const;
  /// Row sums of M_bdry, i.e. (1, phi_y)_{boundary}.
  const VectorXd& boundary_lumped_mass() const { return boundary_lumped_; }

  long cg_iterations() const { return cg_iterations_.load(); }
  void reset_cg_iterations() const { cg_iterations_ = 0; }

private:
  VectorXd solve_interior(const VectorXd& rhs_full) const;
  VectorXd residual_vector(const VectorXd& state, bool with_desired) const;

  Mesh mesh_;
  ProblemData data_;
  SolverSettings settings_;
  DofMap dofs_;
  SparseMatrix stiffness_;
  SparseMatrix mass_;
  SparseMatrix boundary_mass_;
  MaskedOperator<double> interior_op_;
  std::unique_ptr<const MultigridPreconditioner> multigrid_;
  VectorXd boundary_inv_diag_;
  VectorXd boundary_lumped_;
  VectorXd source_load_;
  VectorXd desired_load_;
  VectorXd source_state_;
  mutable std::atomic<long> cg_iterations_{0};
};

} // namespace dbc
