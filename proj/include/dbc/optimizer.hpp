#pragma once

#include "dbc/control_problem.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dbc {

/// Control discretization: `variational` keeps the control space continuous
/// (the optimum is the cutoff of a trace-space function), `p1` restricts
/// controls to continuous piecewise linears on the boundary mesh.
enum class Concept { variational, p1 };

std::string_view to_string(Concept value);
/// Throws std::invalid_argument for anything but "variational" or "p1".
Concept parse_concept(std::string_view name);

struct OptimizerConfig {
  /// Stopping tolerance for the optimality residual, relative to its value at q = 0.
  double tol_grad = 1e-10;
  int max_outer = 100;
  int max_cg = 0; ///< outer CG iteration cap; 0 selects 10 * n
  Concept control_concept = Concept::p1;
};

enum class ActiveLabel : std::int8_t { lower = -1, free = 0, upper = 1 };
using ActiveSet = std::vector<ActiveLabel>;

struct OptimizerReport {
  int outer_iterations = 0;
  long cg_iterations = 0; ///< all CG steps, inner PDE and mass solves included
  std::vector<double> residuals;
  std::vector<double> costs;
  std::vector<std::array<int, 3>> active_counts; ///< (lower, free, upper) per outer step
  bool converged = false;
};

struct Solution {
  Concept control_concept = Concept::p1;
  /// Nodal trace-space coefficients. For the variational concept these are the
  /// coefficients of alpha^{-1} times the normal trace; the control itself is
  /// their pointwise cutoff to [q_a, q_b].
  VectorXd control;
  double q_a = -std::numeric_limits<double>::infinity();
  double q_b = std::numeric_limits<double>::infinity();
  VectorXd state;
  VectorXd adjoint;
  ActiveSet active_set;
  OptimizerReport report;

  /// Control value at a boundary quadrature point.
  double control_at(const Mesh& mesh, const DofMap& dofs, const BoundaryPoint& p) const;
};

/// Error thrown when an outer iteration fails; carries the residual history.
class OptimizerError : public SolverError {
public:
  OptimizerError(const std::string& what, std::vector<double> history)
      : SolverError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

private:
  std::vector<double> history_;
};

/// Minimizes j_h over the trace space ignoring bounds: one CG solve of the
/// reduced Hessian system in the M_bdry-dual form.
Solution solve_unconstrained(const ControlProblem& problem, const OptimizerConfig& config);

/// Primal-dual active set method on nodal values for the p1 concept.
Solution solve_pdas(const ControlProblem& problem, const OptimizerConfig& config);

/// Damped fixed-point iteration on v = alpha^{-1} t(P(v)) for the variational
/// concept, P the pointwise cutoff evaluated at boundary quadrature points.
Solution solve_variational(const ControlProblem& problem, const OptimizerConfig& config);

/// Dispatches on config.control_concept (p1 with bounds goes through PDAS).
Solution solve_control(const ControlProblem& problem, const OptimizerConfig& config);

/// The control as an element of the trace space: the nodal vector for p1,
/// the L2(boundary) projection of the cutoff for the variational concept.
VectorXd trace_space_control(const ControlProblem& problem, const Solution& solution);

/// ||exact - q_h||_{L2(boundary)} with q_h evaluated through Solution::control_at.
double control_error(const ControlProblem& problem, const Solution& solution, const ScalarField& exact,
                     int quad_degree = 4);

/// pi_h g = sum_y (g, phi_y) / (1, phi_y) phi_y over boundary nodes.
VectorXd quasi_interpolate(const Mesh& mesh, const DofMap& dofs, const ScalarField& g, int quad_degree = 4);
/// Same for a trace-space function given by nodal coefficients.
VectorXd quasi_interpolate(const ControlProblem& problem, const VectorXd& q);

/// Which gradient representation enters the projected-gradient residual.
enum class ResidualForm {
  riesz, ///< the M_bdry Riesz representative alpha q - t
  nodal, ///< the dual vector scaled by the lumped boundary mass (exact for nodal bounds)
};

/// ||q - P_[q_a,q_b](q - g)||_{M_bdry}; zero exactly at discrete first-order points.
double optimality_residual(const ControlProblem& problem, const VectorXd& q, ResidualForm form = ResidualForm::riesz);

} // namespace dbc
