#include "dbc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dbc {

namespace {

constexpr int boundary_quad_degree = 4;

double cutoff(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

VectorXd project(const VectorXd& q, double lo, double hi) {
  return q.unaryExpr([=](double v) { return cutoff(v, lo, hi); });
}

Solution finish(const ControlProblem& problem, Solution solution, long cg_before) {
  const VectorXd control_trace = trace_space_control(problem, solution);
  solution.state = problem.solve_state(control_trace);
  solution.adjoint = problem.solve_adjoint(solution.state);
  solution.report.cg_iterations += problem.cg_iterations() - cg_before;
  return solution;
}

std::array<int, 3> count_labels(const ActiveSet& labels) {
  std::array<int, 3> counts{0, 0, 0};
  for (auto l : labels) ++counts[static_cast<int>(l) + 1];
  return counts;
}

// Cutoff of the nodal function v at boundary quadrature points, projected back
// onto the trace space. Returns v itself when no point is clipped.
VectorXd project_cutoff(const ControlProblem& problem, const VectorXd& v, double lo, double hi) {
  const auto& mesh = problem.mesh();
  const auto& dofs = problem.dofs();
  bool clipped = false;
  const VectorXd load = assemble_boundary_load_at(mesh, dofs, boundary_quad_degree, [&](const BoundaryPoint& p) {
    const double x = eval_boundary(mesh, dofs, v, p);
    const double c = cutoff(x, lo, hi);
    if (c != x) clipped = true;
    return c;
  });
  if (!clipped) return v;
  return problem.solve_boundary_mass(load);
}

// || P(a) - P(b) ||_{L2(boundary)} at quadrature points.
double cutoff_distance(const ControlProblem& problem, const VectorXd& a, const VectorXd& b, double lo, double hi) {
  const auto& mesh = problem.mesh();
  const auto& dofs = problem.dofs();
  double sum = 0.0;
  for_each_boundary_point(mesh, boundary_quad_degree, [&](const BoundaryPoint& p) {
    const double d = cutoff(eval_boundary(mesh, dofs, a, p), lo, hi) - cutoff(eval_boundary(mesh, dofs, b, p), lo, hi);
    sum += p.weight * d * d;
  });
  return std::sqrt(sum);
}

int cg_cap(const OptimizerConfig& config, int n) { return config.max_cg > 0 ? config.max_cg : 10 * n; }

void check_config(const OptimizerConfig& config) {
  if (!(config.tol_grad > 0.0)) throw std::invalid_argument("tol_grad must be positive");
  if (config.max_outer < 1) throw std::invalid_argument("max_outer must be at least 1");
  if (config.max_cg < 0) throw std::invalid_argument("max_cg must be nonnegative");
}

} // namespace

std::string_view to_string(Concept value) { return value == Concept::p1 ? "p1" : "variational"; }

Concept parse_concept(std::string_view name) {
  if (name == "p1") return Concept::p1;
  if (name == "variational") return Concept::variational;
  throw std::invalid_argument("unknown control concept '" + std::string(name) + "'");
}

double Solution::control_at(const Mesh& mesh, const DofMap& dofs, const BoundaryPoint& p) const {
  const double v = eval_boundary(mesh, dofs, control, p);
  return control_concept == Concept::variational ? cutoff(v, q_a, q_b) : v;
}

VectorXd trace_space_control(const ControlProblem& problem, const Solution& solution) {
  if (solution.control_concept == Concept::p1) return solution.control;
  return project_cutoff(problem, solution.control, solution.q_a, solution.q_b);
}

double control_error(const ControlProblem& problem, const Solution& solution, const ScalarField& exact,
                     int quad_degree) {
  const auto& mesh = problem.mesh();
  const auto& dofs = problem.dofs();
  double sum = 0.0;
  for_each_boundary_point(mesh, quad_degree, [&](const BoundaryPoint& p) {
    const double e = solution.control_at(mesh, dofs, p) - exact(p.x);
    sum += p.weight * e * e;
  });
  return std::sqrt(sum);
}

Solution solve_unconstrained(const ControlProblem& problem, const OptimizerConfig& config) {
  check_config(config);
  const long cg_before = problem.cg_iterations();
  const int n = problem.dofs().num_boundary();
  const double alpha = problem.data().alpha;

  Solution solution;
  solution.control_concept = config.control_concept;
  solution.active_set.assign(n, ActiveLabel::free);

  const VectorXd b = problem.reduced_rhs();
  FunctionOperator<double> op(n, [&](const VectorXd& x, VectorXd& y) { y = problem.hessian_dual_apply(x); });
  CgOptions<double> options;
  // Dual (Euclidean) residuals and M_bdry-norm gradients differ by the
  // condition number of the boundary mass matrix; the margin covers it.
  options.tol_rel = 0.1 * config.tol_grad;
  options.max_iter = cg_cap(config, n);
  options.inverse_diagonal = (alpha * problem.boundary_mass().diagonal()).cwiseInverse();
  auto [q, report] = cg_solve(op, b, options);

  solution.report.outer_iterations = report.iterations;
  solution.report.converged = report.converged;
  solution.report.residuals.push_back(report.relative_residual);
  // With inactive bounds the cutoff is the identity, so both concepts store q.
  solution.control = q;
  solution.q_a = problem.data().q_a;
  solution.q_b = problem.data().q_b;
  solution.report.costs.push_back(problem.reduced_cost(q));
  return finish(problem, std::move(solution), cg_before);
}

double optimality_residual(const ControlProblem& problem, const VectorXd& q, ResidualForm form) {
  const double lo = problem.data().q_a;
  const double hi = problem.data().q_b;
  VectorXd g;
  if (form == ResidualForm::riesz) {
    g = problem.reduced_gradient(q);
  } else {
    const VectorXd u = problem.solve_state(q);
    const VectorXd z = problem.solve_adjoint(u);
    const VectorXd dual = problem.data().alpha * (problem.boundary_mass() * q) - problem.normal_trace_load(u, z);
    g = dual.cwiseQuotient(problem.boundary_lumped_mass());
  }
  return problem.boundary_norm(q - project(q - g, lo, hi));
}

Solution solve_pdas(const ControlProblem& problem, const OptimizerConfig& config) {
  check_config(config);
  const auto& data = problem.data();
  if (!std::isfinite(data.q_a) || !std::isfinite(data.q_b))
    throw DomainError("solve_pdas needs finite bounds");
  const long cg_before = problem.cg_iterations();
  const int n = problem.dofs().num_boundary();
  const double alpha = data.alpha;
  const VectorXd& lumped = problem.boundary_lumped_mass();

  Solution solution;
  solution.control_concept = Concept::p1;
  solution.q_a = data.q_a;
  solution.q_b = data.q_b;
  auto& rep = solution.report;

  const VectorXd b = problem.reduced_rhs();
  const auto apply_k = [&](const VectorXd& x) { return problem.hessian_dual_apply(x); };

  VectorXd q = VectorXd::Zero(n);
  // Multiplier in nodal (lumped) scaling: mu = -D^{-1}(K q - b).
  VectorXd mu = b.cwiseQuotient(lumped);
  // Optimality residual at q = 0; later residuals are reported relative to it.
  const double scale = problem.boundary_norm(project(mu, data.q_a, data.q_b));
  if (scale == 0.0) {
    solution.control = q;
    solution.active_set.assign(n, ActiveLabel::free);
    rep.converged = true;
    return finish(problem, std::move(solution), cg_before);
  }

  ActiveSet labels(n, ActiveLabel::free);
  bool first = true;
  for (int outer = 0; outer <= config.max_outer; ++outer) {
    ActiveSet next(n);
    for (int i = 0; i < n; ++i) {
      const double trial = q[i] + mu[i] / alpha;
      next[i] = trial > data.q_b ? ActiveLabel::upper : trial < data.q_a ? ActiveLabel::lower : ActiveLabel::free;
    }
    if (!first && next == labels) {
      rep.converged = true;
      break;
    }
    if (outer == config.max_outer)
      throw OptimizerError("active set did not settle after " + std::to_string(config.max_outer) + " iterations",
                           rep.residuals);
    first = false;
    labels = std::move(next);

    std::vector<bool> fixed(n, false);
    VectorXd q_active = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (labels[i] == ActiveLabel::free) continue;
      fixed[i] = true;
      q_active[i] = labels[i] == ActiveLabel::upper ? data.q_b : data.q_a;
    }
    VectorXd rhs = b - apply_k(q_active);
    for (int i = 0; i < n; ++i)
      if (fixed[i]) rhs[i] = 0.0;

    FunctionOperator<double> op(n, [&](const VectorXd& x, VectorXd& y) {
      VectorXd xm = x;
      for (int i = 0; i < n; ++i)
        if (fixed[i]) xm[i] = 0.0;
      y = apply_k(xm);
      for (int i = 0; i < n; ++i)
        if (fixed[i]) y[i] = 0.0;
    });
    CgOptions<double> options;
    options.tol_rel = 0.1 * config.tol_grad;
    options.max_iter = cg_cap(config, n);
    VectorXd inv_diag = (alpha * problem.boundary_mass().diagonal()).cwiseInverse();
    for (int i = 0; i < n; ++i)
      if (fixed[i]) inv_diag[i] = 0.0;
    options.inverse_diagonal = inv_diag;
    auto [q_free, report] = cg_solve(op, rhs, options);
    if (!report.converged)
      throw OptimizerError("free-set CG did not converge (residual " + std::to_string(report.relative_residual) + ")",
                           rep.residuals);
    q = q_free + q_active;

    mu = (b - apply_k(q)).cwiseQuotient(lumped);
    for (int i = 0; i < n; ++i)
      if (!fixed[i]) mu[i] = 0.0;

    ++rep.outer_iterations;
    rep.costs.push_back(problem.reduced_cost(q));
    rep.residuals.push_back(optimality_residual(problem, q, ResidualForm::nodal) / scale);
    rep.active_counts.push_back(count_labels(labels));
  }

  solution.control = project(q, data.q_a, data.q_b);
  solution.active_set = labels;
  if (!rep.residuals.empty() && rep.residuals.back() > config.tol_grad)
    throw OptimizerError("active set settled but the optimality residual is " + std::to_string(rep.residuals.back()),
                         rep.residuals);
  return finish(problem, std::move(solution), cg_before);
}

Solution solve_variational(const ControlProblem& problem, const OptimizerConfig& config) {
  check_config(config);
  const auto& data = problem.data();
  const long cg_before = problem.cg_iterations();
  const int n = problem.dofs().num_boundary();
  const double lo = data.q_a, hi = data.q_b;

  Solution solution;
  solution.control_concept = Concept::variational;
  solution.q_a = lo;
  solution.q_b = hi;
  solution.active_set.assign(n, ActiveLabel::free);
  auto& rep = solution.report;

  // target(v) = alpha^{-1} t(P(v)), the fixed-point map.
  const auto target = [&](const VectorXd& v) {
    const VectorXd u = problem.solve_state(project_cutoff(problem, v, lo, hi));
    const VectorXd z = problem.solve_adjoint(u);
    return VectorXd(problem.normal_trace(u, z) / data.alpha);
  };

  VectorXd v = VectorXd::Zero(n);
  VectorXd tv = target(v);
  double residual = cutoff_distance(problem, v, tv, lo, hi);
  const double scale = residual;
  rep.residuals.push_back(scale == 0.0 ? 0.0 : 1.0);
  if (scale == 0.0) {
    solution.control = v;
    rep.converged = true;
    return finish(problem, std::move(solution), cg_before);
  }

  for (int outer = 0; outer < config.max_outer; ++outer) {
    if (residual <= config.tol_grad * scale) {
      rep.converged = true;
      break;
    }
    // Full step first; if it contracts poorly, take the step length that
    // minimizes the linearized residual along the line, then backtrack.
    const VectorXd r = tv - v;
    VectorXd v_try = v + r;
    VectorXd tv_try = target(v_try);
    double res_try = cutoff_distance(problem, v_try, tv_try, lo, hi);
    if (!(res_try <= 0.5 * residual)) {
      const VectorXd d = (tv_try - v_try) - r;
      const double dd = problem.boundary_inner(d, d);
      double theta = dd > 0.0 ? std::clamp(-problem.boundary_inner(r, d) / dd, 1.0 / 64.0, 1.0) : 1.0;
      const VectorXd v_full = v_try, tv_full = tv_try;
      const double res_full = res_try;
      for (; theta < 1.0; theta *= 0.5) {
        v_try = v + theta * r;
        tv_try = target(v_try);
        res_try = cutoff_distance(problem, v_try, tv_try, lo, hi);
        if (res_try < residual || theta <= 1.0 / 64.0) break;
      }
      if (res_full < res_try) {
        v_try = v_full;
        tv_try = tv_full;
        res_try = res_full;
      }
    }
    v = std::move(v_try);
    tv = std::move(tv_try);
    residual = res_try;
    ++rep.outer_iterations;
    rep.residuals.push_back(residual / scale);
  }
  if (!rep.converged && residual <= config.tol_grad * scale) rep.converged = true;
  if (!rep.converged)
    throw OptimizerError("damped fixed-point iteration did not reach the tolerance", rep.residuals);

  // Store the image of the last iterate so the control is exactly the cutoff
  // of a scaled normal trace.
  solution.control = tv;
  ActiveSet labels(n, ActiveLabel::free);
  for (int i = 0; i < n; ++i)
    labels[i] = tv[i] > hi ? ActiveLabel::upper : tv[i] < lo ? ActiveLabel::lower : ActiveLabel::free;
  solution.active_set = labels;
  rep.active_counts.push_back(count_labels(labels));
  return finish(problem, std::move(solution), cg_before);
}

Solution solve_control(const ControlProblem& problem, const OptimizerConfig& config) {
  if (config.control_concept == Concept::variational) return solve_variational(problem, config);
  if (problem.data().bounded()) {
    const auto& d = problem.data();
    if (std::isfinite(d.q_a) && std::isfinite(d.q_b)) return solve_pdas(problem, config);
    throw DomainError("the p1 control_concept needs both bounds finite or both infinite");
  }
  return solve_unconstrained(problem, config);
}

VectorXd quasi_interpolate(const Mesh& mesh, const DofMap& dofs, const ScalarField& g, int quad_degree) {
  const int n = dofs.num_boundary();
  VectorXd num = VectorXd::Zero(n), den = VectorXd::Zero(n);
  VectorXd lo = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  VectorXd hi = -lo;
  for_each_boundary_point(mesh, quad_degree, [&](const BoundaryPoint& p) {
    const double value = g(p.x);
    const auto& tri = mesh.boundary_faces[p.face].vertices;
    for (int k = 0; k < 3; ++k) {
      const int i = dofs.boundary_index[tri[k]];
      num[i] += p.weight * p.bary[k] * value;
      den[i] += p.weight * p.bary[k];
      lo[i] = std::min(lo[i], value);
      hi[i] = std::max(hi[i], value);
    }
  });
  // A positive-weight average lies in the range of the sampled values; the
  // clamp only removes rounding.
  VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = cutoff(num[i] / den[i], lo[i], hi[i]);
  return out;
}

VectorXd quasi_interpolate(const ControlProblem& problem, const VectorXd& q) {
  return (problem.boundary_mass() * q).cwiseQuotient(problem.boundary_lumped_mass());
}

} // namespace dbc
