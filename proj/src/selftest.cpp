#include "dbc/selftest.hpp"

#include "dbc/manufactured.hpp"
#include "dbc/optimizer.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace dbc {

namespace {

using Vec3L = Eigen::Matrix<long double, 3, 1>;

// Fourth-order central difference Laplacian in long double.
template <typename Fn>
long double fd_laplacian(Fn&& fn, const Vec3L& x, long double h) {
  long double sum = 0.0L;
  for (int d = 0; d < 3; ++d) {
    Vec3L e = Vec3L::Zero();
    e[d] = h;
    sum += (-fn(Vec3L(x + 2 * e)) + 16 * fn(Vec3L(x + e)) - 30 * fn(x) + 16 * fn(Vec3L(x - e)) - fn(Vec3L(x - 2 * e))) /
           (12 * h * h);
  }
  return sum;
}

struct Reporter {
  std::ostream& out;
  int failed = 0;
  void check(const char* name, bool ok, double value) {
    out << (ok ? "PASS " : "FAIL ") << name << " (" << value << ")\n";
    if (!ok) ++failed;
  }
};

ProblemData sample_data() {
  ProblemData data;
  data.alpha = 0.5;
  data.source = [](const Vector3d& x) { return 1.0 + x[0] * x[2]; };
  data.desired_state = [](const Vector3d& x) { return std::sin(2.0 * x[0]) + x[1] * x[1] - x[2]; };
  return data;
}

} // namespace

int run_selftest(std::ostream& out) {
  Reporter rep{out};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const auto domain = std::make_shared<const HalfSpaceDomain>(make_prism_domain(0.75 * std::numbers::pi));
  const Mesh coarse = build_prism_mesh(domain, 1);
  {
    const auto check = check_mesh(coarse);
    const double dv = std::abs(total_volume(coarse) - domain->volume());
    rep.check("mesh conforming with exact volume", check.ok() && dv < 1e-12, dv);
  }

  {
    const auto c = exact_fields(0.75 * std::numbers::pi);
    double worst = 0.0;
    std::uniform_real_distribution<double> r01(0.2, 0.9), ang(0.1, 0.9);
    for (int i = 0; i < 10; ++i) {
      const long double r = r01(rng), phi = ang(rng) * c.omega, x3 = r01(rng);
      const Vec3L x(r * std::cos(phi), r * std::sin(phi), x3);
      const auto u = [&](const Vec3L& y) { return c.state(y); };
      const auto z = [&](const Vec3L& y) { return c.adjoint(y); };
      const long double f_fd = -fd_laplacian(u, x, 1e-4L);
      const long double ud_fd = c.state(x) + fd_laplacian(z, x, 1e-4L);
      worst = std::max<double>(worst, std::abs(f_fd - c.source(x)) / std::max(1.0L, std::abs(f_fd)));
      worst = std::max<double>(worst, std::abs(ud_fd - c.desired_state(x)) / std::max(1.0L, std::abs(ud_fd)));
    }
    rep.check("manufactured source and desired state vs finite differences", worst <= 1e-6, worst);
  }

  const ControlProblem problem(build_prism_mesh(domain, 2), sample_data());
  const int nb = problem.dofs().num_boundary();
  VectorXd q(nb);
  for (int i = 0; i < nb; ++i) q[i] = unit(rng);

  {
    const VectorXd u = problem.solve_state(q);
    const VectorXd z = problem.solve_adjoint(u);
    const double d = problem.boundary_norm(problem.normal_trace(u, z) - problem.normal_trace_harmonic(u, z)) /
                     problem.boundary_norm(problem.normal_trace(u, z));
    rep.check("normal trace independent of the extension", d <= 1e-8, d);
  }

  {
    const VectorXd g = problem.reduced_gradient(q);
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
      VectorXd dq(nb);
      for (int i = 0; i < nb; ++i) dq[i] = unit(rng);
      const double eps = 1e-4;
      const double fd = (problem.reduced_cost(q + eps * dq) - problem.reduced_cost(q - eps * dq)) / (2 * eps);
      const double ad = problem.boundary_inner(g, dq);
      worst = std::max(worst, std::abs(fd - ad) / std::abs(ad));
    }
    rep.check("reduced gradient vs central differences", worst <= 1e-6, worst);
  }

  {
    VectorXd dq(nb);
    for (int i = 0; i < nb; ++i) dq[i] = unit(rng);
    const double lhs = dq.dot(problem.hessian_dual_apply(dq));
    const VectorXd du = problem.solve_state_homogeneous(dq);
    const double rhs = problem.data().alpha * problem.boundary_inner(dq, dq) + du.dot(problem.mass() * du);
    const double d = std::abs(lhs - rhs) / rhs;
    rep.check("Hessian energy identity", d <= 1e-8, d);
  }

  {
    int violations = 0;
    for (int k = 0; k < 20; ++k) {
      const double a = unit(rng), b = unit(rng), c = unit(rng);
      const ScalarField g = [=](const Vector3d& x) { return std::clamp(a * x[0] + b * x[1] * x[2] + c, -0.3, 0.4); };
      const VectorXd pi = quasi_interpolate(problem.mesh(), problem.dofs(), g);
      for (int i = 0; i < nb; ++i) violations += pi[i] < -0.3 || pi[i] > 0.4;
    }
    rep.check("quasi-interpolation keeps bounds", violations == 0, violations);
  }

  {
    OptimizerConfig config;
    const Solution free = solve_unconstrained(problem, config);
    ProblemData wide = sample_data();
    wide.q_a = -1e9;
    wide.q_b = 1e9;
    const ControlProblem boxed(build_prism_mesh(domain, 2), wide);
    const Solution pdas = solve_pdas(boxed, config);
    const double d = problem.boundary_norm(free.control - pdas.control);
    rep.check("active-set solve with inactive bounds matches unconstrained", d <= 1e-7, d);
  }

  out << (rep.failed == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return rep.failed;
}

} // namespace dbc
