#include "dbc/fem.hpp"
#include "dbc/linear_solver.hpp"
#include "dbc/multigrid.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace dbc;

namespace {

Mesh cube(int level) { return build_prism_mesh(make_prism_domain(0.5 * std::numbers::pi), level); }

// Dense interior block of a matrix, plus the index list.
std::pair<MatrixXd, std::vector<int>> interior_block(const SparseMatrix& a, const std::vector<bool>& fixed) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(fixed.size()); ++i)
    if (!fixed[i]) idx.push_back(i);
  const MatrixXd dense = MatrixXd(a);
  MatrixXd block(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) block(i, j) = dense(idx[i], idx[j]);
  return {block, idx};
}

} // namespace

TEST_CASE("identity operator converges in one step") {
  const MatrixXd id = MatrixXd::Identity(5, 5);
  const VectorXd r = VectorXd::LinSpaced(5, 1.0, 5.0);
  auto [x, rep] = cg_solve(MatrixOperator<MatrixXd>(id), r);
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK((x - r).norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("diagonal 2x2 system terminates in at most two steps") {
  MatrixXd a = MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 4.0;
  auto [x, rep] = cg_solve(MatrixOperator<MatrixXd>(a), VectorXd::Ones(2));
  CHECK(rep.iterations <= 2);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(0.25));
}

TEST_CASE("zero right-hand side returns zero without iterating") {
  const MatrixXd id = MatrixXd::Identity(3, 3);
  auto [x, rep] = cg_solve(MatrixOperator<MatrixXd>(id), VectorXd::Zero(3));
  CHECK(rep.converged);
  CHECK(rep.iterations == 0);
  CHECK(x.norm() == 0.0);
}

TEST_CASE("indefinite operator and non-finite input are reported") {
  MatrixXd a = MatrixXd::Identity(2, 2);
  a(1, 1) = -1.0;
  CHECK_THROWS_AS(cg_solve(MatrixOperator<MatrixXd>(a), VectorXd::Ones(2)), SolverError);
  VectorXd bad = VectorXd::Ones(2);
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(cg_solve(MatrixOperator<MatrixXd>(MatrixXd::Identity(2, 2)), bad), SolverError);
}

TEST_CASE("iteration cap yields an unconverged report") {
  const Mesh mesh = cube(2);
  const SparseMatrix a = assemble_stiffness(mesh);
  MaskedOperator<double> op(a, mesh.boundary_vertex_flags);
  VectorXd rhs = VectorXd::Ones(mesh.num_vertices());
  op.zero_fixed(rhs);
  CgOptions<double> options;
  options.max_iter = 1;
  options.tol_rel = 1e-14;
  auto [x, rep] = cg_solve(op, rhs, options);
  CHECK_FALSE(rep.converged);
  CHECK(rep.iterations == 1);
}

TEST_CASE("interior stiffness solve on the level-2 cube matches a dense factorization") {
  const Mesh mesh = cube(2);
  const SparseMatrix a = assemble_stiffness(mesh);
  MaskedOperator<double> op(a, mesh.boundary_vertex_flags);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorXd rhs(mesh.num_vertices());
  for (auto& v : rhs) v = u(rng);
  op.zero_fixed(rhs);

  CgOptions<double> options;
  options.inverse_diagonal = op.inverse_diagonal();
  auto [x, rep] = cg_solve(op, rhs, options);
  REQUIRE(rep.converged);
  VectorXd res(rhs.size());
  op.apply(x, res);
  CHECK((res - rhs).norm() / rhs.norm() <= 1e-10);

  const auto [block, idx] = interior_block(a, mesh.boundary_vertex_flags);
  VectorXd b(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) b[i] = rhs[idx[i]];
  const VectorXd oracle = block.ldlt().solve(b);
  double err = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i) err = std::max(err, std::abs(x[idx[i]] - oracle[i]));
  CHECK(err <= 1e-8 * oracle.cwiseAbs().maxCoeff());
}

TEST_CASE("Dirichlet elimination") {
  const Mesh mesh = cube(2);
  const SparseMatrix a = assemble_stiffness(mesh);
  const auto& fixed = mesh.boundary_vertex_flags;
  const int n = mesh.num_vertices();

  SUBCASE("zero boundary data leaves the rhs unchanged") {
    const auto sys = eliminate_dirichlet<double>(a, fixed, VectorXd::Zero(n));
    CHECK(sys.rhs_adjustment.norm() == 0.0);
  }

  SUBCASE("affine boundary data is reproduced exactly") {
    VectorXd values(n);
    for (int v = 0; v < n; ++v) values[v] = 1.0 + 2.0 * mesh.vertices[v][0] - 0.5 * mesh.vertices[v][1] + mesh.vertices[v][2];
    const auto sys = eliminate_dirichlet<double>(a, fixed, values);
    CgOptions<double> options;
    options.tol_rel = 1e-13;
    auto [x, rep] = cg_solve(sys.op, sys.rhs_adjustment, options);
    for (int v = 0; v < n; ++v)
      if (!fixed[v]) CHECK(x[v] == doctest::Approx(values[v]).epsilon(1e-10));
  }

  SUBCASE("random boundary data matches dense block elimination") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    VectorXd values(n);
    for (auto& v : values) v = u(rng);
    const auto sys = eliminate_dirichlet<double>(a, fixed, values);
    CgOptions<double> options;
    options.tol_rel = 1e-14;
    auto [x, rep] = cg_solve(sys.op, sys.rhs_adjustment, options);

    const MatrixXd dense = MatrixXd(a);
    std::vector<int> in, bd;
    for (int v = 0; v < n; ++v) (fixed[v] ? bd : in).push_back(v);
    MatrixXd aii(in.size(), in.size()), aib(in.size(), bd.size());
    VectorXd g(bd.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      for (std::size_t j = 0; j < in.size(); ++j) aii(i, j) = dense(in[i], in[j]);
      for (std::size_t j = 0; j < bd.size(); ++j) aib(i, j) = dense(in[i], bd[j]);
    }
    for (std::size_t j = 0; j < bd.size(); ++j) g[j] = values[bd[j]];
    const VectorXd oracle = aii.ldlt().solve(-aib * g);
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(std::abs(x[in[i]] - oracle[i]) <= 1e-10);
  }
}

TEST_CASE("solver is generic in the scalar type") {
  using M = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  M a(2, 2);
  a << 4.0L, 1.0L, 1.0L, 3.0L;
  Vec<long double> b(2);
  b << 1.0L, 2.0L;
  CgOptions<long double> options;
  options.tol_rel = 1e-18L;
  auto [x, rep] = cg_solve(MatrixOperator<M>(a), b, options);
  CHECK(rep.converged);
  CHECK(static_cast<double>(x[0]) == doctest::Approx(1.0 / 11.0));
  CHECK(static_cast<double>(x[1]) == doctest::Approx(7.0 / 11.0));
}

TEST_CASE("multigrid preconditioner") {
  const Mesh mesh = cube(4);
  const SparseMatrix a = assemble_stiffness(mesh);
  const DofMap dofs = make_dof_map(mesh);
  std::vector<bool> fixed(mesh.num_vertices(), false);
  for (int v : dofs.boundary) fixed[v] = true;
  const MaskedOperator<double> op(a, fixed);

  VectorXd b = assemble_load(mesh, [](const Vector3d& x) { return 1.0 + x[0] * x[2]; }, 2);
  op.zero_fixed(b);

  SUBCASE("coarse size bounds the hierarchy depth") {
    CHECK(MultigridPreconditioner(a, fixed, mesh.midpoint_parents, 2000).num_levels() == 2);
    CHECK(MultigridPreconditioner(a, fixed, mesh.midpoint_parents, 1).num_levels() == 5);
  }

  SUBCASE("same solution as Jacobi in far fewer iterations") {
    CgOptions<double> jacobi;
    jacobi.tol_rel = 1e-12;
    jacobi.inverse_diagonal = op.inverse_diagonal();
    const auto [xj, rj] = cg_solve(op, b, jacobi);

    for (int coarse : {1, 2000}) {
      CAPTURE(coarse);
      const MultigridPreconditioner mg(a, fixed, mesh.midpoint_parents, coarse);
      CgOptions<double> opts;
      opts.tol_rel = 1e-12;
      opts.preconditioner = [&](const VectorXd& r, VectorXd& z) { mg.apply(r, z); };
      const auto [xm, rm] = cg_solve(op, b, opts);
      CHECK(rm.converged);
      CHECK(rm.iterations * 4 < rj.iterations);
      CHECK((xm - xj).norm() <= 1e-9 * xj.norm());
      for (int v : dofs.boundary) CHECK(xm[v] == 0.0);
    }
  }

  SUBCASE("the cycle is a symmetric operator") {
    const MultigridPreconditioner mg(a, fixed, mesh.midpoint_parents, 1);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    VectorXd x(b.size()), y(b.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x[i] = fixed[i] ? 0.0 : g(rng);
      y[i] = fixed[i] ? 0.0 : g(rng);
    }
    VectorXd mx, my;
    mg.apply(x, mx);
    mg.apply(y, my);
    CHECK(std::abs(y.dot(mx) - x.dot(my)) <= 1e-10 * std::abs(y.dot(mx)) + 1e-14);
    CHECK(x.dot(mx) > 0.0);
  }
}
