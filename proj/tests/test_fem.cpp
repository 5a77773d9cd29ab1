#include "dbc/fem.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace dbc;

namespace {

constexpr double pi = std::numbers::pi;

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

Mesh reference_tet() {
  Mesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  m.tets = {{0, 1, 2, 3}};
  return m;
}

// One boundary triangle with the given corners, owned by a tet with apex below it.
Mesh single_triangle_patch(const Vector3d& a, const Vector3d& b, const Vector3d& c) {
  Mesh m;
  const Vector3d apex = (a + b + c) / 3.0 - (b - a).cross(c - a).normalized();
  m.vertices = {a, b, c, apex};
  m.tets = {{0, 1, 2, 3}};
  if (tet_volume(m, 0) < 0) m.tets = {{0, 2, 1, 3}};
  m.boundary_faces = {BoundaryFace{{0, 1, 2}, 0, 0}};
  m.boundary_vertex_flags = {true, true, true, false};
  return m;
}

Mesh cube(int level) { return build_prism_mesh(make_prism_domain(pi / 2), level); }

} // namespace

TEST_CASE("tetrahedron rules integrate monomials exactly up to their degree") {
  for (int degree : {1, 2, 5}) {
    const auto rule = tet_rule<double>(degree);
    double wsum = 0.0;
    for (double w : rule.weights) {
      CHECK(w > 0.0);
      wsum += w;
    }
    CHECK(wsum == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    for (int a = 0; a <= degree; ++a)
      for (int b = 0; a + b <= degree; ++b)
        for (int c = 0; a + b + c <= degree; ++c) {
          double sum = 0.0;
          for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& p = rule.points[q];
            sum += rule.weights[q] * std::pow(p[1], a) * std::pow(p[2], b) * std::pow(p[3], c);
          }
          const double exact = factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
          CHECK(sum == doctest::Approx(exact).epsilon(1e-13));
        }
  }
  CHECK(tet_rule<double>(3).size() == 14);
}

TEST_CASE("triangle rules integrate monomials exactly up to their degree") {
  for (int degree : {1, 2, 4}) {
    const auto rule = triangle_rule<double>(degree);
    for (int a = 0; a <= degree; ++a)
      for (int b = 0; a + b <= degree; ++b) {
        double sum = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
          sum += rule.weights[q] * std::pow(rule.points[q][1], a) * std::pow(rule.points[q][2], b);
        CHECK(sum == doctest::Approx(factorial(a) * factorial(b) / factorial(a + b + 2)).epsilon(1e-13));
      }
  }
}

TEST_CASE("long double rules") {
  const auto rule = tet_rule<long double>(5);
  long double sum = 0.0L;
  for (std::size_t q = 0; q < rule.size(); ++q) sum += rule.weights[q] * std::pow(rule.points[q][1], 5);
  CHECK(std::abs(static_cast<double>(sum - 120.0L / 40320.0L)) <= 1e-15);
}

TEST_CASE("stiffness matrix") {
  SUBCASE("reference tet: right-angle vertex") {
    const SparseMatrix a = assemble_stiffness(reference_tet());
    CHECK(a.coeff(0, 0) == doctest::Approx(0.5));
    CHECK(a.coeff(1, 1) == doctest::Approx(1.0 / 6.0));
    CHECK(a.coeff(0, 1) == doctest::Approx(-1.0 / 6.0));
  }
  SUBCASE("constants in the kernel, positive semidefinite") {
    const Mesh m = build_prism_mesh(make_prism_domain(3 * pi / 4), 2);
    const SparseMatrix a = assemble_stiffness(m);
    const VectorXd one = VectorXd::Ones(m.num_vertices());
    CHECK((a * one).norm() <= 1e-12);
    CHECK(std::abs(one.dot(a * one)) <= 1e-12);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int k = 0; k < 100; ++k) {
      VectorXd x(m.num_vertices());
      for (auto& v : x) v = g(rng);
      CHECK(x.dot(a * x) >= 0.0);
    }
    CHECK((MatrixXd(a) - MatrixXd(a).transpose()).norm() <= 1e-13);
  }
  SUBCASE("inverted tet is rejected") {
    Mesh m = reference_tet();
    m.tets = {{0, 2, 1, 3}};
    CHECK_THROWS_AS(assemble_stiffness(m), AssemblyError);
  }
}

TEST_CASE("domain mass matrix") {
  const VectorXd row = assemble_mass_domain(reference_tet()) * VectorXd::Ones(4);
  for (int i = 0; i < 4; ++i) CHECK(row[i] == doctest::Approx(1.0 / 24.0));

  const Mesh c = cube(1);
  const VectorXd one = VectorXd::Ones(c.num_vertices());
  CHECK(one.dot(assemble_mass_domain(c) * one) == doctest::Approx(1.0).epsilon(1e-14));
  const Mesh w = build_prism_mesh(make_prism_domain(3 * pi / 4), 1);
  const VectorXd onew = VectorXd::Ones(w.num_vertices());
  CHECK(onew.dot(assemble_mass_domain(w) * onew) == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("boundary mass matrix") {
  SUBCASE("unit cube surface area, before and after refinement") {
    for (int level : {0, 2}) {
      const Mesh m = cube(level);
      const DofMap dofs = make_dof_map(m);
      const SparseMatrix mb = assemble_mass_boundary(m, dofs);
      const VectorXd one = VectorXd::Ones(dofs.num_boundary());
      CHECK(one.dot(mb * one) == doctest::Approx(6.0).epsilon(1e-14));
    }
  }
  SUBCASE("single triangle row sums") {
    const Mesh m = single_triangle_patch({0, 0, 0}, {2, 0, 0}, {0, 1, 0});
    const DofMap dofs = make_dof_map(m);
    const VectorXd row = assemble_mass_boundary(m, dofs) * VectorXd::Ones(3);
    for (int i = 0; i < 3; ++i) CHECK(row[i] == doctest::Approx(1.0 / 3.0));
  }
}

TEST_CASE("load vectors") {
  const Mesh m = cube(2);
  const VectorXd lumped = assemble_mass_domain(m) * VectorXd::Ones(m.num_vertices());
  CHECK((assemble_load(m, [](const Vector3d&) { return 1.0; }, 5) - lumped).norm() <= 1e-14);
  CHECK(assemble_load(m, [](const Vector3d&) { return 0.0; }, 5).norm() == 0.0);
  CHECK(assemble_load(m, [](const Vector3d& x) { return x[0]; }, 2).sum() == doctest::Approx(0.5).epsilon(1e-14));
  const DofMap dofs = make_dof_map(m);
  CHECK(assemble_boundary_load(m, dofs, [](const Vector3d&) { return 1.0; }, 4).sum() ==
        doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("L2 error integration") {
  const Mesh m = cube(2);
  const DofMap dofs = make_dof_map(m);
  VectorXd affine(m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) affine[v] = 1.0 + m.vertices[v].sum();
  const ScalarField exact = [](const Vector3d& x) { return 1.0 + x.sum(); };
  CHECK(integrate_L2_error_domain(m, affine, exact, 5) <= 1e-14);
  CHECK(integrate_L2_error_boundary(m, dofs, dofs.restrict_to_boundary(affine), exact, 4) <= 1e-14);

  const ScalarField one = [](const Vector3d&) { return 1.0; };
  CHECK(integrate_L2_error_domain(m, VectorXd::Zero(m.num_vertices()), one, 5) == doctest::Approx(1.0));
  CHECK(integrate_L2_error_boundary(m, dofs, VectorXd::Zero(dofs.num_boundary()), one, 4) ==
        doctest::Approx(std::sqrt(6.0)));

  // Interpolation of x1^2 converges at second order.
  const ScalarField sq = [](const Vector3d& x) { return x[0] * x[0]; };
  std::vector<double> err, hs;
  for (int level : {2, 3}) {
    const Mesh mm = cube(level);
    VectorXd interp(mm.num_vertices());
    for (int v = 0; v < mm.num_vertices(); ++v) interp[v] = sq(mm.vertices[v]);
    err.push_back(integrate_L2_error_domain(mm, interp, sq, 5));
    hs.push_back(mm.h);
  }
  const double rate = std::log(err[0] / err[1]) / std::log(hs[0] / hs[1]);
  CHECK(rate == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("weighted gradient norm") {
  const Mesh m = cube(1);
  CHECK(weighted_gradient_norm(m, VectorXd::Constant(m.num_vertices(), 3.0), 1.0) == 0.0);
  CHECK_THROWS_AS(weighted_gradient_norm(m, VectorXd::Zero(m.num_vertices()), 0.5), DomainError);

  VectorXd x1(m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) x1[v] = m.vertices[v][0];
  const double kappa = 20.0;
  const double kh = kappa * m.h;
  REQUIRE(kh >= 10.0);
  const double value = weighted_gradient_norm(m, x1, kappa);
  CHECK(std::abs(value - std::sqrt(kh)) / std::sqrt(kh) < 0.05);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Mesh f = cube(2);
  VectorXd r(f.num_vertices());
  for (auto& v : r) v = u(rng);
  for (double k : {1.0, 4.0})
    CHECK(weighted_gradient_norm(f, r, k) >= std::sqrt(k * f.h) * gradient_norm(f, r) * (1 - 1e-12));
}

TEST_CASE("dof map") {
  const Mesh m = cube(2);
  const DofMap dofs = make_dof_map(m);
  CHECK(dofs.num_boundary() + dofs.num_interior() == m.num_vertices());
  CHECK(dofs.num_interior() == 27);
  VectorXd q = VectorXd::LinSpaced(dofs.num_boundary(), 0.0, 1.0);
  CHECK((dofs.restrict_to_boundary(dofs.extend_by_zero(q)) - q).norm() == 0.0);
  for (int v : dofs.interior) CHECK(dofs.extend_by_zero(q)[v] == 0.0);
}
