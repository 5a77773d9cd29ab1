#pragma once

#include <Eigen/Core>

#include <vector>

namespace dbc {

/// Quadrature on a reference simplex. Points are barycentric coordinates
/// (Dim + 1 entries); weights sum to the reference measure (1/6 for the
/// tetrahedron, 1/2 for the triangle).
template <typename Scalar, int Dim>
struct QuadratureRule {
  using Point = Eigen::Matrix<Scalar, Dim + 1, 1>;
  std::vector<Point> points;
  std::vector<Scalar> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }
};

template <typename Scalar>
using TetRule = QuadratureRule<Scalar, 3>;
template <typename Scalar>
using TriangleRule = QuadratureRule<Scalar, 2>;

namespace detail {

template <typename Scalar>
void add_tet_orbit4(TetRule<Scalar>& rule, Scalar a, Scalar w) {
  const Scalar b = Scalar(1) - Scalar(3) * a;
  using P = typename TetRule<Scalar>::Point;
  for (const auto& p : {P(b, a, a, a), P(a, b, a, a), P(a, a, b, a), P(a, a, a, b)}) {
    rule.points.push_back(p);
    rule.weights.push_back(w);
  }
}

template <typename Scalar>
void add_tet_orbit6(TetRule<Scalar>& rule, Scalar a, Scalar w) {
  const Scalar b = Scalar(0.5) - a;
  using P = typename TetRule<Scalar>::Point;
  for (const auto& p : {P(a, a, b, b), P(a, b, a, b), P(a, b, b, a), P(b, a, a, b), P(b, a, b, a), P(b, b, a, a)}) {
    rule.points.push_back(p);
    rule.weights.push_back(w);
  }
}

template <typename Scalar>
void add_triangle_orbit3(TriangleRule<Scalar>& rule, Scalar a, Scalar w) {
  const Scalar b = Scalar(1) - Scalar(2) * a;
  using P = typename TriangleRule<Scalar>::Point;
  for (const auto& p : {P(b, a, a), P(a, b, a), P(a, a, b)}) {
    rule.points.push_back(p);
    rule.weights.push_back(w);
  }
}

} // namespace detail

/// Positive-weight tetrahedron rules: degree 1 (centroid), 2 (4 points) and
/// 5 (14 points). Any request above 2 gets the 14-point rule.
template <typename Scalar = double>
TetRule<Scalar> tet_rule(int degree) {
  TetRule<Scalar> rule;
  if (degree <= 1) {
    rule.points.push_back({0.25, 0.25, 0.25, 0.25});
    rule.weights.push_back(Scalar(1) / Scalar(6));
    rule.degree = 1;
  } else if (degree == 2) {
    detail::add_tet_orbit4<Scalar>(rule, Scalar(0.13819660112501051518), Scalar(1) / Scalar(24));
    rule.degree = 2;
  } else {
    detail::add_tet_orbit6<Scalar>(rule, Scalar(0.045503704125649649492), Scalar(7.0910034628469110730E-03));
    detail::add_tet_orbit4<Scalar>(rule, Scalar(0.092735250310891226402), Scalar(0.012248840519393658257));
    detail::add_tet_orbit4<Scalar>(rule, Scalar(0.31088591926330060980), Scalar(0.018781320953002641800));
    rule.degree = 5;
  }
  return rule;
}

/// Positive-weight triangle rules: degree 1 (centroid), 2 (3 points) and
/// 4 (6 points). Any request above 2 gets the degree-4 rule.
template <typename Scalar = double>
TriangleRule<Scalar> triangle_rule(int degree) {
  TriangleRule<Scalar> rule;
  if (degree <= 1) {
    rule.points.push_back({Scalar(1) / 3, Scalar(1) / 3, Scalar(1) / 3});
    rule.weights.push_back(Scalar(0.5));
    rule.degree = 1;
  } else if (degree == 2) {
    detail::add_triangle_orbit3<Scalar>(rule, Scalar(1) / Scalar(6), Scalar(1) / Scalar(6));
    rule.degree = 2;
  } else {
    detail::add_triangle_orbit3<Scalar>(rule, Scalar(0.44594849091596488632), Scalar(0.5 * 0.22338158967801146570));
    detail::add_triangle_orbit3<Scalar>(rule, Scalar(0.091576213509770743460), Scalar(0.5 * 0.10995174365532186764));
    rule.degree = 4;
  }
  return rule;
}

} // namespace dbc
