#pragma once

#include "dbc/types.hpp"

#include <cmath>

namespace dbc {

/// Closed-form optimal state, adjoint and control on the prism with edge
/// angle omega, for alpha = 1. With lambda = pi / omega, s = r^lambda sin(lambda phi),
/// P = (1 - x1^2)(1 - x2^2) and T = x3^2 (1 - x3)^2:
///
///   z = s P T
///   u = -lambda r^(lambda-1) P T + 2 s (x1^2 + x2^2 - 2) T
///   q = u on the boundary, f = -lap(u), u_d = u + lap(z).
///
/// The source f behaves like r^(lambda-3) near the edge r = 0 and is not
/// square integrable there; every other field vanishes on the edge.
struct ManufacturedCase {
  double omega = 0.0;
  double lambda = 0.0;
  double alpha = 1.0;

  template <typename Scalar>
  Scalar state(const Eigen::Matrix<Scalar, 3, 1>& x) const;
  template <typename Scalar>
  Scalar adjoint(const Eigen::Matrix<Scalar, 3, 1>& x) const;
  template <typename Scalar>
  Eigen::Matrix<Scalar, 3, 1> adjoint_gradient(const Eigen::Matrix<Scalar, 3, 1>& x) const;
  template <typename Scalar>
  Scalar laplace_state(const Eigen::Matrix<Scalar, 3, 1>& x) const;
  template <typename Scalar>
  Scalar laplace_adjoint(const Eigen::Matrix<Scalar, 3, 1>& x) const;
  template <typename Scalar>
  Scalar source(const Eigen::Matrix<Scalar, 3, 1>& x) const { return -laplace_state(x); }
  template <typename Scalar>
  Scalar desired_state(const Eigen::Matrix<Scalar, 3, 1>& x) const {
    return state(x) + laplace_adjoint(x);
  }
  template <typename Scalar>
  Scalar control(const Eigen::Matrix<Scalar, 3, 1>& x) const { return state(x); }

  ScalarField state_field() const;
  ScalarField adjoint_field() const;
  ScalarField control_field() const;
  ScalarField source_field() const;
  ScalarField desired_state_field() const;
};

/// Throws DomainError unless omega lies in [pi/2, pi).
ManufacturedCase exact_fields(double omega);

struct TheoryRates {
  double s_max = 0.0;         ///< min(lambda - 1, 1/2)
  double expected_rate = 0.0; ///< 1/2 + s_max
  bool log_factor = false;    ///< rate holds up to |ln h| when s_max = 1/2
};

TheoryRates expected_rate(double omega);

namespace detail {

template <typename Scalar>
struct SectorTerms {
  Scalar r, phi;
  Scalar s;                       // r^lambda sin(lambda phi)
  Scalar ds1, ds2;                // gradient of s
  Scalar p, dp1, dp2, lap_p;      // (1 - x1^2)(1 - x2^2)
  Scalar t, dt, ddt;              // x3^2 (1 - x3)^2
};

template <typename Scalar>
SectorTerms<Scalar> sector_terms(double lambda_d, const Eigen::Matrix<Scalar, 3, 1>& x) {
  using std::atan2;
  using std::cos;
  using std::pow;
  using std::sin;
  using std::sqrt;
  const Scalar lambda(lambda_d);
  SectorTerms<Scalar> k;
  const Scalar x1 = x[0], x2 = x[1], x3 = x[2];
  k.r = sqrt(x1 * x1 + x2 * x2);
  k.phi = atan2(x2, x1);
  if (k.phi < Scalar(0) && k.phi > Scalar(-1e-12)) k.phi = Scalar(0);
  if (k.r > Scalar(0)) {
    k.s = pow(k.r, lambda) * sin(lambda * k.phi);
    const Scalar g = lambda * pow(k.r, lambda - Scalar(1));
    k.ds1 = g * sin((lambda - Scalar(1)) * k.phi);
    k.ds2 = g * cos((lambda - Scalar(1)) * k.phi);
  } else {
    k.s = k.ds1 = k.ds2 = Scalar(0);
  }
  k.p = (Scalar(1) - x1 * x1) * (Scalar(1) - x2 * x2);
  k.dp1 = Scalar(-2) * x1 * (Scalar(1) - x2 * x2);
  k.dp2 = Scalar(-2) * x2 * (Scalar(1) - x1 * x1);
  k.lap_p = Scalar(-2) * (Scalar(2) - x1 * x1 - x2 * x2);
  k.t = x3 * x3 * (Scalar(1) - x3) * (Scalar(1) - x3);
  k.dt = Scalar(2) * x3 - Scalar(6) * x3 * x3 + Scalar(4) * x3 * x3 * x3;
  k.ddt = Scalar(2) - Scalar(12) * x3 + Scalar(12) * x3 * x3;
  return k;
}

} // namespace detail

template <typename Scalar>
Scalar ManufacturedCase::state(const Eigen::Matrix<Scalar, 3, 1>& x) const {
  const auto k = detail::sector_terms(lambda, x);
  if (k.r == Scalar(0)) return Scalar(0);
  using std::pow;
  const Scalar lam(lambda);
  const Scalar q = x[0] * x[0] + x[1] * x[1] - Scalar(2);
  return -lam * pow(k.r, lam - Scalar(1)) * k.p * k.t + Scalar(2) * k.s * q * k.t;
}

template <typename Scalar>
Scalar ManufacturedCase::adjoint(const Eigen::Matrix<Scalar, 3, 1>& x) const {
  const auto k = detail::sector_terms(lambda, x);
  return k.s * k.p * k.t;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> ManufacturedCase::adjoint_gradient(const Eigen::Matrix<Scalar, 3, 1>& x) const {
  const auto k = detail::sector_terms(lambda, x);
  return {(k.ds1 * k.p + k.s * k.dp1) * k.t, (k.ds2 * k.p + k.s * k.dp2) * k.t, k.s * k.p * k.dt};
}

template <typename Scalar>
Scalar ManufacturedCase::laplace_adjoint(const Eigen::Matrix<Scalar, 3, 1>& x) const {
  // s is harmonic, so lap(s P) = 2 grad s . grad P + s lap P.
  const auto k = detail::sector_terms(lambda, x);
  return k.t * (Scalar(2) * (k.ds1 * k.dp1 + k.ds2 * k.dp2) + k.s * k.lap_p) + k.s * k.p * k.ddt;
}

template <typename Scalar>
Scalar ManufacturedCase::laplace_state(const Eigen::Matrix<Scalar, 3, 1>& x) const {
  const auto k = detail::sector_terms(lambda, x);
  // Diverges on the edge; the value there is never used by interior quadrature.
  if (k.r == Scalar(0)) return Scalar(0);
  using std::pow;
  const Scalar lam(lambda);
  const Scalar x1 = x[0], x2 = x[1];

  // a = r^(lambda-1): grad a = (lambda-1) r^(lambda-3) (x1, x2), lap a = (lambda-1)^2 r^(lambda-3)
  const Scalar a = pow(k.r, lam - Scalar(1));
  const Scalar c = pow(k.r, lam - Scalar(3));
  const Scalar lap_a = (lam - Scalar(1)) * (lam - Scalar(1)) * c;
  const Scalar grad_a_dot_grad_p = (lam - Scalar(1)) * c * (x1 * k.dp1 + x2 * k.dp2);
  const Scalar first = -lam * (k.t * (k.p * lap_a + Scalar(2) * grad_a_dot_grad_p + a * k.lap_p) + a * k.p * k.ddt);

  // Q = x1^2 + x2^2 - 2: grad Q = 2 (x1, x2), lap Q = 4
  const Scalar q = x1 * x1 + x2 * x2 - Scalar(2);
  const Scalar grad_s_dot_grad_q = Scalar(2) * (k.ds1 * x1 + k.ds2 * x2);
  const Scalar second = Scalar(2) * (k.t * (Scalar(4) * k.s + Scalar(2) * grad_s_dot_grad_q) + k.s * q * k.ddt);
  return first + second;
}

} // namespace dbc
