#include "dbc/manufactured.hpp"

#include <algorithm>
#include <numbers>
#include <string>

namespace dbc {

ManufacturedCase exact_fields(double omega) {
  constexpr double pi = std::numbers::pi;
  if (!(omega >= 0.5 * pi - 1e-14 && omega < pi))
    throw DomainError("edge angle must lie in [pi/2, pi), got " + std::to_string(omega));
  return ManufacturedCase{omega, pi / omega, 1.0};
}

ScalarField ManufacturedCase::state_field() const {
  return [c = *this](const Vector3d& x) { return c.state(x); };
}
ScalarField ManufacturedCase::adjoint_field() const {
  return [c = *this](const Vector3d& x) { return c.adjoint(x); };
}
ScalarField ManufacturedCase::control_field() const {
  return [c = *this](const Vector3d& x) { return c.control(x); };
}
ScalarField ManufacturedCase::source_field() const {
  return [c = *this](const Vector3d& x) { return c.source(x); };
}
ScalarField ManufacturedCase::desired_state_field() const {
  return [c = *this](const Vector3d& x) { return c.desired_state(x); };
}

TheoryRates expected_rate(double omega) {
  constexpr double pi = std::numbers::pi;
  if (!(omega >= 0.5 * pi - 1e-14 && omega < pi)) throw DomainError("edge angle must lie in [pi/2, pi)");
  TheoryRates rates;
  rates.s_max = std::min(pi / omega - 1.0, 0.5);
  // lambda = 3/2 sits exactly on the threshold; treat it as the first-order case.
  if (rates.s_max > 0.5 - 1e-12) rates.s_max = 0.5;
  rates.expected_rate = 0.5 + rates.s_max;
  rates.log_factor = rates.s_max == 0.5;
  return rates;
}

} // namespace dbc
