#pragma once

#include "dbc/types.hpp"

#include <cmath>
#include <concepts>
#include <functional>
#include <utility>
#include <vector>

namespace dbc {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A symmetric positive definite map y = A x on vectors of length rows().
template <typename Op>
concept LinearOperator = requires(const Op& op, const Vec<typename Op::Scalar>& x, Vec<typename Op::Scalar>& y) {
  { op.rows() } -> std::convertible_to<Eigen::Index>;
  op.apply(x, y);
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

template <typename Scalar>
struct CgOptions {
  Scalar tol_rel = Scalar(1e-10);
  int max_iter = 0; ///< 0 selects 10 * n
  /// Jacobi preconditioner given as the inverse diagonal; empty means none.
  Vec<Scalar> inverse_diagonal;
  /// General SPD preconditioner z = B r; takes precedence over inverse_diagonal.
  std::function<void(const Vec<Scalar>&, Vec<Scalar>&)> preconditioner;
  /// Initial guess; empty means zero.
  Vec<Scalar> initial_guess;
  /// Called with the iterate after every update.
  std::function<void(int, const Vec<Scalar>&)> on_iterate;
};

/// Preconditioned conjugate gradients. Stops once the recursively updated
/// residual satisfies ||r|| <= tol_rel * ||rhs|| or after max_iter steps.
template <LinearOperator Op>
std::pair<Vec<typename Op::Scalar>, SolveReport> cg_solve(const Op& op, const Vec<typename Op::Scalar>& rhs,
                                                          const CgOptions<typename Op::Scalar>& options = {}) {
  using Scalar = typename Op::Scalar;
  using Vector = Vec<Scalar>;
  const Eigen::Index n = op.rows();
  if (rhs.size() != n) throw std::invalid_argument("cg_solve: rhs has wrong length");
  if (!rhs.allFinite()) throw SolverError("cg_solve: non-finite right-hand side");

  SolveReport report;
  const Scalar rhs_norm = rhs.norm();
  if (rhs_norm == Scalar(0)) {
    report.converged = true;
    return {Vector::Zero(n), report};
  }
  const int max_iter = options.max_iter > 0 ? options.max_iter : static_cast<int>(10 * n);
  const bool precondition = options.inverse_diagonal.size() == n;

  Vector x = options.initial_guess.size() == n ? options.initial_guess : Vector::Zero(n);
  Vector r(n), z(n), p(n), ap(n);
  if (options.initial_guess.size() == n) {
    op.apply(x, ap);
    r = rhs - ap;
  } else {
    r = rhs;
  }

  auto precond = [&](const Vector& in, Vector& out) {
    if (options.preconditioner)
      options.preconditioner(in, out);
    else if (precondition)
      out = options.inverse_diagonal.cwiseProduct(in);
    else
      out = in;
  };

  Scalar res = r.norm() / rhs_norm;
  if (res <= options.tol_rel) {
    report.relative_residual = static_cast<double>(res);
    report.converged = true;
    return {x, report};
  }

  precond(r, z);
  p = z;
  Scalar rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    op.apply(p, ap);
    const Scalar pap = p.dot(ap);
    if (!std::isfinite(static_cast<double>(pap))) throw SolverError("cg_solve: non-finite operator output");
    if (pap <= Scalar(0)) throw SolverError("cg_solve: operator is not positive definite");
    const Scalar step = rz / pap;
    x += step * p;
    r -= step * ap;
    report.iterations = it;
    if (options.on_iterate) options.on_iterate(it, x);

    res = r.norm() / rhs_norm;
    if (!std::isfinite(static_cast<double>(res))) throw SolverError("cg_solve: non-finite residual");
    if (res <= options.tol_rel) {
      report.converged = true;
      break;
    }
    precond(r, z);
    const Scalar rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  report.relative_residual = static_cast<double>(res);
  return {x, report};
}

/// Wraps a sparse (or dense) matrix.
template <typename Matrix>
class MatrixOperator {
public:
  using Scalar = typename Matrix::Scalar;
  explicit MatrixOperator(const Matrix& matrix) : matrix_(&matrix) {}
  Eigen::Index rows() const { return matrix_->rows(); }
  void apply(const Vec<Scalar>& x, Vec<Scalar>& y) const { y.noalias() = *matrix_ * x; }

private:
  const Matrix* matrix_;
};

/// Wraps any callable void(const Vec&, Vec&).
template <typename Scalar_>
class FunctionOperator {
public:
  using Scalar = Scalar_;
  using Apply = std::function<void(const Vec<Scalar>&, Vec<Scalar>&)>;
  FunctionOperator(Eigen::Index n, Apply apply) : n_(n), apply_(std::move(apply)) {}
  Eigen::Index rows() const { return n_; }
  void apply(const Vec<Scalar>& x, Vec<Scalar>& y) const { apply_(x, y); }

private:
  Eigen::Index n_;
  Apply apply_;
};

/// The full matrix restricted to the unmasked (free) rows and columns. Acts on
/// full-length vectors; masked entries of the input are ignored and masked
/// entries of the output are zero, so the operator is SPD on the free subspace.
template <typename Scalar_>
class MaskedOperator {
public:
  using Scalar = Scalar_;
  MaskedOperator(const CsrMatrix<Scalar>& matrix, std::vector<bool> fixed)
      : matrix_(&matrix), fixed_(std::move(fixed)) {}

  Eigen::Index rows() const { return matrix_->rows(); }
  const std::vector<bool>& fixed() const { return fixed_; }

  void apply(const Vec<Scalar>& x, Vec<Scalar>& y) const {
    Vec<Scalar> masked = x;
    zero_fixed(masked);
    y.noalias() = *matrix_ * masked;
    zero_fixed(y);
  }

  void zero_fixed(Vec<Scalar>& v) const {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (fixed_[i]) v[i] = Scalar(0);
  }

  /// Inverse diagonal on free rows, zero on fixed rows.
  Vec<Scalar> inverse_diagonal() const {
    Vec<Scalar> d = matrix_->diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = fixed_[i] ? Scalar(0) : Scalar(1) / d[i];
    return d;
  }

private:
  const CsrMatrix<Scalar>* matrix_;
  std::vector<bool> fixed_;
};

/// Dirichlet elimination result: the interior operator and the lift moved to
/// the right-hand side, rhs_int = F_int - A_{int,bdry} g.
template <typename Scalar>
struct DirichletSystem {
  MaskedOperator<Scalar> op;
  Vec<Scalar> rhs_adjustment;
};

/// `fixed` marks Dirichlet rows; `values` holds the prescribed values in those
/// rows (other entries are ignored).
template <typename Scalar>
DirichletSystem<Scalar> eliminate_dirichlet(const CsrMatrix<Scalar>& a, std::vector<bool> fixed,
                                            const Vec<Scalar>& values) {
  Vec<Scalar> lift = Vec<Scalar>::Zero(a.rows());
  for (Eigen::Index i = 0; i < lift.size(); ++i)
    if (fixed[i]) lift[i] = values[i];
  Vec<Scalar> adjust = -(a * lift);
  for (Eigen::Index i = 0; i < adjust.size(); ++i)
    if (fixed[i]) adjust[i] = Scalar(0);
  return {MaskedOperator<Scalar>(a, std::move(fixed)), std::move(adjust)};
}

} // namespace dbc
