#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <functional>
#include <stdexcept>
#include <string>

namespace dbc {

using Vector3d = Eigen::Vector3d;
using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;

using ScalarField = std::function<double(const Vector3d&)>;

/// Compressed-sparse-row matrix. Column indices are strictly increasing within
/// each row once the matrix is compressed.
template <typename Scalar>
using CsrMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, int>;
using SparseMatrix = CsrMatrix<double>;

/// Input outside the admissible domain of an operation (bad angle, point
/// outside the polyhedron, inconsistent bounds).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Degenerate geometry met during assembly.
class AssemblyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or breakdown inside an iterative solver.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace dbc
