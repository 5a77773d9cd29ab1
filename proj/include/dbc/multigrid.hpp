#pragma once

#include "dbc/types.hpp"

#include <Eigen/SparseCholesky>

#include <array>
#include <vector>

namespace dbc {

/// V-cycle preconditioner for a matrix assembled on a uniformly refined mesh.
/// Prolongation is linear interpolation at edge midpoints, coarse operators
/// are Galerkin products, smoothing is symmetric Gauss-Seidel and the
/// coarsest level is factorized. Rows flagged `fixed` are decoupled
/// (identity), so the cycle acts on full-length vectors like MaskedOperator.
class MultigridPreconditioner {
public:
  /// `parents` is Mesh::midpoint_parents. Coarsening stops once a level has at
  /// most `coarse_size` unknowns or the history is exhausted.
  MultigridPreconditioner(const SparseMatrix& a, const std::vector<bool>& fixed,
                          const std::vector<std::vector<std::array<int, 2>>>& parents, int coarse_size = 2000,
                          int sweeps = 2);

  void apply(const VectorXd& r, VectorXd& z) const;
  int num_levels() const { return static_cast<int>(levels_.size()); }

private:
  struct Level {
    SparseMatrix a;
    SparseMatrix prolong; ///< from the next coarser level; empty on the coarsest
    SparseMatrix restrict_;
  };

  void cycle(std::size_t l, const VectorXd& b, VectorXd& x) const;
  void smooth(const SparseMatrix& a, const VectorXd& b, VectorXd& x, bool forward) const;

  std::vector<Level> levels_; ///< finest first
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> coarse_;
  int sweeps_;
};

} // namespace dbc
