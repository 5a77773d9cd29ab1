#include "dbc/multigrid.hpp"

namespace dbc {

namespace {

using Triplet = Eigen::Triplet<double, int>;

// Drops fixed rows and columns and puts 1 on their diagonal.
SparseMatrix decouple(const SparseMatrix& a, const std::vector<bool>& fixed) {
  std::vector<Triplet> t;
  t.reserve(a.nonZeros());
  for (int i = 0; i < a.outerSize(); ++i) {
    if (fixed[i]) {
      t.emplace_back(i, i, 1.0);
      continue;
    }
    for (SparseMatrix::InnerIterator it(a, i); it; ++it)
      if (!fixed[it.col()]) t.emplace_back(i, it.col(), it.value());
  }
  SparseMatrix out(a.rows(), a.cols());
  out.setFromTriplets(t.begin(), t.end());
  out.makeCompressed();
  return out;
}

} // namespace

MultigridPreconditioner::MultigridPreconditioner(const SparseMatrix& a, const std::vector<bool>& fixed,
                                                 const std::vector<std::vector<std::array<int, 2>>>& parents,
                                                 int coarse_size, int sweeps)
    : sweeps_(sweeps) {
  if (static_cast<Eigen::Index>(fixed.size()) != a.rows()) throw std::invalid_argument("fixed mask has wrong length");
  levels_.push_back({decouple(a, fixed), {}, {}});
  std::vector<bool> mask = fixed;

  for (auto step = parents.rbegin(); step != parents.rend(); ++step) {
    const SparseMatrix& fine = levels_.back().a;
    const int nf = static_cast<int>(fine.rows());
    if (nf <= coarse_size) break;
    const int nc = nf - static_cast<int>(step->size());
    std::vector<Triplet> t;
    t.reserve(nc + 2 * step->size());
    for (int v = 0; v < nc; ++v)
      if (!mask[v]) t.emplace_back(v, v, 1.0);
    for (std::size_t k = 0; k < step->size(); ++k) {
      const int w = nc + static_cast<int>(k);
      if (mask[w]) continue;
      for (int p : (*step)[k])
        if (!mask[p]) t.emplace_back(w, p, 0.5);
    }
    SparseMatrix prolong(nf, nc);
    prolong.setFromTriplets(t.begin(), t.end());
    prolong.makeCompressed();
    SparseMatrix restrict_ = prolong.transpose();

    mask.resize(nc);
    SparseMatrix coarse = restrict_ * fine * prolong;
    std::vector<Triplet> diag;
    for (int v = 0; v < nc; ++v)
      if (mask[v]) diag.emplace_back(v, v, 1.0);
    SparseMatrix ones(nc, nc);
    ones.setFromTriplets(diag.begin(), diag.end());
    coarse += ones;
    coarse.makeCompressed();

    levels_.back().prolong = std::move(prolong);
    levels_.back().restrict_ = std::move(restrict_);
    levels_.push_back({std::move(coarse), {}, {}});
  }

  coarse_.compute(Eigen::SparseMatrix<double>(levels_.back().a));
  if (coarse_.info() != Eigen::Success) throw SolverError("multigrid: coarse factorization failed");
}

void MultigridPreconditioner::smooth(const SparseMatrix& a, const VectorXd& b, VectorXd& x, bool forward) const {
  const int n = static_cast<int>(a.rows());
  const int* outer = a.outerIndexPtr();
  const int* inner = a.innerIndexPtr();
  const double* val = a.valuePtr();
  for (int s = 0; s < sweeps_; ++s) {
    for (int k = 0; k < n; ++k) {
      const int i = forward ? k : n - 1 - k;
      double sum = b[i], diag = 0.0;
      for (int j = outer[i]; j < outer[i + 1]; ++j) {
        if (inner[j] == i)
          diag = val[j];
        else
          sum -= val[j] * x[inner[j]];
      }
      x[i] = sum / diag;
    }
  }
}

void MultigridPreconditioner::cycle(std::size_t l, const VectorXd& b, VectorXd& x) const {
  const Level& lev = levels_[l];
  if (l + 1 == levels_.size()) {
    x = coarse_.solve(b);
    return;
  }
  x.setZero(b.size());
  smooth(lev.a, b, x, true);
  const VectorXd r = b - lev.a * x;
  VectorXd e;
  cycle(l + 1, lev.restrict_ * r, e);
  x += lev.prolong * e;
  smooth(lev.a, b, x, false);
}

void MultigridPreconditioner::apply(const VectorXd& r, VectorXd& z) const { cycle(0, r, z); }

} // namespace dbc
