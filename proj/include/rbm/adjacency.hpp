#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

namespace rbm {

/// Cluster id per particle, contiguous from 0.
using Labels = std::vector<int>;

/// Nonnegative weighted graph with zero diagonal.
///
/// Entries live in a row-major sparse matrix; `edges()` lists every stored
/// off-diagonal pair (i < j) once, for edge-restricted batch sampling.
template <class Scalar>
class AdjacencyMatrix {
 public:
  using Sparse = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
  using Edge = std::pair<Eigen::Index, Eigen::Index>;

  AdjacencyMatrix() = default;

  /// Takes ownership of `a`. The diagonal is dropped, entries are replaced
  /// by their absolute value, and symmetry is detected.
  explicit AdjacencyMatrix(Sparse a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("adjacency matrix must be square");
    a.prune([](Eigen::Index r, Eigen::Index c, const Scalar&) { return r != c; });
    for (Eigen::Index r = 0; r < a.outerSize(); ++r)
      for (typename Sparse::InnerIterator it(a, r); it; ++it) {
        if (!std::isfinite(it.value()))
          throw std::invalid_argument("adjacency matrix has non-finite entries");
        it.valueRef() = std::abs(it.value());
      }
    a.makeCompressed();
    matrix_ = std::move(a);
    symmetric_ = (Sparse(matrix_.transpose()) - matrix_).norm() == 0;
    for (Eigen::Index r = 0; r < matrix_.outerSize(); ++r)
      for (typename Sparse::InnerIterator it(matrix_, r); it; ++it) {
        const Eigen::Index c = it.col();
        if (it.value() == Scalar(0)) continue;
        if (c > r || (!symmetric_ && c < r && matrix_.coeff(c, r) == Scalar(0)))
          edges_.emplace_back(std::min(r, c), std::max(r, c));
      }
  }

  Eigen::Index size() const noexcept { return matrix_.rows(); }
  bool symmetric() const noexcept { return symmetric_; }
  const Sparse& matrix() const noexcept { return matrix_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return matrix_.coeff(i, j); }

  Scalar max_weight() const {
    Scalar m = 0;
    for (Eigen::Index k = 0; k < matrix_.nonZeros(); ++k) m = std::max(m, matrix_.valuePtr()[k]);
    return m;
  }

 private:
  Sparse matrix_;
  bool symmetric_ = true;
  std::vector<Edge> edges_;
};

}  // namespace rbm
