#pragma once

#include <string>
#include <vector>

#include "rbm/adjacency.hpp"
#include "rbm/ensemble.hpp"

namespace rbm {

using SparseMatrix = AdjacencyMatrix<double>::Sparse;

/// Reads a Matrix Market coordinate file (real, integer or pattern;
/// general, symmetric or skew-symmetric). Symmetric storage is expanded.
SparseMatrix read_matrix_market(const std::string& path);
void write_matrix_market(const std::string& path, const SparseMatrix& a);

/// B B^T + I, the similarity matrix used when reordering a rectangular or
/// unsymmetric matrix B.
SparseMatrix gram_plus_identity(const SparseMatrix& b);

/// One integer label per line.
Labels read_labels(const std::string& path);
void write_labels(const std::string& path, const Labels& labels);

/// RFC-4180 CSV with a header row and 17-significant-digit numbers.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);

 private:
  std::string path_;
  std::size_t columns_;
};

}  // namespace rbm
