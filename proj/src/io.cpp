#include "rbm/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rbm/config.hpp"

namespace rbm {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string quote(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
  std::string q = "\"";
  for (char c : cell) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

SparseMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate")
    throw std::runtime_error(path + ": only Matrix Market coordinate matrices are supported");
  field = lower(field);
  symmetry = lower(symmetry);
  if (field != "real" && field != "integer" && field != "pattern")
    throw std::runtime_error(path + ": unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric")
    throw std::runtime_error(path + ": unsupported symmetry '" + symmetry + "'");

  while (std::getline(in, line))
    if (!line.empty() && line[0] != '%') break;
  long long rows = 0, cols = 0, nnz = 0;
  if (!(std::istringstream(line) >> rows >> cols >> nnz) || rows < 1 || cols < 1 || nnz < 0)
    throw std::runtime_error(path + ": malformed size line");

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(symmetry == "general" ? nnz : 2 * nnz));
  for (long long k = 0; k < nnz; ++k) {
    long long i = 0, j = 0;
    double v = 1;
    if (!(in >> i >> j)) throw std::runtime_error(path + ": truncated entry list");
    if (field != "pattern" && !(in >> v)) throw std::runtime_error(path + ": missing entry value");
    if (i < 1 || i > rows || j < 1 || j > cols) throw std::runtime_error(path + ": entry index out of range");
    entries.emplace_back(i - 1, j - 1, v);
    if (symmetry != "general" && i != j) entries.emplace_back(j - 1, i - 1, symmetry == "symmetric" ? v : -v);
  }
  SparseMatrix a(rows, cols);
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

void write_matrix_market(const std::string& path, const SparseMatrix& a) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  for (Index r = 0; r < a.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(a, r); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << format_csv_double(it.value()) << '\n';
}

SparseMatrix gram_plus_identity(const SparseMatrix& b) {
  SparseMatrix bt = b.transpose();
  SparseMatrix g = b * bt;
  SparseMatrix id(b.rows(), b.rows());
  id.setIdentity();
  SparseMatrix out = g + id;
  out.makeCompressed();
  return out;
}

Labels read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open labels file '" + path + "'");
  Labels labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    labels.push_back(static_cast<int>(parse_int("label", line)));
  }
  return labels;
}

void write_labels(const std::string& path, const Labels& labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (int l : labels) out << l << '\n';
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  std::ofstream out(path_, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path_ + "'");
  std::string line;
  for (std::size_t k = 0; k < header.size(); ++k) line += (k ? "," : "") + quote(header[k]);
  out << line << "\r\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_csv_double(v));
  row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::invalid_argument("CSV row width differs from header");
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to '" + path_ + "'");
  std::string line;
  for (std::size_t k = 0; k < cells.size(); ++k) line += (k ? "," : "") + quote(cells[k]);
  out << line << "\r\n";
}

}  // namespace rbm
