#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cohset/generator.hpp"
#include "csv_util.hpp"

namespace cohset {

void write_matrix_market(const SparseMatrix& matrix, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate complex general\n";
  out << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
  for (Eigen::Index j = 0; j < matrix.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(matrix, j); it; ++it) {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << detail::format_double(it.value().real()) << ' '
          << detail::format_double(it.value().imag()) << '\n';
    }
  }
}

SparseMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("Matrix Market: empty input");
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate" || field != "complex" ||
      symmetry != "general") {
    throw ValidationError("Matrix Market: expected 'matrix coordinate complex general', got '" + line + "'");
  }
  do {
    if (!std::getline(in, line)) throw ValidationError("Matrix Market: missing size line");
  } while (!line.empty() && line[0] == '%');

  long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream sizes(line);
    if (!(sizes >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
      throw ValidationError("Matrix Market: malformed size line '" + line + "'");
    }
  }
  std::vector<Eigen::Triplet<Complex, int>> triplets;
  triplets.reserve(static_cast<std::size_t>(nnz));
  for (long k = 0; k < nnz; ++k) {
    if (!std::getline(in, line)) throw ValidationError("Matrix Market: expected " + std::to_string(nnz) + " entries");
    std::istringstream entry(line);
    long i = 0, j = 0;
    std::string re, im;
    if (!(entry >> i >> j >> re >> im) || i < 1 || j < 1 || i > rows || j > cols) {
      throw ValidationError("Matrix Market: malformed entry '" + line + "'");
    }
    triplets.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1),
                          Complex{detail::parse_double(re), detail::parse_double(im)});
  }
  SparseMatrix matrix(rows, cols);
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  matrix.makeCompressed();
  return matrix;
}

}  // namespace cohset
