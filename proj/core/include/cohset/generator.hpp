#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <array>
#include <iosfwd>
#include <string>

#include "cohset/fourier_field.hpp"
#include "cohset/mode_set.hpp"
#include "cohset/types.hpp"

namespace cohset {

using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;

/// Coefficients f(m,n) of f = sum f(m,n) F_{m,n}, aligned with a ModeSet.
using CoefficientVector = Eigen::VectorXcd;

/// Galerkin matrix Gamma_S = D + R + A of the augmented generator on a mode
/// set S. Stored in compressed-column form; immutable once assembled.
///
///   diagonal:      -1/2 eps^2 (2 pi |n|)^2 - 2 pi i (m . alpha + n . v(0,0))
///   off-diagonal:  -2 pi i (n . v(m - m', n - n'))
///
/// The diffusion diagonal carries a minus sign: it damps.
struct DiscreteGenerator {
  ModeSet modeset;
  double eps = 0.0;
  Point2 alpha{0.0, 0.0};
  SparseMatrix matrix;

  std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t nnz() const { return static_cast<std::size_t>(matrix.nonZeros()); }
  double density() const;

  /// Diagonal parts of the D/R split at basis index i.
  double diffusion_entry(std::size_t i) const;
  Complex rotation_entry(std::size_t i) const;
  /// Stored entry (row, col), zero when structurally absent.
  Complex entry(std::size_t row, std::size_t col) const;
};

DiscreteGenerator assemble(const FourierField& field, const ModeSet& modes, double eps, const Point2& alpha);

/// Sparse product gen.matrix * f. Throws ValidationError on length mismatch.
CoefficientVector apply(const DiscreteGenerator& gen, const CoefficientVector& f);

/// True when f(-m,-n) == conj(f(m,n)) for all modes, within `tol` (absolute).
bool is_real_symmetric(const ModeSet& modes, const CoefficientVector& f, double tol = 0.0);

/// Test oracle: every entry <F_{m,n}, G F_{m',n'}> by equal-weight quadrature
/// on a 4-D grid of `quad_sizes` points, with G F_{m',n'} built from
/// eval_field. Intended for |S| <= 200.
Eigen::MatrixXcd oracle_dense_assemble(const FourierField& field, const ModeSet& modes, double eps,
                                       const Point2& alpha, std::array<int, 4> quad_sizes);

/// `%%MatrixMarket matrix coordinate complex general`, 1-based indices in
/// mode-set order, 17 significant digits.
void write_matrix_market(const SparseMatrix& matrix, std::ostream& out);
SparseMatrix read_matrix_market(std::istream& in);

/// `{dim, nnz, density, eps, alpha, kind}` (plus K and r when meaningful).
std::string generator_stats_json(const DiscreteGenerator& gen);

}  // namespace cohset
