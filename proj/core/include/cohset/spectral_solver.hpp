#pragma once

#include <iosfwd>
#include <vector>

#include "cohset/generator.hpp"
#include "cohset/types.hpp"

namespace cohset {

/// Eigenvalue z = lambda + i eta of Gamma_S with a unit-norm coefficient
/// vector and its residual ||Gamma_S v - z v||_2.
struct RitzPair {
  Complex z{};
  CoefficientVector vector;
  double residual = 0.0;

  double lambda() const { return z.real(); }
  double eta() const { return z.imag(); }
};

struct SolverConfig {
  int k = 6;
  Complex shift{1.0, 0.0};
  /// 0 selects max(2k + 10, 40), clamped to the problem dimension.
  int krylov_dim = 0;
  double tol = 1e-10;
  int max_restarts = 200;

  int effective_krylov_dim(std::size_t n) const;
  void validate() const;
};

struct SpectrumResult {
  /// Converged pairs sorted by |z - shift| ascending.
  std::vector<RitzPair> pairs;
  Complex shift{};
  /// False when fewer than k pairs met the tolerance within max_restarts.
  bool all_converged = true;
  int restarts = 0;
  int operator_applications = 0;
};

/// The shift coincides with an eigenvalue: the sparse LU of Gamma_S - shift I
/// is singular. Retrying with a perturbed shift is the usual remedy.
class SingularShiftError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// k eigenvalues of `matrix` closest to cfg.shift: implicitly restarted
/// Arnoldi (exact shifts, classical Gram-Schmidt applied twice) on
/// (A - shift I)^{-1}, factorized once by sparse LU. Ritz values map back as
/// z = shift + 1/mu. A pair is accepted once its Ritz estimate guarantees
/// ||A v - z v|| <= tol (1 + |z|); the bound is then confirmed against A.
SpectrumResult solve_shift_invert(const SparseMatrix& matrix, const SolverConfig& cfg);
SpectrumResult solve_shift_invert(const DiscreteGenerator& gen, const SolverConfig& cfg);

/// ||A v - z v||_2, recomputed directly from the matrix.
double residual(const SparseMatrix& matrix, const RitzPair& pair);
double residual(const DiscreteGenerator& gen, const RitzPair& pair);

/// Default alternative shift: the spectral-gap bound -2 pi^2 eps^2.
double spectral_gap_shift(double eps);

/// CSV `re,im,residual`, one row per pair in the given order.
void write_spectrum_csv(const std::vector<RitzPair>& pairs, std::ostream& out);

}  // namespace cohset
