#include "cohset/spectral_solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/UmfPackSupport>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>

#include "csv_util.hpp"

namespace cohset {

int SolverConfig::effective_krylov_dim(std::size_t n) const {
  const int requested = krylov_dim > 0 ? krylov_dim : std::max(2 * k + 10, 40);
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(requested), n));
}

void SolverConfig::validate() const {
  if (k < 1) throw ValidationError("solver: k must be at least 1");
  if (krylov_dim != 0 && krylov_dim <= k) throw ValidationError("solver: krylov_dim must exceed k");
  if (!(tol > 0.0)) throw ValidationError("solver: tol must be positive");
  if (max_restarts < 0) throw ValidationError("solver: max_restarts must be non-negative");
  if (!std::isfinite(shift.real()) || !std::isfinite(shift.imag())) throw ValidationError("solver: shift not finite");
}

double spectral_gap_shift(double eps) { return -0.5 * eps * eps * kTwoPi * kTwoPi; }

namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic pseudo-random vector in [-1, 1]^2 per entry.
VectorXcd start_vector(Index n, std::uint64_t salt) {
  VectorXcd v(n);
  for (Index i = 0; i < n; ++i) {
    const std::uint64_t a = splitmix64((static_cast<std::uint64_t>(i) << 8) ^ salt);
    const std::uint64_t b = splitmix64(a);
    v[i] = Complex{static_cast<double>(a >> 11) * 0x1.0p-52 - 1.0, static_cast<double>(b >> 11) * 0x1.0p-52 - 1.0};
  }
  return v.normalized();
}

struct Givens {
  double c = 1.0;
  Complex s{};
};

// G = [c s; -conj(s) c] maps (a, b) to (r, 0).
Givens make_givens(Complex a, Complex b) {
  if (b == Complex{}) return {1.0, Complex{}};
  if (a == Complex{}) return {0.0, Complex{1.0, 0.0}};
  const double abs_a = std::abs(a);
  const double norm = std::hypot(abs_a, std::abs(b));
  return {abs_a / norm, (a / abs_a) * std::conj(b) / norm};
}

// One explicit shifted QR step on the leading m x m Hessenberg block:
// H - mu I = Q R, H <- R Q + mu I; accumulates Q into `q`.
void shifted_qr_step(MatrixXcd& h, Index m, Complex mu, MatrixXcd& q) {
  for (Index i = 0; i < m; ++i) h(i, i) -= mu;
  std::vector<Givens> rot(static_cast<std::size_t>(std::max<Index>(m - 1, 0)));
  for (Index k = 0; k + 1 < m; ++k) {
    const Givens g = make_givens(h(k, k), h(k + 1, k));
    rot[static_cast<std::size_t>(k)] = g;
    for (Index j = k; j < m; ++j) {
      const Complex top = h(k, j);
      const Complex bot = h(k + 1, j);
      h(k, j) = g.c * top + g.s * bot;
      h(k + 1, j) = -std::conj(g.s) * top + g.c * bot;
    }
    h(k + 1, k) = Complex{};
  }
  for (Index k = 0; k + 1 < m; ++k) {
    const Givens& g = rot[static_cast<std::size_t>(k)];
    const Index rows = std::min<Index>(k + 2, m);
    for (Index i = 0; i < rows; ++i) {
      const Complex left = h(i, k);
      const Complex right = h(i, k + 1);
      h(i, k) = g.c * left + std::conj(g.s) * right;
      h(i, k + 1) = -g.s * left + g.c * right;
    }
    for (Index i = 0; i < q.rows(); ++i) {
      const Complex left = q(i, k);
      const Complex right = q(i, k + 1);
      q(i, k) = g.c * left + std::conj(g.s) * right;
      q(i, k + 1) = -g.s * left + g.c * right;
    }
  }
  for (Index i = 0; i < m; ++i) h(i, i) += mu;
}

class ShiftInvertOperator {
 public:
  ShiftInvertOperator(const SparseMatrix& matrix, Complex shift) {
    SparseMatrix identity(matrix.rows(), matrix.cols());
    identity.setIdentity();
    shifted_ = matrix - shift * identity;
    shifted_.makeCompressed();
    lu_.compute(shifted_);
    if (lu_.info() != Eigen::Success) {
      throw SingularShiftError("shift-invert: sparse LU of (A - shift I) failed; the shift is (numerically) an "
                               "eigenvalue, retry with a perturbed shift");
    }
  }

  VectorXcd operator()(const VectorXcd& x) {
    ++applications;
    VectorXcd y = lu_.solve(x);
    if (!y.allFinite()) throw SingularShiftError("shift-invert: solve produced non-finite values");
    return y;
  }

  int applications = 0;

 private:
  // UMFPACK reads the matrix arrays again during solves.
  SparseMatrix shifted_;
  Eigen::UmfPackLU<SparseMatrix> lu_;
};

// Upper bound on ||A - shift I||_2 via sqrt(||.||_1 ||.||_inf).
double shifted_norm_bound(const SparseMatrix& matrix, Complex shift) {
  Eigen::VectorXd col_sum = Eigen::VectorXd::Zero(matrix.cols());
  Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(matrix.rows());
  for (Index j = 0; j < matrix.outerSize(); ++j) {
    bool diag_seen = false;
    for (SparseMatrix::InnerIterator it(matrix, j); it; ++it) {
      Complex v = it.value();
      if (it.row() == j) {
        v -= shift;
        diag_seen = true;
      }
      col_sum[j] += std::abs(v);
      row_sum[it.row()] += std::abs(v);
    }
    if (!diag_seen) {
      col_sum[j] += std::abs(shift);
      row_sum[j] += std::abs(shift);
    }
  }
  return std::sqrt(col_sum.maxCoeff() * row_sum.maxCoeff());
}

}  // namespace

SpectrumResult solve_shift_invert(const SparseMatrix& matrix, const SolverConfig& cfg) {
  cfg.validate();
  if (matrix.rows() != matrix.cols()) throw ValidationError("solver: matrix must be square");
  const Index n = matrix.rows();
  if (n == 0) throw ValidationError("solver: empty matrix");
  if (cfg.k > n) {
    throw ValidationError("solver: k = " + std::to_string(cfg.k) + " exceeds the dimension " + std::to_string(n));
  }

  const Index m = cfg.effective_krylov_dim(static_cast<std::size_t>(n));
  const Index k = std::min<Index>(cfg.k, m);
  if (m <= k && m < n) throw ValidationError("solver: krylov_dim must exceed k");

  ShiftInvertOperator op(matrix, cfg.shift);
  const double op_norm = shifted_norm_bound(matrix, cfg.shift);
  const double breakdown_tol = 1e-14;

  MatrixXcd V = MatrixXcd::Zero(n, m + 1);
  MatrixXcd H = MatrixXcd::Zero(m + 1, m);
  V.col(0) = start_vector(n, 0x5eed);
  std::uint64_t restart_salt = 1;

  // Extends the Arnoldi factorization from `from` columns to m columns.
  auto extend = [&](Index from) {
    for (Index j = from; j < m; ++j) {
      VectorXcd w = op(V.col(j));
      VectorXcd h = V.leftCols(j + 1).adjoint() * w;
      w.noalias() -= V.leftCols(j + 1) * h;
      const VectorXcd h2 = V.leftCols(j + 1).adjoint() * w;
      w.noalias() -= V.leftCols(j + 1) * h2;
      h += h2;
      double beta = w.norm();
      H.col(j).head(j + 1) = h;
      if (beta <= breakdown_tol * std::max(h.norm(), 1e-300)) {
        // Invariant subspace: continue with a fresh direction orthogonal to V.
        H(j + 1, j) = Complex{};
        if (j + 1 >= n) {
          V.col(j + 1).setZero();
          continue;
        }
        VectorXcd r = start_vector(n, 0xfeed + restart_salt++);
        for (int pass = 0; pass < 2; ++pass) r -= V.leftCols(j + 1) * (V.leftCols(j + 1).adjoint() * r);
        V.col(j + 1) = r.normalized();
      } else {
        H(j + 1, j) = beta;
        V.col(j + 1) = w / beta;
      }
    }
  };

  SpectrumResult result;
  result.shift = cfg.shift;

  extend(0);
  Eigen::ComplexEigenSolver<MatrixXcd> eig;
  std::vector<Index> order(static_cast<std::size_t>(m));
  Index nconv = 0;
  int restart = 0;
  for (;; ++restart) {
    eig.compute(H.topLeftCorner(m, m), true);
    if (eig.info() != Eigen::Success) throw NumericalError("solver: Hessenberg eigenproblem failed");
    const VectorXcd& mu = eig.eigenvalues();
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return std::abs(mu[a]) > std::abs(mu[b]); });

    const double beta = std::abs(H(m, m - 1));
    nconv = 0;
    for (Index i = 0; i < k; ++i) {
      const Index idx = order[static_cast<std::size_t>(i)];
      const double mag = std::abs(mu[idx]);
      if (mag == 0.0) continue;
      const double estimate = beta * std::abs(eig.eigenvectors()(m - 1, idx));
      const Complex z = cfg.shift + 1.0 / mu[idx];
      if (op_norm * estimate / mag <= cfg.tol * (1.0 + std::abs(z))) ++nconv;
    }
    if (nconv >= k || restart >= cfg.max_restarts || m >= n) break;

    // Keep k plus up to half of the converged surplus, filter the rest out
    // with exact shifts at the unwanted Ritz values.
    const Index keep = std::min<Index>(k + std::min<Index>(nconv, (m - k) / 2), m - 1);
    MatrixXcd Q = MatrixXcd::Identity(m, m);
    MatrixXcd Hm = H.topLeftCorner(m, m);
    for (Index i = keep; i < m; ++i) shifted_qr_step(Hm, m, mu[order[static_cast<std::size_t>(i)]], Q);

    const Complex beta_m = H(m, m - 1);
    VectorXcd f = V.leftCols(m) * Q.col(keep) * Hm(keep, keep - 1) + V.col(m) * (beta_m * Q(m - 1, keep - 1));
    MatrixXcd V_keep = V.leftCols(m) * Q.leftCols(keep);
    V.leftCols(keep) = V_keep;
    // Reorthogonalize the new residual against the retained basis.
    f -= V.leftCols(keep) * (V.leftCols(keep).adjoint() * f);
    H.setZero();
    H.topLeftCorner(keep, keep) = Hm.topLeftCorner(keep, keep);
    const double f_norm = f.norm();
    if (f_norm <= breakdown_tol) {
      VectorXcd r = start_vector(n, 0xfeed + restart_salt++);
      for (int pass = 0; pass < 2; ++pass) r -= V.leftCols(keep) * (V.leftCols(keep).adjoint() * r);
      V.col(keep) = r.normalized();
      H(keep, keep - 1) = Complex{};
    } else {
      V.col(keep) = f / f_norm;
      H(keep, keep - 1) = f_norm;
    }
    extend(keep);
  }
  result.restarts = restart;
  result.operator_applications = op.applications;

  const VectorXcd& mu = eig.eigenvalues();
  for (Index i = 0; i < k; ++i) {
    const Index idx = order[static_cast<std::size_t>(i)];
    if (std::abs(mu[idx]) == 0.0) continue;
    RitzPair pair;
    pair.z = cfg.shift + 1.0 / mu[idx];
    pair.vector = (V.leftCols(m) * eig.eigenvectors().col(idx)).normalized();
    pair.residual = residual(matrix, pair);
    if (pair.residual <= cfg.tol * (1.0 + std::abs(pair.z))) result.pairs.push_back(std::move(pair));
  }
  std::stable_sort(result.pairs.begin(), result.pairs.end(), [&](const RitzPair& a, const RitzPair& b) {
    return std::abs(a.z - cfg.shift) < std::abs(b.z - cfg.shift);
  });
  result.all_converged = static_cast<Index>(result.pairs.size()) >= k;
  return result;
}

SpectrumResult solve_shift_invert(const DiscreteGenerator& gen, const SolverConfig& cfg) {
  return solve_shift_invert(gen.matrix, cfg);
}

double residual(const SparseMatrix& matrix, const RitzPair& pair) {
  if (pair.vector.size() != matrix.cols()) throw ValidationError("residual: vector length does not match matrix");
  return (matrix * pair.vector - pair.z * pair.vector).norm();
}

double residual(const DiscreteGenerator& gen, const RitzPair& pair) { return residual(gen.matrix, pair); }

void write_spectrum_csv(const std::vector<RitzPair>& pairs, std::ostream& out) {
  out << "re,im,residual\n";
  for (const auto& p : pairs) {
    out << detail::format_double(p.z.real()) << ',' << detail::format_double(p.z.imag()) << ','
        << detail::format_double(p.residual) << '\n';
  }
}

}  // namespace cohset
