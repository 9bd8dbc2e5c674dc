#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "cohset/types.hpp"

namespace cohset {

/// Real vector field v(theta, x) on T^2 x T^2 sampled pointwise.
using FieldSampler = std::function<Point2(const Point2& theta, const Point2& x)>;

/// Sparse table of Fourier coefficients of a driven, divergence-free vector
/// field. Entries are kept sorted by ModeIndex and the object is immutable
/// after construction.
///
/// Invariants (checked by `validate`):
///   - Hermitian symmetry: coefficient(-m,-n) == conj(coefficient(m,n)).
///   - Divergence-free: |n . v(m,n)| <= 1e-10 * max ||v||.
///   - No stored coefficient is below the threshold in every component.
class FourierField {
 public:
  struct Entry {
    ModeIndex mode;
    CVec2 value;
  };

  FourierField() = default;

  /// Builds a field from explicit coefficients. Duplicate modes are rejected;
  /// the invariants above are validated.
  static FourierField from_entries(std::vector<Entry> entries, double threshold_used = 0.0);

  std::span<const Entry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double threshold_used() const { return threshold_; }

  std::optional<CVec2> find(const ModeIndex& mode) const;
  CVec2 coefficient(const ModeIndex& mode) const;

  /// Largest Euclidean norm of a stored coefficient vector.
  double max_norm() const;
  /// Largest |m_i| and |n_i| over stored modes.
  int max_driving_frequency() const;
  int max_physical_frequency() const;

  /// max |n . v(m,n)| over stored modes.
  double divergence_residual() const;
  /// max |v(-m,-n) - conj(v(m,n))|, infinite if a partner is missing.
  double hermitian_residual() const;

  /// Throws ValidationError if any invariant fails at relative tolerance `tol`.
  void validate(double tol = 1e-10) const;

 private:
  std::vector<Entry> entries_;
  double threshold_ = 0.0;
};

/// v(theta, x) = v_aut(x + theta) with the 2x2 cellular gyre v_aut.
FourierField builtin_translated_gyres();

/// Two shears of oscillating strength:
/// v = sin(2 pi theta1) (sin(2 pi x2), 0) + sin(2 pi theta2) (0, sin(2 pi x1)).
FourierField builtin_shear();

/// v = v_aut(x + delta (sin 2 pi theta1, cos 2 pi theta2)), obtained by
/// `numeric_coeffs` on a 32^4 grid and thresholded at `err`.
FourierField builtin_oscillating_gyres(double delta, double err = 1e-4);

/// Closed-form samplers for the builtin fields.
Point2 gyre_velocity(const Point2& x);
double gyre_stream_function(const Point2& x);
FieldSampler translated_gyres_sampler();
FieldSampler shear_sampler();
FieldSampler oscillating_gyres_sampler(double delta);

/// Fourier coefficients of `sampler` by a 4-D DFT over a uniform grid with
/// `axis_sizes` = {N_theta1, N_theta2, N_x1, N_x2} points. Coefficients are
/// normalized as grid averages of sample * exp(-2 pi i (theta.m + x.n)); the
/// Nyquist bin of each axis is discarded. Modes where every component is
/// below `err` are dropped first, then each coefficient is averaged with the
/// conjugate of its partner so Hermitian symmetry holds exactly.
/// Frequencies above Nyquist alias onto lower ones.
FourierField numeric_coeffs(const FieldSampler& sampler, std::array<int, 4> axis_sizes, double err);

/// Evaluates sum v(m,n) exp(2 pi i (theta.m + x.n)); the imaginary part of the
/// sum is discarded.
Point2 eval_field(const FourierField& field, const Point2& theta, const Point2& x);

/// The field frozen at one driving state: physical-space coefficients
/// c(n) = sum_m v(m,n) exp(2 pi i theta.m). Cheap to evaluate at many points.
class FieldSlice {
 public:
  FieldSlice(const FourierField& field, const Point2& theta);

  Point2 operator()(const Point2& x) const;

 private:
  struct Term {
    IVec2 n;
    CVec2 value;
  };
  std::vector<Term> terms_;
  int max_freq_ = 0;
};

/// CSV with header `m1,m2,n1,n2,re_v1,im_v1,re_v2,im_v2`, rows in ModeIndex
/// order, 17 significant digits.
void write_field_csv(const FourierField& field, std::ostream& out);
FourierField read_field_csv(std::istream& in);

}  // namespace cohset
