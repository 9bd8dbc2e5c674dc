#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cohset/mode_set.hpp"
#include "cohset/spectral_solver.hpp"
#include "cohset/types.hpp"

namespace cohset {

/// Membership rules for extracting a coherent family from an eigenfunction f
/// with eigenvalue z = lambda + i eta:
///   cs1: Re(e^{i eta t} f(phi^t theta, x)) > 0
///   cs2: |Re(e^{i eta t} f)| / ||Re(e^{i eta t} f)||_1 > q
///   cs3: |f| / ||f||_1 > q
enum class Method { cs1, cs2, cs3 };

std::string to_string(Method method);
/// Accepts "cs1"/"CS1" etc.; throws ValidationError otherwise.
Method parse_method(const std::string& text);

struct CoherentFamilySpec {
  RitzPair pair;
  ModeSet modeset;
  Method method = Method::cs1;
  /// Threshold for cs2/cs3; ignored by cs1.
  double q = 1.0;
  int grid_size = 256;

  void validate() const;
};

/// Fixes the free phase of an eigenvector. Complex z: the largest-magnitude
/// coefficient (lowest index among ties) becomes positive real. Real z
/// (|Im z| < 1e-8): the vector is rotated onto, then averaged into, exact
/// real symmetry f(-m,-n) = conj f(m,n), and its sign is chosen so the
/// largest-magnitude coefficient has positive real part.
RitzPair phase_normalize(const ModeSet& modes, const RitzPair& pair);

/// f(theta, .) on a uniform grid_size x grid_size grid over T^2; row index is
/// x2, column index is x1, grid point (row, col) = (col, row) / grid_size.
struct FibreRaster {
  int size = 0;
  Point2 theta{0.0, 0.0};
  std::vector<Complex> values;
  /// Grid average of |f|, approximating ||f(theta)||_1.
  double l1 = 0.0;

  const Complex& at(int row, int col) const { return values[static_cast<std::size_t>(row) * size + col]; }
  /// Bilinear interpolation on the periodic grid.
  Complex interpolate(const Point2& x) const;
};

/// Evaluates sum f(m,n) e^{2 pi i theta.m} e^{2 pi i x.n} on the grid with one
/// zero-padded 2-D inverse FFT.
FibreRaster eval_fibre(const CoherentFamilySpec& spec, const Point2& theta);

/// Direct summation of the same series at one point (slow; for checks).
Complex eval_fibre_point(const CoherentFamilySpec& spec, const Point2& theta, const Point2& x);

/// The rule of `spec` frozen at one time t for the family started at theta0:
/// the raster at phi^t theta0 = theta0 + alpha t, the phase e^{i eta t} and
/// the normalizer the rule needs.
class MembershipSnapshot {
 public:
  MembershipSnapshot(const CoherentFamilySpec& spec, std::shared_ptr<const FibreRaster> raster, double t);

  bool contains(const Point2& x) const;
  /// Fraction of grid points inside the set.
  double member_fraction() const;
  /// Row-major 0/1 mask over the raster grid.
  std::vector<unsigned char> mask() const;

  const FibreRaster& raster() const { return *raster_; }
  double t() const { return t_; }
  /// ||Re(e^{i eta t} f)||_1 on the grid (cs2 normalizer).
  double real_l1() const { return real_l1_; }

 private:
  bool rule(Complex value) const;

  std::shared_ptr<const FibreRaster> raster_;
  Method method_;
  double q_;
  double t_;
  Complex phase_;
  double real_l1_ = 0.0;
};

/// Rasters keyed by quantized time (1e-9), shared between callers.
class RasterCache {
 public:
  RasterCache(const CoherentFamilySpec& spec, const Point2& theta0, const Point2& alpha);

  std::shared_ptr<const FibreRaster> raster(double t);
  MembershipSnapshot snapshot(double t);

  const CoherentFamilySpec& spec() const { return spec_; }
  const Point2& theta0() const { return theta0_; }
  const Point2& alpha() const { return alpha_; }
  /// Drops every stored raster.
  void clear();

 private:
  CoherentFamilySpec spec_;
  Point2 theta0_;
  Point2 alpha_;
  std::mutex mutex_;
  std::map<long long, std::shared_ptr<const FibreRaster>> rasters_;
};

/// Driving state theta0 + alpha t reduced to [0,1)^2.
Point2 driving_state(const Point2& theta0, const Point2& alpha, double t);

/// Membership of x in A_{theta0}^t.
bool membership(RasterCache& cache, double t, const Point2& x);

struct BoundCurves {
  std::vector<double> exp_lambda;
  std::vector<double> exp_2lambda;
};

/// e^{lambda t} and e^{2 lambda t} on `times`.
BoundCurves bound_curves(double lambda, const std::vector<double>& times);

/// -1 / (2 lambda); lambda must be negative.
double cumulative_estimate(double lambda);

/// 1/2 e^{2 lambda t} ||f^R(theta0)||_inf^{-2} |A^0|^{-1} ||Re(e^{i eta t} f(phi^t theta0))||_2^2
/// with all norms and the set measure taken on the raster grid. cs1 only.
double theoretical_survival_bound(RasterCache& cache, double t);

/// CSV `row,col,re,im` over the raster, row-major.
void write_raster_csv(const FibreRaster& raster, std::ostream& out);

/// Binary PGM (P5, 8-bit), one pixel per raster point in raster row order:
/// members 0 (black), others 255.
void write_mask_pgm(const MembershipSnapshot& snapshot, std::ostream& out);

}  // namespace cohset
