#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cohset {

using Complex = std::complex<double>;

/// A point on the 2-torus (or a real 2-vector); coordinates are not reduced.
using Point2 = std::array<double, 2>;

/// Complex Fourier coefficient of a 2-component vector field.
using CVec2 = std::array<Complex, 2>;

/// Integer frequency pair.
using IVec2 = std::array<int, 2>;

/// Fourier mode F_{m,n}(theta, x) = exp(2 pi i (theta.m + x.n)); m indexes the
/// driving torus, n the physical torus. Ordered lexicographically on
/// (m1, m2, n1, n2).
struct ModeIndex {
  IVec2 m{0, 0};
  IVec2 n{0, 0};

  constexpr ModeIndex negated() const { return {{-m[0], -m[1]}, {-n[0], -n[1]}}; }
  constexpr bool physical_zero() const { return n[0] == 0 && n[1] == 0; }

  friend constexpr auto operator<=>(const ModeIndex&, const ModeIndex&) = default;
  friend constexpr bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

inline constexpr ModeIndex operator-(const ModeIndex& a, const ModeIndex& b) {
  return {{a.m[0] - b.m[0], a.m[1] - b.m[1]}, {a.n[0] - b.n[0], a.n[1] - b.n[1]}};
}

inline constexpr ModeIndex operator+(const ModeIndex& a, const ModeIndex& b) {
  return {{a.m[0] + b.m[0], a.m[1] + b.m[1]}, {a.n[0] + b.n[0], a.n[1] + b.n[1]}};
}

std::string to_string(const ModeIndex& mode);

/// Input rejected by a precondition or a file/format check (CLI exit code 2).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical stage failed: singular factorization, non-finite state, or
/// non-convergence where convergence was mandatory (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Reduces a coordinate to [0, 1).
inline double wrap_unit(double v) {
  double w = v - std::floor(v);
  return w >= 1.0 ? 0.0 : w;
}

inline Point2 wrap_unit(const Point2& p) { return {wrap_unit(p[0]), wrap_unit(p[1])}; }

}  // namespace cohset
