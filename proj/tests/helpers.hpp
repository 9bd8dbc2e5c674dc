#pragma once

#include <random>

#include "cohset/fourier_field.hpp"
#include "cohset/generator.hpp"

namespace cohset::test {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr Point2 kAlpha{0.2, 0.2 * kSqrt2};
inline constexpr double kEps = 0.03;

inline CoefficientVector random_unit(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  CoefficientVector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(normal(rng), normal(rng));
  return v / v.norm();
}

inline Point2 random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {u(rng), u(rng)};
}

}  // namespace cohset::test
