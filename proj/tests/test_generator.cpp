#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "cohset/generator.hpp"
#include "helpers.hpp"

using namespace cohset;
using test::kAlpha;
using test::kEps;

namespace {

constexpr double kPi = std::numbers::pi;

double max_entry_diff(const Eigen::MatrixXcd& dense, const SparseMatrix& sparse) {
  return (dense - Eigen::MatrixXcd(sparse)).cwiseAbs().maxCoeff();
}

CoefficientVector real_symmetric_random(const ModeSet& modes, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  CoefficientVector f = CoefficientVector::Zero(static_cast<Eigen::Index>(modes.size()));
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto j = *modes.index_of(modes.mode(i).negated());
    if (j < i) continue;
    const Complex c = (i == j) ? Complex(normal(rng), 0.0) : Complex(normal(rng), normal(rng));
    f(static_cast<Eigen::Index>(i)) = c;
    f(static_cast<Eigen::Index>(j)) = std::conj(c);
  }
  return f;
}

}  // namespace

TEST_SUITE("generator") {
  TEST_CASE("translated gyres diagonal entry") {
    const auto gen = assemble(builtin_translated_gyres(), ModeSet::class_union(1, 2), kEps, kAlpha);
    const auto i = *gen.modeset.index_of({{1, 1}, {1, 1}});
    const Complex d = gen.entry(i, i);
    CHECK(d.real() == doctest::Approx(-0.0355306).epsilon(1e-6));
    CHECK(d.imag() == doctest::Approx(-3.0338).epsilon(1e-4));
    CHECK(gen.diffusion_entry(i) == doctest::Approx(-0.5 * kEps * kEps * 4 * kPi * kPi * 2).epsilon(1e-14));
    CHECK(gen.rotation_entry(i).imag() == doctest::Approx(-2 * kPi * 0.2 * (1 + test::kSqrt2)).epsilon(1e-14));
  }

  TEST_CASE("translated gyres off-diagonal entry") {
    const auto gen = assemble(builtin_translated_gyres(), ModeSet::class_union(1, 3), kEps, kAlpha);
    const auto row = *gen.modeset.index_of({{2, 1}, {2, 1}});
    const auto col = *gen.modeset.index_of({{1, 0}, {1, 0}});
    const Complex e = gen.entry(row, col);
    CHECK(e.real() == doctest::Approx(-kPi / 2).epsilon(1e-14));
    CHECK(std::abs(e.imag()) < 1e-14);
  }

  TEST_CASE("zero physical modes decouple") {
    for (const auto& field : {builtin_translated_gyres(), builtin_shear(), builtin_oscillating_gyres(0.15)}) {
      const auto gen = assemble(field, ModeSet::product_ball(2, 3), kEps, kAlpha);
      for (std::size_t i = 0; i < gen.dim(); ++i) {
        if (!gen.modeset.mode(i).physical_zero()) continue;
        const auto col = static_cast<Eigen::Index>(i);
        CHECK(gen.matrix.col(col).nonZeros() == 1);
        const auto& m = gen.modeset.mode(i).m;
        CHECK(gen.entry(i, i) == Complex(0.0, -2 * kPi * (m[0] * kAlpha[0] + m[1] * kAlpha[1])));
      }
      const Eigen::MatrixXcd dense(gen.matrix);
      for (std::size_t i = 0; i < gen.dim(); ++i) {
        if (!gen.modeset.mode(i).physical_zero()) continue;
        CHECK(dense.row(static_cast<Eigen::Index>(i)).cwiseAbs().sum() ==
              doctest::Approx(std::abs(dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)))));
      }
    }
  }

  TEST_CASE("sparse assembly equals the quadrature oracle") {
    SUBCASE("translated gyres") {
      const auto field = builtin_translated_gyres();
      const auto modes = ModeSet::class_union(1, 2);
      const auto gen = assemble(field, modes, kEps, kAlpha);
      const auto dense = oracle_dense_assemble(field, modes, kEps, kAlpha, {8, 8, 8, 8});
      CHECK(max_entry_diff(dense, gen.matrix) <= 1e-10);
    }
    SUBCASE("shear") {
      const auto field = builtin_shear();
      const auto modes = ModeSet::product_ball(1, 2);
      const auto gen = assemble(field, modes, kEps, kAlpha);
      const auto dense = oracle_dense_assemble(field, modes, kEps, kAlpha, {8, 8, 8, 8});
      CHECK(max_entry_diff(dense, gen.matrix) <= 1e-10);
    }
    SUBCASE("zero field gives D + R") {
      const auto modes = ModeSet::product_ball(1, 1);
      const auto gen = assemble(FourierField{}, modes, kEps, kAlpha);
      const auto dense = oracle_dense_assemble(FourierField{}, modes, kEps, kAlpha, {4, 4, 4, 4});
      for (Eigen::Index i = 0; i < dense.rows(); ++i) {
        for (Eigen::Index j = 0; j < dense.cols(); ++j) {
          const auto ui = static_cast<std::size_t>(i);
          const Complex expected = i == j ? gen.diffusion_entry(ui) + gen.rotation_entry(ui) : Complex{};
          CHECK(std::abs(dense(i, j) - expected) <= 1e-12);
        }
      }
      CHECK(gen.nnz() == gen.dim());
    }
  }

  TEST_CASE("off-diagonal part is skew-Hermitian") {
    for (const auto& field : {builtin_translated_gyres(), builtin_shear(), builtin_oscillating_gyres(0.15)}) {
      const auto gen = assemble(field, ModeSet::product_ball(2, 4), kEps, kAlpha);
      double worst = 0.0;
      for (int k = 0; k < gen.matrix.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(gen.matrix, k); it; ++it) {
          if (it.row() == it.col()) continue;
          const Complex partner = gen.entry(static_cast<std::size_t>(it.col()), static_cast<std::size_t>(it.row()));
          worst = std::max(worst, std::abs(it.value() + std::conj(partner)));
        }
      }
      CHECK(worst == 0.0);
    }
  }

  TEST_CASE("numerical range lies in the closed left half plane") {
    std::mt19937_64 rng(5);
    const auto gen = assemble(builtin_oscillating_gyres(0.15), ModeSet::product_ball(2, 4), kEps, kAlpha);
    double worst = -1.0;
    for (int trial = 0; trial < 500; ++trial) {
      const auto f = test::random_unit(gen.dim(), rng);
      worst = std::max(worst, f.dot(cohset::apply(gen, f)).real());
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("translated gyres are block diagonal by class") {
    const auto gen = assemble(builtin_translated_gyres(), ModeSet::class_union(2, 5), kEps, kAlpha);
    std::size_t checked = 0;
    for (int k = 0; k < gen.matrix.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(gen.matrix, k); it; ++it) {
        CHECK(gen.modeset.class_of(static_cast<std::size_t>(it.row())) ==
              gen.modeset.class_of(static_cast<std::size_t>(it.col())));
        ++checked;
      }
    }
    CHECK(checked == gen.nnz());
  }

  TEST_CASE("apply") {
    const auto gen = assemble(builtin_shear(), ModeSet::product_ball(2, 3), kEps, kAlpha);
    const auto n = static_cast<Eigen::Index>(gen.dim());
    SUBCASE("pure driving mode is an eigenvector") {
      const auto i = static_cast<Eigen::Index>(*gen.modeset.index_of({{1, -2}, {0, 0}}));
      CoefficientVector e = CoefficientVector::Zero(n);
      e(i) = 1.0;
      const auto out = cohset::apply(gen, e);
      const Complex z(0.0, -2 * kPi * (1 * kAlpha[0] - 2 * kAlpha[1]));
      CHECK((out - z * e).norm() <= 1e-15);
    }
    SUBCASE("zero vector") { CHECK(cohset::apply(gen, CoefficientVector::Zero(n)).norm() == 0.0); }
    SUBCASE("real symmetry is preserved") {
      std::mt19937_64 rng(9);
      const auto f = real_symmetric_random(gen.modeset, rng);
      REQUIRE(is_real_symmetric(gen.modeset, f));
      CHECK(is_real_symmetric(gen.modeset, cohset::apply(gen, f), 1e-12));
    }
    SUBCASE("length mismatch") { CHECK_THROWS_AS(cohset::apply(gen, CoefficientVector::Zero(n + 1)), ValidationError); }
  }

  TEST_CASE("Matrix Market round trip") {
    const auto gen = assemble(builtin_oscillating_gyres(0.15), ModeSet::product_ball(1, 3), kEps, kAlpha);
    std::stringstream ss;
    write_matrix_market(gen.matrix, ss);
    const std::string text = ss.str();
    CHECK(text.rfind("%%MatrixMarket matrix coordinate complex general\n", 0) == 0);
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line) && line[0] == '%') {
    }
    std::istringstream header(line);
    std::size_t rows = 0, cols = 0, nnz = 0;
    header >> rows >> cols >> nnz;
    CHECK(rows == gen.dim());
    CHECK(cols == gen.dim());
    CHECK(nnz == gen.nnz());

    std::istringstream in(text);
    DiscreteGenerator back = gen;
    back.matrix = read_matrix_market(in);
    std::mt19937_64 rng(2);
    const auto f = test::random_unit(gen.dim(), rng);
    const CoefficientVector a = cohset::apply(gen, f);
    const CoefficientVector b = cohset::apply(back, f);
    CHECK(a == b);
  }

  TEST_CASE("rejects sets that are not negation closed") {
    const auto modes = ModeSet::from_modes({ModeIndex{}, ModeIndex{{0, 0}, {1, 0}}});
    CHECK_THROWS_AS(assemble(builtin_shear(), modes, kEps, kAlpha), ValidationError);
  }

  TEST_CASE("stats JSON") {
    const auto gen = assemble(builtin_shear(), ModeSet::product_ball(1, 2), kEps, kAlpha);
    const auto json = generator_stats_json(gen);
    for (const char* key : {"\"dim\"", "\"nnz\"", "\"density\"", "\"eps\"", "\"alpha\"", "\"kind\""}) {
      CHECK(json.find(key) != std::string::npos);
    }
  }
}

TEST_SUITE("generator_paper_scale") {
  TEST_CASE("translated gyres density") {
    const auto gen = assemble(builtin_translated_gyres(), ModeSet::class_union(2, 11), kEps, kAlpha);
    CHECK(gen.density() == doctest::Approx(0.0004).epsilon(0.2));
  }
  TEST_CASE("oscillating gyres density") {
    const auto gen = assemble(builtin_oscillating_gyres(0.15), ModeSet::product_ball(6, 8), kEps, kAlpha);
    CHECK(gen.density() == doctest::Approx(0.0031).epsilon(0.2));
  }
  TEST_CASE("shear density") {
    const auto gen = assemble(builtin_shear(), ModeSet::product_ball(6, 8), kEps, kAlpha);
    CHECK(gen.density() == doctest::Approx(0.00023).epsilon(0.2));
  }
}
