#include "cohset/generator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace cohset {

namespace {

double diffusion_value(double eps, const IVec2& n) {
  const double k2 = static_cast<double>(n[0] * n[0] + n[1] * n[1]);
  return -0.5 * eps * eps * kTwoPi * kTwoPi * k2;
}

double rotation_rate(const Point2& alpha, const IVec2& m) { return m[0] * alpha[0] + m[1] * alpha[1]; }

}  // namespace

double DiscreteGenerator::density() const {
  const double d = static_cast<double>(dim());
  return d == 0.0 ? 0.0 : static_cast<double>(nnz()) / (d * d);
}

double DiscreteGenerator::diffusion_entry(std::size_t i) const { return diffusion_value(eps, modeset.mode(i).n); }

Complex DiscreteGenerator::rotation_entry(std::size_t i) const {
  return {0.0, -kTwoPi * rotation_rate(alpha, modeset.mode(i).m)};
}

Complex DiscreteGenerator::entry(std::size_t row, std::size_t col) const {
  return matrix.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
}

DiscreteGenerator assemble(const FourierField& field, const ModeSet& modes, double eps, const Point2& alpha) {
  if (!(eps > 0.0)) throw ValidationError("assemble: eps must be positive");
  if (!std::isfinite(alpha[0]) || !std::isfinite(alpha[1])) throw ValidationError("assemble: alpha must be finite");
  if (!modes.negation_closed()) throw ValidationError("assemble: mode set is not closed under negation");

  const auto dim = static_cast<Eigen::Index>(modes.size());
  const CVec2 mean_flow = field.coefficient(ModeIndex{});
  const auto field_entries = field.entries();

  // Column j collects row i = j + delta for each stored field mode delta != 0.
  // The advection entry uses the averaged wave vector (n_i + n_j)/2, which
  // equals n_i . v and n_j . v for a divergence-free field and makes the
  // off-diagonal part exactly skew-Hermitian in floating point.
  std::vector<std::vector<std::pair<int, Complex>>> columns(static_cast<std::size_t>(dim));
#pragma omp parallel for schedule(dynamic, 64)
  for (Eigen::Index j = 0; j < dim; ++j) {
    const ModeIndex& cm = modes.mode(static_cast<std::size_t>(j));
    auto& col = columns[static_cast<std::size_t>(j)];
    col.reserve(field_entries.size() + 1);
    // n . v(0,0) is real because v(0,0) is.
    const Complex mean_adv = static_cast<double>(cm.n[0]) * mean_flow[0] + static_cast<double>(cm.n[1]) * mean_flow[1];
    const Complex diag = Complex{diffusion_value(eps, cm.n), 0.0} +
                         Complex{0.0, -kTwoPi} * (rotation_rate(alpha, cm.m) + mean_adv);
    col.emplace_back(static_cast<int>(j), diag);
    for (const auto& fe : field_entries) {
      if (fe.mode == ModeIndex{}) continue;
      const ModeIndex rm = cm + fe.mode;
      const auto i = modes.find(rm);
      // Zero physical modes decouple; the entry is n . v(delta, n) = 0 up to rounding.
      if (i < 0 || rm.physical_zero() || cm.physical_zero()) continue;
      const double a0 = 0.5 * static_cast<double>(rm.n[0] + cm.n[0]);
      const double a1 = 0.5 * static_cast<double>(rm.n[1] + cm.n[1]);
      const Complex dot = a0 * fe.value[0] + a1 * fe.value[1];
      if (dot == Complex{}) continue;
      // -2 pi i * dot
      col.emplace_back(static_cast<int>(i), Complex{kTwoPi * dot.imag(), -kTwoPi * dot.real()});
    }
    std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  Eigen::VectorXi column_sizes(dim);
  for (Eigen::Index j = 0; j < dim; ++j) column_sizes[j] = static_cast<int>(columns[static_cast<std::size_t>(j)].size());
  SparseMatrix matrix(dim, dim);
  matrix.reserve(column_sizes);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (const auto& [i, v] : columns[static_cast<std::size_t>(j)]) matrix.insert(i, j) = v;
  }
  matrix.makeCompressed();

  DiscreteGenerator gen;
  gen.modeset = modes;
  gen.eps = eps;
  gen.alpha = alpha;
  gen.matrix = std::move(matrix);
  return gen;
}

CoefficientVector apply(const DiscreteGenerator& gen, const CoefficientVector& f) {
  if (static_cast<std::size_t>(f.size()) != gen.dim()) {
    throw ValidationError("apply: vector length " + std::to_string(f.size()) + " does not match dimension " +
                          std::to_string(gen.dim()));
  }
  return gen.matrix * f;
}

bool is_real_symmetric(const ModeSet& modes, const CoefficientVector& f, double tol) {
  if (static_cast<std::size_t>(f.size()) != modes.size()) return false;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto j = modes.find(modes.mode(i).negated());
    if (j < 0) return false;
    if (std::abs(f[static_cast<Eigen::Index>(j)] - std::conj(f[static_cast<Eigen::Index>(i)])) > tol) return false;
  }
  return true;
}

Eigen::MatrixXcd oracle_dense_assemble(const FourierField& field, const ModeSet& modes, double eps,
                                       const Point2& alpha, std::array<int, 4> quad_sizes) {
  if (modes.size() > 200) throw ValidationError("oracle_dense_assemble: mode set larger than 200");
  // Integrand of entry (i, j) has frequencies (m_j - m_i) + m_v and (n_j - n_i) + n_v;
  // an equal-weight grid of N points integrates exp(2 pi i k t) exactly when |k| < N.
  const int need_m = 2 * modes.max_driving_frequency() + field.max_driving_frequency();
  const int need_n = 2 * modes.max_physical_frequency() + field.max_physical_frequency();
  if (quad_sizes[0] <= need_m || quad_sizes[1] <= need_m || quad_sizes[2] <= need_n || quad_sizes[3] <= need_n) {
    throw ValidationError("oracle_dense_assemble: quadrature grid below Nyquist (need > " + std::to_string(need_m) +
                          " driving and > " + std::to_string(need_n) + " physical points per axis)");
  }
  const auto [q0, q1, q2, q3] = quad_sizes;
  const std::size_t points = static_cast<std::size_t>(q0) * q1 * q2 * q3;
  std::vector<std::array<double, 4>> coords(points);
  std::vector<Point2> velocity(points);
  std::size_t p = 0;
  for (int a = 0; a < q0; ++a)
    for (int b = 0; b < q1; ++b)
      for (int c = 0; c < q2; ++c)
        for (int d = 0; d < q3; ++d, ++p) {
          coords[p] = {static_cast<double>(a) / q0, static_cast<double>(b) / q1, static_cast<double>(c) / q2,
                       static_cast<double>(d) / q3};
          velocity[p] = eval_field(field, {coords[p][0], coords[p][1]}, {coords[p][2], coords[p][3]});
        }

  const auto dim = static_cast<Eigen::Index>(modes.size());
  Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(dim, dim);
  const double weight = 1.0 / static_cast<double>(points);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const ModeIndex& mj = modes.mode(static_cast<std::size_t>(j));
    const double diff = diffusion_value(eps, mj.n);
    const double rot = rotation_rate(alpha, mj.m);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const ModeIndex d = mj - modes.mode(static_cast<std::size_t>(i));
      Complex acc{};
      for (std::size_t q = 0; q < points; ++q) {
        const auto& t = coords[q];
        // conj(F_i) * G F_j = (diff - 2 pi i (n_j . v + m_j . alpha)) * exp(2 pi i (d . (theta, x)))
        const double adv = mj.n[0] * velocity[q][0] + mj.n[1] * velocity[q][1];
        const Complex factor{diff, -kTwoPi * (adv + rot)};
        const double phase = kTwoPi * (d.m[0] * t[0] + d.m[1] * t[1] + d.n[0] * t[2] + d.n[1] * t[3]);
        acc += factor * std::polar(1.0, phase);
      }
      dense(i, j) = acc * weight;
    }
  }
  return dense;
}

std::string generator_stats_json(const DiscreteGenerator& gen) {
  nlohmann::ordered_json j;
  j["dim"] = gen.dim();
  j["nnz"] = gen.nnz();
  j["density"] = gen.density();
  j["eps"] = gen.eps;
  j["alpha"] = {gen.alpha[0], gen.alpha[1]};
  j["kind"] = gen.modeset.kind_name();
  if (gen.modeset.kind() != ModeSet::Kind::custom) {
    j["K"] = gen.modeset.K();
    j["r"] = gen.modeset.r();
  }
  return j.dump(2) + "\n";
}

}  // namespace cohset
