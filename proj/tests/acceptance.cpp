// Acceptance checks at full scale. Prints one PASS/FAIL line per criterion
// and exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cohset/pipeline.hpp"

using namespace cohset;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = 0.03;
const Point2 kAlpha{0.2, 0.2 * 1.4142135623730951};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
};

int failures = 0;
std::map<int, std::string> lines;

void report(int id, const char* title, Verdict& v) {
  lines[id] = std::string(v.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + " (" + title + "):" +
              v.detail.str();
  std::fprintf(stderr, "criterion %d done\n", id);
  if (!v.pass) ++failures;
}

struct Example {
  const char* name;
  cohset::Example id;
  Complex paper_z;
  double paper_c;
};

const Example kExamples[] = {
    {"translated-gyres", cohset::Example::translated_gyres, {-0.089, -1.041}, 6.070},
    {"oscillating-gyres", cohset::Example::oscillating_gyres, {-0.071, 0.0}, 6.158},
    {"shear", cohset::Example::shear, {-0.097, 0.0}, 5.680},
};

struct Solved {
  RunConfig cfg;
  DiscreteGenerator gen;
  FourierField field;
  SpectrumResult result;
  std::size_t selected = 0;
  double seconds = 0.0;
};

RitzPair conjugate_partner(const ModeSet& modes, const RitzPair& pair) {
  RitzPair w;
  w.z = std::conj(pair.z);
  w.vector.resize(pair.vector.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto j = *modes.index_of(modes.mode(i).negated());
    w.vector(static_cast<Eigen::Index>(i)) = std::conj(pair.vector(static_cast<Eigen::Index>(j)));
  }
  return w;
}

void criterion_oracle() {
  Verdict v;
  const auto start = Clock::now();
  struct Fixture {
    const char* name;
    FourierField field;
    ModeSet modes;
  };
  const Fixture fixtures[] = {
      {"translated-gyres", builtin_translated_gyres(), ModeSet::class_union(1, 2)},
      {"shear", builtin_shear(), ModeSet::product_ball(1, 2)},
  };
  for (const auto& f : fixtures) {
    const auto gen = assemble(f.field, f.modes, kEps, kAlpha);
    const auto dense = oracle_dense_assemble(f.field, f.modes, kEps, kAlpha, {8, 8, 8, 8});
    const double diff = (dense - Eigen::MatrixXcd(gen.matrix)).cwiseAbs().maxCoeff();
    v.detail << ' ' << f.name << " max|diff|=" << diff;
    v.require(diff <= 1e-10, std::string(f.name) + " entrywise 1e-10");
  }
  const double t = seconds_since(start);
  v.detail << " time=" << t << "s";
  v.require(t < 10.0, "runtime < 10 s");
  report(1, "sparse assembly equals dense quadrature oracle", v);
}

void criterion_structure(const std::vector<Solved>& solved) {
  Verdict v;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  for (const auto& s : solved) {
    const auto& gen = s.gen;
    double skew = 0.0;
    bool zero_rows_ok = true;
    std::vector<int> row_count(gen.dim(), 0);
    for (int k = 0; k < gen.matrix.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(gen.matrix, k); it; ++it) {
        ++row_count[static_cast<std::size_t>(it.row())];
        if (it.row() == it.col()) continue;
        const Complex partner = gen.entry(static_cast<std::size_t>(it.col()), static_cast<std::size_t>(it.row()));
        skew = std::max(skew, std::abs(it.value() + std::conj(partner)));
      }
    }
    for (std::size_t i = 0; i < gen.dim(); ++i) {
      if (!gen.modeset.mode(i).physical_zero()) continue;
      const auto col = static_cast<Eigen::Index>(i);
      if (gen.matrix.col(col).nonZeros() != 1 || row_count[i] != 1) {
        zero_rows_ok = false;
      }
    }
    double rq = -1.0;
    for (int trial = 0; trial < 500; ++trial) {
      CoefficientVector f(static_cast<Eigen::Index>(gen.dim()));
      for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = Complex(normal(rng), normal(rng));
      f /= f.norm();
      rq = std::max(rq, f.dot(cohset::apply(gen, f)).real());
    }
    v.detail << ' ' << s.cfg.out_dir.filename().string() << ": skew=" << skew << " maxRe<f,Gf>=" << rq;
    v.require(skew == 0.0, "off-diagonal skew-Hermitian residual is zero");
    v.require(zero_rows_ok, "zero-mode rows/columns diagonal-only");
    v.require(rq <= 1e-12, "Rayleigh quotients Re <= 1e-12");
    if (s.cfg.example == cohset::Example::translated_gyres) {
      bool block = true;
      for (int k = 0; k < gen.matrix.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(gen.matrix, k); it; ++it) {
          if (gen.modeset.class_of(static_cast<std::size_t>(it.row())) !=
              gen.modeset.class_of(static_cast<std::size_t>(it.col()))) {
            block = false;
          }
        }
      }
      v.detail << " block-diagonal=" << (block ? "yes" : "no");
      v.require(block, "translated gyres block-diagonal under class permutation");
    }
  }
  report(2, "structural invariants at full scale", v);
}

void criterion_cardinality() {
  Verdict v;
  const auto a = ModeSet::class_union(2, 11).size();
  const auto b = ModeSet::product_ball(6, 8).size();
  v.detail << " class_union(2,11)=" << a << " product_ball(6,8)=" << b;
  v.require(a == 9425, "|class_union(2,11)| = 9425");
  v.require(b == 33293, "|product_ball(6,8)| = 33293");
  report(3, "mode set cardinalities", v);
}

void criterion_spectrum(const std::vector<Solved>& solved) {
  Verdict v;
  const double gap = -2 * kPi * kPi * kEps * kEps;
  for (std::size_t e = 0; e < solved.size(); ++e) {
    const auto& s = solved[e];
    const Complex z = s.result.pairs[s.selected].z;
    const Complex target = kExamples[e].paper_z;
    v.detail << ' ' << kExamples[e].name << ": z=" << z.real() << (z.imag() < 0 ? "" : "+") << z.imag()
             << "i (paper " << target.real() << (target.imag() < 0 ? "" : "+") << target.imag() << "i) time="
             << s.seconds << "s;";
    v.require(std::abs(z.real() - target.real()) <= 0.01 && std::abs(z.imag() - target.imag()) <= 0.01,
              std::string(kExamples[e].name) + " eigenvalue within 0.01");
    v.require(s.seconds < 300.0, std::string(kExamples[e].name) + " runtime < 5 min");
    for (const auto& p : s.result.pairs) {
      if (p.z.real() > 1e-10) v.require(false, std::string(kExamples[e].name) + " Re z <= 1e-10");
      if (p.z.real() < -1e-8 && p.z.real() > gap + 1e-6) {
        v.require(false, std::string(kExamples[e].name) + " spectral gap");
      }
    }
  }
  report(4, "spectrum reproduction", v);
}

void criterion_survival(const std::vector<Solved>& solved) {
  Verdict v;
  for (std::size_t e = 0; e < solved.size(); ++e) {
    const auto& s = solved[e];
    CoherentFamilySpec family;
    family.pair = phase_normalize(s.gen.modeset, s.result.pairs[s.selected]);
    family.modeset = s.gen.modeset;
    family.method = s.cfg.method;
    family.q = s.cfg.q;
    family.grid_size = s.cfg.grid_size;
    SimConfig sim = s.cfg.sim;
    const auto start = Clock::now();
    const auto curve = run_survival(family, sim, s.field);
    const double t = seconds_since(start);
    const double lambda = family.pair.lambda();
    bool monotone = true;
    bool above = true;
    double worst_margin = 1e300;
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
      if (i > 0 && curve.survival[i] > curve.survival[i - 1]) monotone = false;
      const double p = std::exp(2 * lambda * curve.times[i]);
      const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(curve.n_initial));
      const double margin = curve.survival[i] - (p - 3 * sigma);
      worst_margin = std::min(worst_margin, margin);
      if (margin < 0) above = false;
    }
    const auto again = run_survival(family, sim, s.field);
    const bool identical = again.survival == curve.survival && again.c_value == curve.c_value;
    v.detail << ' ' << kExamples[e].name << ": C=" << curve.c_value << " (paper " << kExamples[e].paper_c
             << ") S(10)=" << curve.survival.back() << " fit=" << curve.escape_fit
             << " min(S-(e^{2lt}-3sd))=" << worst_margin << " time=" << t << "s;";
    v.require(std::abs(curve.c_value - kExamples[e].paper_c) <= 0.5, std::string(kExamples[e].name) + " C within 0.5");
    v.require(above, std::string(kExamples[e].name) + " survival above e^{2 lambda t} - 3 sigma");
    v.require(monotone, std::string(kExamples[e].name) + " monotone");
    v.require(identical, std::string(kExamples[e].name) + " bit-identical rerun");
  }
  report(5, "survival reproduction", v);
}

void criterion_solver(const std::vector<Solved>& solved) {
  Verdict v;
  for (std::size_t e = 0; e < solved.size(); ++e) {
    const auto& s = solved[e];
    const double tol = 1e-8;
    double worst = 0.0;
    bool partners = true;
    const double cutoff = std::abs(s.result.pairs.back().z - s.result.shift) - 1e-9;
    for (const auto& p : s.result.pairs) {
      const double r = residual(s.gen, p);
      worst = std::max(worst, r / (1 + std::abs(p.z)));
      if (std::abs(p.z.imag()) <= 1e-8) continue;
      const auto w = conjugate_partner(s.gen.modeset, p);
      const double rw = residual(s.gen, w);
      if (std::abs(rw - r) > 1e-12 * (1 + std::abs(p.z)) || rw > tol * (1 + std::abs(p.z))) partners = false;
      if (std::abs(p.z - s.result.shift) < cutoff) {
        const bool present = std::any_of(s.result.pairs.begin(), s.result.pairs.end(), [&](const RitzPair& q) {
          return std::abs(q.z - w.z) <= 1e-8 * (1 + std::abs(w.z));
        });
        if (!present) partners = false;
      }
    }
    v.detail << ' ' << kExamples[e].name << ": max residual/(1+|z|)=" << worst << ";";
    v.require(worst <= tol, std::string(kExamples[e].name) + " residuals <= 1e-8 (1+|z|)");
    v.require(partners, std::string(kExamples[e].name) + " conjugate partners");
  }

  const auto& tg = solved.front();
  double worst_diag = 0.0;
  for (const IVec2 m : {IVec2{1, 0}, IVec2{0, 1}, IVec2{-2, 1}}) {
    const Complex exact(0.0, -2 * kPi * (m[0] * kAlpha[0] + m[1] * kAlpha[1]));
    SolverConfig cfg;
    cfg.k = 1;
    cfg.shift = exact + Complex(1e-3, 0.0);
    const auto r = solve_shift_invert(tg.gen, cfg);
    const auto i = static_cast<Eigen::Index>(*tg.gen.modeset.index_of({m, {0, 0}}));
    worst_diag = std::max({worst_diag, std::abs(r.pairs.at(0).z - exact),
                           std::abs(std::abs(r.pairs.at(0).vector(i)) - 1.0)});
  }
  v.detail << " diagonal eigenpairs max error=" << worst_diag;
  v.require(worst_diag <= 1e-12, "analytic diagonal eigenpairs to 1e-12");
  report(6, "eigensolver self-consistency", v);
}

void criterion_fields() {
  Verdict v;
  const auto og = builtin_oscillating_gyres(0.15, 1e-4);
  v.detail << " oscillating gyres modes=" << og.size();
  v.require(og.size() <= 150, "oscillating gyres <= 150 stored modes");
  for (const auto& f : {builtin_translated_gyres(), builtin_shear(), og}) {
    const double scale = std::max(1.0, f.max_norm());
    v.require(f.divergence_residual() <= 1e-10 * scale, "divergence-free");
    v.require(f.hermitian_residual() <= 1e-10 * scale, "Hermitian symmetry");
  }
  report(7, "field validation", v);
}

}  // namespace

int main() {
  try {
    criterion_oracle();
    criterion_cardinality();
    criterion_fields();

    std::vector<Solved> solved;
    for (const auto& ex : kExamples) {
      Solved s;
      s.cfg = RunConfig::preset(ex.id);
      s.cfg.out_dir = ex.name;
      s.field = build_field(s.cfg);
      const auto start = Clock::now();
      s.gen = assemble(s.field, build_modeset(s.cfg), s.cfg.eps, s.cfg.alpha);
      s.result = solve_shift_invert(s.gen, s.cfg.solver);
      s.selected = select_eigenpair(s.result.pairs, s.cfg.selection);
      s.seconds = seconds_since(start);
      solved.push_back(std::move(s));
    }
    criterion_structure(solved);
    criterion_spectrum(solved);
    criterion_solver(solved);
    criterion_survival(solved);
  } catch (const std::exception& e) {
    for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d of 7 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
