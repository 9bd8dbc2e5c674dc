#include "cohset/fourier_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>

#include "csv_util.hpp"
#include "fftw_util.hpp"

namespace cohset {

std::string to_string(const ModeIndex& mode) {
  std::ostringstream os;
  os << '(' << mode.m[0] << ',' << mode.m[1] << ',' << mode.n[0] << ',' << mode.n[1] << ')';
  return os.str();
}

namespace {

bool entry_less(const FourierField::Entry& a, const FourierField::Entry& b) { return a.mode < b.mode; }

Complex n_dot(const IVec2& n, const CVec2& v) {
  return static_cast<double>(n[0]) * v[0] + static_cast<double>(n[1]) * v[1];
}

}  // namespace

FourierField FourierField::from_entries(std::vector<Entry> entries, double threshold_used) {
  if (!(threshold_used >= 0.0)) {
    throw ValidationError("FourierField: threshold must be non-negative");
  }
  std::sort(entries.begin(), entries.end(), entry_less);
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].mode == entries[i - 1].mode) {
      throw ValidationError("FourierField: duplicate mode " + to_string(entries[i].mode));
    }
  }
  for (const auto& e : entries) {
    for (const auto& c : e.value) {
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
        throw ValidationError("FourierField: non-finite coefficient at " + to_string(e.mode));
      }
    }
  }
  FourierField field;
  field.entries_ = std::move(entries);
  field.threshold_ = threshold_used;
  field.validate();
  return field;
}

std::optional<CVec2> FourierField::find(const ModeIndex& mode) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{mode, {}}, entry_less);
  if (it == entries_.end() || it->mode != mode) return std::nullopt;
  return it->value;
}

CVec2 FourierField::coefficient(const ModeIndex& mode) const {
  return find(mode).value_or(CVec2{Complex{}, Complex{}});
}

double FourierField::max_norm() const {
  double best = 0.0;
  for (const auto& e : entries_) {
    best = std::max(best, std::sqrt(std::norm(e.value[0]) + std::norm(e.value[1])));
  }
  return best;
}

int FourierField::max_driving_frequency() const {
  int best = 0;
  for (const auto& e : entries_) best = std::max({best, std::abs(e.mode.m[0]), std::abs(e.mode.m[1])});
  return best;
}

int FourierField::max_physical_frequency() const {
  int best = 0;
  for (const auto& e : entries_) best = std::max({best, std::abs(e.mode.n[0]), std::abs(e.mode.n[1])});
  return best;
}

double FourierField::divergence_residual() const {
  double worst = 0.0;
  for (const auto& e : entries_) worst = std::max(worst, std::abs(n_dot(e.mode.n, e.value)));
  return worst;
}

double FourierField::hermitian_residual() const {
  double worst = 0.0;
  for (const auto& e : entries_) {
    auto partner = find(e.mode.negated());
    if (!partner) return std::numeric_limits<double>::infinity();
    worst = std::max({worst, std::abs((*partner)[0] - std::conj(e.value[0])),
                      std::abs((*partner)[1] - std::conj(e.value[1]))});
  }
  return worst;
}

void FourierField::validate(double tol) const {
  const double scale = std::max(max_norm(), 1e-300);
  const double herm = hermitian_residual();
  if (herm > tol * scale) {
    throw ValidationError("FourierField: Hermitian symmetry violated (residual " + std::to_string(herm) + ")");
  }
  const double div = divergence_residual();
  if (div > tol * scale) {
    throw ValidationError("FourierField: field is not divergence-free (max |n.v| = " + std::to_string(div) + ")");
  }
  for (const auto& e : entries_) {
    if (threshold_ > 0.0 && std::abs(e.value[0]) < threshold_ && std::abs(e.value[1]) < threshold_) {
      throw ValidationError("FourierField: coefficient below threshold stored at " + to_string(e.mode));
    }
  }
}

// ---------------------------------------------------------------------------
// Builtin fields

Point2 gyre_velocity(const Point2& x) {
  const double a = kTwoPi * x[0];
  const double b = kTwoPi * x[1];
  return {std::cos(a) * std::sin(b), -std::sin(a) * std::cos(b)};
}

double gyre_stream_function(const Point2& x) {
  return std::cos(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]) / kTwoPi;
}

FieldSampler translated_gyres_sampler() {
  return [](const Point2& theta, const Point2& x) { return gyre_velocity({x[0] + theta[0], x[1] + theta[1]}); };
}

FieldSampler shear_sampler() {
  return [](const Point2& theta, const Point2& x) {
    return Point2{std::sin(kTwoPi * theta[0]) * std::sin(kTwoPi * x[1]),
                  std::sin(kTwoPi * theta[1]) * std::sin(kTwoPi * x[0])};
  };
}

FieldSampler oscillating_gyres_sampler(double delta) {
  return [delta](const Point2& theta, const Point2& x) {
    return gyre_velocity({x[0] + delta * std::sin(kTwoPi * theta[0]), x[1] + delta * std::cos(kTwoPi * theta[1])});
  };
}

FourierField builtin_translated_gyres() {
  const Complex i4{0.0, 0.25};
  std::vector<FourierField::Entry> entries{
      {{{1, 1}, {1, 1}}, {-i4, i4}},
      {{{1, -1}, {1, -1}}, {i4, i4}},
      {{{-1, 1}, {-1, 1}}, {-i4, -i4}},
      {{{-1, -1}, {-1, -1}}, {i4, -i4}},
  };
  return FourierField::from_entries(std::move(entries));
}

FourierField builtin_shear() {
  // sin(a) sin(b) = -1/4 (e^{i(a+b)} - e^{i(a-b)} - e^{-i(a-b)} + e^{-i(a+b)})
  const Complex q{0.25, 0.0};
  const Complex z{};
  std::vector<FourierField::Entry> entries{
      {{{1, 0}, {0, 1}}, {-q, z}},
      {{{1, 0}, {0, -1}}, {q, z}},
      {{{-1, 0}, {0, 1}}, {q, z}},
      {{{-1, 0}, {0, -1}}, {-q, z}},
      {{{0, 1}, {1, 0}}, {z, -q}},
      {{{0, 1}, {-1, 0}}, {z, q}},
      {{{0, -1}, {1, 0}}, {z, q}},
      {{{0, -1}, {-1, 0}}, {z, -q}},
  };
  return FourierField::from_entries(std::move(entries));
}

FourierField builtin_oscillating_gyres(double delta, double err) {
  if (!(delta > 0.0) || !(delta < 0.5)) {
    throw ValidationError("oscillating gyres: delta must lie in (0, 0.5)");
  }
  if (!(err > 0.0)) {
    throw ValidationError("oscillating gyres: err must be positive");
  }
  return numeric_coeffs(oscillating_gyres_sampler(delta), {32, 32, 32, 32}, err);
}

// ---------------------------------------------------------------------------
// Numeric transform

namespace {

using detail::FftwBuffer;
using detail::fftw_buffer;

void forward_dft_4d(fftw_complex* data, const std::array<int, 4>& dims) {
  fftw_plan plan = nullptr;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft(4, dims.data(), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw NumericalError("numeric_coeffs: FFTW planning failed");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace

FourierField numeric_coeffs(const FieldSampler& sampler, std::array<int, 4> axis_sizes, double err) {
  for (int n : axis_sizes) {
    if (n < 2 || n % 2 != 0) {
      throw ValidationError("numeric_coeffs: axis sizes must be even and at least 2");
    }
  }
  if (!(err >= 0.0)) throw ValidationError("numeric_coeffs: err must be non-negative");

  const auto [n0, n1, n2, n3] = axis_sizes;
  const std::size_t total = static_cast<std::size_t>(n0) * n1 * n2 * n3;
  auto comp0 = fftw_buffer(total);
  auto comp1 = fftw_buffer(total);

  bool finite = true;
#pragma omp parallel for schedule(static) reduction(&& : finite)
  for (int a = 0; a < n0; ++a) {
    for (int b = 0; b < n1; ++b) {
      for (int c = 0; c < n2; ++c) {
        for (int d = 0; d < n3; ++d) {
          const std::size_t idx = ((static_cast<std::size_t>(a) * n1 + b) * n2 + c) * n3 + d;
          const Point2 v = sampler({static_cast<double>(a) / n0, static_cast<double>(b) / n1},
                                   {static_cast<double>(c) / n2, static_cast<double>(d) / n3});
          finite = finite && std::isfinite(v[0]) && std::isfinite(v[1]);
          comp0[idx][0] = v[0];
          comp0[idx][1] = 0.0;
          comp1[idx][0] = v[1];
          comp1[idx][1] = 0.0;
        }
      }
    }
  }
  if (!finite) throw ValidationError("numeric_coeffs: sampler returned a non-finite value");

  forward_dft_4d(comp0.get(), axis_sizes);
  forward_dft_4d(comp1.get(), axis_sizes);

  const double norm = 1.0 / static_cast<double>(total);
  auto flat = [&](const ModeIndex& mode) {
    auto wrap = [](int f, int n) { return ((f % n) + n) % n; };
    return ((static_cast<std::size_t>(wrap(mode.m[0], n0)) * n1 + wrap(mode.m[1], n1)) * n2 + wrap(mode.n[0], n2)) *
               n3 +
           wrap(mode.n[1], n3);
  };
  auto raw = [&](const ModeIndex& mode) {
    const std::size_t idx = flat(mode);
    return CVec2{Complex{comp0[idx][0], comp0[idx][1]} * norm, Complex{comp1[idx][0], comp1[idx][1]} * norm};
  };
  auto passes = [err](const CVec2& v) { return std::abs(v[0]) >= err || std::abs(v[1]) >= err; };
  auto freq = [](int k, int n) { return k < n / 2 ? k : k - n; };

  // Threshold on the raw transform, then close the kept set under negation.
  std::map<ModeIndex, CVec2> kept;
  for (int a = 0; a < n0; ++a) {
    if (a == n0 / 2) continue;
    for (int b = 0; b < n1; ++b) {
      if (b == n1 / 2) continue;
      for (int c = 0; c < n2; ++c) {
        if (c == n2 / 2) continue;
        for (int d = 0; d < n3; ++d) {
          if (d == n3 / 2) continue;
          const ModeIndex mode{{freq(a, n0), freq(b, n1)}, {freq(c, n2), freq(d, n3)}};
          if (passes(raw(mode))) {
            kept.emplace(mode, CVec2{});
            kept.emplace(mode.negated(), CVec2{});
          }
        }
      }
    }
  }

  // Symmetrize: v(mode) <- (v(mode) + conj(v(-mode))) / 2, partner gets the conjugate.
  std::vector<FourierField::Entry> entries;
  entries.reserve(kept.size());
  for (const auto& [mode, unused] : kept) {
    const ModeIndex partner = mode.negated();
    if (partner < mode) continue;
    const CVec2 v = raw(mode);
    const CVec2 w = raw(partner);
    CVec2 sym{0.5 * (v[0] + std::conj(w[0])), 0.5 * (v[1] + std::conj(w[1]))};
    if (partner == mode) sym = {Complex{sym[0].real(), 0.0}, Complex{sym[1].real(), 0.0}};
    if (!passes(sym)) continue;
    entries.push_back({mode, sym});
    if (partner != mode) entries.push_back({partner, {std::conj(sym[0]), std::conj(sym[1])}});
  }
  return FourierField::from_entries(std::move(entries), err);
}

// ---------------------------------------------------------------------------
// Evaluation

Point2 eval_field(const FourierField& field, const Point2& theta, const Point2& x) {
  Complex s0{}, s1{};
  for (const auto& e : field.entries()) {
    const double phase = kTwoPi * (theta[0] * e.mode.m[0] + theta[1] * e.mode.m[1] + x[0] * e.mode.n[0] +
                                   x[1] * e.mode.n[1]);
    const Complex w = std::polar(1.0, phase);
    s0 += e.value[0] * w;
    s1 += e.value[1] * w;
  }
  return {s0.real(), s1.real()};
}

FieldSlice::FieldSlice(const FourierField& field, const Point2& theta) {
  std::map<IVec2, CVec2> by_n;
  for (const auto& e : field.entries()) {
    const Complex w = std::polar(1.0, kTwoPi * (theta[0] * e.mode.m[0] + theta[1] * e.mode.m[1]));
    auto& acc = by_n[e.mode.n];
    acc[0] += e.value[0] * w;
    acc[1] += e.value[1] * w;
    max_freq_ = std::max({max_freq_, std::abs(e.mode.n[0]), std::abs(e.mode.n[1])});
  }
  terms_.reserve(by_n.size());
  for (const auto& [n, value] : by_n) terms_.push_back({n, value});
}

Point2 FieldSlice::operator()(const Point2& x) const {
  // Powers exp(2 pi i k x_j) for k in [-F, F], built by repeated multiplication.
  constexpr int kStackFreq = 16;
  const int f = max_freq_;
  std::array<Complex, 2 * kStackFreq + 1> p0_buf, p1_buf;
  std::vector<Complex> p0_heap, p1_heap;
  Complex* p0 = p0_buf.data();
  Complex* p1 = p1_buf.data();
  if (f > kStackFreq) {
    p0_heap.resize(2 * f + 1);
    p1_heap.resize(2 * f + 1);
    p0 = p0_heap.data();
    p1 = p1_heap.data();
  }
  const Complex e0 = std::polar(1.0, kTwoPi * x[0]);
  const Complex e1 = std::polar(1.0, kTwoPi * x[1]);
  p0[f] = p1[f] = Complex{1.0, 0.0};
  for (int k = 1; k <= f; ++k) {
    p0[f + k] = p0[f + k - 1] * e0;
    p1[f + k] = p1[f + k - 1] * e1;
    p0[f - k] = std::conj(p0[f + k]);
    p1[f - k] = std::conj(p1[f + k]);
  }
  double v0 = 0.0, v1 = 0.0;
  for (const auto& t : terms_) {
    const Complex w = p0[f + t.n[0]] * p1[f + t.n[1]];
    v0 += (t.value[0] * w).real();
    v1 += (t.value[1] * w).real();
  }
  return {v0, v1};
}

// ---------------------------------------------------------------------------
// CSV

void write_field_csv(const FourierField& field, std::ostream& out) {
  out << "m1,m2,n1,n2,re_v1,im_v1,re_v2,im_v2\n";
  for (const auto& e : field.entries()) {
    out << e.mode.m[0] << ',' << e.mode.m[1] << ',' << e.mode.n[0] << ',' << e.mode.n[1] << ','
        << detail::format_double(e.value[0].real()) << ',' << detail::format_double(e.value[0].imag()) << ','
        << detail::format_double(e.value[1].real()) << ',' << detail::format_double(e.value[1].imag()) << '\n';
  }
}

FourierField read_field_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "m1,m2,n1,n2,re_v1,im_v1,re_v2,im_v2") {
    throw ValidationError("field CSV: expected header m1,m2,n1,n2,re_v1,im_v1,re_v2,im_v2");
  }
  std::vector<FourierField::Entry> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 8) {
      throw ValidationError("field CSV line " + std::to_string(line_no) + ": expected 8 columns");
    }
    FourierField::Entry e;
    e.mode = {{detail::parse_int(cells[0]), detail::parse_int(cells[1])},
              {detail::parse_int(cells[2]), detail::parse_int(cells[3])}};
    e.value = {Complex{detail::parse_double(cells[4]), detail::parse_double(cells[5])},
               Complex{detail::parse_double(cells[6]), detail::parse_double(cells[7])}};
    entries.push_back(e);
  }
  return FourierField::from_entries(std::move(entries));
}

}  // namespace cohset
