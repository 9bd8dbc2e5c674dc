#include "cohset/coherent.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>

#include "csv_util.hpp"
#include "fftw_util.hpp"

namespace cohset {

std::string to_string(Method method) {
  switch (method) {
    case Method::cs1: return "cs1";
    case Method::cs2: return "cs2";
    case Method::cs3: return "cs3";
  }
  return "unknown";
}

Method parse_method(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "cs1") return Method::cs1;
  if (lower == "cs2") return Method::cs2;
  if (lower == "cs3") return Method::cs3;
  throw ValidationError("unknown extraction method '" + text + "' (expected cs1, cs2 or cs3)");
}

void CoherentFamilySpec::validate() const {
  if (static_cast<std::size_t>(pair.vector.size()) != modeset.size()) {
    throw ValidationError("coherent: eigenvector length " + std::to_string(pair.vector.size()) +
                          " does not match mode set size " + std::to_string(modeset.size()));
  }
  if (!(q >= 0.0) || !std::isfinite(q)) throw ValidationError("coherent: q must be non-negative and finite");
  const int needed = 2 * modeset.max_physical_frequency() + 2;
  if (grid_size < needed) {
    throw ValidationError("coherent: grid size " + std::to_string(grid_size) + " below Nyquist, need at least " +
                          std::to_string(needed));
  }
}

namespace {

constexpr double kRealTol = 1e-8;

// Lowest index whose magnitude is within a relative 1e-12 of the maximum.
Eigen::Index dominant_index(const CoefficientVector& v) {
  const double top = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= top * (1.0 - 1e-12)) return i;
  }
  return 0;
}

}  // namespace

RitzPair phase_normalize(const ModeSet& modes, const RitzPair& pair) {
  if (static_cast<std::size_t>(pair.vector.size()) != modes.size()) {
    throw ValidationError("phase_normalize: eigenvector length does not match mode set");
  }
  RitzPair out = pair;
  CoefficientVector& v = out.vector;
  if (v.size() == 0 || v.norm() == 0.0) return out;

  if (std::abs(pair.z.imag()) >= kRealTol) {
    const Complex lead = v[dominant_index(v)];
    v *= std::conj(lead) / std::abs(lead);
    return out;
  }

  std::vector<Eigen::Index> partner(static_cast<std::size_t>(v.size()));
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto j = modes.find(modes.mode(i).negated());
    if (j < 0) throw ValidationError("phase_normalize: mode set is not closed under negation");
    partner[i] = static_cast<Eigen::Index>(j);
  }
  // For v = e^{i phi} u with u real-symmetric, sum v(i) v(-i) = e^{2 i phi} ||u||^2.
  Complex s{};
  for (Eigen::Index i = 0; i < v.size(); ++i) s += v[i] * v[partner[static_cast<std::size_t>(i)]];
  if (std::abs(s) > 0.0) v *= std::conj(std::sqrt(s / std::abs(s)));

  CoefficientVector w(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) w[i] = 0.5 * (v[i] + std::conj(v[partner[static_cast<std::size_t>(i)]]));
  const double norm = w.norm();
  if (norm == 0.0) throw NumericalError("phase_normalize: eigenvector has no real-symmetric component");
  w /= norm;
  const Complex lead = w[dominant_index(w)];
  const bool flip = lead.real() < 0.0 || (lead.real() == 0.0 && lead.imag() < 0.0);
  if (flip) w = -w;
  v = std::move(w);
  return out;
}

Complex FibreRaster::interpolate(const Point2& x) const {
  const double u = wrap_unit(x[0]) * size;
  const double w = wrap_unit(x[1]) * size;
  const int c0 = std::min(static_cast<int>(u), size - 1);
  const int r0 = std::min(static_cast<int>(w), size - 1);
  const double fu = u - c0;
  const double fw = w - r0;
  const int c1 = c0 + 1 == size ? 0 : c0 + 1;
  const int r1 = r0 + 1 == size ? 0 : r0 + 1;
  return (1.0 - fw) * ((1.0 - fu) * at(r0, c0) + fu * at(r0, c1)) + fw * ((1.0 - fu) * at(r1, c0) + fu * at(r1, c1));
}

namespace {

// exp(2 pi i k t) for k in [-K, K], indexed k + K.
std::vector<Complex> phase_table(double t, int K) {
  std::vector<Complex> table(static_cast<std::size_t>(2 * K + 1));
  for (int k = -K; k <= K; ++k) table[static_cast<std::size_t>(k + K)] = std::polar(1.0, kTwoPi * k * t);
  return table;
}

}  // namespace

FibreRaster eval_fibre(const CoherentFamilySpec& spec, const Point2& theta) {
  spec.validate();
  const int N = spec.grid_size;
  const int K = spec.modeset.max_driving_frequency();
  const auto w0 = phase_table(theta[0], K);
  const auto w1 = phase_table(theta[1], K);

  auto buf = detail::fftw_buffer(static_cast<std::size_t>(N) * N);
  std::fill_n(&buf[0][0], 2 * static_cast<std::size_t>(N) * N, 0.0);
  const auto& f = spec.pair.vector;
  for (std::size_t i = 0; i < spec.modeset.size(); ++i) {
    const ModeIndex& md = spec.modeset.mode(i);
    const Complex c = f[static_cast<Eigen::Index>(i)] * w0[static_cast<std::size_t>(md.m[0] + K)] *
                      w1[static_cast<std::size_t>(md.m[1] + K)];
    const int row = ((md.n[1] % N) + N) % N;
    const int col = ((md.n[0] % N) + N) % N;
    fftw_complex& slot = buf[static_cast<std::size_t>(row) * N + col];
    slot[0] += c.real();
    slot[1] += c.imag();
  }
  fftw_plan plan = nullptr;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_2d(N, N, buf.get(), buf.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw NumericalError("eval_fibre: FFTW planning failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }

  FibreRaster raster;
  raster.size = N;
  raster.theta = theta;
  raster.values.resize(static_cast<std::size_t>(N) * N);
  double l1 = 0.0;
  for (std::size_t i = 0; i < raster.values.size(); ++i) {
    raster.values[i] = Complex{buf[i][0], buf[i][1]};
    l1 += std::abs(raster.values[i]);
  }
  raster.l1 = l1 / static_cast<double>(raster.values.size());
  return raster;
}

Complex eval_fibre_point(const CoherentFamilySpec& spec, const Point2& theta, const Point2& x) {
  Complex sum{};
  for (std::size_t i = 0; i < spec.modeset.size(); ++i) {
    const ModeIndex& md = spec.modeset.mode(i);
    const double arg = theta[0] * md.m[0] + theta[1] * md.m[1] + x[0] * md.n[0] + x[1] * md.n[1];
    sum += spec.pair.vector[static_cast<Eigen::Index>(i)] * std::polar(1.0, kTwoPi * arg);
  }
  return sum;
}

MembershipSnapshot::MembershipSnapshot(const CoherentFamilySpec& spec, std::shared_ptr<const FibreRaster> raster,
                                       double t)
    : raster_(std::move(raster)),
      method_(spec.method),
      q_(spec.q),
      t_(t),
      phase_(std::polar(1.0, spec.pair.eta() * t)) {
  double acc = 0.0;
  for (const Complex& v : raster_->values) acc += std::abs((phase_ * v).real());
  real_l1_ = acc / static_cast<double>(raster_->values.size());
}

bool MembershipSnapshot::rule(Complex value) const {
  switch (method_) {
    case Method::cs1: return (phase_ * value).real() > 0.0;
    case Method::cs2: return real_l1_ > 0.0 && std::abs((phase_ * value).real()) / real_l1_ > q_;
    case Method::cs3: return raster_->l1 > 0.0 && std::abs(value) / raster_->l1 > q_;
  }
  return false;
}

bool MembershipSnapshot::contains(const Point2& x) const { return rule(raster_->interpolate(x)); }

std::vector<unsigned char> MembershipSnapshot::mask() const {
  std::vector<unsigned char> out(raster_->values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rule(raster_->values[i]) ? 1 : 0;
  return out;
}

double MembershipSnapshot::member_fraction() const {
  const auto m = mask();
  const auto count = std::count(m.begin(), m.end(), static_cast<unsigned char>(1));
  return static_cast<double>(count) / static_cast<double>(m.size());
}

Point2 driving_state(const Point2& theta0, const Point2& alpha, double t) {
  return wrap_unit(Point2{theta0[0] + alpha[0] * t, theta0[1] + alpha[1] * t});
}

RasterCache::RasterCache(const CoherentFamilySpec& spec, const Point2& theta0, const Point2& alpha)
    : spec_(spec), theta0_(theta0), alpha_(alpha) {
  spec_.validate();
}

std::shared_ptr<const FibreRaster> RasterCache::raster(double t) {
  const long long key = std::llround(t * 1e9);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = rasters_.find(key);
    if (it != rasters_.end()) return it->second;
  }
  auto fresh = std::make_shared<const FibreRaster>(eval_fibre(spec_, driving_state(theta0_, alpha_, t)));
  std::lock_guard<std::mutex> lock(mutex_);
  return rasters_.emplace(key, std::move(fresh)).first->second;
}

MembershipSnapshot RasterCache::snapshot(double t) { return MembershipSnapshot(spec_, raster(t), t); }

void RasterCache::clear() {
  std::lock_guard<std::mutex> lock(mutex_);
  rasters_.clear();
}

bool membership(RasterCache& cache, double t, const Point2& x) { return cache.snapshot(t).contains(x); }

BoundCurves bound_curves(double lambda, const std::vector<double>& times) {
  BoundCurves out;
  out.exp_lambda.reserve(times.size());
  out.exp_2lambda.reserve(times.size());
  for (double t : times) {
    out.exp_lambda.push_back(std::exp(lambda * t));
    out.exp_2lambda.push_back(std::exp(2.0 * lambda * t));
  }
  return out;
}

double cumulative_estimate(double lambda) {
  if (!(lambda < 0.0)) throw ValidationError("cumulative_estimate: lambda must be negative");
  return -1.0 / (2.0 * lambda);
}

double theoretical_survival_bound(RasterCache& cache, double t) {
  const auto& spec = cache.spec();
  if (spec.method != Method::cs1) throw ValidationError("theoretical_survival_bound: defined for cs1 families only");
  const MembershipSnapshot start = cache.snapshot(0.0);
  const double measure = start.member_fraction();
  if (measure == 0.0) throw ValidationError("theoretical_survival_bound: initial set is empty");
  double sup = 0.0;
  for (const Complex& v : start.raster().values) sup = std::max(sup, std::abs(v.real()));

  const auto later = cache.raster(t);
  const Complex phase = std::polar(1.0, spec.pair.eta() * t);
  double l2sq = 0.0;
  for (const Complex& v : later->values) {
    const double re = (phase * v).real();
    l2sq += re * re;
  }
  l2sq /= static_cast<double>(later->values.size());
  return 0.5 * std::exp(2.0 * spec.pair.lambda() * t) * l2sq / (sup * sup * measure);
}

void write_raster_csv(const FibreRaster& raster, std::ostream& out) {
  out << "row,col,re,im\n";
  for (int r = 0; r < raster.size; ++r) {
    for (int c = 0; c < raster.size; ++c) {
      const Complex& v = raster.at(r, c);
      out << r << ',' << c << ',' << detail::format_double(v.real()) << ',' << detail::format_double(v.imag())
          << '\n';
    }
  }
}

void write_mask_pgm(const MembershipSnapshot& snapshot, std::ostream& out) {
  const int n = snapshot.raster().size;
  out << "P5\n" << n << ' ' << n << "\n255\n";
  const auto mask = snapshot.mask();
  std::string pixels(mask.size(), '\0');
  for (std::size_t i = 0; i < mask.size(); ++i) pixels[i] = static_cast<char>(mask[i] ? 0 : 255);
  out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
}

}  // namespace cohset
