#include "cohset/sde.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>

#include "csv_util.hpp"

namespace cohset {

std::string to_string(Integrator integrator) {
  return integrator == Integrator::heun ? "heun" : "euler-maruyama";
}

Integrator parse_integrator(const std::string& text) {
  if (text == "heun") return Integrator::heun;
  if (text == "euler-maruyama" || text == "euler_maruyama" || text == "em") return Integrator::euler_maruyama;
  throw ValidationError("unknown integrator '" + text + "' (expected heun or euler-maruyama)");
}

int SimConfig::steps() const { return static_cast<int>(std::llround(t_max / h)); }

void SimConfig::validate() const {
  if (grid_particles < 2) throw ValidationError("simulation: grid_particles must be at least 2");
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("simulation: step size h must be positive");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ValidationError("simulation: t_max must be positive");
  const double ratio = t_max / h;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw ValidationError("simulation: t_max must be an integer number of steps h");
  }
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ValidationError("simulation: eps must be non-negative");
  if (check_every < 1) throw ValidationError("simulation: check_every must be at least 1");
}

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

std::array<double, 2> ParticleStreams::normal_pair(std::uint64_t particle, std::uint64_t step) const {
  const Philox4x32::Counter counter{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                                    static_cast<std::uint32_t>(particle),
                                    static_cast<std::uint32_t>(particle >> 32)};
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  const auto r = Philox4x32::generate(counter, key);
  const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;          // [0, 1)
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return {radius * std::cos(kTwoPi * u2), radius * std::sin(kTwoPi * u2)};
}

std::vector<Point2> particle_grid(int n) {
  if (n < 1) throw ValidationError("particle_grid: n must be positive");
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(n) * n);
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) out.push_back({(col + 0.5) / n, (row + 0.5) / n});
  }
  return out;
}

void step_ensemble(std::vector<Point2>& positions, const FourierField& field, const Point2& theta0,
                   const Point2& alpha, double t, double h, double eps, const ParticleStreams& streams,
                   std::uint64_t step, Integrator integrator) {
  const FieldSlice slice(field, driving_state(theta0, alpha, t));
  const bool heun = integrator == Integrator::heun;
  const FieldSlice next_slice(field, driving_state(theta0, alpha, heun ? t + h : t));
  const double noise = eps * std::sqrt(h);
  const auto count = static_cast<std::int64_t>(positions.size());
  bool finite = true;
#pragma omp parallel for schedule(static) reduction(&& : finite)
  for (std::int64_t i = 0; i < count; ++i) {
    Point2& x = positions[static_cast<std::size_t>(i)];
    Point2 v = slice(x);
    const auto xi = streams.normal_pair(static_cast<std::uint64_t>(i), step);
    const Point2 dw{noise * xi[0], noise * xi[1]};
    if (heun) {
      const Point2 w = next_slice({x[0] + v[0] * h + dw[0], x[1] + v[1] * h + dw[1]});
      v = {0.5 * (v[0] + w[0]), 0.5 * (v[1] + w[1])};
    }
    const Point2 next{x[0] + v[0] * h + dw[0], x[1] + v[1] * h + dw[1]};
    finite = finite && std::isfinite(next[0]) && std::isfinite(next[1]);
    x = wrap_unit(next);
  }
  if (!finite) throw NumericalError("step_ensemble: non-finite particle position");
}

SurvivalCurve run_survival(const CoherentFamilySpec& family, const SimConfig& cfg, const FourierField& field) {
  cfg.validate();
  family.validate();
  auto positions = particle_grid(cfg.grid_particles);
  const ParticleStreams streams(cfg.seed);

  auto snapshot_at = [&](double t) {
    auto raster = std::make_shared<const FibreRaster>(eval_fibre(family, driving_state(cfg.theta0, cfg.alpha, t)));
    return MembershipSnapshot(family, std::move(raster), t);
  };

  std::vector<unsigned char> alive(positions.size(), 0);
  {
    const auto start = snapshot_at(0.0);
    for (std::size_t i = 0; i < positions.size(); ++i) alive[i] = start.contains(positions[i]) ? 1 : 0;
  }
  SurvivalCurve curve;
  curve.n_initial = static_cast<std::size_t>(std::count(alive.begin(), alive.end(), static_cast<unsigned char>(1)));
  if (curve.n_initial == 0) throw ValidationError("run_survival: the initial coherent set contains no particles");
  curve.times.push_back(0.0);
  curve.survival.push_back(1.0);
  curve.n_alive.push_back(curve.n_initial);

  const int steps = cfg.steps();
  const auto count = static_cast<std::int64_t>(positions.size());
  for (int s = 0; s < steps; ++s) {
    step_ensemble(positions, field, cfg.theta0, cfg.alpha, s * cfg.h, cfg.h, cfg.eps, streams,
                  static_cast<std::uint64_t>(s), cfg.integrator);
    if ((s + 1) % cfg.check_every != 0 && s + 1 != steps) continue;
    const double t = (s + 1) * cfg.h;
    const auto snap = snapshot_at(t);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
      auto& a = alive[static_cast<std::size_t>(i)];
      if (a != 0 && !snap.contains(positions[static_cast<std::size_t>(i)])) a = 0;
    }
    const auto n_alive = static_cast<std::size_t>(std::count(alive.begin(), alive.end(), static_cast<unsigned char>(1)));
    curve.times.push_back(t);
    curve.survival.push_back(static_cast<double>(n_alive) / static_cast<double>(curve.n_initial));
    curve.n_alive.push_back(n_alive);
  }

  const double t_end = curve.times.back();
  curve.c_value = cumulative_survival(curve, t_end);
  curve.escape_fit = escape_rate_fit(curve, 0.5 * t_end, t_end);
  curve.escape_fit_degenerate = std::isinf(curve.escape_fit);
  return curve;
}

double cumulative_survival(const SurvivalCurve& curve, double horizon) {
  if (curve.times.empty() || horizon <= curve.times.front()) return 0.0;
  if (horizon > curve.times.back() + 1e-12) throw ValidationError("cumulative_survival: horizon beyond the curve");
  double total = 0.0;
  for (std::size_t i = 1; i < curve.times.size(); ++i) {
    const double t0 = curve.times[i - 1];
    const double t1 = curve.times[i];
    if (t0 >= horizon) break;
    const double s0 = curve.survival[i - 1];
    double s1 = curve.survival[i];
    double end = t1;
    if (t1 > horizon) {
      s1 = s0 + (s1 - s0) * (horizon - t0) / (t1 - t0);
      end = horizon;
    }
    total += 0.5 * (s0 + s1) * (end - t0);
  }
  return total;
}

double escape_rate_fit(const SurvivalCurve& curve, double t_lo, double t_hi) {
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    const double t = curve.times[i];
    if (t < t_lo - 1e-12 || t > t_hi + 1e-12) continue;
    if (curve.survival[i] <= 0.0) return -std::numeric_limits<double>::infinity();
    const double y = std::log(curve.survival[i]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++n;
  }
  if (n < 2) throw ValidationError("escape_rate_fit: fewer than two samples in the window");
  const double dn = static_cast<double>(n);
  const double denom = dn * stt - st * st;
  if (denom <= 0.0) throw ValidationError("escape_rate_fit: degenerate time window");
  return (dn * sty - st * sy) / denom;
}

void write_survival_csv(const SurvivalCurve& curve, double lambda, std::ostream& out) {
  const auto bounds = bound_curves(lambda, curve.times);
  out << "t,survival,bound_exp_lambda,bound_exp_2lambda,n_alive\n";
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    out << detail::format_double(curve.times[i]) << ',' << detail::format_double(curve.survival[i]) << ','
        << detail::format_double(bounds.exp_lambda[i]) << ',' << detail::format_double(bounds.exp_2lambda[i]) << ','
        << curve.n_alive[i] << '\n';
  }
}

std::string survival_summary_json(const SurvivalCurve& curve, const CoherentFamilySpec& family,
                                  const SimConfig& cfg) {
  nlohmann::ordered_json j;
  j["lambda"] = family.pair.lambda();
  j["eta"] = family.pair.eta();
  j["method"] = to_string(family.method);
  j["q"] = family.q;
  j["C"] = curve.c_value;
  j["horizon"] = curve.times.empty() ? 0.0 : curve.times.back();
  if (curve.escape_fit_degenerate) {
    j["escape_fit"] = nullptr;
  } else {
    j["escape_fit"] = curve.escape_fit;
  }
  j["n_initial"] = curve.n_initial;
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

}  // namespace cohset
