#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cohset/coherent.hpp"
#include "cohset/fourier_field.hpp"
#include "cohset/types.hpp"

namespace cohset {

enum class Integrator { euler_maruyama, heun };

std::string to_string(Integrator integrator);
/// Accepts "euler-maruyama", "euler_maruyama", "em", "heun".
Integrator parse_integrator(const std::string& text);

struct SimConfig {
  /// Particles per axis; the initial ensemble is the cell-centred grid.
  int grid_particles = 150;
  double t_max = 10.0;
  double h = 0.01;
  double eps = 0.03;
  Point2 alpha{0.2, 0.2 * 1.4142135623730951};
  Point2 theta0{0.0, 0.0};
  std::uint64_t seed = 42;
  /// Steps between membership checks.
  int check_every = 1;
  Integrator integrator = Integrator::heun;

  int steps() const;
  void validate() const;
};

/// Philox4x32-10 counter-based bijection.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key);
};

/// One independent stream per particle, addressed by (seed, particle, step);
/// draws do not depend on evaluation order or thread count.
class ParticleStreams {
 public:
  explicit ParticleStreams(std::uint64_t seed) : seed_(seed) {}

  /// Two independent standard normals for `particle` at `step` (Box-Muller).
  std::array<double, 2> normal_pair(std::uint64_t particle, std::uint64_t step) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Cell-centred n x n grid in [0,1)^2, particle index = row * n + col.
std::vector<Point2> particle_grid(int n);

/// One step from time t = step * h, wrapped to [0,1)^2. Euler-Maruyama:
/// x <- x + v(theta0 + alpha t, x) h + eps sqrt(h) xi.
/// Heun (additive noise): y = x + v(t, x) h + eps sqrt(h) xi,
/// x <- x + (v(t, x) + v(t + h, y)) h / 2 + eps sqrt(h) xi.
void step_ensemble(std::vector<Point2>& positions, const FourierField& field, const Point2& theta0,
                   const Point2& alpha, double t, double h, double eps, const ParticleStreams& streams,
                   std::uint64_t step, Integrator integrator = Integrator::euler_maruyama);

struct SurvivalCurve {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<std::size_t> n_alive;
  std::size_t n_initial = 0;
  /// Trapezoidal integral of survival over [0, t_max].
  double c_value = 0.0;
  /// Least-squares slope of log survival over the last half of [0, t_max].
  double escape_fit = 0.0;
  /// True when survival hit zero inside the fit window (escape_fit is -inf).
  bool escape_fit_degenerate = false;
};

/// Simulates the ensemble and tracks first exit from A_{theta0}^t.
SurvivalCurve run_survival(const CoherentFamilySpec& family, const SimConfig& cfg, const FourierField& field);

/// Trapezoidal integral of survival over [0, horizon] (linear interpolation
/// at the horizon).
double cumulative_survival(const SurvivalCurve& curve, double horizon);

/// Least-squares slope of log(survival) against t over [t_lo, t_hi]. Returns
/// -infinity if survival vanishes inside the window.
double escape_rate_fit(const SurvivalCurve& curve, double t_lo, double t_hi);

/// `t,survival,bound_exp_lambda,bound_exp_2lambda,n_alive`.
void write_survival_csv(const SurvivalCurve& curve, double lambda, std::ostream& out);

/// `{lambda, eta, method, q, C, horizon, escape_fit, n_initial, seed}`.
std::string survival_summary_json(const SurvivalCurve& curve, const CoherentFamilySpec& family,
                                  const SimConfig& cfg);

}  // namespace cohset
