#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cohset/pipeline.hpp"

namespace {

using namespace cohset;

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw ValidationError(std::string("cannot parse ") + what + " '" + text + "'");
    }
    out.push_back(value);
  }
  if (out.empty()) throw ValidationError(std::string("empty ") + what);
  return out;
}

Point2 parse_pair(const std::string& text, const char* what) {
  const auto v = parse_list(text, what);
  if (v.size() != 2) throw ValidationError(std::string(what) + " needs two comma-separated numbers");
  return {v[0], v[1]};
}

/// Flag values as strings; only options given on the command line or in the
/// config file override the preset.
struct Flags {
  std::string example;
  std::string field_csv;
  double delta = 0.0;
  double err = 0.0;
  std::string modeset;
  int K = 0;
  double r = 0.0;
  double eps = 0.0;
  std::string alpha;
  int k = 0;
  std::string shift;
  int krylov_dim = 0;
  double tol = 0.0;
  int max_restarts = 0;
  std::string select;
  std::string method;
  double q = 0.0;
  int grid_size = 0;
  std::string times;
  std::string theta;
  int particles = 0;
  double t_max = 0.0;
  double h = 0.0;
  std::uint64_t seed = 0;
  int check_every = 0;
  std::string integrator;
  std::string out;
};

struct Options {
  Flags f;
  std::vector<CLI::Option*> opts;
  CLI::Option* example = nullptr;

  void add(CLI::App& app) {
    auto push = [&](CLI::Option* o) {
      opts.push_back(o);
      return o;
    };
    example = push(app.add_option("--example", f.example,
                                  "translated-gyres | oscillating-gyres | shear | custom"));
    push(app.add_option("--field-csv", f.field_csv, "coefficient CSV for custom fields"));
    push(app.add_option("--delta", f.delta, "oscillating-gyres amplitude"));
    push(app.add_option("--err", f.err, "coefficient truncation threshold"));
    push(app.add_option("--modeset", f.modeset, "product_ball | class_union"));
    push(app.add_option("--K", f.K, "driving-frequency radius"));
    push(app.add_option("--r", f.r, "physical-frequency radius"));
    push(app.add_option("--eps", f.eps, "diffusion strength"));
    push(app.add_option("--alpha", f.alpha, "driving frequency a1,a2"));
    push(app.add_option("--k", f.k, "number of eigenpairs"));
    push(app.add_option("--shift", f.shift, "shift: re | re,im | gap"));
    push(app.add_option("--krylov-dim", f.krylov_dim, "Krylov subspace dimension (0 = auto)"));
    push(app.add_option("--tol", f.tol, "relative residual tolerance"));
    push(app.add_option("--max-restarts", f.max_restarts, "restart limit"));
    push(app.add_option("--select", f.select, "leading-real | leading-complex"));
    push(app.add_option("--method", f.method, "cs1 | cs2 | cs3"));
    push(app.add_option("--q", f.q, "threshold for cs2/cs3"));
    push(app.add_option("--grid-size", f.grid_size, "fibre raster size"));
    push(app.add_option("--t", f.times, "mask times t1,t2,..."));
    push(app.add_option("--theta", f.theta, "initial driving state th1,th2"));
    push(app.add_option("--particles", f.particles, "particles per axis"));
    push(app.add_option("--t-max", f.t_max, "simulation horizon"));
    push(app.add_option("--h", f.h, "time step"));
    push(app.add_option("--seed", f.seed, "random seed"));
    push(app.add_option("--check-every", f.check_every, "steps between membership checks"));
    push(app.add_option("--integrator", f.integrator, "heun | euler-maruyama"));
    push(app.add_option("--out", f.out, "output directory"));
  }

  bool given(const char* name) const {
    for (const auto* o : opts) {
      if (o->check_lname(std::string(name).substr(2)) && o->count() > 0) return true;
    }
    return false;
  }

  RunConfig resolve() const {
    RunConfig cfg;
    const bool has_example = example->count() > 0;
    if (has_example) cfg = RunConfig::preset(parse_example(f.example));
    if (given("--field-csv")) cfg.field_csv = f.field_csv;
    if (given("--delta")) cfg.delta = f.delta;
    if (given("--err")) cfg.err = f.err;
    if (given("--modeset")) cfg.modeset_kind = parse_modeset_kind(f.modeset);
    if (given("--K")) cfg.K = f.K;
    if (given("--r")) cfg.r = f.r;
    if (given("--eps")) cfg.eps = f.eps;
    if (given("--alpha")) cfg.alpha = parse_pair(f.alpha, "--alpha");
    if (given("--k")) cfg.solver.k = f.k;
    if (given("--shift")) {
      if (f.shift == "gap") {
        cfg.solver.shift = {spectral_gap_shift(cfg.eps), 0.0};
      } else {
        const auto v = parse_list(f.shift, "--shift");
        if (v.size() > 2) throw ValidationError("--shift takes re or re,im");
        cfg.solver.shift = {v[0], v.size() == 2 ? v[1] : 0.0};
      }
    } else if (has_example && cfg.solver.shift.real() < 0.0) {
      cfg.solver.shift = {spectral_gap_shift(cfg.eps), 0.0};
    }
    if (given("--krylov-dim")) cfg.solver.krylov_dim = f.krylov_dim;
    if (given("--tol")) cfg.solver.tol = f.tol;
    if (given("--max-restarts")) cfg.solver.max_restarts = f.max_restarts;
    if (given("--select")) cfg.selection = parse_selection(f.select);
    if (given("--method")) cfg.method = parse_method(f.method);
    if (given("--q")) cfg.q = f.q;
    if (given("--grid-size")) cfg.grid_size = f.grid_size;
    if (given("--t")) cfg.mask_times = parse_list(f.times, "--t");
    if (given("--theta")) cfg.sim.theta0 = parse_pair(f.theta, "--theta");
    if (given("--particles")) cfg.sim.grid_particles = f.particles;
    if (given("--t-max")) cfg.sim.t_max = f.t_max;
    if (given("--h")) cfg.sim.h = f.h;
    if (given("--seed")) cfg.sim.seed = f.seed;
    if (given("--check-every")) cfg.sim.check_every = f.check_every;
    if (given("--integrator")) cfg.sim.integrator = parse_integrator(f.integrator);
    if (given("--out")) cfg.out_dir = f.out;
    cfg.sim.eps = cfg.eps;
    cfg.sim.alpha = cfg.alpha;
    cfg.validate();
    return cfg;
  }
};

void print_pair(const RitzPair& pair) {
  std::cout << "eigenvalue " << pair.z.real() << (pair.z.imag() < 0 ? " - " : " + ") << std::abs(pair.z.imag())
            << "i  residual " << pair.residual << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Coherent sets of quasi-periodically driven flows"};
  app.set_help_flag("--help", "print this help");
  app.set_config("--config", "", "INI-style key = value file; flags win");
  app.require_subcommand(1, 1);
  Options options;
  options.add(app);

  auto* field = app.add_subcommand("field", "write the field coefficients");
  auto* assemble = app.add_subcommand("assemble", "build the mode set and the sparse generator");
  auto* spectrum = app.add_subcommand("spectrum", "eigenpairs nearest the shift");
  auto* extract = app.add_subcommand("extract", "fibre rasters and set masks");
  auto* simulate = app.add_subcommand("simulate", "particle survival in the coherent family");
  auto* reproduce = app.add_subcommand("reproduce", "full pipeline for one example");
  std::string positional_example;
  reproduce->add_option("example", positional_example, "translated-gyres | oscillating-gyres | shear");
  for (auto* sub : {field, assemble, spectrum, extract, simulate, reproduce}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (!positional_example.empty()) {
    if (options.example->count() > 0 && options.f.example != positional_example) {
      throw ValidationError("conflicting examples '" + positional_example + "' and '" + options.f.example + "'");
    }
    options.f.example = positional_example;
    options.example->add_result(positional_example);
  }
  const RunConfig cfg = options.resolve();

  if (field->parsed()) {
    const auto f = stage_field(cfg);
    std::cout << "field: " << f.size() << " modes -> " << (cfg.out_dir / artifacts::field_csv).string() << '\n';
  } else if (assemble->parsed()) {
    const auto g = stage_assemble(cfg);
    std::cout << "generator: dim " << g.dim() << ", nnz " << g.nnz() << " -> "
              << (cfg.out_dir / artifacts::matrix).string() << '\n';
  } else if (spectrum->parsed()) {
    const auto s = stage_spectrum(cfg);
    std::cout << s.result.pairs.size() << " pairs, shift " << s.result.shift.real() << ','
              << s.result.shift.imag() << (s.result.all_converged ? "" : " (not all converged)") << "\nselected ";
    print_pair(s.result.pairs[s.selected]);
  } else if (extract->parsed()) {
    const auto e = stage_extract(cfg);
    for (std::size_t i = 0; i < e.times.size(); ++i) {
      std::cout << "t = " << e.times[i] << ": member fraction " << e.member_fractions[i] << " -> "
                << mask_file_name(e.times[i]) << '\n';
    }
  } else if (simulate->parsed()) {
    const auto c = stage_simulate(cfg);
    std::cout << "C = " << c.c_value << " over [0, " << c.times.back() << "], n_initial " << c.n_initial << '\n';
  } else if (reproduce->parsed()) {
    if (options.example->count() == 0) throw ValidationError("reproduce needs an example");
    const auto report = cmd_reproduce(cfg);
    std::cout << "report -> " << (cfg.out_dir / artifacts::report_json).string() << " (" << report.manifest.size()
              << " files)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cohset::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const cohset::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
