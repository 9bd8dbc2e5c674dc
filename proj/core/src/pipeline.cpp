#include "cohset/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "csv_util.hpp"

namespace cohset {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string normalize_token(const std::string& text) {
  std::string out = text;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return c == '-' ? '_' : static_cast<char>(std::tolower(c));
  });
  return out;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::out : std::ios::out);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path, const std::string& produced_by) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("missing input " + path.string() + "; run the '" + produced_by +
                          "' stage with the same --out directory first");
  }
  return in;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

ojson read_json(const fs::path& path, const std::string& produced_by) {
  auto in = open_in(path, produced_by);
  try {
    return ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

std::string to_string(Example example) {
  switch (example) {
    case Example::translated_gyres: return "translated-gyres";
    case Example::oscillating_gyres: return "oscillating-gyres";
    case Example::shear: return "shear";
    case Example::custom: return "custom";
  }
  return "unknown";
}

Example parse_example(const std::string& text) {
  const std::string t = normalize_token(text);
  if (t == "translated_gyres") return Example::translated_gyres;
  if (t == "oscillating_gyres") return Example::oscillating_gyres;
  if (t == "shear") return Example::shear;
  if (t == "custom") return Example::custom;
  throw ValidationError("unknown example '" + text +
                        "' (expected translated-gyres, oscillating-gyres, shear or custom)");
}

std::string to_string(Selection selection) {
  return selection == Selection::leading_real ? "leading-real" : "leading-complex";
}

Selection parse_selection(const std::string& text) {
  const std::string t = normalize_token(text);
  if (t == "leading_real") return Selection::leading_real;
  if (t == "leading_complex") return Selection::leading_complex;
  throw ValidationError("unknown selection '" + text + "' (expected leading-real or leading-complex)");
}

ModeSet::Kind parse_modeset_kind(const std::string& text) {
  const std::string t = normalize_token(text);
  if (t == "product_ball") return ModeSet::Kind::product_ball;
  if (t == "class_union") return ModeSet::Kind::class_union;
  throw ValidationError("unknown mode set '" + text + "' (expected product_ball or class_union)");
}

RunConfig RunConfig::preset(Example example) {
  RunConfig cfg;
  cfg.example = example;
  switch (example) {
    case Example::translated_gyres:
      cfg.modeset_kind = ModeSet::Kind::class_union;
      cfg.K = 2;
      cfg.r = 11.0;
      cfg.solver.k = 100;
      cfg.solver.shift = Complex{1.0, 0.0};
      cfg.selection = Selection::leading_complex;
      cfg.method = Method::cs3;
      break;
    case Example::oscillating_gyres:
      cfg.modeset_kind = ModeSet::Kind::product_ball;
      cfg.K = 6;
      cfg.r = 8.0;
      cfg.solver.k = 20;
      cfg.solver.shift = Complex{spectral_gap_shift(cfg.eps), 0.0};
      cfg.selection = Selection::leading_real;
      cfg.method = Method::cs2;
      break;
    case Example::shear:
      cfg.modeset_kind = ModeSet::Kind::product_ball;
      cfg.K = 6;
      cfg.r = 8.0;
      cfg.solver.k = 20;
      cfg.solver.shift = Complex{spectral_gap_shift(cfg.eps), 0.0};
      cfg.selection = Selection::leading_real;
      cfg.method = Method::cs1;
      break;
    case Example::custom:
      cfg.modeset_kind = ModeSet::Kind::product_ball;
      cfg.selection = Selection::leading_real;
      cfg.method = Method::cs1;
      break;
  }
  cfg.sim.eps = cfg.eps;
  cfg.sim.alpha = cfg.alpha;
  cfg.out_dir = "out/" + to_string(example);
  return cfg;
}

void RunConfig::validate() const {
  if (example == Example::custom && field_csv.empty()) {
    throw ValidationError("custom runs need a coefficient CSV (--field-csv)");
  }
  if (K < 0) throw ValidationError("K must be non-negative");
  if (!(r >= 0.0)) throw ValidationError("r must be non-negative");
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (!std::isfinite(alpha[0]) || !std::isfinite(alpha[1])) throw ValidationError("alpha must be finite");
  if (!(q >= 0.0) || !std::isfinite(q)) throw ValidationError("q must be non-negative and finite");
  if (grid_size < 4) throw ValidationError("grid size must be at least 4");
  for (double t : mask_times) {
    if (!(t >= 0.0)) throw ValidationError("mask times must be non-negative");
  }
  solver.validate();
  SimConfig sc = sim;
  sc.eps = eps;
  sc.alpha = alpha;
  sc.validate();
}

FourierField build_field(const RunConfig& cfg) {
  switch (cfg.example) {
    case Example::translated_gyres: return builtin_translated_gyres();
    case Example::oscillating_gyres: return builtin_oscillating_gyres(cfg.delta, cfg.err);
    case Example::shear: return builtin_shear();
    case Example::custom: {
      std::ifstream in(cfg.field_csv);
      if (!in) throw ValidationError("cannot read field CSV " + cfg.field_csv);
      return read_field_csv(in);
    }
  }
  throw ValidationError("unknown example");
}

ModeSet build_modeset(const RunConfig& cfg) {
  if (cfg.modeset_kind == ModeSet::Kind::class_union) return ModeSet::class_union(cfg.K, cfg.r);
  if (cfg.modeset_kind == ModeSet::Kind::product_ball) return ModeSet::product_ball(cfg.K, cfg.r);
  throw ValidationError("mode set kind must be product_ball or class_union");
}

std::size_t select_eigenpair(const std::vector<RitzPair>& pairs, Selection selection) {
  constexpr double kDecayFloor = -1e-6;
  constexpr double kRealTol = 1e-8;
  constexpr double kComplexFloor = 0.5;
  constexpr double kTie = 1e-8;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Complex z = pairs[i].z;
    if (!(z.real() < kDecayFloor)) continue;
    const bool real = std::abs(z.imag()) <= kRealTol;
    if (selection == Selection::leading_real ? real : std::abs(z.imag()) > kComplexFloor) candidates.push_back(i);
  }
  if (candidates.empty()) {
    throw NumericalError("no converged eigenpair matches selection " + to_string(selection) +
                         "; increase k or move the shift");
  }
  double best_re = -std::numeric_limits<double>::infinity();
  for (std::size_t i : candidates) best_re = std::max(best_re, pairs[i].z.real());
  std::size_t chosen = pairs.size();
  for (std::size_t i : candidates) {
    if (pairs[i].z.real() < best_re - kTie) continue;
    if (chosen == pairs.size() || pairs[i].z.imag() < pairs[chosen].z.imag()) chosen = i;
  }
  return chosen;
}

std::string mask_file_name(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "mask_t%g.pgm", t);
  return buf;
}

ModeSet read_modes_file(const fs::path& path) {
  auto in = open_in(path, "assemble");
  return read_modes_csv(in);
}

namespace {

void write_eigenvector_csv(const ModeSet& modes, const CoefficientVector& v, std::ostream& out) {
  out << "m1,m2,n1,n2,re,im\n";
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const ModeIndex& md = modes.mode(i);
    const Complex c = v[static_cast<Eigen::Index>(i)];
    out << md.m[0] << ',' << md.m[1] << ',' << md.n[0] << ',' << md.n[1] << ',' << detail::format_double(c.real())
        << ',' << detail::format_double(c.imag()) << '\n';
  }
}

CoefficientVector read_eigenvector_csv(std::istream& in, const ModeSet& modes) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "m1,m2,n1,n2,re,im") {
    throw ValidationError("eigenvector CSV: expected header m1,m2,n1,n2,re,im");
  }
  CoefficientVector v(static_cast<Eigen::Index>(modes.size()));
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 6) throw ValidationError("eigenvector CSV: expected 6 columns on row " + std::to_string(row + 1));
    if (row >= modes.size()) throw ValidationError("eigenvector CSV: more rows than modes");
    const ModeIndex md{{detail::parse_int(cells[0]), detail::parse_int(cells[1])},
                       {detail::parse_int(cells[2]), detail::parse_int(cells[3])}};
    if (!(md == modes.mode(row))) {
      throw ValidationError("eigenvector CSV: row " + std::to_string(row + 1) + " mode " + to_string(md) +
                            " does not match modes.csv");
    }
    v[static_cast<Eigen::Index>(row)] = Complex{detail::parse_double(cells[4]), detail::parse_double(cells[5])};
    ++row;
  }
  if (row != modes.size()) throw ValidationError("eigenvector CSV: fewer rows than modes");
  return v;
}

ojson field_stats(const RunConfig& cfg, const FourierField& field) {
  ojson j;
  j["example"] = to_string(cfg.example);
  j["modes"] = field.size();
  j["threshold"] = field.threshold_used();
  j["max_norm"] = field.max_norm();
  j["divergence_residual"] = field.divergence_residual();
  j["hermitian_residual"] = field.hermitian_residual();
  return j;
}

void write_field_files(const RunConfig& cfg, const FourierField& field) {
  auto out = open_out(cfg.out_dir / artifacts::field_csv);
  write_field_csv(field, out);
  write_text(cfg.out_dir / artifacts::field_json, field_stats(cfg, field).dump(2) + "\n");
}

CoherentFamilySpec family_from_files(const RunConfig& cfg, ModeSet& modes_out) {
  modes_out = read_modes_file(cfg.out_dir / artifacts::modes_csv);
  CoherentFamilySpec spec;
  spec.pair = read_eigenpair(cfg.out_dir, modes_out);
  spec.modeset = modes_out;
  spec.method = cfg.method;
  spec.q = cfg.q;
  spec.grid_size = cfg.grid_size;
  spec.validate();
  return spec;
}

}  // namespace

RitzPair read_eigenpair(const fs::path& dir, const ModeSet& modes) {
  const ojson j = read_json(dir / artifacts::eigenpair_json, "spectrum");
  RitzPair pair;
  try {
    pair.z = Complex{j.at("re").get<double>(), j.at("im").get<double>()};
    pair.residual = j.at("residual").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("eigenpair.json: " + std::string(e.what()));
  }
  auto in = open_in(dir / artifacts::eigenvector_csv, "spectrum");
  pair.vector = read_eigenvector_csv(in, modes);
  return pair;
}

FourierField stage_field(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  FourierField field = build_field(cfg);
  write_field_files(cfg, field);
  return field;
}

DiscreteGenerator stage_assemble(const RunConfig& cfg) {
  const FourierField field = stage_field(cfg);
  const ModeSet modes = build_modeset(cfg);
  DiscreteGenerator gen = assemble(field, modes, cfg.eps, cfg.alpha);
  {
    auto out = open_out(cfg.out_dir / artifacts::modes_csv);
    write_modes_csv(modes, out);
  }
  {
    auto out = open_out(cfg.out_dir / artifacts::matrix);
    write_matrix_market(gen.matrix, out);
  }
  write_text(cfg.out_dir / artifacts::generator_json, generator_stats_json(gen));
  return gen;
}

SpectrumStage stage_spectrum(const RunConfig& cfg) {
  cfg.validate();
  const ModeSet modes = read_modes_file(cfg.out_dir / artifacts::modes_csv);
  SparseMatrix matrix;
  {
    auto in = open_in(cfg.out_dir / artifacts::matrix, "assemble");
    matrix = read_matrix_market(in);
  }
  if (static_cast<std::size_t>(matrix.rows()) != modes.size()) {
    throw ValidationError("generator.mtx dimension does not match modes.csv");
  }
  SpectrumStage stage;
  stage.result = solve_shift_invert(matrix, cfg.solver);
  {
    auto out = open_out(cfg.out_dir / artifacts::spectrum_csv);
    write_spectrum_csv(stage.result.pairs, out);
  }
  stage.selected = select_eigenpair(stage.result.pairs, cfg.selection);
  RitzPair chosen = phase_normalize(modes, stage.result.pairs[stage.selected]);
  chosen.residual = residual(matrix, chosen);

  ojson j;
  j["re"] = chosen.z.real();
  j["im"] = chosen.z.imag();
  j["residual"] = chosen.residual;
  j["index"] = stage.selected;
  j["selection"] = to_string(cfg.selection);
  j["shift"] = {cfg.solver.shift.real(), cfg.solver.shift.imag()};
  j["k"] = cfg.solver.k;
  j["converged_pairs"] = stage.result.pairs.size();
  j["all_converged"] = stage.result.all_converged;
  write_text(cfg.out_dir / artifacts::eigenpair_json, j.dump(2) + "\n");
  {
    auto out = open_out(cfg.out_dir / artifacts::eigenvector_csv);
    write_eigenvector_csv(modes, chosen.vector, out);
  }
  return stage;
}

ExtractStage stage_extract(const RunConfig& cfg) {
  cfg.validate();
  ModeSet modes;
  const CoherentFamilySpec spec = family_from_files(cfg, modes);
  RasterCache cache(spec, cfg.sim.theta0, cfg.alpha);

  {
    auto out = open_out(cfg.out_dir / artifacts::fibre_csv);
    write_raster_csv(*cache.raster(0.0), out);
  }
  ExtractStage stage;
  ojson masks = ojson::array();
  for (double t : cfg.mask_times) {
    const MembershipSnapshot snap = cache.snapshot(t);
    const std::string name = mask_file_name(t);
    auto out = open_out(cfg.out_dir / name, true);
    write_mask_pgm(snap, out);
    stage.times.push_back(t);
    stage.member_fractions.push_back(snap.member_fraction());
    masks.push_back({{"t", t}, {"file", name}, {"member_fraction", stage.member_fractions.back()}});
  }
  ojson j;
  j["method"] = to_string(spec.method);
  j["q"] = spec.q;
  j["grid_size"] = spec.grid_size;
  j["theta0"] = {cfg.sim.theta0[0], cfg.sim.theta0[1]};
  j["masks"] = masks;
  write_text(cfg.out_dir / artifacts::extract_json, j.dump(2) + "\n");
  return stage;
}

SurvivalCurve stage_simulate(const RunConfig& cfg) {
  cfg.validate();
  ModeSet modes;
  const CoherentFamilySpec spec = family_from_files(cfg, modes);
  FourierField field;
  {
    auto in = open_in(cfg.out_dir / artifacts::field_csv, "field");
    field = read_field_csv(in);
  }
  SimConfig sim = cfg.sim;
  sim.eps = cfg.eps;
  sim.alpha = cfg.alpha;
  SurvivalCurve curve = run_survival(spec, sim, field);
  {
    auto out = open_out(cfg.out_dir / artifacts::survival_csv);
    write_survival_csv(curve, spec.pair.lambda(), out);
  }
  write_text(cfg.out_dir / artifacts::summary_json, survival_summary_json(curve, spec, sim));
  return curve;
}

Report cmd_reproduce(const RunConfig& cfg) {
  cfg.validate();
  auto written = [&] {
    std::string list;
    for (const char* name : {artifacts::field_csv, artifacts::field_json, artifacts::modes_csv, artifacts::matrix,
                             artifacts::generator_json, artifacts::spectrum_csv, artifacts::eigenpair_json,
                             artifacts::eigenvector_csv, artifacts::fibre_csv, artifacts::extract_json,
                             artifacts::survival_csv, artifacts::summary_json}) {
      if (fs::exists(cfg.out_dir / name)) list += (list.empty() ? "" : ", ") + std::string(name);
    }
    return " [files present: " + (list.empty() ? std::string("none") : list) + "]";
  };
  auto run_stage = [&](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("stage ") + name + ": " + e.what() + written());
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("stage ") + name + ": " + e.what() + written());
    }
  };
  run_stage("assemble", [&] { return stage_assemble(cfg); });
  const SpectrumStage spectrum = run_stage("spectrum", [&] { return stage_spectrum(cfg); });
  run_stage("extract", [&] { return stage_extract(cfg); });
  run_stage("simulate", [&] { return stage_simulate(cfg); });

  Report report;
  report.manifest = {artifacts::field_csv,     artifacts::field_json,     artifacts::modes_csv,
                     artifacts::matrix,        artifacts::generator_json, artifacts::spectrum_csv,
                     artifacts::eigenpair_json, artifacts::eigenvector_csv, artifacts::fibre_csv};
  for (double t : cfg.mask_times) report.manifest.push_back(mask_file_name(t));
  report.manifest.insert(report.manifest.end(),
                         {artifacts::extract_json, artifacts::survival_csv, artifacts::summary_json});

  ojson j;
  j["example"] = to_string(cfg.example);
  ojson params;
  params["modeset"] = cfg.modeset_kind == ModeSet::Kind::class_union ? "class_union" : "product_ball";
  params["K"] = cfg.K;
  params["r"] = cfg.r;
  params["eps"] = cfg.eps;
  params["alpha"] = {cfg.alpha[0], cfg.alpha[1]};
  if (cfg.example == Example::oscillating_gyres) {
    params["delta"] = cfg.delta;
    params["err"] = cfg.err;
  }
  params["solver"] = {{"k", cfg.solver.k},
                      {"shift", {cfg.solver.shift.real(), cfg.solver.shift.imag()}},
                      {"krylov_dim", cfg.solver.effective_krylov_dim(std::numeric_limits<std::size_t>::max())},
                      {"tol", cfg.solver.tol}};
  params["selection"] = to_string(cfg.selection);
  params["method"] = to_string(cfg.method);
  params["q"] = cfg.q;
  params["grid_size"] = cfg.grid_size;
  params["simulation"] = {{"grid_particles", cfg.sim.grid_particles}, {"t_max", cfg.sim.t_max},
                          {"h", cfg.sim.h},  {"seed", cfg.sim.seed},
                          {"check_every", cfg.sim.check_every}, {"integrator", to_string(cfg.sim.integrator)},
                          {"theta0", {cfg.sim.theta0[0], cfg.sim.theta0[1]}}};
  j["parameters"] = params;
  j["field"] = read_json(cfg.out_dir / artifacts::field_json, "field");
  j["generator"] = read_json(cfg.out_dir / artifacts::generator_json, "assemble");
  ojson table = ojson::array();
  for (const auto& p : spectrum.result.pairs) table.push_back({p.z.real(), p.z.imag(), p.residual});
  j["spectrum"] = {{"columns", {"re", "im", "residual"}}, {"rows", table}};
  j["eigenpair"] = read_json(cfg.out_dir / artifacts::eigenpair_json, "spectrum");
  j["extract"] = read_json(cfg.out_dir / artifacts::extract_json, "extract");
  j["survival"] = read_json(cfg.out_dir / artifacts::summary_json, "simulate");
  ojson manifest = ojson::array();
  for (const auto& name : report.manifest) {
    const fs::path path = cfg.out_dir / name;
    if (!fs::exists(path) || fs::file_size(path) == 0) {
      throw ValidationError("stage report: manifest file " + path.string() + " is missing or empty");
    }
    manifest.push_back({{"file", name}, {"bytes", fs::file_size(path)}});
  }
  j["manifest"] = manifest;
  report.json = j.dump(2) + "\n";
  write_text(cfg.out_dir / artifacts::report_json, report.json);
  return report;
}

}  // namespace cohset
