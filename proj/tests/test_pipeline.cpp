#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cohset/pipeline.hpp"

using namespace cohset;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(Example example, const fs::path& dir) {
  RunConfig cfg = RunConfig::preset(example);
  cfg.K = 1;
  cfg.r = 4.0;
  cfg.solver.k = 30;
  cfg.solver.shift = 1.0;
  cfg.grid_size = 64;
  cfg.mask_times = {0.0, 0.5};
  cfg.sim.grid_particles = 30;
  cfg.sim.t_max = 1.0;
  cfg.out_dir = dir;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cohset_tests" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RitzPair pair_at(Complex z) {
  RitzPair p;
  p.z = z;
  return p;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("presets") {
    const auto tg = RunConfig::preset(Example::translated_gyres);
    CHECK(build_modeset(tg).size() == 9425);
    CHECK(tg.method == Method::cs3);
    CHECK(tg.selection == Selection::leading_complex);
    CHECK(tg.q == 1.0);
    const auto og = RunConfig::preset(Example::oscillating_gyres);
    CHECK(og.modeset_kind == ModeSet::Kind::product_ball);
    CHECK(og.delta == 0.15);
    CHECK(og.method == Method::cs2);
    const auto sh = RunConfig::preset(Example::shear);
    CHECK(sh.method == Method::cs1);
    CHECK(sh.selection == Selection::leading_real);
    for (const auto& cfg : {tg, og, sh}) {
      CHECK(cfg.eps == 0.03);
      CHECK(cfg.sim.grid_particles == 150);
      CHECK(cfg.sim.h == 0.01);
      CHECK(cfg.sim.t_max == 10.0);
      CHECK(cfg.sim.seed == 42);
      CHECK(cfg.mask_times == std::vector<double>{0.0, 5.0, 10.0});
    }
  }

  TEST_CASE("parsers") {
    CHECK(parse_example("translated-gyres") == Example::translated_gyres);
    CHECK(parse_example("oscillating_gyres") == Example::oscillating_gyres);
    CHECK(to_string(Example::shear) == "shear");
    CHECK_THROWS_AS(parse_example("vortex"), ValidationError);
    CHECK(parse_selection("leading-complex") == Selection::leading_complex);
    CHECK(parse_modeset_kind("class-union") == ModeSet::Kind::class_union);
    CHECK(mask_file_name(5.0) == "mask_t5.pgm");
    CHECK(mask_file_name(0.5) == "mask_t0.5.pgm");
  }

  TEST_CASE("custom runs need a coefficient file") {
    RunConfig cfg = RunConfig::preset(Example::custom);
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }

  TEST_CASE("eigenpair selection") {
    const std::vector<RitzPair> pairs{pair_at({0.0, 0.0}),     pair_at({-0.05, 0.0}),  pair_at({-0.02, 1e-12}),
                                      pair_at({-0.03, 0.8}),   pair_at({-0.03, -0.8}), pair_at({-0.01, 0.3}),
                                      pair_at({-0.1, -2.0})};
    CHECK(select_eigenpair(pairs, Selection::leading_real) == 2);
    CHECK(select_eigenpair(pairs, Selection::leading_complex) == 4);
    CHECK_THROWS_AS(select_eigenpair({pair_at({0.0, 0.0})}, Selection::leading_real), NumericalError);
  }

  TEST_CASE("missing inputs name the stage to run") {
    RunConfig cfg = small_config(Example::shear, scratch("missing"));
    try {
      stage_spectrum(cfg);
      FAIL("expected an exception");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("assemble") != std::string::npos);
    }
    CHECK_THROWS_AS(stage_extract(cfg), ValidationError);
    CHECK_THROWS_AS(stage_simulate(cfg), ValidationError);
  }

  TEST_CASE("granular stages reproduce the monolithic run byte for byte") {
    const auto staged = small_config(Example::translated_gyres, scratch("staged"));
    stage_assemble(staged);
    stage_spectrum(staged);
    stage_extract(staged);
    stage_simulate(staged);

    const auto mono = small_config(Example::translated_gyres, scratch("mono"));
    const auto report = cmd_reproduce(mono);
    for (const auto& name : report.manifest) {
      INFO(name);
      CHECK(slurp(staged.out_dir / name) == slurp(mono.out_dir / name));
    }

    const auto again = small_config(Example::translated_gyres, scratch("again"));
    const auto report2 = cmd_reproduce(again);
    CHECK(report.json == report2.json);
    for (const auto& name : report.manifest) CHECK(slurp(again.out_dir / name) == slurp(mono.out_dir / name));
  }

  TEST_CASE("report contents") {
    const auto cfg = small_config(Example::shear, scratch("report"));
    const auto report = cmd_reproduce(cfg);
    for (const auto& name : report.manifest) CHECK(fs::file_size(cfg.out_dir / name) > 0);
    for (const char* key : {"\"parameters\"", "\"generator\"", "\"spectrum\"", "\"eigenpair\"", "\"survival\"",
                            "\"manifest\""}) {
      CHECK(report.json.find(key) != std::string::npos);
    }
    std::ifstream spectrum(cfg.out_dir / artifacts::spectrum_csv);
    std::string line;
    std::getline(spectrum, line);
    CHECK(line == "re,im,residual");
    int rows = 0;
    while (std::getline(spectrum, line)) {
      ++rows;
      CHECK(std::stod(line.substr(0, line.find(','))) <= 1e-10);
    }
    CHECK(rows == 30);
  }

  TEST_CASE("gyre masks are non-degenerate") {
    auto cfg = small_config(Example::translated_gyres, scratch("masks"));
    cfg.mask_times = {0.0};
    stage_assemble(cfg);
    stage_spectrum(cfg);
    const auto e = stage_extract(cfg);
    REQUIRE(e.member_fractions.size() == 1);
    CHECK(e.member_fractions[0] > 0.0);
    CHECK(e.member_fractions[0] < 1.0);
    const std::string pgm = slurp(cfg.out_dir / "mask_t0.pgm");
    CHECK(pgm.rfind("P5\n64 64\n255\n", 0) == 0);
  }

  TEST_CASE("custom field from a coefficient file") {
    const auto dir = scratch("custom");
    fs::create_directories(dir);
    {
      std::ofstream out(dir / "input.csv");
      write_field_csv(builtin_shear(), out);
    }
    RunConfig cfg = small_config(Example::custom, dir);
    cfg.field_csv = (dir / "input.csv").string();
    const auto field = build_field(cfg);
    CHECK(field.size() == builtin_shear().size());
  }
}
