#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cohset/coherent.hpp"
#include "cohset/fourier_field.hpp"
#include "cohset/generator.hpp"
#include "cohset/mode_set.hpp"
#include "cohset/sde.hpp"
#include "cohset/spectral_solver.hpp"

namespace cohset {

enum class Example { translated_gyres, oscillating_gyres, shear, custom };

std::string to_string(Example example);
/// Accepts "translated-gyres", "translated_gyres", "oscillating-gyres",
/// "shear", "custom".
Example parse_example(const std::string& text);

/// Which eigenpair drives extraction. Candidates have Re z < -1e-6;
/// leading_real keeps |Im z| <= 1e-8, leading_complex keeps |Im z| > 0.5.
/// The largest real part wins; real parts within 1e-8 of each other count
/// as tied and the smaller imaginary part is taken.
enum class Selection { leading_real, leading_complex };

std::string to_string(Selection selection);
Selection parse_selection(const std::string& text);

/// "product_ball" or "class_union" (hyphens accepted).
ModeSet::Kind parse_modeset_kind(const std::string& text);

struct RunConfig {
  Example example = Example::translated_gyres;
  /// Coefficient CSV for custom fields.
  std::string field_csv;
  double delta = 0.15;
  double err = 1e-4;

  ModeSet::Kind modeset_kind = ModeSet::Kind::class_union;
  int K = 2;
  double r = 11.0;

  double eps = 0.03;
  Point2 alpha{0.2, 0.2 * 1.4142135623730951};

  SolverConfig solver{};
  Selection selection = Selection::leading_complex;

  Method method = Method::cs3;
  double q = 1.0;
  int grid_size = 256;
  std::vector<double> mask_times{0.0, 5.0, 10.0};

  SimConfig sim{};

  std::filesystem::path out_dir = "out";

  /// Canonical parameters of the three examples.
  static RunConfig preset(Example example);
  void validate() const;
};

/// Builds the builtin field of cfg.example, or reads cfg.field_csv for custom.
FourierField build_field(const RunConfig& cfg);
ModeSet build_modeset(const RunConfig& cfg);

/// Result of the spectrum stage: all converged pairs and the selected one.
struct SpectrumStage {
  SpectrumResult result;
  std::size_t selected = 0;
};

struct ExtractStage {
  std::vector<double> times;
  std::vector<double> member_fractions;
};

/// Stage artifacts, relative to cfg.out_dir.
namespace artifacts {
inline constexpr const char* field_csv = "field.csv";
inline constexpr const char* field_json = "field.json";
inline constexpr const char* modes_csv = "modes.csv";
inline constexpr const char* matrix = "generator.mtx";
inline constexpr const char* generator_json = "generator.json";
inline constexpr const char* spectrum_csv = "spectrum.csv";
inline constexpr const char* eigenpair_json = "eigenpair.json";
inline constexpr const char* eigenvector_csv = "eigenvector.csv";
inline constexpr const char* fibre_csv = "fibre_t0.csv";
inline constexpr const char* extract_json = "extract.json";
inline constexpr const char* survival_csv = "survival.csv";
inline constexpr const char* summary_json = "summary.json";
inline constexpr const char* report_json = "report.json";
}  // namespace artifacts

/// Writes field.csv and field.json.
FourierField stage_field(const RunConfig& cfg);
/// Builds field and mode set, writes field.csv, field.json, modes.csv,
/// generator.mtx and generator.json.
DiscreteGenerator stage_assemble(const RunConfig& cfg);
/// Reads generator.mtx and modes.csv; writes spectrum.csv, eigenpair.json
/// and eigenvector.csv.
SpectrumStage stage_spectrum(const RunConfig& cfg);
/// Reads modes.csv and the eigenpair; writes one mask PGM per mask time,
/// the t = 0 fibre raster and extract.json.
ExtractStage stage_extract(const RunConfig& cfg);
/// Reads field.csv, modes.csv and the eigenpair; writes survival.csv and
/// summary.json.
SurvivalCurve stage_simulate(const RunConfig& cfg);

struct Report {
  std::string json;
  std::vector<std::string> manifest;
};

/// assemble, spectrum, extract and simulate in sequence (each stage reading
/// its predecessor's files), then report.json with a file manifest.
Report cmd_reproduce(const RunConfig& cfg);

/// Selected pair index within `pairs` (sorted by distance to the shift).
/// Throws NumericalError when no pair qualifies.
std::size_t select_eigenpair(const std::vector<RitzPair>& pairs, Selection selection);

/// Eigenpair files written by the spectrum stage.
RitzPair read_eigenpair(const std::filesystem::path& dir, const ModeSet& modes);
ModeSet read_modes_file(const std::filesystem::path& path);

std::string mask_file_name(double t);

}  // namespace cohset
