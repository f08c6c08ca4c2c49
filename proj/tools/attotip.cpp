// attotip command line: smm-scan, tdse-scan, analyze, ingest.
//
// Precedence for run settings: preset, then --config, then flags. Exit codes:
// 0 success, 1 invalid configuration or usage, 2 run failure, 3 files written
// but some analysis stages failed.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "attotip/config.hpp"
#include "attotip/csv.hpp"
#include "attotip/ingest.hpp"
#include "attotip/run.hpp"
#include "attotip/spectra.hpp"
#include "json.hpp"

using namespace attotip;
using namespace attotip::pipeline;

namespace {

struct Overrides {
  std::string preset;
  std::string config;
  std::string output_dir;
  bool print_config = false;
  std::optional<unsigned> workers;
  std::optional<double> phase_start, phase_stop, phase_step;  // units of pi
  std::optional<double> wavelength_nm, duration_fs, peak_field_gvm;
  std::optional<double> work_function;
  // smm
  std::optional<int> samples_per_cycle;
  std::optional<std::string> weighting, exit_model;
  // tdse
  std::optional<double> static_field_gvm, grid_step_nm, time_step_as, grid_max_nm;
  // analysis
  std::vector<double> visibility_region, plateau;
  std::optional<int> peaks;
  std::optional<double> modulation_half_width, cutoff_smoothing;
  bool smooth_phase_axis = false;
  // analyze
  std::string input;
};

void add_common(CLI::App* app, Overrides& o, bool simulate) {
  app->add_option("--preset", o.preset, "Named parameter set (paper-smm, paper-tdse)");
  app->add_option("--config", o.config, "JSON run configuration applied on top of the preset")->check(CLI::ExistingFile);
  app->add_option("--output-dir", o.output_dir, "Output directory (ATTOTIP_OUTPUT_DIR overrides)");
  app->add_flag("--print-config", o.print_config, "Print the resolved configuration and exit");
  app->add_option("--visibility-region", o.visibility_region, "Plateau region for peak visibility, eV")->expected(2);
  app->add_option("--peaks", o.peaks, "Number of plateau peaks fitted per phase");
  app->add_option("--plateau", o.plateau, "Plateau interval for the cut-off threshold, eV")->expected(2);
  app->add_option("--modulation-half-width", o.modulation_half_width, "Energy half width of the modulation window, eV");
  app->add_option("--cutoff-smoothing", o.cutoff_smoothing, "SG window before the cut-off fits, eV (0 disables)");
  app->add_flag("--smooth-phase-axis", o.smooth_phase_axis, "Smooth along the phase axis before analysis");
  if (!simulate) return;
  app->add_option("--workers", o.workers, "Worker threads (0: all cores)");
  app->add_option("--phase-start", o.phase_start, "First C-E phase, units of pi");
  app->add_option("--phase-stop", o.phase_stop, "End of the phase grid (exclusive), units of pi");
  app->add_option("--phase-step", o.phase_step, "Phase step, units of pi");
  app->add_option("--wavelength", o.wavelength_nm, "Carrier wavelength, nm");
  app->add_option("--duration", o.duration_fs, "Intensity FWHM, fs");
  app->add_option("--peak-field", o.peak_field_gvm, "Peak field, GV/m");
  app->add_option("--work-function", o.work_function, "Work function, eV");
}

constexpr double kPi = 3.141592653589793;

void apply(const Overrides& o, RunConfig& cfg) {
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (o.phase_start) cfg.phases.start = *o.phase_start * kPi;
  if (o.phase_stop) cfg.phases.stop = *o.phase_stop * kPi;
  if (o.phase_step) cfg.phases.step = *o.phase_step * kPi;
  if (o.wavelength_nm) cfg.pulse.wavelength = *o.wavelength_nm * 1e-9;
  if (o.duration_fs) cfg.pulse.fwhm_duration = *o.duration_fs * 1e-15;
  if (o.peak_field_gvm) cfg.pulse.peak_field = *o.peak_field_gvm * 1e9;
  if (cfg.smm) {
    auto& s = *cfg.smm;
    if (o.work_function) s.work_function = *o.work_function;
    if (o.workers) s.workers = *o.workers;
    if (o.samples_per_cycle) s.t0_samples_per_cycle = *o.samples_per_cycle;
  }
  if (cfg.tdse) {
    auto& t = *cfg.tdse;
    if (o.work_function) t.work_function = *o.work_function;
    if (o.workers) t.workers = *o.workers;
    if (o.static_field_gvm) t.static_field = *o.static_field_gvm * 1e9;
    if (o.grid_step_nm) t.grid_step = *o.grid_step_nm * 1e-9;
    if (o.time_step_as) t.time_step = *o.time_step_as * 1e-18;
    if (o.grid_max_nm) t.grid_max = *o.grid_max_nm * 1e-9;
  }
  auto& a = cfg.analysis;
  if (o.visibility_region.size() == 2) a.visibility_region = {o.visibility_region[0], o.visibility_region[1]};
  if (o.plateau.size() == 2) a.cutoff.plateau = {o.plateau[0], o.plateau[1]};
  if (o.peaks) a.visibility_peaks = *o.peaks;
  if (o.modulation_half_width) a.modulation_half_width = *o.modulation_half_width;
  if (o.cutoff_smoothing) a.cutoff.smoothing_width = *o.cutoff_smoothing;
  if (o.smooth_phase_axis) a.smooth_phase_axis = true;
  if (!o.input.empty()) cfg.input = o.input;
}

// String-valued enum flags go through the JSON reader so that they get the
// same validation and messages as config files.
RunConfig apply_enum_flags(const Overrides& o, const RunConfig& cfg) {
  if (!o.weighting && !o.exit_model) return cfg;
  nlohmann::json doc = {{"schema_version", kConfigSchemaVersion}};
  if (o.weighting) doc["smm"]["weighting"] = *o.weighting;
  if (o.exit_model) doc["smm"]["exit_model"] = *o.exit_model;
  return parse_config(doc.dump(), cfg);
}

// Analysis settings recorded in a map's provenance, if it has any.
std::optional<AnalysisParams> recorded_analysis(const std::string& map_path) {
  try {
    const MapFile f = read_map_file(map_path);
    const auto prov = nlohmann::json::parse(f.provenance);
    if (!prov.contains("run")) return std::nullopt;
    const RunConfig recorded = parse_config(prov["run"].dump());
    return recorded.analysis;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

RunConfig resolve(Mode mode, const Overrides& o) {
  RunConfig cfg;
  if (!o.preset.empty()) {
    cfg = preset(o.preset);
  } else if (mode == Mode::SmmScan) {
    cfg = preset("paper-smm");
  } else if (mode == Mode::TdseScan) {
    cfg = preset("paper-tdse");
  } else if (!o.input.empty()) {
    if (auto a = recorded_analysis(o.input)) cfg.analysis = *a;
  }
  if (mode == Mode::Analyze) {
    cfg.smm.reset();
    cfg.tdse.reset();
  }
  cfg.mode = mode;
  if (!o.config.empty()) {
    cfg = load_config(o.config, cfg);
    if (cfg.mode != mode)
      throw ConfigError("mode", "configuration says " + std::string(mode_name(cfg.mode)) + " but the subcommand is " +
                                    std::string(mode_name(mode)));
  }
  apply(o, cfg);
  cfg = apply_enum_flags(o, cfg);
  validate(cfg);
  return cfg;
}

int execute(Mode mode, const Overrides& o) {
  const RunConfig cfg = resolve(mode, o);
  if (o.print_config) {
    std::printf("%s\n", to_json(cfg, 2).c_str());
    return 0;
  }
  const RunResult r = run(cfg);
  for (const auto& f : r.files) std::printf("wrote %s\n", f.string().c_str());
  for (const auto& f : r.failures) std::fprintf(stderr, "analysis: %s\n", f.c_str());
  return r.complete() ? 0 : 3;
}

struct IngestOptions {
  std::string input;
  std::string output;
  double vacuum_offset = 5.2;
  double smoothing = 0.0;
};

int execute_ingest(const IngestOptions& o) {
  const IngestResult in = ingest_retardation(o.input, o.vacuum_offset);
  Spectrum spec = spectra::differentiate(in.average);
  if (o.smoothing > 0.0) spec = spectra::savitzky_golay(spec, o.smoothing, 2);
  Table t;
  t.columns = {"energy_eV", "counts_per_eV"};
  for (std::size_t i = 0; i < spec.size(); ++i) t.rows.push_back({spec.energies[i], spec.values[i]});
  const nlohmann::ordered_json prov = {
      {"program", "attotip"},
      {"ingest",
       {{"input", o.input}, {"vacuum_offset", o.vacuum_offset}, {"smoothing", o.smoothing},
        {"blocks", in.blocks.size()}, {"step", in.step}}}};
  std::string out = o.output;
  if (out.empty()) {
    const char* env = std::getenv(kOutputDirEnv);
    out = (std::filesystem::path(env && *env ? env : ".") / "spectrum.csv").string();
  }
  const std::filesystem::path parent = std::filesystem::path(out).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  write_table(out, t, prov.dump());
  std::printf("wrote %s (%zu blocks, step %.6g eV)\n", out.c_str(), in.blocks.size(), in.step);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Carrier-envelope-phase resolved photoemission from a metal tip: simulation and analysis"};
  app.require_subcommand(1);

  Overrides smm_o, tdse_o, analyze_o;
  IngestOptions ingest_o;

  auto* smm_cmd = app.add_subcommand("smm-scan", "Semiclassical phase scan");
  add_common(smm_cmd, smm_o, true);
  smm_cmd->add_option("--samples-per-cycle", smm_o.samples_per_cycle, "Emission-time samples per optical cycle");
  smm_cmd->add_option("--weighting", smm_o.weighting, "branch-normalized, trajectory-sum or per-sample");
  smm_cmd->add_option("--exit-model", smm_o.exit_model, "tunnel-exit or surface");

  auto* tdse_cmd = app.add_subcommand("tdse-scan", "Quantum (1D TDSE) phase scan");
  add_common(tdse_cmd, tdse_o, true);
  tdse_cmd->add_option("--static-field", tdse_o.static_field_gvm, "Static extraction field, GV/m");
  tdse_cmd->add_option("--grid-step", tdse_o.grid_step_nm, "Spatial step, nm");
  tdse_cmd->add_option("--time-step", tdse_o.time_step_as, "Time step, as");
  tdse_cmd->add_option("--grid-max", tdse_o.grid_max_nm, "Vacuum extent of the grid, nm");

  auto* analyze_cmd = app.add_subcommand("analyze", "Analyse a map file");
  add_common(analyze_cmd, analyze_o, false);
  analyze_cmd->add_option("--input", analyze_o.input, "Map file to analyse")->check(CLI::ExistingFile);

  auto* ingest_cmd = app.add_subcommand("ingest", "Retardation curves to a differentiated spectrum");
  ingest_cmd->add_option("--input", ingest_o.input, "Retardation data file")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--output", ingest_o.output, "Output CSV (default: <output dir>/spectrum.csv)");
  ingest_cmd->add_option("--vacuum-offset", ingest_o.vacuum_offset, "Vacuum level above the Fermi level, eV");
  ingest_cmd->add_option("--smoothing", ingest_o.smoothing, "SG window applied to the derivative, eV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*smm_cmd) return execute(Mode::SmmScan, smm_o);
    if (*tdse_cmd) return execute(Mode::TdseScan, tdse_o);
    if (*analyze_cmd) return execute(Mode::Analyze, analyze_o);
    if (*ingest_cmd) return execute_ingest(ingest_o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
