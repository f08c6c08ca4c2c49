#include "attotip/run.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <system_error>

#include "attotip/smm.hpp"
#include "json.hpp"

namespace attotip::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fit_note(const char* quantity, const spectra::SinusoidFit& f) {
  return std::string("fit: ") + quantity + " = offset + amplitude cos(phase - phase0); offset=" +
         format_significant(f.offset) + " amplitude=" + format_significant(f.amplitude) +
         " phase0_rad=" + format_significant(f.phase0) + " amplitude_error=" + format_significant(f.amplitude_error) +
         (f.phase_defined ? "" : " (phase undefined)");
}

std::optional<spectra::SinusoidFit> fit_rows(const std::vector<double>& phases, const std::vector<double>& values,
                                             const char* what, std::vector<std::string>& failures) {
  try {
    return spectra::sinusoid_fit(phases, values);
  } catch (const std::exception& e) {
    failures.push_back(std::string(what) + " fit: " + e.what());
    return std::nullopt;
  }
}

}  // namespace

AnalysisReport analyze(const SpectrumMap& input, const AnalysisParams& params) {
  input.check_shape();
  AnalysisReport r;
  SpectrumMap map = input;
  if (params.smooth_phase_axis) {
    try {
      map = spectra::smooth_phase_axis(input);
    } catch (const std::exception& e) {
      r.failures.push_back(std::string("phase smoothing: ") + e.what() + "; analysing the raw map");
    }
  }

  if (map.n_energies() >= 2) {
    const double bin = (map.energies.back() - map.energies.front()) / static_cast<double>(map.n_energies() - 1);
    const double lo = map.energies.front() - 0.5 * bin + params.modulation_half_width;
    const double hi = map.energies.back() + 0.5 * bin - params.modulation_half_width;
    try {
      for (double e : map.energies)
        if (e >= lo - 1e-9 && e <= hi + 1e-9) r.modulation.push_back(spectra::modulation_depth(map, e, params.modulation_half_width));
    } catch (const std::exception& e) {
      r.modulation.clear();
      r.failures.push_back(std::string("modulation: ") + e.what());
    }
  }

  r.visibility = spectra::visibility_scan_each(map, params.visibility_region, params.visibility_peaks,
                                               params.visibility, r.failures);
  std::vector<double> ph;
  std::vector<double> val;
  for (std::size_t p = 0; p < map.n_phases(); ++p)
    if (r.visibility[p]) {
      ph.push_back(map.ce_phases[p]);
      val.push_back(r.visibility[p]->average);
    }
  r.visibility_fit = fit_rows(ph, val, "visibility", r.failures);

  r.cutoff.assign(map.n_phases(), std::nullopt);
  try {
    r.cutoff = spectra::cutoff_scan_each(map, params.cutoff, r.failures);
  } catch (const std::exception& e) {
    r.failures.push_back(std::string("cutoff: ") + e.what());
  }
  ph.clear();
  val.clear();
  for (std::size_t p = 0; p < map.n_phases(); ++p)
    if (r.cutoff[p]) {
      ph.push_back(map.ce_phases[p]);
      val.push_back(r.cutoff[p]->cutoff_energy);
    }
  r.cutoff_fit = fit_rows(ph, val, "cutoff", r.failures);
  return r;
}

SpectrumMap simulate(const RunConfig& cfg, std::vector<tdse::PopulationTrace>* populations) {
  const auto phases = cfg.phases.values();
  switch (cfg.mode) {
    case Mode::SmmScan:
      return smm::phase_scan(cfg.pulse, phases, cfg.smm.value());
    case Mode::TdseScan:
      return tdse::phase_scan_tdse(cfg.tdse.value(), cfg.pulse, phases, populations);
    case Mode::Analyze:
      break;
  }
  throw std::invalid_argument("simulate: analyze mode has nothing to simulate");
}

fs::path output_directory(const RunConfig& cfg) {
  const char* env = std::getenv(kOutputDirEnv);
  if (env && *env) return env;
  return cfg.output_dir;
}

std::string provenance(const RunConfig& cfg, const std::string& source_provenance) {
  json j;
  j["program"] = "attotip";
  j["run"] = json::parse(to_json(cfg));
  if (!source_provenance.empty()) {
    const json source = json::parse(source_provenance, nullptr, false);
    j["source"] = source.is_discarded() ? json(source_provenance) : source;
  }
  return j.dump();
}

Table modulation_table(const AnalysisReport& report) {
  Table t;
  t.columns = {"energy_eV", "depth", "depth_error", "offset_counts", "amplitude_counts", "phase0_rad"};
  for (const auto& m : report.modulation)
    t.rows.push_back({m.energy, m.depth, m.depth_error, m.fit.offset, m.fit.amplitude,
                      m.fit.phase_defined ? m.fit.phase0 : kNaN});
  return t;
}

Table visibility_table(const SpectrumMap& map, const AnalysisReport& report, int n_peaks) {
  Table t;
  t.columns = {"phase_rad", "average_visibility", "strongly_smoothed"};
  for (int k = 1; k <= n_peaks; ++k) {
    t.columns.push_back("peak" + std::to_string(k) + "_energy_eV");
    t.columns.push_back("peak" + std::to_string(k) + "_visibility");
  }
  for (std::size_t p = 0; p < map.n_phases(); ++p) {
    std::vector<double> row(t.columns.size(), kNaN);
    row[0] = map.ce_phases[p];
    if (p < report.visibility.size() && report.visibility[p]) {
      const auto& v = *report.visibility[p];
      row[1] = v.average;
      row[2] = v.smoothed ? 1.0 : 0.0;
      for (std::size_t k = 0; k < v.peak_energies.size() && 3 + 2 * k + 1 < row.size(); ++k) {
        row[3 + 2 * k] = v.peak_energies[k];
        row[4 + 2 * k] = v.visibilities[k];
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (report.visibility_fit) t.notes.push_back(fit_note("visibility", *report.visibility_fit));
  return t;
}

Table cutoff_table(const SpectrumMap& map, const AnalysisReport& report) {
  Table t;
  t.columns = {"phase_rad", "cutoff_eV", "steep_slope_per_eV", "shallow_slope_per_eV", "threshold_counts"};
  for (std::size_t p = 0; p < map.n_phases(); ++p) {
    std::vector<double> row(t.columns.size(), kNaN);
    row[0] = map.ce_phases[p];
    if (p < report.cutoff.size() && report.cutoff[p]) {
      const auto& c = *report.cutoff[p];
      row[1] = c.cutoff_energy;
      row[2] = c.steep_slope;
      row[3] = c.shallow_slope;
      row[4] = c.threshold;
    }
    t.rows.push_back(std::move(row));
  }
  if (report.cutoff_fit) t.notes.push_back(fit_note("cutoff", *report.cutoff_fit));
  return t;
}

Table population_table(const SpectrumMap& map, const std::vector<tdse::PopulationTrace>& traces) {
  if (traces.size() != map.n_phases()) throw std::invalid_argument("population_table: one trace per phase required");
  Table t;
  t.columns = {"time_fs"};
  for (double phi : map.ce_phases) t.columns.push_back("population_at_" + format_significant(phi, 6) + "_rad");
  if (traces.empty()) return t;
  const auto& times = traces.front().times;
  for (const auto& tr : traces)
    if (tr.times != times || tr.population.size() != times.size())
      throw std::invalid_argument("population_table: traces are not on a common time grid");
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<double> row{times[i] * 1e15};
    for (const auto& tr : traces) row.push_back(tr.population[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

RunResult run(const RunConfig& cfg) {
  validate(cfg);
  const fs::path dir = output_directory(cfg);
  std::error_code ec;
  const bool created = !fs::exists(dir, ec);
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir, "cannot create output directory: " + ec.message());

  RunResult result;
  try {
    SpectrumMap map;
    std::string prov;
    std::vector<tdse::PopulationTrace> populations;
    if (cfg.mode == Mode::Analyze) {
      MapFile in = read_map_file(cfg.input);
      in.map.check_shape();
      map = std::move(in.map);
      prov = provenance(cfg, in.provenance);
    } else {
      map = simulate(cfg, cfg.mode == Mode::TdseScan ? &populations : nullptr);
      prov = provenance(cfg);
      write_map_file(dir / "map.csv", {prov, map});
      result.files.push_back(dir / "map.csv");
    }
    const AnalysisReport report = analyze(map, cfg.analysis);
    const auto emit = [&](const char* name, const Table& t) {
      write_table(dir / name, t, prov);
      result.files.push_back(dir / name);
    };
    emit("modulation.csv", modulation_table(report));
    emit("visibility.csv", visibility_table(map, report, cfg.analysis.visibility_peaks));
    emit("cutoff.csv", cutoff_table(map, report));
    if (cfg.mode == Mode::TdseScan) emit("population.csv", population_table(map, populations));
    result.failures = report.failures;
  } catch (...) {
    for (const auto& f : result.files) fs::remove(f, ec);
    if (created && fs::is_empty(dir, ec)) fs::remove(dir, ec);
    throw;
  }
  return result;
}

}  // namespace attotip::pipeline
