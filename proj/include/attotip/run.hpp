#pragma once

// End-to-end runs: simulate a phase scan (or read a map), analyse it and write
// the map plus derived tables into the output directory.
//
// Files written:
//   map.csv          spectrum map (smm-scan, tdse-scan)
//   modulation.csv   C-E modulation depth vs energy
//   visibility.csv   plateau peak visibility vs phase
//   cutoff.csv       cut-off energy vs phase
//   population.csv   ground-state population vs time (tdse-scan)

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "attotip/config.hpp"
#include "attotip/csv.hpp"
#include "attotip/spectra.hpp"
#include "attotip/tdse.hpp"

namespace attotip::pipeline {

// Overrides RunConfig::output_dir when set and non-empty.
inline constexpr const char* kOutputDirEnv = "ATTOTIP_OUTPUT_DIR";

struct AnalysisReport {
  std::vector<spectra::ModulationResult> modulation;           // energies whose window fits the grid
  std::vector<std::optional<spectra::VisibilityResult>> visibility;  // per phase
  std::vector<std::optional<spectra::CutoffResult>> cutoff;          // per phase
  std::optional<spectra::SinusoidFit> visibility_fit;  // average visibility vs phase
  std::optional<spectra::SinusoidFit> cutoff_fit;      // cut-off energy vs phase
  std::vector<std::string> failures;                   // stages or phases that did not complete
};

struct RunResult {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> failures;  // analysis failures; the files written are complete
  bool complete() const { return failures.empty(); }
};

/// Modulation, visibility and cut-off analysis of a map. Never throws for
/// analysis failures; they are listed in the report.
AnalysisReport analyze(const SpectrumMap& map, const AnalysisParams& params);

/// The map of an smm-scan or tdse-scan configuration. `populations`, if
/// given, receives the TDSE population traces.
SpectrumMap simulate(const RunConfig& cfg, std::vector<tdse::PopulationTrace>* populations = nullptr);

std::filesystem::path output_directory(const RunConfig& cfg);

/// Provenance block of the files written by `cfg`; for analyze mode it also
/// carries the provenance of the input map.
std::string provenance(const RunConfig& cfg, const std::string& source_provenance = {});

Table modulation_table(const AnalysisReport& report);
Table visibility_table(const SpectrumMap& map, const AnalysisReport& report, int n_peaks);
Table cutoff_table(const SpectrumMap& map, const AnalysisReport& report);
Table population_table(const SpectrumMap& map, const std::vector<tdse::PopulationTrace>& traces);

/// Validates, simulates or reads, analyses and writes. Files are written
/// atomically; if the run throws, every file it wrote is removed again (and
/// the output directory, if the run created it and it is left empty).
RunResult run(const RunConfig& cfg);

}  // namespace attotip::pipeline
