#pragma once

// Run configuration: one JSON document with a versioned schema. Only
// schema_version is required; missing keys keep the values of the base
// configuration (a preset or the library defaults) and unknown keys are
// rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "attotip/field.hpp"
#include "attotip/smm.hpp"
#include "attotip/spectra.hpp"
#include "attotip/tdse.hpp"

namespace attotip::pipeline {

inline constexpr int kConfigSchemaVersion = 1;

enum class Mode { SmmScan, TdseScan, Analyze };

// Error tied to one configuration field, named by its dotted path
// ("tdse.grid_step", "phases.step").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field(std::move(field)) {}
  std::string field;
};

// Phases start, start + step, ... below stop (exclusive), in rad.
struct PhaseGrid {
  double start = -3.141592653589793;
  double stop = 3.141592653589793;
  double step = 3.141592653589793 / 8.0;

  std::vector<double> values() const;
};

struct AnalysisParams {
  double modulation_half_width = 0.75;        // eV
  spectra::Interval visibility_region{5.0, 11.5};
  int visibility_peaks = 4;
  spectra::VisibilityOptions visibility;
  spectra::CutoffScanOptions cutoff;
  bool smooth_phase_axis = false;             // SG along the phase axis first
};

struct RunConfig {
  Mode mode = Mode::SmmScan;
  field::PulseParams pulse;
  std::optional<smm::SmmConfig> smm;
  std::optional<tdse::TdseConfig> tdse;
  PhaseGrid phases;
  AnalysisParams analysis;
  std::uint64_t seed = 0;
  std::string output_dir = "attotip-out";
  std::string input;  // map file read in analyze mode
};

std::string_view mode_name(Mode mode);

/// "paper-smm" or "paper-tdse". Throws ConfigError("preset", ...) otherwise.
RunConfig preset(std::string_view name);
std::vector<std::string> preset_names();

/// Parses and validates a JSON document. Keys not given keep the values of
/// `base`, so a preset can be refined by a partial document.
RunConfig parse_config(std::string_view json_text, const RunConfig& base);
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base);

/// Full document, including every default, on a single line unless indent >= 0.
std::string to_json(const RunConfig& cfg, int indent = -1);

/// Throws ConfigError naming the first offending field.
void validate(const RunConfig& cfg);

}  // namespace attotip::pipeline
