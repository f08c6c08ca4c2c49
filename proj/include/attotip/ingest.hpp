#pragma once

// Retarding-field spectrometer data.
//
// File convention: plain text, one "retardation, counts" pair per line,
// separated by a comma, semicolon or whitespace. Lines starting with '#' are
// comments; a non-numeric first data line is taken as a header. Repeated
// scans of the same grid are separate blocks divided by blank lines. The
// retardation is given relative to the Fermi level (eV or V, which coincide
// for electrons).

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "attotip/spectra.hpp"

namespace attotip::pipeline {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IngestResult {
  spectra::RetardationCurve average;             // point-wise mean of the blocks
  std::vector<spectra::RetardationCurve> blocks; // calibrated, ascending energy
  double step = 0.0;                             // eV
};

/// Grid step of an ascending or descending series; throws IngestError unless
/// every spacing is within rel_tol of the mean spacing.
double uniform_step(std::span<const double> grid, double rel_tol = 0.01);

/// Subtracts `vacuum_offset` (eV, vacuum level above the Fermi level) from
/// the retardation so that energies are measured from the vacuum level.
/// Errors name the source and line: malformed rows, blocks of different
/// length or grid, non-uniform grids.
IngestResult parse_retardation(std::string_view text, double vacuum_offset,
                               const std::filesystem::path& origin = "<memory>");

IngestResult ingest_retardation(const std::filesystem::path& path, double vacuum_offset);

}  // namespace attotip::pipeline
