#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace attotip {

// Energy-resolved yield on a uniform grid of bin centres (eV).
struct Spectrum {
  std::vector<double> energies;
  std::vector<double> values;

  std::size_t size() const { return energies.size(); }
};

// Count rate on a (C-E phase x energy) grid; row-major, one row per phase.
struct SpectrumMap {
  std::vector<double> ce_phases;  // rad
  std::vector<double> energies;   // eV
  std::vector<double> counts;     // ce_phases.size() * energies.size()

  std::size_t n_phases() const { return ce_phases.size(); }
  std::size_t n_energies() const { return energies.size(); }

  double& at(std::size_t phase, std::size_t energy) { return counts[phase * energies.size() + energy]; }
  double at(std::size_t phase, std::size_t energy) const {
    return counts[phase * energies.size() + energy];
  }
  std::span<const double> row(std::size_t phase) const {
    return std::span<const double>(counts).subspan(phase * energies.size(), energies.size());
  }
  std::span<double> row(std::size_t phase) {
    return std::span<double>(counts).subspan(phase * energies.size(), energies.size());
  }
  Spectrum spectrum(std::size_t phase) const {
    auto r = row(phase);
    return {energies, std::vector<double>(r.begin(), r.end())};
  }
  /// Throws std::invalid_argument if the matrix does not match the grids.
  void check_shape() const {
    if (counts.size() != ce_phases.size() * energies.size())
      throw std::invalid_argument("SpectrumMap: counts do not match grid dimensions");
  }
};

/// Bin centres (k + 1/2) * width for k = 0 .. round(energy_max / width) - 1.
std::vector<double> energy_bin_centres(double width, double energy_max);

}  // namespace attotip
