#pragma once

// One-dimensional single-active-electron TDSE for a metal surface at z = 0.
// The metal is a square well between a hard wall at z = -well_width and a
// potential step at z = 0; the vacuum side carries the image potential and
// the static extraction field. Beyond the detector plane every potential term
// is frozen, so electrons there move freely and their energy can be read off
// from a momentum decomposition.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "attotip/field.hpp"
#include "attotip/spectrum.hpp"

namespace attotip::tdse {

struct TdseConfig {
  double work_function = 6.0;        // eV, step height above the Fermi level
  double fermi_energy = 9.0;         // eV, ground state above the well bottom
  double static_field = 0.4e9;       // V/m, magnitude; lowers the barrier
  bool use_image_potential = true;
  double grid_min = -3e-9;           // m, lower bound for the well width
  double grid_max = 150e-9;          // m
  double grid_step = 0.01e-9;        // m
  double time_step = 1e-18;          // s
  double absorber_width = 30e-9;     // m, at the vacuum end
  double absorber_strength = 2.0;    // eV, CAP height at the grid edge
  double detector_plane = 40e-9;     // m
  double mask_ramp = 1e-9;           // m, smooth onset of the detector mask
  double post_pulse_time = 6e-15;    // s, free flight after the pulse support
  double energy_bin_width = 0.05;    // eV
  double energy_max = 25.0;          // eV
  unsigned workers = 0;              // 0: hardware concurrency
};

/// Throws std::invalid_argument naming the offending field.
void validate(const TdseConfig& cfg);

struct PotentialGrid {
  std::vector<double> z;          // m; z[0] = -well_width is the hard wall
  std::vector<double> v;          // eV, static potential at the nodes
  std::vector<double> absorber;   // eV, imaginary potential -i W per node
  double step = 0.0;              // m
  double well_width = 0.0;        // m
  double schottky_lowering = 0.0; // eV
  double effective_barrier = 0.0; // eV, work_function - schottky_lowering
  double ground_energy = 0.0;     // eV above the well bottom
  double vacuum_level = 0.0;      // eV, ground_energy + effective_barrier
  double detector_plane = 0.0;    // m, potentials are constant beyond
  std::size_t surface_index = 0;  // node at z = 0
  std::size_t bound_extent = 0;   // nodes used for the ground-state solve

  std::size_t size() const { return z.size(); }
};

struct WaveState {
  std::vector<std::complex<double>> psi;  // atomic units, sum |psi|^2 dz = norm
  double time = 0.0;                      // s
  double norm = 1.0;
  double absorbed = 0.0;                  // norm removed by the absorber so far
};

struct PopulationTrace {
  std::vector<double> times;       // s
  std::vector<double> population;  // |<psi0|psi(t)>|^2
};

struct NormBudget {
  double population = 0.0;   // ground state
  double excited = 0.0;      // other norm at z <= detector_plane
  double emitted = 0.0;      // norm beyond the detector plane
  double absorbed = 0.0;
  double total() const { return population + excited + emitted + absorbed; }
};

class WellSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoOutgoingFluxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure of some phases of a scan. `map` holds the phases that finished;
/// failed rows are zero.
class PhaseScanError : public std::runtime_error {
 public:
  PhaseScanError(const std::string& what, SpectrumMap map, std::vector<std::size_t> failed)
      : std::runtime_error(what), map(std::move(map)), failed(std::move(failed)) {}
  SpectrumMap map;
  std::vector<std::size_t> failed;
};

/// sqrt(e^3 E / (4 pi eps0)) in eV.
double schottky_lowering(double static_field);

/// Static potential (eV) at z > 0 for the given configuration, without well.
double vacuum_potential(const TdseConfig& cfg, double z);

/// Potential grid with the well width bisected (to 10 meV) so that the
/// ground state sits at fermi_energy. Throws WellSolveError if the
/// bisection cannot bracket the target.
PotentialGrid build_potential(const TdseConfig& cfg);

/// Lowest eigenpair of the discretised Hamiltonian; energy in eV above the
/// well bottom. The state is real, positive and normalised on the full grid.
std::pair<WaveState, double> ground_state(const PotentialGrid& pot);

/// Ground-state energy (eV) for a trial well width, on a grid built from cfg.
double ground_energy_for_width(const TdseConfig& cfg, double well_width);

/// Crank-Nicolson propagation through the pulse (length gauge, field only
/// for z > 0 and frozen beyond the detector plane) until
/// pulse.t_end() + cfg.post_pulse_time, or `t_stop` if given.
/// Population is measured against `initial`.
std::pair<WaveState, PopulationTrace> propagate(const WaveState& state, const PotentialGrid& pot,
                                                const field::Pulse& pulse, const TdseConfig& cfg,
                                                const WaveState& initial, double t_stop = -1.0);

/// Overload measuring the population against `state` itself.
std::pair<WaveState, PopulationTrace> propagate(const WaveState& state, const PotentialGrid& pot,
                                                const field::Pulse& pulse, const TdseConfig& cfg,
                                                double t_stop = -1.0);

double norm_of(const WaveState& state, const PotentialGrid& pot);

/// Norm of the masked state beyond the detector plane.
double masked_norm(const WaveState& state, const PotentialGrid& pot, const TdseConfig& cfg);

NormBudget norm_budget(const WaveState& state, const WaveState& initial, const PotentialGrid& pot);

/// Outgoing (k > 0) spectrum of the state beyond the detector plane, energy
/// measured from pot.vacuum_level. Throws NoOutgoingFluxError if the masked
/// norm is below 1e-12.
Spectrum analyze_spectrum(const WaveState& final_state, const PotentialGrid& pot, const TdseConfig& cfg);

struct TdseRun {
  Spectrum spectrum;
  PopulationTrace population;
  NormBudget budget;
};

TdseRun run_phase(const TdseConfig& cfg, const field::PulseParams& params, const PotentialGrid& pot,
                  const WaveState& ground);

/// Independent propagation per phase. Throws PhaseScanError after all phases
/// ran if any failed. `populations`, if given, receives one trace per phase.
SpectrumMap phase_scan_tdse(const TdseConfig& cfg, const field::PulseParams& params,
                            const std::vector<double>& phases,
                            std::vector<PopulationTrace>* populations = nullptr);

}  // namespace attotip::tdse
