#pragma once

// Extended Simple Man's Model for photoemission from a metal surface at z = 0
// (metal for z < 0). Electrons tunnel out at the field-dependent tunnel exit,
// move classically in the laser field, reflect elastically off the surface
// and reach the detector with a phase given by the quasiclassical action.
// Trajectories from different emission times that end in the same energy bin
// are summed coherently.

#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "attotip/field.hpp"
#include "attotip/spectrum.hpp"

namespace attotip::smm {

enum class ExitModel {
  TunnelExit,  // start at z_exit = phi / (|e| |E(t0)|)
  Surface,     // start at z = 0 (original three-step model)
};

// How samples of one trajectory branch that land in the same energy bin are
// weighted before the coherent sum.
enum class SampleWeighting {
  // Samples of one branch in a bin are summed coherently and divided by the
  // square root of that branch's t0 measure in the bin, so a single branch
  // adds W dt0/dE, the classical density, whatever the sampling density.
  BranchNormalized,
  // Continuum limit of the plain sum of sqrt(W) exp(i theta) over all
  // trajectories in a bin: every branch segment counts with its t0 measure
  // (per optical cycle), so a branch adds W (dt0/dE)^2 rather than W dt0/dE.
  TrajectorySum,
  // Plain sqrt(W dt0) per sample. Scales with the sampling density wherever a
  // branch is phase-coherent across a bin; kept for comparison.
  PerSample,
};

struct SmmConfig {
  double work_function = 5.2;     // eV
  double rate_prefactor = 1.0;    // arbitrary units
  int t0_samples_per_cycle = 4096;
  double max_flight_cycles = 1.0;
  double energy_bin_width = 0.05; // eV
  double energy_max = 25.0;       // eV
  ExitModel exit_model = ExitModel::TunnelExit;
  SampleWeighting weighting = SampleWeighting::BranchNormalized;
  double relative_tolerance = 1e-9;
  unsigned workers = 0;           // 0: hardware concurrency
};

/// Throws std::invalid_argument naming the offending field.
void validate(const SmmConfig& cfg);

struct Trajectory {
  double t_emit = 0.0;          // s
  double t_rescatter = 0.0;     // s
  double z_exit = 0.0;          // m
  double drift_momentum = 0.0;  // kg m/s, kinetic momentum after the pulse
  double final_energy = 0.0;    // eV
  double action = 0.0;          // J s
  double phase = 0.0;           // rad, action / hbar
  double weight = 0.0;          // emission rate W(t_emit)
};

struct DriftMomenta {
  double p0 = 0.0;  // kg m/s, -|e| A(t0)
  double p1 = 0.0;  // kg m/s, -|e| [2 A(t1) - A(t0)]
};

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptySpectrumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tunnelling rate (A/|E|) Theta(-E) exp(-4 sqrt(2m) phi^{3/2} / (3 hbar |e E|)),
/// with E in atomic units. Zero for E(t) >= 0.
double emission_rate(const field::Pulse& pulse, double t, const SmmConfig& cfg);

/// -phi / (|e| E(t0)) in metres. Throws std::domain_error unless E(t0) < 0.
double tunnel_exit(const field::Pulse& pulse, double t0, const SmmConfig& cfg);

/// Drift momenta in the pulse's gauge, A(t_start) = 0.
DriftMomenta drift_momenta(const field::Pulse& pulse, double t0, double t1);

/// Launches an electron at rest from the exit point and returns the first
/// return to z = 0 within max_flight_cycles, or nullopt if it does not come
/// back. Throws std::domain_error if E(t0) >= 0 and IntegrationError if the
/// adaptive integrator fails.
std::optional<Trajectory> propagate(const field::Pulse& pulse, double t0, const SmmConfig& cfg);

/// Quasiclassical action S(t0, t1) in J s. The first integral starts at the
/// pulse start.
double action(const field::Pulse& pulse, const Trajectory& traj, const SmmConfig& cfg);

// Classical phase-space point, SI.
struct PhasePoint {
  double t = 0.0;
  double z = 0.0;
  double v = 0.0;
};

/// Integrates m z'' = -|e| E(t) from `start` to t_stop with the adaptive
/// Dormand-Prince 5(4) scheme. No surface.
PhasePoint integrate_motion(const field::Pulse& pulse, PhasePoint start, double t_stop,
                            double relative_tolerance = 1e-9);

/// Kinetic energy (eV) after the pulse obtained by integrating the reflected
/// electron from t_rescatter to the pulse end. Independent of the vector
/// potential tables; used to cross-check final_energy.
double propagated_drift_energy(const field::Pulse& pulse, const Trajectory& traj,
                               double relative_tolerance = 1e-9);

// One emission-time sample of the ensemble.
struct Sample {
  double t_emit = 0.0;
  std::optional<Trajectory> trajectory;
};

// Contiguous run of returning samples on which t_rescatter is continuous and
// final_energy is monotonic in t_emit.
struct Branch {
  std::size_t first = 0;  // sample index range [first, last]
  std::size_t last = 0;
  int cycle = 0;          // emission-lobe index relative to t_center
  double peak_weight = 0.0;
  double max_energy = 0.0;  // eV
  double mean_emit = 0.0;   // weight-averaged emission time, s
};

struct Ensemble {
  double sample_step = 0.0;  // s
  std::vector<Sample> samples;
  std::vector<Branch> branches;
};

/// Samples t0 uniformly over the pulse support and propagates every sample
/// with E(t0) < 0. Data-parallel; the result does not depend on the worker
/// count.
Ensemble trace_ensemble(const field::Pulse& pulse, const SmmConfig& cfg);

/// Coherent binned sum over the branches selected by `include` (all when
/// empty). Throws EmptySpectrumError if no trajectory lands on the grid.
Spectrum coherent_spectrum(const Ensemble& ensemble, const SmmConfig& cfg,
                           const std::vector<bool>& include = {});

Spectrum spectrum(const field::Pulse& pulse, const SmmConfig& cfg);

/// One spectrum per C-E phase; rows follow the order of `phases`.
SpectrumMap phase_scan(const field::PulseParams& params, const std::vector<double>& phases,
                       const SmmConfig& cfg);

/// Highest final energy (eV) over all returning trajectories of the pulse.
double classical_cutoff(const field::Pulse& pulse, const SmmConfig& cfg);

/// Highest drift energy (eV) of direct (non-returning) electrons, p0 taken
/// relative to the field-free region after the pulse.
double max_direct_energy(const field::Pulse& pulse, const SmmConfig& cfg);

}  // namespace attotip::smm
