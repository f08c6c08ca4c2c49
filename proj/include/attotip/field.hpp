#pragma once

// Few-cycle laser field along the surface normal.
//
// Sign convention: E(t) > 0 points out of the metal into vacuum, so the force
// on an electron, -|e| E(t), pushes it back into the metal. The vector
// potential is A(t) = -int_{t_start}^{t} E(t') dt', i.e. the gauge is fixed
// by A(t_start) = 0.

#include <vector>

namespace attotip::field {

enum class Envelope {
  SineSquare,
  Gaussian,
  // Constant amplitude over a whole number of cycles. Used for the
  // monochromatic Simple Man's reference cases; not a physical pulse shape.
  Flat,
};

struct PulseParams {
  double wavelength = 800e-9;     // m
  double fwhm_duration = 6.3e-15; // s, FWHM of the intensity envelope
  double peak_field = 10.4e9;     // V/m
  double ce_phase = 0.0;          // rad
  Envelope envelope = Envelope::SineSquare;
};

struct FieldSample {
  double e_field = 0.0;          // V/m
  double vector_potential = 0.0; // V s / m
};

/// Maps any angle onto (-pi, pi]. The result is snapped to a 2^-32 rad
/// lattice so that phi and phi + 2 pi k yield the identical double.
double canonical_phase(double phi);

class Pulse {
 public:
  // Quadrature density for the vector-potential tables, nodes per optical
  // cycle. Values below 4096 are rejected.
  static constexpr int kDefaultNodesPerCycle = 4096;
  // Half-width of the Gaussian support in units of the FWHM duration.
  static constexpr double kGaussianSupport = 4.0;

  explicit Pulse(const PulseParams& params, int nodes_per_cycle = kDefaultNodesPerCycle);

  const PulseParams& params() const { return params_; }
  double carrier_frequency() const { return omega_; }  // rad/s
  double period() const { return period_; }            // s
  double n_cycles() const { return n_cycles_; }
  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  double t_center() const { return t_center_; }

  double envelope(double t) const;
  double e_field(double t) const;
  double vector_potential(double t) const;
  FieldSample at(double t) const { return {e_field(t), vector_potential(t)}; }

  // Running integrals int_{t_start}^{t} A dt' and int_{t_start}^{t} A^2 dt'
  // of the interpolated vector potential (V s^2/m and V^2 s^3/m^2).
  double integral_a(double t) const;
  double integral_a_squared(double t) const;

  double quadrature_step() const { return step_; }

 private:
  struct Cell {
    int index;
    double s;  // fractional position in [0, 1]
  };
  Cell locate(double t) const;
  double hermite_a(int k, double s) const;

  PulseParams params_;
  double omega_ = 0.0;
  double period_ = 0.0;
  double n_cycles_ = 0.0;
  double t_start_ = 0.0;
  double t_end_ = 0.0;
  double t_center_ = 0.0;
  double step_ = 0.0;

  std::vector<double> node_e_;   // E at nodes
  std::vector<double> node_a_;   // A at nodes
  std::vector<double> node_ia_;  // int A at nodes
  std::vector<double> node_ia2_; // int A^2 at nodes
};

/// Validates params and builds the pulse. Throws std::invalid_argument for
/// non-positive wavelength or duration, negative field, or a pulse shorter
/// than half a carrier cycle.
Pulse make_pulse(const PulseParams& params);

FieldSample field_at(const Pulse& pulse, double t);

/// Cycle-averaged quiver energy e^2 E0^2 / (4 m omega^2), in eV.
double ponderomotive_energy(const PulseParams& params);

/// gamma = omega sqrt(2 m phi) / (|e| E0); work function in eV.
double keldysh_parameter(const PulseParams& params, double work_function_ev);

double carrier_frequency(double wavelength);

/// n = omega tau / [4 arccos(2^(-1/4))], carrier cycles under a sine-square
/// envelope whose intensity FWHM is tau.
double sine_square_cycles(double omega, double fwhm_duration);

}  // namespace attotip::field
