#pragma once

// Physical constants (CODATA 2018, SI) and atomic-unit conversion factors.
// Public interfaces take SI quantities, with energies in eV; the simulation
// kernels work internally in Hartree atomic units.

#include <numbers>

namespace attotip::units {

inline constexpr double pi = std::numbers::pi;

inline constexpr double c_light = 299'792'458.0;             // m/s
inline constexpr double e_charge = 1.602'176'634e-19;        // C
inline constexpr double m_electron = 9.109'383'7015e-31;     // kg
inline constexpr double hbar = 1.054'571'817e-34;            // J s
inline constexpr double h_planck = 6.626'070'15e-34;         // J s
inline constexpr double epsilon0 = 8.854'187'8128e-12;       // F/m

inline constexpr double eV = e_charge;                       // J per eV

// Hartree atomic units.
inline constexpr double au_energy_eV = 27.211'386'245'988;
inline constexpr double au_time = 2.418'884'326'5857e-17;    // s
inline constexpr double au_length = 5.291'772'109'03e-11;    // m
inline constexpr double au_field = 5.142'206'747'63e11;      // V/m
inline constexpr double au_momentum = 1.992'851'914'10e-24;  // kg m/s
// Vector potential A = -int E dt carries V s / m.
inline constexpr double au_vector_potential = au_field * au_time;

inline constexpr double fs = 1e-15;
inline constexpr double as = 1e-18;
inline constexpr double nm = 1e-9;
inline constexpr double GV_per_m = 1e9;

constexpr double ev_to_au(double e) { return e / au_energy_eV; }
constexpr double au_to_ev(double e) { return e * au_energy_eV; }
constexpr double s_to_au(double t) { return t / au_time; }
constexpr double au_to_s(double t) { return t * au_time; }
constexpr double m_to_au(double z) { return z / au_length; }
constexpr double au_to_m(double z) { return z * au_length; }
constexpr double field_to_au(double f) { return f / au_field; }

}  // namespace attotip::units
