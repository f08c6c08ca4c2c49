#pragma once

// Analysis of measured or simulated photoelectron spectra: derivative of
// retardation curves, Savitzky-Golay smoothing, exponential normalisation,
// C-E phase modulation depth, plateau peak visibility and cut-off position.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "attotip/spectrum.hpp"

namespace attotip::spectra {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
  double width() const { return hi - lo; }
};

// Integrated count rate behind a retarding-field high-pass filter.
struct RetardationCurve {
  std::vector<double> energy;  // eV, vacuum level at 0
  std::vector<double> counts;  // counts/s
};

struct SinusoidFit {
  double offset = 0.0;
  double amplitude = 0.0;      // >= 0
  double phase0 = 0.0;         // rad; 0 when !phase_defined
  double amplitude_error = 0.0;
  bool phase_defined = true;   // false for a vanishing amplitude

  double operator()(double phi) const;
};

struct ModulationResult {
  double energy = 0.0;       // eV
  double depth = 0.0;        // amplitude / offset, clipped to [0, 1]
  double depth_error = 0.0;  // amplitude_error / offset
  SinusoidFit fit;
};

struct VisibilityResult {
  std::vector<double> peak_energies;  // eV, fitted centres
  std::vector<double> visibilities;   // each in [-1, 1]
  double average = 0.0;
  bool smoothed = false;              // strong smoothing was applied
  std::vector<double> fit_parameters; // baseline b0, b1, then (amplitude, centre, sigma) per peak
};

struct CutoffResult {
  double cutoff_energy = 0.0;  // eV
  double steep_slope = 0.0;    // 1/eV, decay constant of the steep fit
  double shallow_slope = 0.0;  // 1/eV
  double steep_log_amplitude = 0.0;
  double shallow_log_amplitude = 0.0;
  double threshold = 0.0;
};

struct VisibilityOptions {
  double photon_energy = 1.56;     // eV, seed spacing
  double seed_sigma = 0.3;         // eV
  double centre_freedom = 0.4;     // fraction of photon_energy a centre may move
  double min_separation = 0.5;     // fraction of photon_energy
  double strong_smoothing = 0.9;   // eV, SG window used when peaks are weak
  double prominence_ratio = 3.0;   // peak signal over noise needed to skip smoothing
};

struct CutoffScanOptions {
  Interval plateau{5.0, 10.0};     // eV, reference for the threshold
  double threshold_fraction = 0.05;
  double smoothing_width = 0.5;    // eV, SG window before the fits; 0 disables
  double steep_width = 1.0;        // eV
  double shallow_width = 1.5;      // eV
  double gap = 0.25;               // eV between the windows
};

/// -dC/dE by central differences (second-order one-sided at the ends).
/// Throws AnalysisError for fewer than 5 points or a non-increasing grid.
Spectrum differentiate(const RetardationCurve& curve);

/// Local least-squares polynomial smoothing over `window_points` (odd)
/// samples; near the ends the window shrinks symmetrically and the order is
/// reduced to fit it. Throws std::invalid_argument for invalid parameters.
std::vector<double> savitzky_golay(std::span<const double> series, std::size_t window_points, int poly_order);

/// Odd number of points spanning `width` on a grid of spacing `step` (>= 1).
std::size_t window_points(double width, double step);

/// Spectrum smoothed with an SG window spanning `width` eV.
Spectrum savitzky_golay(const Spectrum& spec, double width, int poly_order);

/// Centre coefficients of the SG smoother for a full window.
std::vector<double> savitzky_golay_coefficients(std::size_t window_points, int poly_order);

/// Tiles a 2 pi phase scan to 4 pi, smooths along the phase axis (SG, 5
/// points, order 2 by default) and crops back. Throws AnalysisError if the
/// phase grid is not uniform or does not cover exactly 2 pi.
SpectrumMap smooth_phase_axis(const SpectrumMap& map, std::size_t window = 5, int poly_order = 2);

struct ExponentialFit {
  double log_amplitude = 0.0;  // ln C
  double slope = 0.0;          // 1/E0, positive for a decay
  double operator()(double e) const;
};

/// Log-linear least squares C exp(-E/E0) over the positive samples in region.
/// Throws AnalysisError with fewer than two positive samples.
ExponentialFit fit_exponential(const Spectrum& spec, Interval region);

/// Full spectrum divided by the exponential fitted over `region`.
Spectrum normalize_exponential(const Spectrum& spec, Interval region);

/// offset + amplitude cos(phi - phase0), period 2 pi. Throws AnalysisError
/// for fewer than 4 points or a rank-deficient design.
SinusoidFit sinusoid_fit(std::span<const double> phases, std::span<const double> values);

/// Counts averaged over |E - energy| <= half_width per phase, then fitted.
ModulationResult modulation_depth(const SpectrumMap& map, double energy, double half_width = 0.75);

/// Multi-Gaussian plus linear-baseline fit of the region, visibility
/// (A - B)/(A + B) per peak from the fit curve.
VisibilityResult peak_visibility(const Spectrum& spec, Interval region, int n_peaks,
                                 const VisibilityOptions& options = {});

/// Steep and shallow exponential fits; the cut-off is where the steep fit
/// crosses `threshold`. Throws AnalysisError if the threshold is not crossed
/// within the data range or a window holds non-positive counts.
CutoffResult cutoff_position(const Spectrum& spec, Interval steep_window, Interval shallow_window, double threshold);

/// fraction * median of the spectrum over the plateau interval.
double plateau_threshold(const Spectrum& spec, Interval plateau, double fraction = 0.05);

struct CutoffWindows {
  Interval steep;
  Interval shallow;
};

/// Window heuristic (not part of the published procedure): centres the steep
/// window on the last crossing of `threshold` and places the shallow window
/// directly below it.
CutoffWindows auto_cutoff_windows(const Spectrum& spec, double threshold, const CutoffScanOptions& options = {});

/// Cut-off per phase of a map with one threshold for all rows, taken from the
/// phase-averaged spectrum.
std::vector<CutoffResult> cutoff_scan(const SpectrumMap& map, const CutoffScanOptions& options = {});

/// Average plateau visibility per phase row.
std::vector<VisibilityResult> visibility_scan(const SpectrumMap& map, Interval region, int n_peaks,
                                              const VisibilityOptions& options = {});

// Per-phase variants: a phase whose analysis fails leaves an empty slot and a
// message in `failures` instead of aborting the scan. Errors that concern the
// whole map (threshold, grid) still throw.
std::vector<std::optional<CutoffResult>> cutoff_scan_each(const SpectrumMap& map, const CutoffScanOptions& options,
                                                         std::vector<std::string>& failures);
std::vector<std::optional<VisibilityResult>> visibility_scan_each(const SpectrumMap& map, Interval region, int n_peaks,
                                                                  const VisibilityOptions& options,
                                                                  std::vector<std::string>& failures);

/// Phase-averaged spectrum of a map.
Spectrum phase_average(const SpectrumMap& map);

}  // namespace attotip::spectra
