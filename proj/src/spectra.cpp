#include "attotip/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "attotip/fitting.hpp"

namespace attotip::spectra {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSigmaMin = 0.05;  // eV, Gaussian width bounds in the peak fit
constexpr double kSigmaMax = 1.0;

void check_grid(const std::vector<double>& e, const char* what) {
  for (std::size_t i = 1; i < e.size(); ++i)
    if (!(e[i] > e[i - 1])) throw AnalysisError(std::string(what) + ": energy grid must be strictly increasing");
}

double grid_step(const Spectrum& spec) {
  if (spec.size() < 2) throw AnalysisError("spectrum needs at least two points");
  return (spec.energies.back() - spec.energies.front()) / static_cast<double>(spec.size() - 1);
}

std::vector<std::size_t> indices_in(const Spectrum& spec, Interval region) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (region.contains(spec.energies[i])) idx.push_back(i);
  return idx;
}

double median(std::vector<double> v) {
  if (v.empty()) throw AnalysisError("median of an empty set");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

// Gaussian-sum model used by the visibility fit. Centres and widths are
// bounded through tanh so the fit cannot collapse peaks onto each other.
struct PeakModel {
  std::vector<double> seeds;
  double freedom;  // eV
  double x_mid;    // eV, baseline reference

  int n() const { return static_cast<int>(seeds.size()); }
  double centre(const Eigen::VectorXd& p, int k) const { return seeds[static_cast<std::size_t>(k)] + freedom * std::tanh(p[2 + 3 * k + 1]); }
  static double sigma(const Eigen::VectorXd& p, int k) {
    return kSigmaMin + (kSigmaMax - kSigmaMin) * 0.5 * (1.0 + std::tanh(p[2 + 3 * k + 2]));
  }
  double operator()(const Eigen::VectorXd& p, double x) const {
    double y = p[0] + p[1] * (x - x_mid);
    for (int k = 0; k < n(); ++k) {
      const double d = (x - centre(p, k)) / sigma(p, k);
      y += p[2 + 3 * k] * std::exp(-0.5 * d * d);
    }
    return y;
  }
};

double sigma_parameter(double sigma) {
  const double s = std::clamp((sigma - kSigmaMin) / (kSigmaMax - kSigmaMin), 1e-6, 1.0 - 1e-6);
  return std::atanh(2.0 * s - 1.0);
}

double extreme_on(const PeakModel& model, const Eigen::VectorXd& p, double lo, double hi, bool want_max) {
  constexpr int kSamples = 400;
  double best = model(p, lo);
  for (int i = 1; i <= kSamples; ++i) {
    const double v = model(p, lo + (hi - lo) * i / kSamples);
    best = want_max ? std::max(best, v) : std::min(best, v);
  }
  return best;
}

// Noise level from second differences, robust to smooth structure.
double noise_sigma(const std::vector<double>& y) {
  if (y.size() < 5) return 0.0;
  std::vector<double> d2;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) d2.push_back(std::abs(y[i - 1] - 2.0 * y[i] + y[i + 1]));
  return 1.4826 * median(d2) / std::sqrt(6.0);
}

}  // namespace

double SinusoidFit::operator()(double phi) const { return offset + amplitude * std::cos(phi - phase0); }

double ExponentialFit::operator()(double e) const { return std::exp(log_amplitude - slope * e); }

Spectrum differentiate(const RetardationCurve& curve) {
  const auto& x = curve.energy;
  const auto& c = curve.counts;
  if (x.size() != c.size()) throw AnalysisError("differentiate: energy and counts differ in length");
  if (x.size() < 5) throw AnalysisError("differentiate: at least 5 points required");
  check_grid(x, "differentiate");
  const std::size_t n = x.size();
  Spectrum out;
  out.energies = x;
  out.values.resize(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x[i] - x[i - 1];
    const double h1 = x[i + 1] - x[i];
    const double d = (-h1 / (h0 * (h0 + h1))) * c[i - 1] + ((h1 - h0) / (h0 * h1)) * c[i] +
                     (h0 / (h1 * (h0 + h1))) * c[i + 1];
    out.values[i] = -d;
  }
  auto one_sided = [&](std::size_t a, std::size_t b, std::size_t cc) {
    // Derivative at x[a] from the quadratic through a, b, cc.
    const double h1 = x[b] - x[a];
    const double h2 = x[cc] - x[a];
    return -(c[a] * (-(h1 + h2) / (h1 * h2)) + c[b] * (h2 / (h1 * (h2 - h1))) + c[cc] * (-h1 / (h2 * (h2 - h1))));
  };
  out.values[0] = one_sided(0, 1, 2);
  out.values[n - 1] = one_sided(n - 1, n - 2, n - 3);
  return out;
}

std::vector<double> savitzky_golay_coefficients(std::size_t window_points, int poly_order) {
  if (window_points % 2 == 0 || window_points == 0)
    throw std::invalid_argument("savitzky_golay: window must be an odd number of points");
  if (poly_order < 0 || static_cast<std::size_t>(poly_order) >= window_points)
    throw std::invalid_argument("savitzky_golay: poly_order must be below the window size");
  const int m = static_cast<int>(window_points / 2);
  const double scale = std::max(m, 1);
  Eigen::MatrixXd v(window_points, poly_order + 1);
  for (int j = -m; j <= m; ++j) {
    double x = 1.0;
    for (int k = 0; k <= poly_order; ++k) {
      v(j + m, k) = x;
      x *= j / scale;
    }
  }
  const Eigen::MatrixXd pinv = v.completeOrthogonalDecomposition().pseudoInverse();
  std::vector<double> c(window_points);
  for (std::size_t j = 0; j < window_points; ++j) c[j] = pinv(0, static_cast<Eigen::Index>(j));
  return c;
}

std::vector<double> savitzky_golay(std::span<const double> series, std::size_t window_points, int poly_order) {
  const std::size_t n = series.size();
  if (window_points % 2 == 0 || window_points == 0)
    throw std::invalid_argument("savitzky_golay: window must be an odd number of points");
  if (poly_order < 0 || static_cast<std::size_t>(poly_order) >= window_points)
    throw std::invalid_argument("savitzky_golay: poly_order must be below the window size");
  if (window_points > n) throw std::invalid_argument("savitzky_golay: window longer than the series");
  const std::size_t half = window_points / 2;
  std::map<std::size_t, std::vector<double>> cache;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = std::min({half, i, n - 1 - i});
    if (m == 0) {
      out[i] = series[i];
      continue;
    }
    auto it = cache.find(m);
    if (it == cache.end()) {
      const int order = std::min(poly_order, static_cast<int>(2 * m));
      it = cache.emplace(m, savitzky_golay_coefficients(2 * m + 1, order)).first;
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < 2 * m + 1; ++j) acc += it->second[j] * series[i - m + j];
    out[i] = acc;
  }
  return out;
}

std::size_t window_points(double width, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("window_points: step must be positive");
  const auto half = static_cast<std::size_t>(std::max(0.0, std::round(0.5 * width / step)));
  return 2 * half + 1;
}

Spectrum savitzky_golay(const Spectrum& spec, double width, int poly_order) {
  const std::size_t w = std::min(window_points(width, grid_step(spec)), spec.size() - (spec.size() % 2 == 0));
  Spectrum out = spec;
  out.values = savitzky_golay(spec.values, w, std::min<int>(poly_order, static_cast<int>(w) - 1));
  return out;
}

SpectrumMap smooth_phase_axis(const SpectrumMap& map, std::size_t window, int poly_order) {
  map.check_shape();
  const std::size_t n = map.n_phases();
  if (n < 4 || n < window) throw AnalysisError("smooth_phase_axis: too few phases for the window");
  const double step = (map.ce_phases.back() - map.ce_phases.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(map.ce_phases[i] - map.ce_phases[i - 1] - step) > 1e-9)
      throw AnalysisError("smooth_phase_axis: phase grid is not uniform");
  if (std::abs(step * static_cast<double>(n) - kTwoPi) > 1e-9)
    throw AnalysisError("smooth_phase_axis: phase grid must cover exactly 2 pi");

  const std::size_t lead = n / 2;  // rows prepended; 2n rows span 4 pi
  SpectrumMap out = map;
  std::vector<double> column(2 * n);
  for (std::size_t e = 0; e < map.n_energies(); ++e) {
    for (std::size_t r = 0; r < 2 * n; ++r) column[r] = map.at((r + n - lead) % n, e);
    const auto smooth = savitzky_golay(column, window, poly_order);
    for (std::size_t i = 0; i < n; ++i) out.at(i, e) = smooth[i + lead];
  }
  return out;
}

ExponentialFit fit_exponential(const Spectrum& spec, Interval region) {
  std::vector<double> xs, ys;
  for (std::size_t i : indices_in(spec, region))
    if (spec.values[i] > 0.0) {
      xs.push_back(spec.energies[i]);
      ys.push_back(std::log(spec.values[i]));
    }
  if (xs.size() < 2) throw AnalysisError("fit_exponential: fewer than two positive samples in the region");
  const double mid = 0.5 * (region.lo + region.hi);
  Eigen::MatrixXd x(xs.size(), 2);
  Eigen::VectorXd y(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = 1.0;
    x(static_cast<Eigen::Index>(i), 1) = xs[i] - mid;
    y[static_cast<Eigen::Index>(i)] = ys[i];
  }
  const auto fit = fitting::linear_least_squares(x, y);
  ExponentialFit out;
  out.slope = -fit.coefficients[1];
  out.log_amplitude = fit.coefficients[0] + out.slope * mid;
  return out;
}

Spectrum normalize_exponential(const Spectrum& spec, Interval region) {
  const ExponentialFit fit = fit_exponential(spec, region);
  Spectrum out = spec;
  for (std::size_t i = 0; i < spec.size(); ++i) out.values[i] = spec.values[i] / fit(spec.energies[i]);
  return out;
}

SinusoidFit sinusoid_fit(std::span<const double> phases, std::span<const double> values) {
  if (phases.size() != values.size()) throw AnalysisError("sinusoid_fit: phases and values differ in length");
  if (phases.size() < 4) throw AnalysisError("sinusoid_fit: at least 4 points required");
  const auto n = static_cast<Eigen::Index>(phases.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double phi = phases[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = std::cos(phi);
    x(i, 2) = std::sin(phi);
    y[i] = values[static_cast<std::size_t>(i)];
    scale = std::max(scale, std::abs(y[i]));
  }
  fitting::LinearFit fit;
  try {
    fit = fitting::linear_least_squares(x, y);
  } catch (const fitting::FitError& e) {
    throw AnalysisError(std::string("sinusoid_fit: ") + e.what());
  }
  const double a = fit.coefficients[1];
  const double b = fit.coefficients[2];
  SinusoidFit out;
  out.offset = fit.coefficients[0];
  out.amplitude = std::hypot(a, b);
  if (out.amplitude <= 1e-12 * scale || out.amplitude == 0.0) {
    out.phase_defined = false;
    out.phase0 = 0.0;
    out.amplitude_error = std::sqrt(std::max(0.0, 0.5 * (fit.covariance(1, 1) + fit.covariance(2, 2))));
    return out;
  }
  out.phase0 = std::atan2(b, a);
  const double var = (a * a * fit.covariance(1, 1) + b * b * fit.covariance(2, 2) + 2.0 * a * b * fit.covariance(1, 2)) /
                     (out.amplitude * out.amplitude);
  out.amplitude_error = std::sqrt(std::max(0.0, var));
  return out;
}

ModulationResult modulation_depth(const SpectrumMap& map, double energy, double half_width) {
  map.check_shape();
  if (map.n_energies() < 2) throw AnalysisError("modulation_depth: energy grid too small");
  if (!(half_width >= 0.0)) throw AnalysisError("modulation_depth: half_width must be non-negative");
  const double bin = (map.energies.back() - map.energies.front()) / static_cast<double>(map.n_energies() - 1);
  const double tol = 1e-9;
  if (energy - half_width < map.energies.front() - 0.5 * bin - tol ||
      energy + half_width > map.energies.back() + 0.5 * bin + tol)
    throw AnalysisError("modulation_depth: window " + std::to_string(energy) + " +- " + std::to_string(half_width) +
                        " eV exceeds the energy grid");
  std::vector<std::size_t> idx;
  for (std::size_t e = 0; e < map.n_energies(); ++e)
    if (std::abs(map.energies[e] - energy) <= half_width + tol) idx.push_back(e);
  if (idx.empty()) {
    // Window narrower than a bin: take the nearest bin.
    const auto it = std::min_element(map.energies.begin(), map.energies.end(),
                                     [&](double a, double b) { return std::abs(a - energy) < std::abs(b - energy); });
    idx.push_back(static_cast<std::size_t>(it - map.energies.begin()));
  }
  std::vector<double> avg(map.n_phases(), 0.0);
  for (std::size_t p = 0; p < map.n_phases(); ++p) {
    for (std::size_t e : idx) avg[p] += map.at(p, e);
    avg[p] /= static_cast<double>(idx.size());
  }
  ModulationResult out;
  out.energy = energy;
  out.fit = sinusoid_fit(map.ce_phases, avg);
  if (out.fit.offset > 0.0) {
    out.depth = std::clamp(out.fit.amplitude / out.fit.offset, 0.0, 1.0);
    out.depth_error = out.fit.amplitude_error / out.fit.offset;
  }
  return out;
}

VisibilityResult peak_visibility(const Spectrum& spec, Interval region, int n_peaks, const VisibilityOptions& opt) {
  if (n_peaks < 1) throw AnalysisError("peak_visibility: n_peaks must be at least 1");
  check_grid(spec.energies, "peak_visibility");
  const auto idx = indices_in(spec, region);
  const auto n_par = 2 + 3 * n_peaks;
  if (static_cast<int>(idx.size()) < n_par + 1)
    throw AnalysisError("peak_visibility: region holds too few points for " + std::to_string(n_peaks) + " peaks");
  const double p_e = opt.photon_energy;
  const double step = grid_step(spec);

  std::vector<double> x(idx.size()), y(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    x[i] = spec.energies[idx[i]];
    y[i] = spec.values[idx[i]];
  }

  VisibilityResult out;
  // Weak structure: smooth the whole spectrum strongly before fitting.
  {
    Eigen::MatrixXd xl(x.size(), 2);
    Eigen::VectorXd yl(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      xl(static_cast<Eigen::Index>(i), 0) = 1.0;
      xl(static_cast<Eigen::Index>(i), 1) = x[i];
      yl[static_cast<Eigen::Index>(i)] = y[i];
    }
    const auto trend = fitting::linear_least_squares(xl, yl);
    std::vector<double> detrended(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) detrended[i] = y[i] - trend.coefficients[0] - trend.coefficients[1] * x[i];
    const std::size_t w = std::min(window_points(opt.seed_sigma, step), detrended.size() - (detrended.size() % 2 == 0));
    const auto light = savitzky_golay(detrended, w, std::min<int>(2, static_cast<int>(w) - 1));
    const auto [lo_it, hi_it] = std::minmax_element(light.begin(), light.end());
    const double signal = 0.5 * (*hi_it - *lo_it);
    const double noise = noise_sigma(y);
    if (signal < opt.prominence_ratio * noise) {
      const Spectrum smooth = savitzky_golay(spec, opt.strong_smoothing, 2);
      for (std::size_t i = 0; i < idx.size(); ++i) y[i] = smooth.values[idx[i]];
      out.smoothed = true;
    }
  }

  const double scale = std::max(*std::max_element(y.begin(), y.end()), -*std::min_element(y.begin(), y.end()));
  out.peak_energies.resize(static_cast<std::size_t>(n_peaks));
  out.visibilities.assign(static_cast<std::size_t>(n_peaks), 0.0);
  if (!(scale > 0.0)) {
    out.fit_parameters.assign(static_cast<std::size_t>(n_par), 0.0);
    return out;
  }
  for (double& v : y) v /= scale;

  // Seeds at photon spacing from the lowest local maximum of the lightly
  // smoothed region.
  const std::size_t w = std::min(window_points(opt.seed_sigma, step), y.size() - (y.size() % 2 == 0));
  const auto light = savitzky_golay(y, w, std::min<int>(2, static_cast<int>(w) - 1));
  // The whole seed comb has to fit into the region.
  const double last_first = region.hi - (n_peaks - 1) * p_e;
  double first = std::min(region.lo + 0.5 * p_e, last_first);
  for (std::size_t i = 1; i + 1 < light.size() && x[i] <= last_first; ++i)
    if (light[i] >= light[i - 1] && light[i] > light[i + 1]) {
      first = x[i];
      break;
    }
  PeakModel model;
  model.freedom = opt.centre_freedom * p_e;
  model.x_mid = 0.5 * (region.lo + region.hi);
  for (int k = 0; k < n_peaks; ++k) model.seeds.push_back(first + k * p_e);

  // Linear start: baseline and amplitudes with centres and widths fixed.
  Eigen::VectorXd start = Eigen::VectorXd::Zero(n_par);
  {
    Eigen::MatrixXd a(x.size(), 2 + n_peaks);
    Eigen::VectorXd b(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      a(r, 0) = 1.0;
      a(r, 1) = x[i] - model.x_mid;
      for (int k = 0; k < n_peaks; ++k) {
        const double d = (x[i] - model.seeds[static_cast<std::size_t>(k)]) / opt.seed_sigma;
        a(r, 2 + k) = std::exp(-0.5 * d * d);
      }
      b[r] = y[i];
    }
    fitting::LinearFit lin;
    try {
      lin = fitting::linear_least_squares(a, b);
    } catch (const fitting::FitError& e) {
      throw AnalysisError(std::string("peak_visibility: ") + e.what());
    }
    start[0] = lin.coefficients[0];
    start[1] = lin.coefficients[1];
    for (int k = 0; k < n_peaks; ++k) {
      start[2 + 3 * k] = lin.coefficients[2 + k];
      start[2 + 3 * k + 2] = sigma_parameter(opt.seed_sigma);
    }
  }
  const auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    for (std::size_t i = 0; i < x.size(); ++i) r[static_cast<Eigen::Index>(i)] = model(p, x[i]) - y[i];
  };
  Eigen::VectorXd p;
  try {
    p = fitting::levenberg_marquardt(residual, static_cast<int>(x.size()), start).parameters;
  } catch (const fitting::FitError& e) {
    throw AnalysisError(std::string("peak_visibility: ") + e.what());
  }

  std::vector<double> centres(static_cast<std::size_t>(n_peaks));
  for (int k = 0; k < n_peaks; ++k) centres[static_cast<std::size_t>(k)] = model.centre(p, k);
  for (std::size_t k = 1; k < centres.size(); ++k)
    if (centres[k] - centres[k - 1] < opt.min_separation * p_e)
      throw AnalysisError("peak_visibility: fitted peaks collapsed (separation " +
                          std::to_string(centres[k] - centres[k - 1]) + " eV)");

  double sum = 0.0;
  for (int k = 0; k < n_peaks; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double c = centres[ku];
    const double s = PeakModel::sigma(p, k);
    const double a_val = extreme_on(model, p, c - s, c + s, true);
    const double left_lo = k > 0 ? centres[ku - 1] : c - p_e;
    const double right_hi = k + 1 < n_peaks ? centres[ku + 1] : c + p_e;
    const double b_val = 0.5 * (extreme_on(model, p, left_lo, c, false) + extreme_on(model, p, c, right_hi, false));
    double v = 0.0;
    if (a_val + b_val != 0.0) v = std::clamp((a_val - b_val) / (a_val + b_val), -1.0, 1.0);
    out.peak_energies[ku] = c;
    out.visibilities[ku] = v;
    sum += v;
  }
  out.average = sum / n_peaks;

  out.fit_parameters.resize(static_cast<std::size_t>(n_par));
  out.fit_parameters[0] = p[0] * scale;
  out.fit_parameters[1] = p[1] * scale;
  for (int k = 0; k < n_peaks; ++k) {
    const auto base = static_cast<std::size_t>(2 + 3 * k);
    out.fit_parameters[base] = p[static_cast<Eigen::Index>(base)] * scale;
    out.fit_parameters[base + 1] = centres[static_cast<std::size_t>(k)];
    out.fit_parameters[base + 2] = PeakModel::sigma(p, k);
  }
  return out;
}

CutoffResult cutoff_position(const Spectrum& spec, Interval steep, Interval shallow, double threshold) {
  check_grid(spec.energies, "cutoff_position");
  if (!(steep.hi > steep.lo) || !(shallow.hi > shallow.lo)) throw AnalysisError("cutoff_position: empty fit window");
  if (!(steep.lo > shallow.hi)) throw AnalysisError("cutoff_position: steep window must lie above the shallow window");
  if (!(threshold > 0.0)) throw AnalysisError("cutoff_position: threshold must be positive");
  if (spec.size() == 0 || threshold > *std::max_element(spec.values.begin(), spec.values.end()))
    throw AnalysisError("cutoff_position: threshold lies above all data");
  for (const Interval& w : {steep, shallow}) {
    const auto idx = indices_in(spec, w);
    if (idx.size() < 2) throw AnalysisError("cutoff_position: fewer than two points in a fit window");
    for (std::size_t i : idx)
      if (!(spec.values[i] > 0.0))
        throw AnalysisError("cutoff_position: non-positive counts at " + std::to_string(spec.energies[i]) + " eV");
  }
  const ExponentialFit s = fit_exponential(spec, steep);
  const ExponentialFit f = fit_exponential(spec, shallow);
  if (!(s.slope > f.slope)) throw AnalysisError("cutoff_position: steep window does not decay faster than the shallow one");
  CutoffResult out;
  out.steep_slope = s.slope;
  out.shallow_slope = f.slope;
  out.steep_log_amplitude = s.log_amplitude;
  out.shallow_log_amplitude = f.log_amplitude;
  out.threshold = threshold;
  out.cutoff_energy = (s.log_amplitude - std::log(threshold)) / s.slope;
  if (!(out.cutoff_energy >= spec.energies.front() && out.cutoff_energy <= spec.energies.back()))
    throw AnalysisError("cutoff_position: threshold not crossed within the data range");
  return out;
}

double plateau_threshold(const Spectrum& spec, Interval plateau, double fraction) {
  if (!(fraction > 0.0)) throw AnalysisError("plateau_threshold: fraction must be positive");
  std::vector<double> v;
  for (std::size_t i : indices_in(spec, plateau)) v.push_back(spec.values[i]);
  const double m = median(v);
  if (!(m > 0.0)) throw AnalysisError("plateau_threshold: plateau median is not positive");
  return fraction * m;
}

CutoffWindows auto_cutoff_windows(const Spectrum& spec, double threshold, const CutoffScanOptions& opt) {
  const std::size_t n = spec.size();
  std::size_t last = n;
  for (std::size_t i = n; i-- > 0;)
    if (spec.values[i] >= threshold) {
      last = i;
      break;
    }
  if (last == n) throw AnalysisError("auto_cutoff_windows: spectrum never reaches the threshold");
  // Keep the steep window on positive counts.
  std::size_t top = last;
  while (top + 1 < n && spec.values[top + 1] > 0.0 && spec.energies[top + 1] <= spec.energies[last] + 0.5 * opt.steep_width)
    ++top;
  CutoffWindows w;
  w.steep = {spec.energies[last] - 0.5 * opt.steep_width, spec.energies[top]};
  w.shallow = {w.steep.lo - opt.gap - opt.shallow_width, w.steep.lo - opt.gap};
  if (w.shallow.lo < spec.energies.front()) throw AnalysisError("auto_cutoff_windows: windows run below the data");
  return w;
}

Spectrum phase_average(const SpectrumMap& map) {
  map.check_shape();
  if (map.n_phases() == 0) throw AnalysisError("phase_average: empty map");
  Spectrum out;
  out.energies = map.energies;
  out.values.assign(map.n_energies(), 0.0);
  for (std::size_t p = 0; p < map.n_phases(); ++p)
    for (std::size_t e = 0; e < map.n_energies(); ++e) out.values[e] += map.at(p, e);
  for (double& v : out.values) v /= static_cast<double>(map.n_phases());
  return out;
}

std::vector<std::optional<CutoffResult>> cutoff_scan_each(const SpectrumMap& map, const CutoffScanOptions& opt,
                                                         std::vector<std::string>& failures) {
  auto smooth = [&](Spectrum s) { return opt.smoothing_width > 0.0 ? savitzky_golay(s, opt.smoothing_width, 2) : s; };
  const double threshold = plateau_threshold(smooth(phase_average(map)), opt.plateau, opt.threshold_fraction);
  std::vector<std::optional<CutoffResult>> out(map.n_phases());
  for (std::size_t p = 0; p < map.n_phases(); ++p) {
    const Spectrum row = smooth(map.spectrum(p));
    try {
      const CutoffWindows w = auto_cutoff_windows(row, threshold, opt);
      out[p] = cutoff_position(row, w.steep, w.shallow, threshold);
    } catch (const AnalysisError& e) {
      failures.push_back("cutoff: phase " + std::to_string(map.ce_phases[p]) + " rad: " + e.what());
    }
  }
  return out;
}

std::vector<CutoffResult> cutoff_scan(const SpectrumMap& map, const CutoffScanOptions& opt) {
  std::vector<std::string> failures;
  const auto each = cutoff_scan_each(map, opt, failures);
  if (!failures.empty()) throw AnalysisError("cutoff_scan: " + failures.front());
  std::vector<CutoffResult> out;
  for (const auto& r : each) out.push_back(*r);
  return out;
}

std::vector<std::optional<VisibilityResult>> visibility_scan_each(const SpectrumMap& map, Interval region, int n_peaks,
                                                                  const VisibilityOptions& opt,
                                                                  std::vector<std::string>& failures) {
  map.check_shape();
  std::vector<std::optional<VisibilityResult>> out(map.n_phases());
  for (std::size_t p = 0; p < map.n_phases(); ++p) {
    try {
      out[p] = peak_visibility(map.spectrum(p), region, n_peaks, opt);
    } catch (const AnalysisError& e) {
      failures.push_back("visibility: phase " + std::to_string(map.ce_phases[p]) + " rad: " + e.what());
    }
  }
  return out;
}

std::vector<VisibilityResult> visibility_scan(const SpectrumMap& map, Interval region, int n_peaks,
                                              const VisibilityOptions& opt) {
  std::vector<std::string> failures;
  const auto each = visibility_scan_each(map, region, n_peaks, opt, failures);
  if (!failures.empty()) throw AnalysisError("visibility_scan: " + failures.front());
  std::vector<VisibilityResult> out;
  for (const auto& r : each) out.push_back(*r);
  return out;
}

}  // namespace attotip::spectra
