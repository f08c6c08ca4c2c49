#include "attotip/tdse.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "attotip/parallel.hpp"
#include "attotip/tridiagonal.hpp"
#include "attotip/units.hpp"

namespace attotip::tdse {

namespace {

using cplx = std::complex<double>;
namespace u = attotip::units;

constexpr double kWellTolerance = 0.010;  // eV
// Evanescent decay (in e-folds of the amplitude) kept in the bound solve.
constexpr double kBoundDecay = 40.0;
// k-space oversampling relative to 2 pi / (masked length).
constexpr int kSpectralOversampling = 8;

void require(bool ok, const char* field, const char* message) {
  if (!ok) throw std::invalid_argument(std::string("tdse.") + field + " " + message);
}

// e^2 / (16 pi eps0) in eV m.
double image_strength() { return u::e_charge / (16.0 * u::pi * u::epsilon0); }

struct BoundSolution {
  double energy_au;
  std::vector<double> vector;  // interior nodes 1 .. n-2, unit Euclidean norm
};

// Lowest state of -1/2 d2/dz2 + V on nodes 0..n-1 with psi = 0 at both ends.
BoundSolution solve_bound(std::span<const double> v_ev, double h_au) {
  const std::size_t n = v_ev.size();
  if (n < 4) throw std::invalid_argument("ground state: grid too small");
  tridiagonal::SymTridiagonal m;
  m.diag.resize(n - 2);
  m.off.assign(n - 3, -0.5 / (h_au * h_au));
  for (std::size_t i = 1; i + 1 < n; ++i) m.diag[i - 1] = 1.0 / (h_au * h_au) + u::ev_to_au(v_ev[i]);
  const double lambda = tridiagonal::lowest_eigenvalue(m);
  return {lambda, tridiagonal::eigenvector(m, lambda)};
}

struct Layout {
  double h;      // m
  std::size_t n; // nodes
};

Layout layout(const TdseConfig& cfg, double well_width) {
  const double cells = std::max(4.0, std::round(well_width / cfg.grid_step));
  const double h = well_width / cells;
  const auto n = static_cast<std::size_t>(std::ceil((cfg.grid_max + well_width) / h)) + 1;
  return {h, n};
}

double node_z(double well_width, double h, std::size_t i) { return -well_width + h * static_cast<double>(i); }

double potential_at(const TdseConfig& cfg, double z) { return z <= 0.0 ? 0.0 : vacuum_potential(cfg, z); }

// Nodes needed for the bound solve: the well plus the barrier until the
// ground state has decayed by kBoundDecay e-folds.
std::size_t bound_nodes(const TdseConfig& cfg, double well_width, const Layout& g) {
  const double target = u::ev_to_au(cfg.fermi_energy);
  const double h_au = u::m_to_au(g.h);
  const double z_limit = cfg.grid_max - cfg.absorber_width;
  double decay = 0.0;
  std::size_t i = 0;
  while (i + 1 < g.n) {
    const double z = node_z(well_width, g.h, i);
    if (z > z_limit) break;
    if (z > 0.0) {
      const double excess = u::ev_to_au(potential_at(cfg, z)) - target;
      // The clamped image region right at the surface is below the target.
      if (excess <= 0.0 && decay > 0.0) break;
      if (excess > 0.0) decay += std::sqrt(2.0 * excess) * h_au;
      if (decay >= kBoundDecay) break;
    }
    ++i;
  }
  return std::min(i + 2, g.n);
}

double field_lever(double z, double detector_plane) { return z <= 0.0 ? 0.0 : std::min(z, detector_plane); }

std::size_t first_beyond(const PotentialGrid& pot, double z0) {
  return static_cast<std::size_t>(std::lower_bound(pot.z.begin(), pot.z.end(), z0) - pot.z.begin());
}

double mask(double z, double z_d, double ramp) {
  if (z <= z_d) return 0.0;
  if (ramp <= 0.0 || z >= z_d + ramp) return 1.0;
  const double s = std::sin(0.5 * u::pi * (z - z_d) / ramp);
  return s * s;
}

cplx overlap(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t lo, std::size_t hi, double h_au) {
  cplx acc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) acc += std::conj(a[i]) * b[i];
  return acc * h_au;
}

}  // namespace

void validate(const TdseConfig& cfg) {
  require(cfg.work_function > 0.0, "work_function", "must be positive");
  require(cfg.fermi_energy > 0.0, "fermi_energy", "must be positive");
  require(cfg.static_field >= 0.0 && std::isfinite(cfg.static_field), "static_field", "must be a non-negative magnitude");
  require(cfg.grid_min < 0.0, "grid_min", "must be negative (metal side)");
  require(cfg.grid_step > 0.0, "grid_step", "must be positive");
  require(cfg.time_step > 0.0, "time_step", "must be positive");
  require(cfg.absorber_width >= 0.0, "absorber_width", "must be non-negative");
  require(cfg.absorber_strength >= 0.0, "absorber_strength", "must be non-negative");
  require(cfg.detector_plane > 0.0, "detector_plane", "must be positive");
  require(cfg.detector_plane + cfg.mask_ramp < cfg.grid_max - cfg.absorber_width, "detector_plane",
          "plus mask_ramp must lie before the absorber (grid_max - absorber_width)");
  require(cfg.mask_ramp >= 0.0, "mask_ramp", "must be non-negative");
  require(cfg.post_pulse_time >= 0.0, "post_pulse_time", "must be non-negative");
  require(cfg.energy_bin_width > 0.0 && cfg.energy_bin_width <= 0.2, "energy_bin_width", "must be in (0, 0.2] eV");
  require(cfg.energy_max > cfg.energy_bin_width, "energy_max", "must exceed energy_bin_width");
}

double schottky_lowering(double static_field) {
  const double e = u::e_charge;
  return std::sqrt(e * e * e * static_field / (4.0 * u::pi * u::epsilon0)) / u::eV;
}

double vacuum_potential(const TdseConfig& cfg, double z) {
  const double step = cfg.fermi_energy + cfg.work_function;
  const double lever = std::min(z, cfg.detector_plane);
  double v = step;
  if (cfg.use_image_potential) v = std::max(step - image_strength() / lever, 0.0);
  return v - cfg.static_field * lever;
}

double ground_energy_for_width(const TdseConfig& cfg, double well_width) {
  const Layout g = layout(cfg, well_width);
  const std::size_t m = bound_nodes(cfg, well_width, g);
  std::vector<double> v(m);
  for (std::size_t i = 0; i < m; ++i) v[i] = potential_at(cfg, node_z(well_width, g.h, i));
  return u::au_to_ev(solve_bound(v, u::m_to_au(g.h)).energy_au);
}

PotentialGrid build_potential(const TdseConfig& cfg) {
  validate(cfg);
  const double target = cfg.fermi_energy;
  double w_hi = -cfg.grid_min;
  double e_hi = ground_energy_for_width(cfg, w_hi);
  if (!(e_hi < target))
    throw WellSolveError("build_potential: even the widest well (" + std::to_string(w_hi) +
                         " m) puts the ground state above fermi_energy");
  double w_lo = 0.5 * w_hi;
  double e_lo = ground_energy_for_width(cfg, w_lo);
  while (e_lo < target) {
    w_lo *= 0.5;
    if (w_lo < 4.0 * cfg.grid_step)
      throw WellSolveError("build_potential: cannot bracket the well width for fermi_energy " +
                           std::to_string(target) + " eV");
    e_lo = ground_energy_for_width(cfg, w_lo);
  }
  // E(w) decreases with w.
  for (int iter = 0; iter < 200 && w_hi - w_lo > 1e-9 * w_hi; ++iter) {
    const double mid = 0.5 * (w_lo + w_hi);
    const double e = ground_energy_for_width(cfg, mid);
    if (e > target) {
      w_lo = mid;
      e_lo = e;
    } else {
      w_hi = mid;
      e_hi = e;
    }
  }
  const bool take_hi = std::abs(e_hi - target) < std::abs(e_lo - target);
  const double width = take_hi ? w_hi : w_lo;
  const double energy = take_hi ? e_hi : e_lo;
  if (std::abs(energy - target) > kWellTolerance)
    throw WellSolveError("build_potential: well-width solve missed fermi_energy by " +
                         std::to_string(energy - target) + " eV");

  const Layout g = layout(cfg, width);
  PotentialGrid pot;
  pot.step = g.h;
  pot.well_width = width;
  pot.detector_plane = cfg.detector_plane;
  pot.z.resize(g.n);
  pot.v.resize(g.n);
  pot.absorber.assign(g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i) {
    pot.z[i] = node_z(width, g.h, i);
    pot.v[i] = potential_at(cfg, pot.z[i]);
  }
  pot.surface_index = static_cast<std::size_t>(std::llround(width / g.h));
  const double z_abs = pot.z.back() - cfg.absorber_width;
  if (cfg.absorber_width > 0.0) {
    for (std::size_t i = 0; i < g.n; ++i) {
      if (pot.z[i] <= z_abs) continue;
      const double x = (pot.z[i] - z_abs) / cfg.absorber_width;
      pot.absorber[i] = cfg.absorber_strength * x * x;
    }
  }
  pot.schottky_lowering = cfg.use_image_potential ? schottky_lowering(cfg.static_field) : 0.0;
  pot.effective_barrier = cfg.work_function - pot.schottky_lowering;
  pot.ground_energy = energy;
  pot.vacuum_level = energy + pot.effective_barrier;
  pot.bound_extent = bound_nodes(cfg, width, g);
  return pot;
}

std::pair<WaveState, double> ground_state(const PotentialGrid& pot) {
  const std::size_t m = pot.bound_extent;
  if (m < 4 || m > pot.size()) throw std::invalid_argument("ground_state: invalid bound extent");
  const double h_au = u::m_to_au(pot.step);
  const BoundSolution sol = solve_bound(std::span<const double>(pot.v).first(m), h_au);
  WaveState state;
  state.psi.assign(pot.size(), 0.0);
  const double scale = 1.0 / std::sqrt(h_au);
  for (std::size_t i = 0; i < sol.vector.size(); ++i) state.psi[i + 1] = sol.vector[i] * scale;
  state.norm = norm_of(state, pot);
  state.time = 0.0;
  return {std::move(state), u::au_to_ev(sol.energy_au)};
}

double norm_of(const WaveState& state, const PotentialGrid& pot) {
  double acc = 0.0;
  for (const cplx& c : state.psi) acc += std::norm(c);
  return acc * u::m_to_au(pot.step);
}

std::pair<WaveState, PopulationTrace> propagate(const WaveState& state, const PotentialGrid& pot,
                                                const field::Pulse& pulse, const TdseConfig& cfg,
                                                double t_stop) {
  return propagate(state, pot, pulse, cfg, state, t_stop);
}

std::pair<WaveState, PopulationTrace> propagate(const WaveState& state, const PotentialGrid& pot,
                                                const field::Pulse& pulse, const TdseConfig& cfg,
                                                const WaveState& initial, double t_stop) {
  if (pulse.params().envelope != field::Envelope::Gaussian)
    throw std::invalid_argument("propagate: the TDSE drive uses a Gaussian envelope");
  if (!(cfg.time_step > 0.0)) throw std::invalid_argument("tdse.time_step must be positive");
  const std::size_t n = pot.size();
  if (state.psi.size() != n || initial.psi.size() != n || pot.v.size() != n || pot.absorber.size() != n)
    throw std::invalid_argument("propagate: state and grid sizes differ");
  if (n < 3) throw std::invalid_argument("propagate: grid too small");
  if (t_stop < 0.0) t_stop = pulse.t_end() + cfg.post_pulse_time;

  const double h_au = u::m_to_au(pot.step);
  const double span = std::max(0.0, t_stop - state.time);
  const auto steps = static_cast<std::size_t>(std::ceil(span / cfg.time_step - 1e-9));
  const double dt = steps > 0 ? span / static_cast<double>(steps) : 0.0;
  const double dt_au = u::s_to_au(dt);
  const double e_ref = u::ev_to_au(pot.ground_energy);

  std::vector<double> diag0(n), lever(n), absorb(n);
  for (std::size_t i = 0; i < n; ++i) {
    diag0[i] = 1.0 / (h_au * h_au) + u::ev_to_au(pot.v[i]) - e_ref;
    lever[i] = u::m_to_au(field_lever(pot.z[i], pot.detector_plane));
    absorb[i] = u::ev_to_au(pot.absorber[i]);
  }
  std::size_t abs_lo = n;
  for (std::size_t i = 0; i < n; ++i)
    if (absorb[i] > 0.0) {
      abs_lo = i;
      break;
    }
  std::size_t ov_lo = 0, ov_hi = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (initial.psi[i] != cplx(0.0)) {
      if (ov_hi == 0) ov_lo = i;
      ov_hi = i + 1;
    }

  WaveState out = state;
  std::vector<cplx>& psi = out.psi;
  psi.front() = 0.0;
  psi.back() = 0.0;
  PopulationTrace trace;
  trace.times.reserve(steps + 1);
  trace.population.reserve(steps + 1);
  trace.times.push_back(out.time);
  trace.population.push_back(std::norm(overlap(initial.psi, psi, ov_lo, ov_hi, h_au)));

  const cplx half_i(0.0, 0.5 * dt_au);
  const cplx c = half_i * (-0.5 / (h_au * h_au));  // off-diagonal of 1 + i dt H / 2
  std::vector<cplx> rhs(n), sweep(n), old_tail(n - std::min(abs_lo, n));

  for (std::size_t step = 0; step < steps; ++step) {
    const double t0 = state.time + dt * static_cast<double>(step);
    const double f_au = u::field_to_au(pulse.e_field(t0 + 0.5 * dt));
    std::copy(psi.begin() + static_cast<std::ptrdiff_t>(abs_lo), psi.end(), old_tail.begin());

    // rhs = (1 - i dt H / 2) psi, solved against (1 + i dt H / 2) on 1..n-2.
    double prev_re = 0.0, prev_im = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const cplx hd(diag0[i] + f_au * lever[i], -absorb[i]);
      const cplx a = 1.0 + half_i * hd;
      rhs[i] = (2.0 - a) * psi[i] - c * (psi[i - 1] + psi[i + 1]);
      // Thomas forward sweep with the constant off-diagonal c.
      const cplx den = a - c * cplx(prev_re, prev_im);
      const double d2 = den.real() * den.real() + den.imag() * den.imag();
      const cplx inv(den.real() / d2, -den.imag() / d2);
      const cplx s = c * inv;
      prev_re = s.real();
      prev_im = s.imag();
      sweep[i] = s;
      rhs[i] = (rhs[i] - c * rhs[i - 1]) * inv;
    }
    psi[n - 2] = rhs[n - 2];
    for (std::size_t i = n - 2; i-- > 1;) psi[i] = rhs[i] - sweep[i] * psi[i + 1];
    rhs[0] = 0.0;

    // Exact Crank-Nicolson loss: d|psi|^2 = -2 dt <psi_mid|W|psi_mid>.
    double loss = 0.0;
    for (std::size_t i = abs_lo; i + 1 < n; ++i) loss += absorb[i] * std::norm(0.5 * (psi[i] + old_tail[i - abs_lo]));
    out.absorbed += 2.0 * dt_au * loss * h_au;

    out.time = t0 + dt;
    trace.times.push_back(out.time);
    trace.population.push_back(std::norm(overlap(initial.psi, psi, ov_lo, ov_hi, h_au)));
  }
  if (steps > 0) out.time = t_stop;
  out.norm = norm_of(out, pot);
  return {std::move(out), std::move(trace)};
}

double masked_norm(const WaveState& state, const PotentialGrid& pot, const TdseConfig& cfg) {
  double acc = 0.0;
  for (std::size_t i = first_beyond(pot, pot.detector_plane); i < pot.size(); ++i) {
    const double m = mask(pot.z[i], pot.detector_plane, cfg.mask_ramp);
    acc += m * m * std::norm(state.psi[i]);
  }
  return acc * u::m_to_au(pot.step);
}

NormBudget norm_budget(const WaveState& state, const WaveState& initial, const PotentialGrid& pot) {
  const double h_au = u::m_to_au(pot.step);
  NormBudget b;
  b.population = std::norm(overlap(initial.psi, state.psi, 0, pot.size(), h_au));
  double inside = 0.0, beyond = 0.0;
  for (std::size_t i = 0; i < pot.size(); ++i) (pot.z[i] <= pot.detector_plane ? inside : beyond) += std::norm(state.psi[i]);
  b.excited = inside * h_au - b.population;
  b.emitted = beyond * h_au;
  b.absorbed = state.absorbed;
  return b;
}

Spectrum analyze_spectrum(const WaveState& final_state, const PotentialGrid& pot, const TdseConfig& cfg) {
  if (final_state.psi.size() != pot.size()) throw std::invalid_argument("analyze_spectrum: state and grid sizes differ");
  const double outgoing = masked_norm(final_state, pot, cfg);
  if (!(outgoing >= 1e-12)) {
    std::ostringstream msg;
    msg << "analyze_spectrum: negligible norm beyond the detector plane (" << outgoing << ")";
    throw NoOutgoingFluxError(msg.str());
  }
  const std::size_t lo = first_beyond(pot, pot.detector_plane);
  const std::size_t hi = pot.size();
  const double h_au = u::m_to_au(pot.step);

  std::vector<cplx> masked(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) masked[i - lo] = mask(pot.z[i], pot.detector_plane, cfg.mask_ramp) * final_state.psi[i];

  // Frozen potential beyond the plane; discrete dispersion K = (1 - cos kh)/h^2.
  const double v_detector = pot.v[std::min(lo, hi - 1)];
  const double offset_au = u::ev_to_au(pot.vacuum_level - v_detector);
  const double band_top = 2.0 / (h_au * h_au);
  auto k_of = [&](double kinetic_au) {
    const double kin = std::clamp(kinetic_au, 0.0, band_top);
    return std::acos(1.0 - kin * h_au * h_au) / h_au;
  };
  const double k_lo = k_of(offset_au);
  const double k_hi = k_of(u::ev_to_au(cfg.energy_max) + offset_au);

  Spectrum out;
  out.energies = energy_bin_centres(cfg.energy_bin_width, cfg.energy_max);
  out.values.assign(out.energies.size(), 0.0);
  if (!(k_hi > k_lo)) return out;

  const double length = h_au * static_cast<double>(masked.size());
  const double dk_target = 2.0 * u::pi / (kSpectralOversampling * length);
  const auto nk = static_cast<std::size_t>(std::ceil((k_hi - k_lo) / dk_target));
  const double dk = (k_hi - k_lo) / static_cast<double>(nk);

  for (std::size_t m = 0; m < nk; ++m) {
    const double k = k_lo + (static_cast<double>(m) + 0.5) * dk;
    const cplx rot = std::polar(1.0, -k * h_au);
    cplx phase = 1.0, acc = 0.0;
    for (std::size_t j = 0; j < masked.size(); ++j) {
      acc += masked[j] * phase;
      phase *= rot;
    }
    const double weight = std::norm(acc * h_au) * dk / (2.0 * u::pi);
    const double kinetic = (1.0 - std::cos(k * h_au)) / (h_au * h_au);
    const double energy = u::au_to_ev(kinetic - offset_au);
    const auto bin = static_cast<long>(std::floor(energy / cfg.energy_bin_width));
    if (bin >= 0 && bin < static_cast<long>(out.values.size())) out.values[static_cast<std::size_t>(bin)] += weight;
  }
  return out;
}

TdseRun run_phase(const TdseConfig& cfg, const field::PulseParams& params, const PotentialGrid& pot,
                  const WaveState& ground) {
  if (params.envelope != field::Envelope::Gaussian)
    throw std::invalid_argument("tdse: pulse envelope must be Gaussian");
  const field::Pulse pulse(params);
  WaveState start = ground;
  start.time = pulse.t_start();
  auto [final_state, trace] = propagate(start, pot, pulse, cfg, ground);
  TdseRun run;
  run.budget = norm_budget(final_state, ground, pot);
  run.spectrum = analyze_spectrum(final_state, pot, cfg);
  run.population = std::move(trace);
  return run;
}

SpectrumMap phase_scan_tdse(const TdseConfig& cfg, const field::PulseParams& params,
                            const std::vector<double>& phases, std::vector<PopulationTrace>* populations) {
  validate(cfg);
  if (phases.empty()) throw std::invalid_argument("phase_scan_tdse: no phases given");
  const PotentialGrid pot = build_potential(cfg);
  const WaveState ground = ground_state(pot).first;

  SpectrumMap map;
  map.ce_phases = phases;
  map.energies = energy_bin_centres(cfg.energy_bin_width, cfg.energy_max);
  map.counts.assign(phases.size() * map.energies.size(), 0.0);
  std::vector<std::optional<std::string>> errors(phases.size());
  std::vector<PopulationTrace> traces(phases.size());

  const unsigned workers = cfg.workers == 0 ? default_workers() : cfg.workers;
  parallel_for(phases.size(), workers, [&](std::size_t i) {
    try {
      field::PulseParams p = params;
      p.ce_phase = phases[i];
      TdseRun run = run_phase(cfg, p, pot, ground);
      std::copy(run.spectrum.values.begin(), run.spectrum.values.end(), map.row(i).begin());
      traces[i] = std::move(run.population);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  if (populations) *populations = std::move(traces);

  std::vector<std::size_t> failed;
  std::ostringstream msg;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (!errors[i]) continue;
    failed.push_back(i);
    msg << (failed.size() == 1 ? "" : "; ") << "phase " << phases[i] << " rad: " << *errors[i];
  }
  if (!failed.empty())
    throw PhaseScanError("phase_scan_tdse: " + std::to_string(failed.size()) + " of " +
                             std::to_string(phases.size()) + " phases failed: " + msg.str(),
                         std::move(map), std::move(failed));
  return map;
}

}  // namespace attotip::tdse
