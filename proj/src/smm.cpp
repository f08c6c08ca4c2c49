#include "attotip/smm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "attotip/parallel.hpp"
#include "attotip/units.hpp"

namespace attotip::smm {

namespace {

using cplx = std::complex<double>;
namespace u = attotip::units;

// Re-collision time is bisected to this width.
constexpr double kRescatterTolerance = 1e-21;  // s
constexpr int kMaxSteps = 2'000'000;
// Relative jump in t_rescatter (fraction of a cycle) that splits a branch.
constexpr double kBranchJump = 0.02;

// Pulse quantities in atomic units.
struct AuView {
  const field::Pulse& pulse;

  double e(double t_au) const { return pulse.e_field(t_au * u::au_time) / u::au_field; }
  double a(double t_au) const { return pulse.vector_potential(t_au * u::au_time) / u::au_vector_potential; }
  double ia(double t_au) const {
    return pulse.integral_a(t_au * u::au_time) / (u::au_vector_potential * u::au_time);
  }
  double ia2(double t_au) const {
    return pulse.integral_a_squared(t_au * u::au_time) /
           (u::au_vector_potential * u::au_vector_potential * u::au_time);
  }
  double t_start() const { return pulse.t_start() / u::au_time; }
  double t_end() const { return pulse.t_end() / u::au_time; }
  double period() const { return pulse.period() / u::au_time; }
};

struct State {
  double z;
  double v;
};

// Dormand-Prince 5(4) tableau.
constexpr std::array<double, 7> kC = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr std::array<double, 7> kB = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr std::array<double, 7> kBStar = {5179.0 / 57600, 0.0,          7571.0 / 16695, 393.0 / 640,
                                          -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

struct StepResult {
  State y;
  State err;
};

StepResult dp_step(const AuView& f, double t, State y, double h) {
  std::array<double, 7> kz{};
  std::array<double, 7> kv{};
  for (std::size_t i = 0; i < 7; ++i) {
    double v = y.v;
    for (std::size_t j = 0; j < i; ++j) v += h * kA[i][j] * kv[j];
    kz[i] = v;
    kv[i] = -f.e(t + kC[i] * h);
  }
  StepResult r{y, {0.0, 0.0}};
  for (std::size_t i = 0; i < 7; ++i) {
    r.y.z += h * kB[i] * kz[i];
    r.y.v += h * kB[i] * kv[i];
    r.err.z += h * (kB[i] - kBStar[i]) * kz[i];
    r.err.v += h * (kB[i] - kBStar[i]) * kv[i];
  }
  return r;
}

// Adaptive driver. `on_step(t, y_old, h, y_new)` returns true to stop.
class Integrator {
 public:
  Integrator(const AuView& f, double rtol, double z_scale, double v_scale)
      : f_(f), rtol_(rtol), atol_z_(rtol * z_scale), atol_v_(rtol * v_scale) {}

  template <class OnStep>
  State run(double t, State y, double t_stop, OnStep&& on_step) {
    double h = f_.period() / 200.0;
    int steps = 0;
    const std::array<double, 2> breaks = {f_.t_start(), f_.t_end()};
    while (t < t_stop) {
      if (++steps > kMaxSteps) throw IntegrationError("trajectory integrator exceeded step limit");
      double h_try = std::min(h, t_stop - t);
      for (double b : breaks)
        if (t < b && t + h_try > b) h_try = b - t;
      const auto r = dp_step(f_, t, y, h_try);
      const double ez = std::abs(r.err.z) / (atol_z_ + rtol_ * std::max(std::abs(y.z), std::abs(r.y.z)));
      const double ev = std::abs(r.err.v) / (atol_v_ + rtol_ * std::max(std::abs(y.v), std::abs(r.y.v)));
      const double err = std::max(ez, ev);
      if (!std::isfinite(err)) throw IntegrationError("trajectory integrator produced non-finite error");
      const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (err <= 1.0) {
        const bool stop = on_step(t, y, h_try, r.y);
        t += h_try;
        y = r.y;
        if (stop) return y;
        h = h_try * factor;
      } else {
        h = h_try * factor;
        if (h < 1e-14 * f_.period()) throw IntegrationError("trajectory integrator step size underflow");
      }
    }
    return y;
  }

 private:
  const AuView& f_;
  double rtol_;
  double atol_z_;
  double atol_v_;
};

double peak_field_au(const field::Pulse& pulse) {
  return std::max(pulse.params().peak_field / u::au_field, 1e-12);
}

double omega_au(const field::Pulse& pulse) { return pulse.carrier_frequency() * u::au_time; }

Integrator make_integrator(const AuView& f, const field::Pulse& pulse, double rtol, double z0) {
  const double e0 = peak_field_au(pulse);
  const double w = omega_au(pulse);
  return Integrator(f, rtol, std::max(z0, e0 / (w * w)), e0 / w);
}

// S = int_{t_ref}^{t1} [(p1 + A)^2/2 + phi] - int_{t0}^{t1} [(p0 + A)^2/2 + phi], atomic units.
double action_au(const AuView& f, double t0, double t1, double phi) {
  const double a0 = f.a(t0);
  const double a1 = f.a(t1);
  const double p0 = -a0;
  const double p1 = -(2.0 * a1 - a0);
  const auto segment = [&](double ta, double tb, double p) {
    return (0.5 * p * p + phi) * (tb - ta) + p * (f.ia(tb) - f.ia(ta)) + 0.5 * (f.ia2(tb) - f.ia2(ta));
  };
  return segment(f.t_start(), t1, p1) - segment(t0, t1, p0);
}

}  // namespace

void validate(const SmmConfig& cfg) {
  if (!(cfg.work_function > 0.0)) throw std::invalid_argument("smm.work_function must be positive");
  if (!(cfg.rate_prefactor > 0.0)) throw std::invalid_argument("smm.rate_prefactor must be positive");
  if (cfg.t0_samples_per_cycle < 100) throw std::invalid_argument("smm.t0_samples_per_cycle must be >= 100");
  if (!(cfg.max_flight_cycles > 0.0)) throw std::invalid_argument("smm.max_flight_cycles must be positive");
  if (!(cfg.energy_bin_width > 0.0 && cfg.energy_bin_width <= 0.2))
    throw std::invalid_argument("smm.energy_bin_width must lie in (0, 0.2] eV");
  if (!(cfg.energy_max > cfg.energy_bin_width))
    throw std::invalid_argument("smm.energy_max must exceed energy_bin_width");
  if (!(cfg.relative_tolerance > 0.0 && cfg.relative_tolerance < 1e-3))
    throw std::invalid_argument("smm.relative_tolerance must lie in (0, 1e-3)");
}

double emission_rate(const field::Pulse& pulse, double t, const SmmConfig& cfg) {
  const double e = pulse.e_field(t) / u::au_field;
  if (!(e < 0.0)) return 0.0;
  const double f = -e;
  const double phi = u::ev_to_au(cfg.work_function);
  const double exponent = 4.0 * std::sqrt(2.0) * std::pow(phi, 1.5) / (3.0 * f);
  if (exponent > 700.0) return 0.0;
  return cfg.rate_prefactor / f * std::exp(-exponent);
}

double tunnel_exit(const field::Pulse& pulse, double t0, const SmmConfig& cfg) {
  const double e = pulse.e_field(t0);
  if (!(e < 0.0)) throw std::domain_error("tunnel_exit: field at emission time must be negative");
  return -cfg.work_function / e;  // phi[eV] / |E|[V/m] = metres
}

DriftMomenta drift_momenta(const field::Pulse& pulse, double t0, double t1) {
  const double a0 = pulse.vector_potential(t0);
  const double a1 = pulse.vector_potential(t1);
  return {-u::e_charge * a0, -u::e_charge * (2.0 * a1 - a0)};
}

std::optional<Trajectory> propagate(const field::Pulse& pulse, double t0, const SmmConfig& cfg) {
  const AuView f{pulse};
  const double t0_au = t0 / u::au_time;
  const double e0 = f.e(t0_au);
  if (!(e0 < 0.0)) throw std::domain_error("propagate: field at emission time must be negative");
  const double phi = u::ev_to_au(cfg.work_function);
  const double z0 = cfg.exit_model == ExitModel::TunnelExit ? phi / (-e0) : 0.0;
  const double t_limit = t0_au + cfg.max_flight_cycles * f.period();

  auto integ = make_integrator(f, pulse, cfg.relative_tolerance, z0);
  std::optional<double> t1;
  integ.run(t0_au, State{z0, 0.0}, t_limit, [&](double t, State y, double h, State y_new) {
    if (!(y.z > 0.0 && y_new.z <= 0.0)) return false;
    double lo = 0.0;
    double hi = h;
    const double tol = kRescatterTolerance / u::au_time;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (dp_step(f, t, y, mid).y.z > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    t1 = t + 0.5 * (lo + hi);
    return true;
  });
  if (!t1) return std::nullopt;

  const double a0 = f.a(t0_au);
  const double a1 = f.a(*t1);
  const double p_final = -(2.0 * a1 - a0) + f.a(f.t_end());
  const double s = action_au(f, t0_au, *t1, phi);

  Trajectory traj;
  traj.t_emit = t0;
  traj.t_rescatter = *t1 * u::au_time;
  traj.z_exit = u::au_to_m(z0);
  traj.drift_momentum = p_final * u::au_momentum;
  traj.final_energy = u::au_to_ev(0.5 * p_final * p_final);
  traj.action = s * u::hbar;
  traj.phase = s;
  traj.weight = emission_rate(pulse, t0, cfg);
  return traj;
}

double action(const field::Pulse& pulse, const Trajectory& traj, const SmmConfig& cfg) {
  const AuView f{pulse};
  return action_au(f, traj.t_emit / u::au_time, traj.t_rescatter / u::au_time,
                   u::ev_to_au(cfg.work_function)) *
         u::hbar;
}

PhasePoint integrate_motion(const field::Pulse& pulse, PhasePoint start, double t_stop,
                            double relative_tolerance) {
  const AuView f{pulse};
  const double z0 = u::m_to_au(start.z);
  auto integ = make_integrator(f, pulse, relative_tolerance, std::abs(z0));
  const double v_au = start.v * u::au_time / u::au_length;
  const State y = integ.run(start.t / u::au_time, State{z0, v_au}, t_stop / u::au_time,
                            [](double, State, double, State) { return false; });
  return {t_stop, u::au_to_m(y.z), y.v * u::au_length / u::au_time};
}

double propagated_drift_energy(const field::Pulse& pulse, const Trajectory& traj, double relative_tolerance) {
  // Velocity just before impact from the launch at rest, then reflect.
  const PhasePoint impact =
      integrate_motion(pulse, {traj.t_emit, traj.z_exit, 0.0}, traj.t_rescatter, relative_tolerance);
  const double t_stop = std::max(pulse.t_end(), traj.t_rescatter);
  const PhasePoint out = integrate_motion(pulse, {traj.t_rescatter, 0.0, -impact.v}, t_stop, relative_tolerance);
  return 0.5 * u::m_electron * out.v * out.v / u::eV;
}

Ensemble trace_ensemble(const field::Pulse& pulse, const SmmConfig& cfg) {
  validate(cfg);
  Ensemble ens;
  ens.sample_step = pulse.period() / cfg.t0_samples_per_cycle;
  const auto n = static_cast<std::size_t>(std::floor((pulse.t_end() - pulse.t_start()) / ens.sample_step));
  ens.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    ens.samples[k].t_emit = pulse.t_start() + (static_cast<double>(k) + 0.5) * ens.sample_step;

  const unsigned workers = cfg.workers == 0 ? default_workers() : cfg.workers;
  constexpr std::size_t kChunk = 256;
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  parallel_for(n_chunks, workers, [&](std::size_t c) {
    for (std::size_t k = c * kChunk; k < std::min(n, (c + 1) * kChunk); ++k) {
      auto& s = ens.samples[k];
      if (emission_rate(pulse, s.t_emit, cfg) > 0.0) s.trajectory = propagate(pulse, s.t_emit, cfg);
    }
  });

  // Emission lobes: maximal runs of samples with E < 0.
  std::vector<int> lobe(n, -1);
  int current = -1;
  bool in_lobe = false;
  for (std::size_t k = 0; k < n; ++k) {
    const bool neg = pulse.e_field(ens.samples[k].t_emit) < 0.0;
    if (neg && !in_lobe) ++current;
    in_lobe = neg;
    if (neg) lobe[k] = current;
  }

  const double jump = kBranchJump * pulse.period();
  std::optional<Branch> open;
  int direction = 0;
  const auto close = [&] {
    if (!open) return;
    double wsum = 0.0;
    double tsum = 0.0;
    for (std::size_t k = open->first; k <= open->last; ++k) {
      const auto& tr = *ens.samples[k].trajectory;
      open->peak_weight = std::max(open->peak_weight, tr.weight);
      open->max_energy = std::max(open->max_energy, tr.final_energy);
      wsum += tr.weight;
      tsum += tr.weight * tr.t_emit;
    }
    open->mean_emit = wsum > 0.0 ? tsum / wsum : ens.samples[open->first].t_emit;
    ens.branches.push_back(*open);
    open.reset();
  };
  for (std::size_t k = 0; k < n; ++k) {
    const auto& tr = ens.samples[k].trajectory;
    if (!tr) {
      close();
      continue;
    }
    if (open) {
      const auto& prev = *ens.samples[k - 1].trajectory;
      const int dir = tr->final_energy > prev.final_energy ? 1 : (tr->final_energy < prev.final_energy ? -1 : 0);
      const bool continuous = std::abs(tr->t_rescatter - prev.t_rescatter) <= jump && lobe[k] == open->cycle;
      const bool monotonic = direction == 0 || dir == 0 || dir == direction;
      if (continuous && monotonic) {
        open->last = k;
        if (direction == 0) direction = dir;
        continue;
      }
      close();
    }
    open = Branch{k, k, lobe[k], 0.0, 0.0, 0.0};
    direction = 0;
  }
  close();
  return ens;
}

Spectrum coherent_spectrum(const Ensemble& ens, const SmmConfig& cfg, const std::vector<bool>& include) {
  validate(cfg);
  if (!include.empty() && include.size() != ens.branches.size())
    throw std::invalid_argument("coherent_spectrum: branch mask size mismatch");
  Spectrum out;
  out.energies = energy_bin_centres(cfg.energy_bin_width, cfg.energy_max);
  const std::size_t nbins = out.energies.size();
  const double width = cfg.energy_bin_width;
  std::vector<cplx> amplitude(nbins);
  std::vector<cplx> group(nbins);
  std::vector<double> measure(nbins, 0.0);
  std::vector<std::size_t> touched;
  const double dt0 = ens.sample_step / u::au_time;
  bool any = false;

  const auto deposit = [&](double energy, double sqrt_w, double theta, double dt) {
    const double x = energy / width;
    if (!(x >= 0.0) || x >= static_cast<double>(nbins) || dt <= 0.0) return;
    const auto bin = static_cast<std::size_t>(x);
    if (measure[bin] == 0.0) touched.push_back(bin);
    group[bin] += sqrt_w * std::polar(dt, theta);
    measure[bin] += dt;
  };

  for (std::size_t b = 0; b < ens.branches.size(); ++b) {
    if (!include.empty() && !include[b]) continue;
    const auto& br = ens.branches[b];
    touched.clear();
    if (cfg.weighting == SampleWeighting::PerSample || br.first == br.last) {
      for (std::size_t k = br.first; k <= br.last; ++k) {
        const auto& tr = *ens.samples[k].trajectory;
        deposit(tr.final_energy, std::sqrt(tr.weight), tr.phase, dt0);
      }
    } else {
      // Final energy, phase and rate are taken linear in t0 between samples;
      // each segment is split at the bin edges it crosses.
      for (std::size_t k = br.first; k < br.last; ++k) {
        const auto& a = *ens.samples[k].trajectory;
        const auto& c = *ens.samples[k + 1].trajectory;
        const double ea = a.final_energy;
        const double de = c.final_energy - ea;
        std::vector<double> cuts{0.0};
        if (de != 0.0) {
          const double lo = std::min(ea, c.final_energy) / width;
          const double hi = std::max(ea, c.final_energy) / width;
          for (double edge = std::floor(lo) + 1.0; edge < hi; edge += 1.0) cuts.push_back((edge * width - ea) / de);
          if (de < 0.0) std::sort(cuts.begin() + 1, cuts.end());
        }
        cuts.push_back(1.0);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
          const double s = 0.5 * (cuts[i] + cuts[i + 1]);
          const double w = a.weight + s * (c.weight - a.weight);
          deposit(ea + s * de, std::sqrt(w), a.phase + s * (c.phase - a.phase), (cuts[i + 1] - cuts[i]) * dt0);
        }
      }
    }
    for (std::size_t bin : touched) {
      double norm = 1.0 / std::sqrt(dt0);
      if (cfg.weighting == SampleWeighting::BranchNormalized) norm = 1.0 / std::sqrt(measure[bin]);
      if (cfg.weighting == SampleWeighting::TrajectorySum) norm = 1.0 / (dt0 * cfg.t0_samples_per_cycle);
      amplitude[bin] += group[bin] * norm;
      group[bin] = 0.0;
      measure[bin] = 0.0;
      any = true;
    }
  }
  if (!any) throw EmptySpectrumError("spectrum: no re-colliding trajectory lands on the energy grid");
  out.values.resize(nbins);
  for (std::size_t i = 0; i < nbins; ++i) out.values[i] = std::norm(amplitude[i]);
  return out;
}

Spectrum spectrum(const field::Pulse& pulse, const SmmConfig& cfg) {
  return coherent_spectrum(trace_ensemble(pulse, cfg), cfg);
}

SpectrumMap phase_scan(const field::PulseParams& params, const std::vector<double>& phases,
                       const SmmConfig& cfg) {
  validate(cfg);
  if (phases.empty()) throw std::invalid_argument("phase_scan: no phases given");
  SpectrumMap map;
  map.ce_phases = phases;
  map.energies = energy_bin_centres(cfg.energy_bin_width, cfg.energy_max);
  map.counts.assign(phases.size() * map.energies.size(), 0.0);

  const unsigned workers = cfg.workers == 0 ? default_workers() : cfg.workers;
  SmmConfig inner = cfg;
  if (phases.size() >= workers) inner.workers = 1;
  const unsigned outer = inner.workers == 1 ? workers : 1;
  parallel_for(phases.size(), outer, [&](std::size_t i) {
    try {
      field::PulseParams p = params;
      p.ce_phase = phases[i];
      const auto spec = spectrum(field::Pulse(p), inner);
      std::copy(spec.values.begin(), spec.values.end(), map.row(i).begin());
    } catch (const std::exception& e) {
      throw std::runtime_error("phase_scan: C-E phase " + std::to_string(phases[i]) + " rad: " + e.what());
    }
  });
  return map;
}

double classical_cutoff(const field::Pulse& pulse, const SmmConfig& cfg) {
  const auto ens = trace_ensemble(pulse, cfg);
  double best = 0.0;
  for (const auto& s : ens.samples)
    if (s.trajectory) best = std::max(best, s.trajectory->final_energy);
  return best;
}

double max_direct_energy(const field::Pulse& pulse, const SmmConfig& cfg) {
  validate(cfg);
  const double dt0 = pulse.period() / cfg.t0_samples_per_cycle;
  const double a_end = pulse.vector_potential(pulse.t_end());
  double best = 0.0;
  for (double t = pulse.t_start() + 0.5 * dt0; t < pulse.t_end(); t += dt0) {
    if (!(pulse.e_field(t) < 0.0)) continue;
    const double p = u::e_charge * (a_end - pulse.vector_potential(t));
    best = std::max(best, 0.5 * p * p / u::m_electron / u::eV);
  }
  return best;
}

}  // namespace attotip::smm
